#include "hiprobe/scorer.hpp"

#include "hiprobe/error.hpp"
#include "hiprobe/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hiprobe::scorer {
namespace {

void check_problem(const Eigen::VectorXd& weights, const FeatureMatrix& features,
                   const Eigen::VectorXd& labels) {
  if (features.rows() == 0) throw EmptyDatasetError("bce: no samples");
  if (labels.size() != features.rows()) {
    throw DimensionError("bce: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(features.rows()) + " samples");
  }
  if (weights.size() != features.cols()) {
    throw DimensionError("bce: weight length " + std::to_string(weights.size()) +
                         " does not match feature dimension " + std::to_string(features.cols()));
  }
}

// log(1 + exp(z)) without overflow
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_loss(const Eigen::VectorXd& weights, double bias, const FeatureMatrix& features,
                const Eigen::VectorXd& labels, double l2_lambda) {
  check_problem(weights, features, labels);
  const Eigen::VectorXd logits = (features * weights).array() + bias;
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double p = std::clamp(sigmoid(logits(i)), kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double y = labels(i);
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return total / static_cast<double>(logits.size()) + 0.5 * l2_lambda * weights.squaredNorm();
}

BceGradient bce_gradient(const Eigen::VectorXd& weights, double bias,
                         const FeatureMatrix& features, const Eigen::VectorXd& labels,
                         double l2_lambda) {
  check_problem(weights, features, labels);
  const auto n = static_cast<double>(features.rows());
  Eigen::VectorXd residual = (features * weights).array() + bias;
  for (Eigen::Index i = 0; i < residual.size(); ++i) {
    residual(i) = sigmoid(residual(i)) - labels(i);
  }
  BceGradient g;
  g.weights = features.transpose() * residual / n + l2_lambda * weights;
  g.bias = residual.sum() / n;
  return g;
}

ScorerModel train(const FeatureMatrix& features, const Eigen::VectorXd& labels,
                  const TrainConfig& config, std::size_t layer_index) {
  const Eigen::Index n = features.rows();
  const Eigen::Index dim = features.cols();
  if (n == 0) throw EmptyDatasetError("train: no samples");
  if (labels.size() != n) throw DimensionError("train: label count does not match samples");
  if (config.max_iterations < 1) throw UsageError("train: max_iterations must be >= 1");
  if (config.l2_lambda < 0.0) throw UsageError("train: l2_lambda must be >= 0");

  Eigen::Index positives = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels(i) != 0.0 && labels(i) != 1.0) {
      throw DataError("train: label of sample " + std::to_string(i) + " is not 0/1",
                      static_cast<std::size_t>(i));
    }
    if (!features.row(i).allFinite()) {
      throw DataError("train: sample " + std::to_string(i) + " has a non-finite feature",
                      static_cast<std::size_t>(i));
    }
    positives += labels(i) == 1.0 ? 1 : 0;
  }
  if (positives == 0 || positives == n) throw SingleClassError("train: both classes required");
  if (n < 4) throw InsufficientClassDataError("train: need at least 4 samples");

  ScorerModel model;
  model.layer_index = layer_index;
  model.config = config;
  model.trained_on = static_cast<std::size_t>(n);
  model.feature_mean = features.colwise().mean().transpose();
  model.feature_std.resize(dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    const double var = (features.col(d).array() - model.feature_mean(d)).square().mean();
    model.feature_std(d) = std::max(std::sqrt(var), kStdFloor);
  }
  const FeatureMatrix z =
      ((features.rowwise() - model.feature_mean.transpose()).array().rowwise() /
       model.feature_std.transpose().array())
          .matrix();

  // Parameters packed as [w; b]. The smooth log-loss here equals bce_loss wherever
  // the probability clamp is inactive and has exactly the bce_gradient derivative.
  const double lambda = config.l2_lambda;
  const auto objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    const auto w = theta.head(dim);
    const double b = theta(dim);
    Eigen::VectorXd logits = (z * w).array() + b;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      loss += softplus(logits(i)) - labels(i) * logits(i);
      logits(i) = sigmoid(logits(i)) - labels(i);
    }
    grad.head(dim) = z.transpose() * logits / static_cast<double>(n) + lambda * w;
    grad(dim) = logits.sum() / static_cast<double>(n);
    return loss / static_cast<double>(n) + 0.5 * lambda * w.squaredNorm();
  };

  optim::LbfgsOptions options;
  options.max_iterations = config.max_iterations;
  options.gradient_tolerance = config.gradient_tolerance;
  options.history_size = config.history_size;
  const auto result = optim::minimize_lbfgs(objective, Eigen::VectorXd::Zero(dim + 1), options);

  model.weights = result.x.head(dim);
  model.bias = result.x(dim);
  model.iterations = result.iterations;
  model.gradient_norm = result.gradient_norm;
  model.stop_reason = optim::to_string(result.reason);
  model.loss_history = result.value_history;
  model.final_loss = bce_loss(model.weights, model.bias, z, labels, lambda);
  return model;
}

ScorerModel train(std::span<const Record> samples, std::size_t layer, std::size_t hidden_dim,
                  const TrainConfig& config) {
  const auto labels = dataset::binary_labels(samples);
  return train(dataset::layer_features(samples, layer, hidden_dim), labels_vector(labels), config,
               layer);
}

double decision_value(const ScorerModel& model, std::span<const double> features) {
  if (features.size() != model.dim()) {
    throw DimensionError("predict: input has " + std::to_string(features.size()) +
                         " features, model expects " + std::to_string(model.dim()));
  }
  double logit = model.bias;
  for (std::size_t d = 0; d < features.size(); ++d) {
    const auto k = static_cast<Eigen::Index>(d);
    logit += model.weights(k) * (features[d] - model.feature_mean(k)) / model.feature_std(k);
  }
  return logit;
}

double predict_proba(const ScorerModel& model, std::span<const double> features) {
  return sigmoid(decision_value(model, features));
}

std::vector<double> predict_proba(const ScorerModel& model, const FeatureMatrix& features) {
  if (static_cast<std::size_t>(features.cols()) != model.dim()) {
    throw DimensionError("predict: input has " + std::to_string(features.cols()) +
                         " features, model expects " + std::to_string(model.dim()));
  }
  std::vector<double> out(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const auto row = features.row(i);
    out[static_cast<std::size_t>(i)] =
        predict_proba(model, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
  }
  return out;
}

Eigen::VectorXd labels_vector(std::span<const int> labels) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Eigen::Index>(i)) = labels[i];
  return y;
}

}  // namespace hiprobe::scorer

#pragma once

#include "hiprobe/dataset.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hiprobe {

struct TrainConfig {
  int max_iterations = 1000;
  double gradient_tolerance = 1e-6;
  double l2_lambda = 1e-4;
  int history_size = 10;
  std::uint64_t seed = 0;
};

/// Logistic anomaly scorer bound to one layer. Inputs are standardized with the
/// stored training mean/std before the linear map.
struct ScorerModel {
  std::size_t layer_index = 0;
  Eigen::VectorXd weights;
  double bias = 0.0;
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_std;
  std::size_t trained_on = 0;
  double final_loss = 0.0;
  TrainConfig config;

  // Optimizer diagnostics.
  int iterations = 0;
  double gradient_norm = 0.0;
  std::string stop_reason;
  std::vector<double> loss_history;

  std::size_t dim() const { return static_cast<std::size_t>(weights.size()); }
};

struct BceGradient {
  Eigen::VectorXd weights;
  double bias = 0.0;
};

namespace scorer {

inline constexpr double kProbabilityClamp = 1e-12;
inline constexpr double kStdFloor = 1e-8;

double sigmoid(double z);

/// Mean binary cross-entropy with probabilities clamped to [1e-12, 1 - 1e-12]
/// inside the logs, plus (l2_lambda / 2) * |w|^2. Labels are 0/1.
double bce_loss(const Eigen::VectorXd& weights, double bias, const FeatureMatrix& features,
                const Eigen::VectorXd& labels, double l2_lambda);

/// Analytic gradient: ((1/N) sum (p - y) h + lambda w, (1/N) sum (p - y)).
BceGradient bce_gradient(const Eigen::VectorXd& weights, double bias,
                         const FeatureMatrix& features, const Eigen::VectorXd& labels,
                         double l2_lambda);

/// Standardizes, then fits w, b from zero with L-BFGS.
ScorerModel train(const FeatureMatrix& features, const Eigen::VectorXd& labels,
                  const TrainConfig& config = {}, std::size_t layer_index = 0);

/// Convenience overload over records at `layer`.
ScorerModel train(std::span<const Record> samples, std::size_t layer, std::size_t hidden_dim,
                  const TrainConfig& config = {});

/// sigmoid(w . standardize(h) + b)
double predict_proba(const ScorerModel& model, std::span<const double> features);

double decision_value(const ScorerModel& model, std::span<const double> features);

/// predict_proba for every row.
std::vector<double> predict_proba(const ScorerModel& model, const FeatureMatrix& features);

Eigen::VectorXd labels_vector(std::span<const int> labels);

}  // namespace scorer
}  // namespace hiprobe

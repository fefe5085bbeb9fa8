#include "hiprobe/saliency.hpp"

#include "hiprobe/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hiprobe::saliency {
namespace {

void check_layer(const LayerStats& stats, std::size_t layer) {
  if (layer >= stats.num_layers) {
    throw DimensionError("layer " + std::to_string(layer) + " out of range [0, " +
                         std::to_string(stats.num_layers) + ")");
  }
}

}  // namespace

LayerStats compute_class_stats(std::span<const Record> samples, std::size_t num_layers,
                               std::size_t hidden_dim, double var_floor) {
  dataset::require_labeled(samples);
  const std::size_t width = num_layers * hidden_dim;

  LayerStats stats;
  stats.num_layers = num_layers;
  stats.hidden_dim = hidden_dim;
  stats.mean_normal.assign(width, 0.0);
  stats.var_normal.assign(width, 0.0);
  stats.mean_anomalous.assign(width, 0.0);
  stats.var_anomalous.assign(width, 0.0);

  // Welford accumulation; var_* holds the running sum of squared deviations.
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Record& r = samples[i];
    if (r.values.size() != width) {
      throw DimensionError("sample " + std::to_string(i) + " has " +
                           std::to_string(r.values.size()) + " values, expected " +
                           std::to_string(width));
    }
    const bool anomalous = r.label == Label::anomalous;
    std::size_t& n = anomalous ? stats.count_anomalous : stats.count_normal;
    auto& mean = anomalous ? stats.mean_anomalous : stats.mean_normal;
    auto& m2 = anomalous ? stats.var_anomalous : stats.var_normal;
    ++n;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < width; ++k) {
      const double x = r.values[k];
      const double delta = x - mean[k];
      mean[k] += delta * inv_n;
      m2[k] += delta * (x - mean[k]);
    }
  }

  if (stats.count_normal < 2 || stats.count_anomalous < 2) {
    throw InsufficientClassDataError(
        "need at least 2 samples per class, got " + std::to_string(stats.count_normal) +
        " normal and " + std::to_string(stats.count_anomalous) + " anomalous");
  }

  const double inv_normal = 1.0 / static_cast<double>(stats.count_normal);
  const double inv_anomalous = 1.0 / static_cast<double>(stats.count_anomalous);
  for (std::size_t k = 0; k < width; ++k) {
    stats.var_normal[k] = std::max(stats.var_normal[k] * inv_normal, var_floor);
    stats.var_anomalous[k] = std::max(stats.var_anomalous[k] * inv_anomalous, var_floor);
  }
  return stats;
}

double kl_divergence_layer(const LayerStats& stats, std::size_t layer) {
  check_layer(stats, layer);
  double total = 0.0;
  for (std::size_t d = 0; d < stats.hidden_dim; ++d) {
    const std::size_t k = stats.index(layer, d);
    const double var_n = stats.var_normal[k];
    const double var_a = stats.var_anomalous[k];
    const double gap = stats.mean_normal[k] - stats.mean_anomalous[k];
    total += 0.5 * (std::log(var_a / var_n) + (var_n + gap * gap) / var_a - 1.0);
  }
  return total / static_cast<double>(stats.hidden_dim);
}

double ldr_layer(const LayerStats& stats, std::size_t layer, double eps) {
  check_layer(stats, layer);
  double total = 0.0;
  for (std::size_t d = 0; d < stats.hidden_dim; ++d) {
    const std::size_t k = stats.index(layer, d);
    const double gap = stats.mean_normal[k] - stats.mean_anomalous[k];
    total += gap * gap / (stats.var_normal[k] + stats.var_anomalous[k] + eps);
  }
  return total / static_cast<double>(stats.hidden_dim);
}

double entropy_layer(const FeatureMatrix& features, int bins) {
  if (features.rows() < 1 || features.cols() < 1) {
    throw EmptyDatasetError("entropy_layer: empty feature matrix");
  }
  if (bins < 2) throw UsageError("entropy_layer: need at least 2 bins");

  const auto n = features.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins));
  double total = 0.0;
  for (Eigen::Index d = 0; d < features.cols(); ++d) {
    const auto column = features.col(d);
    const double lo = column.minCoeff();
    const double hi = column.maxCoeff();
    if (!(hi > lo)) continue;

    std::fill(counts.begin(), counts.end(), 0);
    const double scale = static_cast<double>(bins) / (hi - lo);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto bin = static_cast<int>((column(i) - lo) * scale);
      ++counts[static_cast<std::size_t>(std::clamp(bin, 0, bins - 1))];
    }
    double h = 0.0;
    for (std::size_t c : counts) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) * inv_n;
      h -= p * std::log2(p);
    }
    total += h;
  }
  return total / static_cast<double>(features.cols());
}

double silhouette_layer(const FeatureMatrix& features, std::span<const int> labels) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (labels.size() != n) throw DimensionError("silhouette_layer: label count mismatch");
  const auto anomalous = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (anomalous == 0 || anomalous == n) {
    throw SingleClassError("silhouette_layer: both classes must be present");
  }
  if (n < 3) throw InsufficientClassDataError("silhouette_layer: need at least 3 samples");

  // same[i] / other[i]: summed distance from sample i to its own / the other class.
  std::vector<double> same(n, 0.0);
  std::vector<double> other(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = features.row(static_cast<Eigen::Index>(i));
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = (xi - features.row(static_cast<Eigen::Index>(j))).norm();
      auto& acc = labels[i] == labels[j] ? same : other;
      acc[i] += dist;
      acc[j] += dist;
    }
  }

  const std::size_t class_size[2] = {n - anomalous, anomalous};
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = class_size[labels[i] == 1 ? 1 : 0];
    if (own < 2) continue;
    const double a = same[i] / static_cast<double>(own - 1);
    const double b = other[i] / static_cast<double>(n - own);
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

std::vector<double> normalize_metrics(std::span<const double> values) {
  if (values.size() < 2) {
    throw InsufficientLayersError("z-score normalization needs at least 2 layers");
  }
  const double count = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= count;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / count);

  std::vector<double> out(values.size(), 0.0);
  if (sd < kDegenerateSpread) return out;
  for (std::size_t l = 0; l < values.size(); ++l) out[l] = (values[l] - mean) / sd;
  return out;
}

std::vector<double> fuse_saliency(std::span<const double> kl, std::span<const double> ldr,
                                  std::span<const double> entropy) {
  if (kl.size() != ldr.size() || kl.size() != entropy.size()) {
    throw DimensionError("metric vectors differ in length");
  }
  const auto zk = normalize_metrics(kl);
  const auto zl = normalize_metrics(ldr);
  const auto ze = normalize_metrics(entropy);
  std::vector<double> s(kl.size());
  for (std::size_t l = 0; l < s.size(); ++l) s[l] = zk[l] + zl[l] + ze[l];
  return s;
}

std::size_t argmax_layer(std::span<const double> scores) {
  if (scores.empty()) throw InsufficientLayersError("argmax over zero layers");
  std::size_t best = 0;
  for (std::size_t l = 1; l < scores.size(); ++l) {
    if (scores[l] > scores[best]) best = l;
  }
  return best;
}

std::size_t select_optimal_layer(std::span<const double> kl, std::span<const double> ldr,
                                 std::span<const double> entropy) {
  return argmax_layer(fuse_saliency(kl, ldr, entropy));
}

SaliencyReport probe_layers(std::span<const Record> samples, std::size_t num_layers,
                            std::size_t hidden_dim, const ProbeOptions& options) {
  const LayerStats stats = compute_class_stats(samples, num_layers, hidden_dim);

  std::vector<Record> silhouette_set;
  std::span<const Record> silhouette_view = samples;
  if (options.silhouette_cap > 0 && samples.size() > options.silhouette_cap) {
    const double fraction =
        static_cast<double>(options.silhouette_cap) / static_cast<double>(samples.size());
    silhouette_set = dataset::stratified_subset(samples, fraction, options.seed);
    silhouette_view = silhouette_set;
  }
  const auto silhouette_labels = dataset::binary_labels(silhouette_view);

  SaliencyReport report;
  for (std::size_t l = 0; l < num_layers; ++l) {
    report.kl.push_back(kl_divergence_layer(stats, l));
    report.ldr.push_back(ldr_layer(stats, l));
    report.entropy.push_back(
        entropy_layer(dataset::layer_features(samples, l, hidden_dim), options.bins));
    if (options.silhouette_cap > 0) {
      report.silhouette.push_back(silhouette_layer(
          dataset::layer_features(silhouette_view, l, hidden_dim), silhouette_labels));
    }
  }
  report.norm_kl = normalize_metrics(report.kl);
  report.norm_ldr = normalize_metrics(report.ldr);
  report.norm_entropy = normalize_metrics(report.entropy);
  report.saliency.resize(num_layers);
  for (std::size_t l = 0; l < num_layers; ++l) {
    report.saliency[l] = report.norm_kl[l] + report.norm_ldr[l] + report.norm_entropy[l];
  }
  report.selected_layer = argmax_layer(report.saliency);
  return report;
}

}  // namespace hiprobe::saliency

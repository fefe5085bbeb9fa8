#pragma once

#include "hiprobe/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hiprobe {

/// Class-conditional per-dimension Gaussian fits for every layer.
///
/// Arrays are layer-major (index = layer * hidden_dim + d). Variances are the
/// population (divide-by-n) estimates clamped below by the variance floor.
struct LayerStats {
  std::size_t num_layers = 0;
  std::size_t hidden_dim = 0;
  std::size_t count_normal = 0;
  std::size_t count_anomalous = 0;
  std::vector<double> mean_normal;
  std::vector<double> var_normal;
  std::vector<double> mean_anomalous;
  std::vector<double> var_anomalous;

  std::size_t index(std::size_t layer, std::size_t d) const { return layer * hidden_dim + d; }
};

/// Per-layer layer-saliency metrics, their z-scores, the fused score and the chosen layer.
struct SaliencyReport {
  std::vector<double> kl;
  std::vector<double> ldr;
  std::vector<double> entropy;
  std::vector<double> silhouette;  // empty when not computed
  std::vector<double> norm_kl;
  std::vector<double> norm_ldr;
  std::vector<double> norm_entropy;
  std::vector<double> saliency;
  std::size_t selected_layer = 0;
};

namespace saliency {

inline constexpr double kVarianceFloor = 1e-6;
inline constexpr double kLdrEpsilon = 1e-8;
inline constexpr int kDefaultBins = 64;
inline constexpr double kDegenerateSpread = 1e-12;

/// Throws InsufficientClassDataError unless both classes have at least two samples.
LayerStats compute_class_stats(std::span<const Record> samples, std::size_t num_layers,
                               std::size_t hidden_dim, double var_floor = kVarianceFloor);

/// Mean over dimensions of KL(N_normal || N_anomalous) for independent 1-D Gaussians.
double kl_divergence_layer(const LayerStats& stats, std::size_t layer);

/// Mean over dimensions of (mu_N - mu_A)^2 / (var_N + var_A + eps).
double ldr_layer(const LayerStats& stats, std::size_t layer, double eps = kLdrEpsilon);

/// Mean per-dimension Shannon entropy (bits) of an equal-width histogram over the
/// pooled [min, max] range. A constant column contributes zero.
double entropy_layer(const FeatureMatrix& features, int bins = kDefaultBins);

/// Mean silhouette coefficient under Euclidean distance for binary labels.
/// Samples alone in their class score 0.
double silhouette_layer(const FeatureMatrix& features, std::span<const int> labels);

/// Z-scores across layers using the population standard deviation. A spread
/// below 1e-12 yields all zeros.
std::vector<double> normalize_metrics(std::span<const double> values);

/// Sum of the three z-scored metric vectors.
std::vector<double> fuse_saliency(std::span<const double> kl, std::span<const double> ldr,
                                  std::span<const double> entropy);

/// Index of the maximum; ties go to the lowest index.
std::size_t argmax_layer(std::span<const double> scores);

std::size_t select_optimal_layer(std::span<const double> kl, std::span<const double> ldr,
                                 std::span<const double> entropy);

struct ProbeOptions {
  int bins = kDefaultBins;
  // Silhouette is O(N^2 D) per layer; larger probing sets are subsampled
  // (stratified, seeded) to at most this many samples. Zero disables it.
  std::size_t silhouette_cap = 512;
  std::uint64_t seed = 0;
};

/// Full layer-saliency pass over a labeled probing set.
SaliencyReport probe_layers(std::span<const Record> samples, std::size_t num_layers,
                            std::size_t hidden_dim, const ProbeOptions& options = {});

}  // namespace saliency
}  // namespace hiprobe

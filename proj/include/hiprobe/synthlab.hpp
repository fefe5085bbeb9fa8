#pragma once

// Synthetic layer stacks and planted video streams with known ground truth.
//
// Normal features at layer l are N(0, diag(scale_l^2)); anomalous features are
// shifted by separation[l] * scale_l (.) u_l for a fixed random unit direction
// u_l, so the class-mean distance is separation[l] within-class standard
// deviations. Directions and scales depend only on the profile's noise_seed, so
// probe datasets and streams built from one profile share geometry.

#include "hiprobe/dataset.hpp"
#include "hiprobe/localizer.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hiprobe {

struct LayerProfile {
  std::size_t num_layers = 0;
  std::size_t hidden_dim = 0;
  std::vector<double> separation;
  std::size_t peak_layer = 0;
  std::uint64_t noise_seed = 0;
  // Per-dimension within-class std is 2^u with u ~ U(-scale_spread, scale_spread).
  // Zero gives unit variance everywhere.
  double scale_spread = 0.0;

  /// Hill-shaped profile: `peak_separation` at the peak, and
  /// base_separation * exp(-(l - peak)^2 / (2 (L/4)^2)) elsewhere.
  static LayerProfile peaked(std::size_t num_layers, std::size_t hidden_dim,
                             std::size_t peak_layer, double peak_separation,
                             double base_separation, std::uint64_t noise_seed);

  /// Same separation at every layer; the ratio invariant is not required.
  static LayerProfile flat(std::size_t num_layers, std::size_t hidden_dim, double separation,
                           std::uint64_t noise_seed);

  /// Throws SpecError unless the peak exceeds every other layer by >= 1.2x.
  void validate() const;
};

struct Window {
  std::uint32_t start = 0;
  std::uint32_t end = 0;  // inclusive

  bool operator==(const Window&) const = default;
};

struct PlantedStream {
  std::uint32_t video_id = 0;
  std::uint32_t total_frames = 0;
  std::vector<Window> anomaly_windows;
  std::uint64_t seed = 0;
};

struct ProbeDataset {
  std::vector<Record> samples;   // n_per_class normal, then n_per_class anomalous
  std::size_t peak_layer = 0;
  std::vector<double> closed_form_kl;  // mean per-dimension KL of the true Gaussians
};

struct GeneratedStream {
  std::vector<Record> frames;  // unlabeled, frame_index = keyframe position
  std::vector<Window> anomaly_windows;
};

/// Class centroids of a labeled layer slice, for the distance baseline.
struct Centroids {
  Eigen::VectorXd normal;
  Eigen::VectorXd anomalous;
};

namespace synthlab {

/// Unit shift direction and per-dimension scale for one layer of the profile.
struct LayerGeometry {
  Eigen::VectorXd direction;
  Eigen::VectorXd scale;
};

std::vector<LayerGeometry> layer_geometry(const LayerProfile& profile);

/// Relaxed profile check used by the generators (only shapes and sign of separations).
void check_shape(const LayerProfile& profile);

ProbeDataset generate_probe_dataset(const LayerProfile& profile, std::size_t n_per_class);

/// Throws SpecError on overlapping, unordered or out-of-range windows.
GeneratedStream generate_video_stream(const PlantedStream& spec, const LayerProfile& profile);

Manifest manifest_for(const LayerProfile& profile, LabelScheme scheme, const std::string& model_name);

Centroids fit_centroids(const FeatureMatrix& features, std::span<const int> labels);

/// d_N / (d_N + d_A) with Euclidean distances to the class centroids.
double baseline_distance_scorer(const Centroids& centroids, std::span<const double> vector);

/// Area under the ROC curve via the rank statistic; ties count one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Frame-count IoU between the union of anomalous segments and the union of windows.
double temporal_iou(std::span<const AnomalySegment> segments, std::span<const Window> windows);

}  // namespace synthlab
}  // namespace hiprobe

#pragma once

#include "hiprobe/dataset.hpp"
#include "hiprobe/scorer.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hiprobe {

struct AnomalyCurve {
  std::uint32_t video_id = 0;
  std::vector<std::uint32_t> frame_indices;
  std::vector<double> raw_scores;
  std::vector<double> smoothed_scores;
};

/// Adaptive threshold T = calibration_mean + kappa * calibration_std.
struct ThresholdConfig {
  double kappa = 0.2;
  double sigma_smooth = 0.4;
  double calibration_mean = 0.0;
  double calibration_std = 0.0;
  std::size_t calibration_count = 0;

  double threshold() const { return calibration_mean + kappa * calibration_std; }
};

enum class SegmentKind { anomalous, normal };

const char* to_string(SegmentKind kind);

struct AnomalySegment {
  std::uint32_t start_frame = 0;
  std::uint32_t end_frame = 0;  // inclusive
  SegmentKind kind = SegmentKind::normal;
  double peak_score = 0.0;

  bool operator==(const AnomalySegment&) const = default;
};

struct Localization {
  AnomalyCurve curve;
  double threshold = 0.0;
  std::vector<AnomalySegment> segments;
};

namespace localizer {

inline constexpr double kDefaultKappa = 0.2;
inline constexpr double kDefaultSigma = 0.4;

/// Truncation radius of the smoothing kernel: max(1, ceil(3 sigma)).
int kernel_radius(double sigma);

/// Gaussian kernel smoothing over score positions. Each output is the
/// renormalized weighted mean of its (boundary-clipped) window.
std::vector<double> smooth_curve(std::span<const double> raw_scores, double sigma);

/// Mean and population std of the calibration scores, combined with kappa.
ThresholdConfig compute_threshold(std::span<const double> calibration_scores, double kappa,
                                  double sigma_smooth = kDefaultSigma);

/// Maximal runs above `threshold` (strictly) are anomalous, the rest normal.
/// Segments tile [first frame, last frame]: a segment ends one frame before the
/// next segment's first keyframe.
std::vector<AnomalySegment> segment_curve(const AnomalyCurve& curve, double threshold);

/// Scores every frame of a sequence, smooths, thresholds and segments it.
Localization localize(const ScorerModel& model, const VideoSequence& sequence,
                      const ThresholdConfig& config);

}  // namespace localizer
}  // namespace hiprobe

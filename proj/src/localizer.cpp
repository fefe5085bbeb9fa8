#include "hiprobe/localizer.hpp"

#include "hiprobe/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hiprobe {

const char* to_string(SegmentKind kind) {
  return kind == SegmentKind::anomalous ? "anomalous" : "normal";
}

namespace localizer {

int kernel_radius(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw UsageError("smoothing sigma must be positive and finite");
  }
  return std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
}

std::vector<double> smooth_curve(std::span<const double> raw_scores, double sigma) {
  const int radius = kernel_radius(sigma);
  std::vector<double> weights(static_cast<std::size_t>(2 * radius + 1));
  for (int k = -radius; k <= radius; ++k) {
    weights[static_cast<std::size_t>(k + radius)] =
        std::exp(-static_cast<double>(k * k) / (2.0 * sigma * sigma));
  }

  const auto n = static_cast<std::ptrdiff_t>(raw_scores.size());
  std::vector<double> out(raw_scores.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - radius);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + radius);
    double num = 0.0;
    double den = 0.0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      const double w = weights[static_cast<std::size_t>(j - i + radius)];
      num += w * raw_scores[static_cast<std::size_t>(j)];
      den += w;
    }
    // clamp guards rounding so outputs stay inside the window's range
    double v = num / den;
    const auto [mn, mx] = std::minmax_element(raw_scores.begin() + lo, raw_scores.begin() + hi + 1);
    out[static_cast<std::size_t>(i)] = std::clamp(v, *mn, *mx);
  }
  return out;
}

ThresholdConfig compute_threshold(std::span<const double> calibration_scores, double kappa,
                                  double sigma_smooth) {
  if (calibration_scores.size() < 2) {
    throw InsufficientCalibrationError("threshold calibration needs at least 2 scores, got " +
                                       std::to_string(calibration_scores.size()));
  }
  kernel_radius(sigma_smooth);
  const auto n = static_cast<double>(calibration_scores.size());
  double mean = 0.0;
  for (double s : calibration_scores) mean += s;
  mean /= n;
  double ss = 0.0;
  for (double s : calibration_scores) ss += (s - mean) * (s - mean);

  ThresholdConfig config;
  config.kappa = kappa;
  config.sigma_smooth = sigma_smooth;
  config.calibration_mean = mean;
  config.calibration_std = std::sqrt(ss / n);
  config.calibration_count = calibration_scores.size();
  if (!std::isfinite(config.threshold())) {
    throw DataError("threshold calibration produced a non-finite threshold", 0);
  }
  return config;
}

std::vector<AnomalySegment> segment_curve(const AnomalyCurve& curve, double threshold) {
  const auto& scores = curve.smoothed_scores;
  if (scores.size() != curve.frame_indices.size()) {
    throw DimensionError("segment_curve: smoothed scores and frame indices differ in length");
  }
  std::vector<AnomalySegment> segments;
  std::size_t begin = 0;
  while (begin < scores.size()) {
    const bool above = scores[begin] > threshold;
    std::size_t end = begin;
    double peak = scores[begin];
    while (end + 1 < scores.size() && (scores[end + 1] > threshold) == above) {
      ++end;
      peak = std::max(peak, scores[end]);
    }
    AnomalySegment seg;
    seg.kind = above ? SegmentKind::anomalous : SegmentKind::normal;
    seg.start_frame = curve.frame_indices[begin];
    seg.end_frame =
        end + 1 < scores.size() ? curve.frame_indices[end + 1] - 1 : curve.frame_indices[end];
    seg.peak_score = peak;
    segments.push_back(seg);
    begin = end + 1;
  }
  return segments;
}

Localization localize(const ScorerModel& model, const VideoSequence& sequence,
                      const ThresholdConfig& config) {
  Localization out;
  out.curve.video_id = sequence.video_id;
  out.curve.frame_indices = sequence.frame_indices;
  out.curve.raw_scores = scorer::predict_proba(model, sequence.features);
  out.curve.smoothed_scores = smooth_curve(out.curve.raw_scores, config.sigma_smooth);
  out.threshold = config.threshold();
  out.segments = segment_curve(out.curve, out.threshold);
  return out;
}

}  // namespace localizer
}  // namespace hiprobe

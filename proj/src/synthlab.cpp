#include "hiprobe/synthlab.hpp"

#include "hiprobe/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace hiprobe {
namespace {

enum class Stream : std::uint64_t { geometry = 1, probe = 2, video = 3 };

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::mt19937_64 make_rng(std::uint64_t seed, Stream stream, std::uint64_t extra = 0) {
  return std::mt19937_64(mix64(mix64(seed ^ static_cast<std::uint64_t>(stream)) ^ extra));
}

}  // namespace

LayerProfile LayerProfile::peaked(std::size_t num_layers, std::size_t hidden_dim,
                                  std::size_t peak_layer, double peak_separation,
                                  double base_separation, std::uint64_t noise_seed) {
  LayerProfile p;
  p.num_layers = num_layers;
  p.hidden_dim = hidden_dim;
  p.peak_layer = peak_layer;
  p.noise_seed = noise_seed;
  p.separation.resize(num_layers);
  const double width = std::max(1.0, static_cast<double>(num_layers) / 4.0);
  for (std::size_t l = 0; l < num_layers; ++l) {
    const double offset = static_cast<double>(l) - static_cast<double>(peak_layer);
    p.separation[l] = l == peak_layer
                          ? peak_separation
                          : base_separation * std::exp(-offset * offset / (2.0 * width * width));
  }
  return p;
}

LayerProfile LayerProfile::flat(std::size_t num_layers, std::size_t hidden_dim, double separation,
                                std::uint64_t noise_seed) {
  LayerProfile p;
  p.num_layers = num_layers;
  p.hidden_dim = hidden_dim;
  p.noise_seed = noise_seed;
  p.separation.assign(num_layers, separation);
  return p;
}

void LayerProfile::validate() const {
  synthlab::check_shape(*this);
  for (std::size_t l = 0; l < num_layers; ++l) {
    if (l != peak_layer && !(separation[peak_layer] >= 1.2 * separation[l])) {
      throw SpecError("peak layer " + std::to_string(peak_layer) +
                      " must exceed layer " + std::to_string(l) + " by at least 1.2x");
    }
  }
  if (num_layers > 1 && !(separation[peak_layer] > 0.0)) {
    throw SpecError("peak separation must be positive");
  }
}

namespace synthlab {

void check_shape(const LayerProfile& profile) {
  if (profile.num_layers < 1 || profile.hidden_dim < 1) {
    throw SpecError("profile needs num_layers >= 1 and hidden_dim >= 1");
  }
  if (profile.separation.size() != profile.num_layers) {
    throw SpecError("profile separation length differs from num_layers");
  }
  if (profile.peak_layer >= profile.num_layers) throw SpecError("peak_layer out of range");
  for (double s : profile.separation) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw SpecError("separations must be finite and >= 0");
  }
  if (!(profile.scale_spread >= 0.0)) throw SpecError("scale_spread must be >= 0");
}

std::vector<LayerGeometry> layer_geometry(const LayerProfile& profile) {
  check_shape(profile);
  auto rng = make_rng(profile.noise_seed, Stream::geometry);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> spread(-profile.scale_spread, profile.scale_spread);
  const auto dim = static_cast<Eigen::Index>(profile.hidden_dim);

  std::vector<LayerGeometry> geometry(profile.num_layers);
  for (auto& g : geometry) {
    g.direction.resize(dim);
    do {
      for (Eigen::Index d = 0; d < dim; ++d) g.direction(d) = gauss(rng);
    } while (g.direction.norm() == 0.0);
    g.direction.normalize();
    g.scale = Eigen::VectorXd::Ones(dim);
    if (profile.scale_spread > 0.0) {
      for (Eigen::Index d = 0; d < dim; ++d) g.scale(d) = std::exp2(spread(rng));
    }
  }
  return geometry;
}

namespace {

// Appends one frame/sample across all layers.
void draw_record(const LayerProfile& profile, const std::vector<LayerGeometry>& geometry,
                 bool anomalous, std::mt19937_64& rng, std::vector<float>& out) {
  std::normal_distribution<double> gauss;
  out.resize(profile.num_layers * profile.hidden_dim);
  std::size_t k = 0;
  for (std::size_t l = 0; l < profile.num_layers; ++l) {
    const auto& g = geometry[l];
    const double shift = anomalous ? profile.separation[l] : 0.0;
    for (Eigen::Index d = 0; d < g.direction.size(); ++d, ++k) {
      out[k] = static_cast<float>(g.scale(d) * (gauss(rng) + shift * g.direction(d)));
    }
  }
}

}  // namespace

ProbeDataset generate_probe_dataset(const LayerProfile& profile, std::size_t n_per_class) {
  if (n_per_class < 2) throw SpecError("generate_probe_dataset: n_per_class must be >= 2");
  const auto geometry = layer_geometry(profile);
  auto rng = make_rng(profile.noise_seed, Stream::probe);

  ProbeDataset out;
  out.peak_layer = profile.peak_layer;
  out.samples.resize(2 * n_per_class);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    Record& r = out.samples[i];
    const bool anomalous = i >= n_per_class;
    r.label = anomalous ? Label::anomalous : Label::normal;
    r.video_id = static_cast<std::uint32_t>(i);
    r.frame_index = 0;
    draw_record(profile, geometry, anomalous, rng, r.values);
  }
  // Per dimension the shift is s * u_d standard deviations, so the layer mean is s^2 / (2D).
  for (double s : profile.separation) {
    out.closed_form_kl.push_back(s * s / (2.0 * static_cast<double>(profile.hidden_dim)));
  }
  return out;
}

GeneratedStream generate_video_stream(const PlantedStream& spec, const LayerProfile& profile) {
  std::vector<Window> windows = spec.anomaly_windows;
  std::sort(windows.begin(), windows.end(),
            [](const Window& a, const Window& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].start > windows[i].end || windows[i].end >= spec.total_frames) {
      throw SpecError("anomaly window [" + std::to_string(windows[i].start) + ", " +
                      std::to_string(windows[i].end) + "] is empty or outside the stream");
    }
    if (i > 0 && windows[i].start <= windows[i - 1].end) {
      throw SpecError("anomaly windows overlap");
    }
  }

  const auto geometry = layer_geometry(profile);
  auto rng = make_rng(spec.seed, Stream::video, mix64(profile.noise_seed) ^ spec.video_id);

  GeneratedStream out;
  out.anomaly_windows = windows;
  out.frames.resize(spec.total_frames);
  std::size_t w = 0;
  for (std::uint32_t t = 0; t < spec.total_frames; ++t) {
    while (w < windows.size() && windows[w].end < t) ++w;
    const bool anomalous = w < windows.size() && windows[w].start <= t;
    Record& r = out.frames[t];
    r.label = Label::unlabeled;
    r.video_id = spec.video_id;
    r.frame_index = t;
    draw_record(profile, geometry, anomalous, rng, r.values);
  }
  return out;
}

Manifest manifest_for(const LayerProfile& profile, LabelScheme scheme,
                      const std::string& model_name) {
  Manifest m;
  m.model_name = model_name;
  m.num_layers = static_cast<std::uint32_t>(profile.num_layers);
  m.hidden_dim = static_cast<std::uint32_t>(profile.hidden_dim);
  m.label_scheme = scheme;
  m.created_utc = dataset::utc_timestamp_now();
  return m;
}

Centroids fit_centroids(const FeatureMatrix& features, std::span<const int> labels) {
  if (labels.size() != static_cast<std::size_t>(features.rows())) {
    throw DimensionError("fit_centroids: label count mismatch");
  }
  Centroids c;
  c.normal = Eigen::VectorXd::Zero(features.cols());
  c.anomalous = Eigen::VectorXd::Zero(features.cols());
  std::size_t counts[2] = {0, 0};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& target = labels[i] == 1 ? c.anomalous : c.normal;
    target += features.row(static_cast<Eigen::Index>(i)).transpose();
    ++counts[labels[i] == 1 ? 1 : 0];
  }
  if (counts[0] == 0 || counts[1] == 0) throw SingleClassError("fit_centroids: both classes required");
  c.normal /= static_cast<double>(counts[0]);
  c.anomalous /= static_cast<double>(counts[1]);
  return c;
}

double baseline_distance_scorer(const Centroids& centroids, std::span<const double> vector) {
  if (static_cast<Eigen::Index>(vector.size()) != centroids.normal.size()) {
    throw DimensionError("baseline_distance_scorer: dimension mismatch");
  }
  const Eigen::Map<const Eigen::VectorXd> x(vector.data(), static_cast<Eigen::Index>(vector.size()));
  const double d_normal = (x - centroids.normal).norm();
  const double d_anomalous = (x - centroids.anomalous).norm();
  const double total = d_normal + d_anomalous;
  return total > 0.0 ? d_normal / total : 0.5;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimensionError("roc_auc: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += mid_rank;
        ++positives;
      }
    }
    i = j + 1;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) throw SingleClassError("roc_auc: both classes required");
  const double p = static_cast<double>(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

double temporal_iou(std::span<const AnomalySegment> segments, std::span<const Window> windows) {
  std::uint32_t last = 0;
  for (const auto& s : segments) last = std::max(last, s.end_frame);
  for (const auto& w : windows) last = std::max(last, w.end);
  std::vector<unsigned char> detected(std::size_t{last} + 1, 0);
  std::vector<unsigned char> truth(std::size_t{last} + 1, 0);
  for (const auto& s : segments) {
    if (s.kind != SegmentKind::anomalous) continue;
    std::fill(detected.begin() + s.start_frame, detected.begin() + s.end_frame + 1, 1);
  }
  for (const auto& w : windows) std::fill(truth.begin() + w.start, truth.begin() + w.end + 1, 1);

  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    inter += detected[t] & truth[t];
    uni += detected[t] | truth[t];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace synthlab
}  // namespace hiprobe

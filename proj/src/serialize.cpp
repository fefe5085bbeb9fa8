#include "hiprobe/serialize.hpp"

#include "hiprobe/error.hpp"

#include <cmath>
#include <fstream>
#include <system_error>

namespace hiprobe::serialize {
namespace {

Eigen::VectorXd vector_from(const json& j, const char* key) {
  const auto values = j.at(key).get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

template <typename F>
auto guarded(const char* what, F&& parse) {
  try {
    return parse();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

json to_json(const SaliencyReport& report) {
  return json{{"kl", report.kl},
              {"ldr", report.ldr},
              {"entropy", report.entropy},
              {"silhouette", report.silhouette},
              {"norm_kl", report.norm_kl},
              {"norm_ldr", report.norm_ldr},
              {"norm_entropy", report.norm_entropy},
              {"saliency", report.saliency},
              {"selected_layer", report.selected_layer}};
}

SaliencyReport saliency_from_json(const json& j) {
  return guarded("saliency report", [&] {
    SaliencyReport r;
    r.kl = j.at("kl").get<std::vector<double>>();
    r.ldr = j.at("ldr").get<std::vector<double>>();
    r.entropy = j.at("entropy").get<std::vector<double>>();
    r.silhouette = j.value("silhouette", std::vector<double>{});
    r.norm_kl = j.value("norm_kl", std::vector<double>{});
    r.norm_ldr = j.value("norm_ldr", std::vector<double>{});
    r.norm_entropy = j.value("norm_entropy", std::vector<double>{});
    r.saliency = j.at("saliency").get<std::vector<double>>();
    r.selected_layer = j.at("selected_layer").get<std::size_t>();
    return r;
  });
}

json to_json(const TrainConfig& config) {
  return json{{"max_iterations", config.max_iterations},
              {"gradient_tolerance", config.gradient_tolerance},
              {"l2_lambda", config.l2_lambda},
              {"history_size", config.history_size},
              {"seed", config.seed}};
}

TrainConfig train_config_from_json(const json& j) {
  return guarded("train config", [&] {
    TrainConfig c;
    c.max_iterations = j.at("max_iterations").get<int>();
    c.gradient_tolerance = j.at("gradient_tolerance").get<double>();
    c.l2_lambda = j.at("l2_lambda").get<double>();
    c.history_size = j.at("history_size").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  });
}

json to_json(const ScorerModel& model) {
  return json{{"layer_index", model.layer_index},
              {"weights", to_std(model.weights)},
              {"bias", model.bias},
              {"feature_mean", to_std(model.feature_mean)},
              {"feature_std", to_std(model.feature_std)},
              {"final_loss", model.final_loss},
              {"trained_on", model.trained_on},
              {"iterations", model.iterations},
              {"gradient_norm", model.gradient_norm},
              {"stop_reason", model.stop_reason},
              {"config", to_json(model.config)}};
}

ScorerModel model_from_json(const json& j) {
  ScorerModel m = guarded("scorer model", [&] {
    ScorerModel out;
    out.layer_index = j.at("layer_index").get<std::size_t>();
    out.weights = vector_from(j, "weights");
    out.bias = j.at("bias").get<double>();
    out.feature_mean = vector_from(j, "feature_mean");
    out.feature_std = vector_from(j, "feature_std");
    out.final_loss = j.at("final_loss").get<double>();
    out.trained_on = j.value("trained_on", std::size_t{0});
    out.iterations = j.value("iterations", 0);
    out.gradient_norm = j.value("gradient_norm", 0.0);
    out.stop_reason = j.value("stop_reason", std::string{});
    out.config = train_config_from_json(j.at("config"));
    return out;
  });
  if (m.weights.size() == 0 || m.feature_mean.size() != m.weights.size() ||
      m.feature_std.size() != m.weights.size()) {
    throw FormatError("scorer model: weights, feature_mean and feature_std lengths differ");
  }
  if (!m.weights.allFinite() || !m.feature_mean.allFinite() || !m.feature_std.allFinite() ||
      !std::isfinite(m.bias)) {
    throw FormatError("scorer model: non-finite parameter");
  }
  if (m.feature_std.minCoeff() < scorer::kStdFloor) {
    throw FormatError("scorer model: feature_std below the 1e-8 floor");
  }
  return m;
}

json to_json(const ThresholdConfig& config) {
  return json{{"kappa", config.kappa},
              {"sigma_smooth", config.sigma_smooth},
              {"calibration_mean", config.calibration_mean},
              {"calibration_std", config.calibration_std},
              {"calibration_count", config.calibration_count},
              {"threshold", config.threshold()}};
}

ThresholdConfig threshold_from_json(const json& j) {
  return guarded("threshold config", [&] {
    ThresholdConfig c;
    c.kappa = j.value("kappa", localizer::kDefaultKappa);
    c.sigma_smooth = j.value("sigma_smooth", localizer::kDefaultSigma);
    c.calibration_mean = j.at("calibration_mean").get<double>();
    c.calibration_std = j.at("calibration_std").get<double>();
    c.calibration_count = j.value("calibration_count", std::size_t{0});
    return c;
  });
}

json to_json(const AnomalySegment& segment) {
  return json{{"start_frame", segment.start_frame},
              {"end_frame", segment.end_frame},
              {"kind", to_string(segment.kind)},
              {"peak_score", segment.peak_score}};
}

json to_json(const Localization& localization) {
  json segments = json::array();
  for (const auto& s : localization.segments) segments.push_back(to_json(s));
  return json{{"video_id", localization.curve.video_id},
              {"threshold", localization.threshold},
              {"segments", segments},
              {"frame_indices", localization.curve.frame_indices},
              {"raw_scores", localization.curve.raw_scores},
              {"smoothed_scores", localization.curve.smoothed_scores}};
}

json to_json(const LayerProfile& profile) {
  return json{{"num_layers", profile.num_layers},   {"hidden_dim", profile.hidden_dim},
              {"separation", profile.separation},   {"peak_layer", profile.peak_layer},
              {"noise_seed", profile.noise_seed},   {"scale_spread", profile.scale_spread}};
}

json to_json(std::span<const Window> windows) {
  json out = json::array();
  for (const auto& w : windows) out.push_back(json::array({w.start, w.end}));
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

}  // namespace hiprobe::serialize

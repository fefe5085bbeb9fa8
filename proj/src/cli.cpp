#include "hiprobe/cli.hpp"

#include "hiprobe/dataset.hpp"
#include "hiprobe/error.hpp"
#include "hiprobe/localizer.hpp"
#include "hiprobe/saliency.hpp"
#include "hiprobe/scorer.hpp"
#include "hiprobe/serialize.hpp"
#include "hiprobe/synthlab.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace hiprobe::cli {
namespace {

using serialize::json;

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> instance;
  std::call_once(once, [] {
    instance = spdlog::stderr_logger_mt("hiprobe");
    const char* env = std::getenv("HIPROBE_LOG");
    instance->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
  });
  return instance;
}

class Stopwatch {
 public:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void emit(const json& document, const std::string& path, std::ostream& out) {
  const std::string text = document.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    serialize::write_text_file(path, text);
  }
}

// ---------------------------------------------------------------------------
// probe

// Labels from an annotations file, when given, replace the dump's own.
Dump read_labeled(const std::string& path, const std::string& annotations) {
  Dump dump = dataset::read_dump(path);
  if (!annotations.empty()) dataset::apply_annotations(dump.records, dataset::read_annotations(annotations));
  return dump;
}

struct ProbeArgs {
  std::string dump;
  std::string annotations;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  int bins = saliency::kDefaultBins;
  std::size_t silhouette_cap = 512;
  std::string out;
};

struct ProbeOutcome {
  SaliencyReport report;
  std::size_t normal = 0;
  std::size_t anomalous = 0;
};

ProbeOutcome run_probe(const Dump& dump, const ProbeArgs& args) {
  const auto subset = dataset::stratified_subset(dump.records, args.fraction, args.seed);
  ProbeOutcome outcome;
  for (const auto& r : subset) ++(r.label == Label::anomalous ? outcome.anomalous : outcome.normal);
  saliency::ProbeOptions options;
  options.bins = args.bins;
  options.silhouette_cap = args.silhouette_cap;
  options.seed = args.seed;
  outcome.report = saliency::probe_layers(subset, dump.manifest.num_layers,
                                          dump.manifest.hidden_dim, options);
  return outcome;
}

json probe_document(const ProbeOutcome& outcome, const Dump& dump, const ProbeArgs& args) {
  json doc = serialize::to_json(outcome.report);
  doc["config"] = json{{"dump", args.dump},
                       {"fraction", args.fraction},
                       {"seed", args.seed},
                       {"bins", args.bins},
                       {"silhouette_cap", args.silhouette_cap},
                       {"num_layers", dump.manifest.num_layers},
                       {"hidden_dim", dump.manifest.hidden_dim},
                       {"probing_normal", outcome.normal},
                       {"probing_anomalous", outcome.anomalous}};
  return doc;
}

void cmd_probe(const ProbeArgs& args, std::ostream& out) {
  const Dump dump = read_labeled(args.dump, args.annotations);
  const auto outcome = run_probe(dump, args);
  logger()->info("probe: selected layer {} from {} normal / {} anomalous samples",
                 outcome.report.selected_layer, outcome.normal, outcome.anomalous);
  emit(probe_document(outcome, dump, args), args.out, out);
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string dump;
  std::string annotations;
  std::string report;
  std::optional<double> fraction;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> layer;
  TrainConfig config;
  std::string out;
};

struct TrainOutcome {
  ScorerModel model;
  ThresholdConfig calibration;
};

TrainOutcome run_train(const Dump& dump, std::size_t layer, double fraction, std::uint64_t seed,
                       const TrainConfig& config) {
  if (layer >= dump.manifest.num_layers) {
    throw DimensionError("layer " + std::to_string(layer) + " outside dump range [0, " +
                         std::to_string(dump.manifest.num_layers) + ")");
  }
  const auto subset = dataset::stratified_subset(dump.records, fraction, seed);
  TrainOutcome outcome;
  outcome.model = scorer::train(subset, layer, dump.manifest.hidden_dim, config);
  // Calibration pool: the probing subset's own scores, both classes together.
  const auto scores = scorer::predict_proba(
      outcome.model, dataset::layer_features(subset, layer, dump.manifest.hidden_dim));
  outcome.calibration = localizer::compute_threshold(scores, localizer::kDefaultKappa);
  return outcome;
}

json calibration_json(const ThresholdConfig& c) {
  return json{{"mean", c.calibration_mean}, {"std", c.calibration_std}, {"count", c.calibration_count}};
}

json model_document(const TrainOutcome& outcome, double fraction, std::uint64_t seed) {
  json doc = serialize::to_json(outcome.model);
  doc["calibration"] = calibration_json(outcome.calibration);
  doc["subset"] = json{{"fraction", fraction}, {"seed", seed}};
  return doc;
}

void cmd_train(const TrainArgs& args, std::ostream& out) {
  const json report_json = serialize::read_json_file(args.report);
  const SaliencyReport report = serialize::saliency_from_json(report_json);
  const Dump dump = read_labeled(args.dump, args.annotations);

  // Default to the probe's subset so layer choice, scorer and calibration share data.
  const json report_config = report_json.value("config", json::object());
  const double fraction = args.fraction.value_or(report_config.value("fraction", 1.0));
  const std::uint64_t seed = args.seed.value_or(report_config.value("seed", std::uint64_t{0}));
  const std::size_t layer = args.layer.value_or(report.selected_layer);

  TrainConfig config = args.config;
  config.seed = seed;
  const auto outcome = run_train(dump, layer, fraction, seed, config);
  logger()->info("train: layer {} loss {:.6g} after {} iterations ({})", layer,
                 outcome.model.final_loss, outcome.model.iterations, outcome.model.stop_reason);
  emit(model_document(outcome, fraction, seed), args.out, out);
}

// ---------------------------------------------------------------------------
// localize

struct LocalizeArgs {
  std::vector<std::string> sequences;
  std::string model;
  std::string calibration;
  double kappa = localizer::kDefaultKappa;
  double sigma = localizer::kDefaultSigma;
  unsigned workers = 1;
  std::string out;
  std::string csv;
};

ThresholdConfig calibration_from_dump(const ScorerModel& model, const std::string& path,
                                      double kappa, double sigma) {
  const Dump dump = dataset::read_dump(path);
  dataset::require_labeled(dump.records);
  if (model.layer_index >= dump.manifest.num_layers || dump.manifest.hidden_dim != model.dim()) {
    throw DimensionError("calibration dump does not match the model's layer/dimension");
  }
  const auto scores = scorer::predict_proba(
      model, dataset::layer_features(dump.records, model.layer_index, dump.manifest.hidden_dim));
  return localizer::compute_threshold(scores, kappa, sigma);
}

std::vector<Localization> localize_file(const std::string& path, const ScorerModel& model,
                                        const ThresholdConfig& threshold) {
  const Dump dump = dataset::read_dump(path);
  if (dump.manifest.hidden_dim != model.dim()) {
    throw DimensionError("'" + path + "' has hidden_dim " + std::to_string(dump.manifest.hidden_dim) +
                         ", model expects " + std::to_string(model.dim()));
  }
  std::vector<Localization> out;
  for (const auto& seq : dataset::sequences_at_layer(dump, model.layer_index)) {
    out.push_back(localizer::localize(model, seq, threshold));
  }
  return out;
}

std::vector<Localization> localize_all(const std::vector<std::string>& paths,
                                       const ScorerModel& model, const ThresholdConfig& threshold,
                                       unsigned workers) {
  std::vector<std::vector<Localization>> per_file(paths.size());
  std::vector<std::exception_ptr> failures(paths.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < paths.size(); i = next++) {
      try {
        per_file[i] = localize_file(paths[i], model, threshold);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const unsigned count = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(std::max<std::size_t>(paths.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < count; ++t) pool.emplace_back(work);
    work();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  std::vector<Localization> out;
  for (auto& v : per_file) std::move(v.begin(), v.end(), std::back_inserter(out));
  return out;
}

ThresholdConfig resolve_threshold(const json& model_json, const ScorerModel& model,
                                  const LocalizeArgs& args) {
  if (!args.calibration.empty()) {
    return calibration_from_dump(model, args.calibration, args.kappa, args.sigma);
  }
  if (!model_json.contains("calibration")) {
    throw UsageError("model has no calibration block; pass --calibration <probing dump>");
  }
  const json& c = model_json.at("calibration");
  ThresholdConfig t;
  try {
    t.calibration_mean = c.at("mean").get<double>();
    t.calibration_std = c.at("std").get<double>();
    t.calibration_count = c.value("count", std::size_t{0});
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed calibration block: ") + e.what());
  }
  t.kappa = args.kappa;
  t.sigma_smooth = args.sigma;
  localizer::kernel_radius(t.sigma_smooth);
  return t;
}

std::string curves_csv(const std::vector<Localization>& videos) {
  std::ostringstream csv;
  csv << std::setprecision(17);
  csv << "video_id,frame_index,raw_score,smoothed_score,anomalous\n";
  for (const auto& v : videos) {
    for (std::size_t i = 0; i < v.curve.frame_indices.size(); ++i) {
      csv << v.curve.video_id << ',' << v.curve.frame_indices[i] << ',' << v.curve.raw_scores[i]
          << ',' << v.curve.smoothed_scores[i] << ','
          << (v.curve.smoothed_scores[i] > v.threshold ? 1 : 0) << '\n';
    }
  }
  return csv.str();
}

json localize_document(const std::vector<Localization>& videos, const ThresholdConfig& threshold,
                       const LocalizeArgs& args) {
  json list = json::array();
  for (const auto& v : videos) list.push_back(serialize::to_json(v));
  return json{{"config", json{{"model", args.model},
                              {"sequences", args.sequences},
                              {"calibration_source", args.calibration.empty() ? "model" : args.calibration},
                              {"kappa", threshold.kappa},
                              {"sigma", threshold.sigma_smooth},
                              {"threshold", serialize::to_json(threshold)}}},
              {"videos", list}};
}

void cmd_localize(const LocalizeArgs& args, std::ostream& out) {
  const json model_json = serialize::read_json_file(args.model);
  const ScorerModel model = serialize::model_from_json(model_json);
  const ThresholdConfig threshold = resolve_threshold(model_json, model, args);
  const auto videos = localize_all(args.sequences, model, threshold, args.workers);
  logger()->info("localize: {} videos, threshold {:.6g}", videos.size(), threshold.threshold());

  const json doc = localize_document(videos, threshold, args);
  if (!args.csv.empty()) serialize::write_text_file(args.csv, curves_csv(videos));
  emit(doc, args.out, out);
}

// ---------------------------------------------------------------------------
// synthetic lab

struct ProfileArgs {
  std::size_t layers = 32;
  std::size_t dim = 64;
  std::size_t peak = 20;
  double peak_sep = 4.0;
  double base_sep = 1.0;
  double scale_spread = 0.0;
  std::uint32_t k = 8;
};

LayerProfile make_profile(const ProfileArgs& p, std::uint64_t noise_seed) {
  LayerProfile profile =
      LayerProfile::peaked(p.layers, p.dim, p.peak, p.peak_sep, p.base_sep, noise_seed);
  profile.scale_spread = p.scale_spread;
  profile.validate();
  return profile;
}

void add_profile_options(CLI::App* app, ProfileArgs& p) {
  app->add_option("--layers", p.layers, "Number of layers")->capture_default_str();
  app->add_option("--dim", p.dim, "Hidden dimension")->capture_default_str();
  app->add_option("--peak", p.peak, "Peak layer index")->capture_default_str();
  app->add_option("--peak-sep", p.peak_sep, "Class separation at the peak (std units)")
      ->capture_default_str();
  app->add_option("--base-sep", p.base_sep, "Separation scale elsewhere")->capture_default_str();
  app->add_option("--scale-spread", p.scale_spread,
                  "Per-dimension std is 2^U(-spread, spread)")
      ->capture_default_str();
  app->add_option("--k", p.k, "Keyframes sampled per segment (manifest)")->capture_default_str();
}

struct SynthProbeArgs {
  ProfileArgs profile;
  std::size_t n_per_class = 500;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_synth_probe(const SynthProbeArgs& args) {
  const LayerProfile profile = make_profile(args.profile, args.seed);
  const auto data = synthlab::generate_probe_dataset(profile, args.n_per_class);
  Manifest manifest = synthlab::manifest_for(profile, LabelScheme::video_level, "synthlab");
  manifest.sampling_k = args.profile.k;

  json truth{{"peak_layer", profile.peak_layer},
             {"anomaly_windows", json::array()},
             {"closed_form_kl", data.closed_form_kl},
             {"profile", serialize::to_json(profile)}};
  dataset::write_dump(data.samples, manifest, args.out);
  serialize::write_text_file(args.out + ".truth.json", truth.dump(2) + "\n");
}

struct SynthStreamArgs {
  ProfileArgs profile;
  std::uint64_t profile_seed = 0;
  std::uint64_t seed = 0;
  std::uint32_t frames = 1000;
  std::uint32_t video_id = 0;
  std::vector<std::string> windows;
  std::string out;
};

Window parse_window(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    const auto start = std::stoul(text.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument(text);
    const auto end = std::stoul(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument(text);
    return Window{static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(end)};
  } catch (const std::logic_error&) {
    throw UsageError("window '" + text + "' is not START:END");
  }
}

void cmd_synth_stream(const SynthStreamArgs& args) {
  const LayerProfile profile = make_profile(args.profile, args.profile_seed);
  PlantedStream spec;
  spec.video_id = args.video_id;
  spec.total_frames = args.frames;
  spec.seed = args.seed;
  for (const auto& w : args.windows) spec.anomaly_windows.push_back(parse_window(w));
  const auto stream = synthlab::generate_video_stream(spec, profile);

  Manifest manifest = synthlab::manifest_for(profile, LabelScheme::unlabeled, "synthlab");
  manifest.sampling_k = args.profile.k;
  json truth{{"peak_layer", profile.peak_layer},
             {"video_id", spec.video_id},
             {"total_frames", spec.total_frames},
             {"anomaly_windows", serialize::to_json(stream.anomaly_windows)},
             {"profile", serialize::to_json(profile)}};
  dataset::write_dump(stream.frames, manifest, args.out);
  serialize::write_text_file(args.out + ".truth.json", truth.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// report: the whole pipeline in one process, with stage timings

struct ReportArgs {
  ProbeArgs probe;
  std::vector<std::string> sequences;
  TrainConfig train;
  double kappa = localizer::kDefaultKappa;
  double sigma = localizer::kDefaultSigma;
  unsigned workers = 1;
  std::string out;
};

void cmd_report(const ReportArgs& args, std::ostream& out) {
  Stopwatch probe_clock;
  const Dump dump = read_labeled(args.probe.dump, args.probe.annotations);
  const auto probe = run_probe(dump, args.probe);
  const double probe_ms = probe_clock.elapsed_ms();

  Stopwatch train_clock;
  TrainConfig config = args.train;
  config.seed = args.probe.seed;
  const auto trained =
      run_train(dump, probe.report.selected_layer, args.probe.fraction, args.probe.seed, config);
  const double train_ms = train_clock.elapsed_ms();

  Stopwatch localize_clock;
  ThresholdConfig threshold = trained.calibration;
  threshold.kappa = args.kappa;
  threshold.sigma_smooth = args.sigma;
  localizer::kernel_radius(threshold.sigma_smooth);
  const auto videos = localize_all(args.sequences, trained.model, threshold, args.workers);
  const double localize_ms = localize_clock.elapsed_ms();

  json video_list = json::array();
  for (const auto& v : videos) {
    json segments = json::array();
    for (const auto& s : v.segments) segments.push_back(serialize::to_json(s));
    video_list.push_back(json{{"video_id", v.curve.video_id},
                              {"threshold", v.threshold},
                              {"segments", segments}});
  }
  const auto& m = trained.model;
  json doc{
      {"config", json{{"dump", args.probe.dump},
                      {"sequences", args.sequences},
                      {"fraction", args.probe.fraction},
                      {"seed", args.probe.seed},
                      {"bins", args.probe.bins},
                      {"silhouette_cap", args.probe.silhouette_cap},
                      {"kappa", args.kappa},
                      {"sigma", args.sigma},
                      {"train", serialize::to_json(config)}}},
      {"saliency", serialize::to_json(probe.report)},
      {"scorer", json{{"layer_index", m.layer_index},
                      {"trained_on", m.trained_on},
                      {"final_loss", m.final_loss},
                      {"iterations", m.iterations},
                      {"gradient_norm", m.gradient_norm},
                      {"stop_reason", m.stop_reason}}},
      {"threshold", serialize::to_json(threshold)},
      {"videos", video_list},
      {"wall_time_ms", json{{"probe", probe_ms}, {"train", train_ms}, {"localize", localize_ms}}}};
  emit(doc, args.out, out);
}

int exit_code_for(const Error& e) {
  return e.category() == ErrorCategory::input ? kInputError : kPreconditionError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Layer-saliency probing, logistic anomaly scoring and temporal localization"};
  app.name("hiprobe");
  app.require_subcommand(1);

  ProbeArgs probe;
  auto* probe_cmd = app.add_subcommand("probe", "Rank layers and select the most salient one");
  probe_cmd->add_option("dump", probe.dump, "Labeled HSD1 dump")->required();
  probe_cmd->add_option("--fraction", probe.fraction, "Probing subset fraction per class")
      ->capture_default_str();
  probe_cmd->add_option("--seed", probe.seed, "Subset seed")->capture_default_str();
  probe_cmd->add_option("--bins", probe.bins, "Entropy histogram bins")->capture_default_str();
  probe_cmd->add_option("--silhouette-cap", probe.silhouette_cap,
                        "Max samples for silhouette (0 disables)")
      ->capture_default_str();
  probe_cmd->add_option("--annotations", probe.annotations, "Video-level labels JSON overriding the dump's");
  probe_cmd->add_option("--out", probe.out, "Report path (default stdout)");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Fit the logistic scorer on the selected layer");
  train_cmd->add_option("dump", train.dump, "Labeled HSD1 dump")->required();
  train_cmd->add_option("--report", train.report, "Saliency report JSON")->required();
  train_cmd->add_option("--fraction", train.fraction, "Subset fraction (default: report's)");
  train_cmd->add_option("--seed", train.seed, "Subset seed (default: report's)");
  train_cmd->add_option("--layer", train.layer, "Override the selected layer");
  train_cmd->add_option("--max-iter", train.config.max_iterations, "L-BFGS iteration cap")
      ->capture_default_str();
  train_cmd->add_option("--tol", train.config.gradient_tolerance, "Gradient-norm tolerance")
      ->capture_default_str();
  train_cmd->add_option("--lambda", train.config.l2_lambda, "L2 penalty")->capture_default_str();
  train_cmd->add_option("--history", train.config.history_size, "L-BFGS history size")
      ->capture_default_str();
  train_cmd->add_option("--annotations", train.annotations, "Video-level labels JSON overriding the dump's");
  train_cmd->add_option("--out", train.out, "Model path (default stdout)");

  LocalizeArgs localize;
  auto* localize_cmd = app.add_subcommand("localize", "Score, smooth and segment video streams");
  localize_cmd->add_option("sequences", localize.sequences, "HSD1 stream dumps")->required();
  localize_cmd->add_option("--model", localize.model, "Scorer model JSON")->required();
  localize_cmd->add_option("--calibration", localize.calibration,
                           "Labeled dump to calibrate the threshold (default: model's)");
  localize_cmd->add_option("--kappa", localize.kappa, "Threshold std multiplier")
      ->capture_default_str();
  localize_cmd->add_option("--sigma", localize.sigma, "Smoothing width in keyframes")
      ->capture_default_str();
  localize_cmd->add_option("--workers", localize.workers, "Concurrent sequence files")
      ->capture_default_str();
  localize_cmd->add_option("--out", localize.out, "Segments path (default stdout)");
  localize_cmd->add_option("--csv", localize.csv, "Also write score curves as CSV");

  SynthProbeArgs synth_probe;
  auto* synth_probe_cmd = app.add_subcommand("synth-probe", "Generate a synthetic probing dump");
  add_profile_options(synth_probe_cmd, synth_probe.profile);
  synth_probe_cmd->add_option("--n", synth_probe.n_per_class, "Samples per class")
      ->capture_default_str();
  synth_probe_cmd->add_option("--seed", synth_probe.seed, "Profile/noise seed")
      ->capture_default_str();
  synth_probe_cmd->add_option("--out", synth_probe.out, "Dump path")->required();

  SynthStreamArgs synth_stream;
  auto* synth_stream_cmd =
      app.add_subcommand("synth-stream", "Generate a synthetic stream with planted windows");
  add_profile_options(synth_stream_cmd, synth_stream.profile);
  synth_stream_cmd->add_option("--profile-seed", synth_stream.profile_seed,
                               "Seed of the matching synth-probe profile")
      ->capture_default_str();
  synth_stream_cmd->add_option("--seed", synth_stream.seed, "Frame noise seed")
      ->capture_default_str();
  synth_stream_cmd->add_option("--frames", synth_stream.frames, "Keyframes in the stream")
      ->capture_default_str();
  synth_stream_cmd->add_option("--video-id", synth_stream.video_id, "Video id")
      ->capture_default_str();
  synth_stream_cmd->add_option("--window", synth_stream.windows, "Anomaly window START:END");
  synth_stream_cmd->add_option("--out", synth_stream.out, "Dump path")->required();

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Run probe, train and localize in one go");
  report_cmd->add_option("dump", report.probe.dump, "Labeled probing dump")->required();
  report_cmd->add_option("sequences", report.sequences, "Stream dumps to localize")->required();
  report_cmd->add_option("--fraction", report.probe.fraction)->capture_default_str();
  report_cmd->add_option("--seed", report.probe.seed)->capture_default_str();
  report_cmd->add_option("--bins", report.probe.bins)->capture_default_str();
  report_cmd->add_option("--silhouette-cap", report.probe.silhouette_cap)->capture_default_str();
  report_cmd->add_option("--max-iter", report.train.max_iterations)->capture_default_str();
  report_cmd->add_option("--tol", report.train.gradient_tolerance)->capture_default_str();
  report_cmd->add_option("--lambda", report.train.l2_lambda)->capture_default_str();
  report_cmd->add_option("--history", report.train.history_size)->capture_default_str();
  report_cmd->add_option("--kappa", report.kappa)->capture_default_str();
  report_cmd->add_option("--sigma", report.sigma)->capture_default_str();
  report_cmd->add_option("--workers", report.workers)->capture_default_str();
  report_cmd->add_option("--annotations", report.probe.annotations, "Video-level labels JSON");
  report_cmd->add_option("--out", report.out, "Run report path (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInputError;
  }

  try {
    if (probe_cmd->parsed()) cmd_probe(probe, out);
    else if (train_cmd->parsed()) cmd_train(train, out);
    else if (localize_cmd->parsed()) cmd_localize(localize, out);
    else if (synth_probe_cmd->parsed()) cmd_synth_probe(synth_probe);
    else if (synth_stream_cmd->parsed()) cmd_synth_stream(synth_stream);
    else if (report_cmd->parsed()) cmd_report(report, out);
    return kSuccess;
  } catch (const Error& e) {
    err << "hiprobe: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "hiprobe: internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace hiprobe::cli

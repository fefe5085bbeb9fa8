#include "hiprobe/dataset.hpp"

#include "hiprobe/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <map>
#include <numeric>

namespace hiprobe {

const char* to_string(LabelScheme scheme) {
  switch (scheme) {
    case LabelScheme::video_level:
      return "video_level";
    case LabelScheme::frame_level:
      return "frame_level";
    case LabelScheme::unlabeled:
      return "unlabeled";
  }
  return "unlabeled";
}

LabelScheme label_scheme_from_string(const std::string& text) {
  if (text == "video_level") return LabelScheme::video_level;
  if (text == "frame_level") return LabelScheme::frame_level;
  if (text == "unlabeled") return LabelScheme::unlabeled;
  throw FormatError("unknown label_scheme '" + text + "'");
}

namespace dataset {
namespace {

using nlohmann::json;

void put_u8(std::vector<char>& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::vector<char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t get_u64(const unsigned char* p) {
  return static_cast<std::uint64_t>(get_u32(p)) |
         (static_cast<std::uint64_t>(get_u32(p + 4)) << 32);
}

void validate_manifest(const Manifest& m) {
  if (m.num_layers < 1 || m.hidden_dim < 1) {
    throw DimensionError("manifest needs num_layers >= 1 and hidden_dim >= 1");
  }
  if (m.sampling_k > m.segment_len) {
    throw DimensionError("manifest sampling_k exceeds segment_len");
  }
}

json manifest_to_json(const Manifest& m) {
  return json{{"format_version", m.format_version}, {"model_name", m.model_name},
              {"num_layers", m.num_layers},         {"hidden_dim", m.hidden_dim},
              {"sampling_k", m.sampling_k},         {"segment_len", m.segment_len},
              {"label_scheme", to_string(m.label_scheme)},
              {"created_utc", m.created_utc}};
}

Manifest manifest_from_json(const json& j) {
  Manifest m;
  try {
    m.format_version = j.at("format_version").get<std::uint32_t>();
    m.model_name = j.at("model_name").get<std::string>();
    m.num_layers = j.at("num_layers").get<std::uint32_t>();
    m.hidden_dim = j.at("hidden_dim").get<std::uint32_t>();
    m.sampling_k = j.at("sampling_k").get<std::uint32_t>();
    m.segment_len = j.at("segment_len").get<std::uint32_t>();
    m.label_scheme = label_scheme_from_string(j.at("label_scheme").get<std::string>());
    m.created_utc = j.at("created_utc").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t content_hash(const Record& r) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(r.label));
  h = mix64(h ^ r.video_id);
  h = mix64(h ^ r.frame_index);
  for (float v : r.values) h = mix64(h ^ std::bit_cast<std::uint32_t>(v));
  return h;
}

}  // namespace

std::filesystem::path manifest_path(const std::filesystem::path& dump_path) {
  auto p = dump_path;
  p += ".manifest.json";
  return p;
}

std::uint64_t write_dump(std::span<const Record> records, const Manifest& manifest,
                         const std::filesystem::path& destination) {
  validate_manifest(manifest);
  const std::size_t width = std::size_t{manifest.num_layers} * manifest.hidden_dim;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].values.size() != width) {
      throw DimensionError("record " + std::to_string(i) + " has " +
                           std::to_string(records[i].values.size()) + " values, expected " +
                           std::to_string(width));
    }
  }

  std::vector<char> buffer;
  buffer.reserve(kHeaderSize + records.size() * record_size(manifest.num_layers, manifest.hidden_dim));
  for (char c : kMagic) buffer.push_back(c);
  put_u32(buffer, kFormatVersion);
  put_u32(buffer, manifest.num_layers);
  put_u32(buffer, manifest.hidden_dim);
  put_u64(buffer, records.size());
  put_u8(buffer, kDtypeF32);
  for (const auto& r : records) {
    put_u8(buffer, static_cast<std::uint8_t>(r.label));
    put_u32(buffer, r.video_id);
    put_u32(buffer, r.frame_index);
    for (float v : r.values) put_u32(buffer, std::bit_cast<std::uint32_t>(v));
  }

  {
    std::ofstream out(destination, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + destination.string() + "' for writing");
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (!out) throw IoError("write failed for '" + destination.string() + "'");
  }
  {
    const auto sidecar = manifest_path(destination);
    std::ofstream out(sidecar, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + sidecar.string() + "' for writing");
    out << manifest_to_json(manifest).dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + sidecar.string() + "'");
  }
  return buffer.size();
}

Dump read_dump_binary(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw IoError("cannot open '" + source.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::string name = source.string();

  if (bytes.size() < sizeof(kMagic)) throw TruncationError(name + ": truncated header", 0);
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(name + ": bad magic, not an HSD1 dump");
  }
  if (bytes.size() < kHeaderSize) throw TruncationError(name + ": truncated header", 0);

  const unsigned char* p = bytes.data();
  const std::uint32_t version = get_u32(p + 4);
  const std::uint32_t num_layers = get_u32(p + 8);
  const std::uint32_t hidden_dim = get_u32(p + 12);
  const std::uint64_t count = get_u64(p + 16);
  const std::uint8_t dtype = p[24];
  if (version != kFormatVersion) {
    throw FormatError(name + ": unsupported version " + std::to_string(version));
  }
  if (dtype != kDtypeF32) {
    throw FormatError(name + ": unsupported dtype code " + std::to_string(dtype));
  }
  if (num_layers == 0 || hidden_dim == 0) {
    throw FormatError(name + ": header declares an empty layer shape");
  }

  const std::uint64_t rsize = record_size(num_layers, hidden_dim);
  const std::uint64_t payload = bytes.size() - kHeaderSize;
  if (count > payload / rsize) {
    const std::uint64_t complete = payload / rsize;
    throw TruncationError(name + ": truncated in record " + std::to_string(complete) + " of " +
                              std::to_string(count),
                          static_cast<std::size_t>(complete));
  }
  if (payload != count * rsize) {
    throw FormatError(name + ": " + std::to_string(payload - count * rsize) +
                      " trailing bytes after the last record");
  }

  Dump dump;
  dump.manifest.format_version = version;
  dump.manifest.num_layers = num_layers;
  dump.manifest.hidden_dim = hidden_dim;
  const std::size_t width = std::size_t{num_layers} * hidden_dim;
  dump.records.resize(static_cast<std::size_t>(count));
  const unsigned char* cursor = p + kHeaderSize;
  for (std::size_t i = 0; i < dump.records.size(); ++i) {
    Record& r = dump.records[i];
    const std::uint8_t label = cursor[0];
    if (label != 0 && label != 1 && label != 255) {
      throw DataError(name + ": record " + std::to_string(i) + " has invalid label " +
                          std::to_string(label),
                      i);
    }
    r.label = static_cast<Label>(label);
    r.video_id = get_u32(cursor + 1);
    r.frame_index = get_u32(cursor + 5);
    cursor += 9;
    r.values.resize(width);
    for (std::size_t k = 0; k < width; ++k, cursor += 4) {
      const float v = std::bit_cast<float>(get_u32(cursor));
      if (!std::isfinite(v)) {
        throw DataError(name + ": record " + std::to_string(i) + " contains a non-finite value", i);
      }
      r.values[k] = v;
    }
  }
  return dump;
}

Dump read_dump(const std::filesystem::path& source) {
  Dump dump = read_dump_binary(source);
  const auto sidecar = manifest_path(source);
  std::ifstream in(sidecar);
  if (!in) throw IoError("missing manifest sidecar '" + sidecar.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("unparseable manifest '" + sidecar.string() + "': " + e.what());
  }
  Manifest m = manifest_from_json(j);
  if (m.num_layers != dump.manifest.num_layers || m.hidden_dim != dump.manifest.hidden_dim) {
    throw FormatError("manifest shape " + std::to_string(m.num_layers) + "x" +
                      std::to_string(m.hidden_dim) + " disagrees with dump header " +
                      std::to_string(dump.manifest.num_layers) + "x" +
                      std::to_string(dump.manifest.hidden_dim));
  }
  if (m.format_version != dump.manifest.format_version) {
    throw FormatError("manifest format_version disagrees with dump header");
  }
  if (m.sampling_k > m.segment_len) throw FormatError("manifest sampling_k exceeds segment_len");
  dump.manifest = std::move(m);
  return dump;
}

void require_labeled(std::span<const Record> records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].label == Label::unlabeled) {
      throw DataError("record " + std::to_string(i) + " is unlabeled; probing needs labels 0/1", i);
    }
  }
}

std::vector<Record> stratified_subset(std::span<const Record> records, double fraction,
                                      std::uint64_t seed) {
  if (records.empty()) throw EmptyDatasetError("stratified_subset: no records");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw UsageError("fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  require_labeled(records);

  std::vector<bool> keep(records.size(), false);
  for (Label cls : {Label::normal, Label::anomalous}) {
    std::vector<std::pair<std::uint64_t, std::size_t>> ranked;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].label == cls) ranked.emplace_back(mix64(seed ^ content_hash(records[i])), i);
    }
    if (ranked.empty()) continue;
    const auto n = ranked.size();
    auto take = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
    take = std::clamp<std::size_t>(take, 1, n);
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take),
                      ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < take; ++k) keep[ranked[k].second] = true;
  }

  std::vector<Record> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) out.push_back(records[i]);
  }
  return out;
}

FeatureMatrix layer_features(std::span<const Record> records, std::size_t layer,
                             std::size_t hidden_dim) {
  FeatureMatrix x(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(hidden_dim));
  for (std::size_t i = 0; i < records.size(); ++i) {
    if ((layer + 1) * hidden_dim > records[i].values.size()) {
      throw DimensionError("layer " + std::to_string(layer) + " out of range for record " +
                           std::to_string(i));
    }
    const auto row = records[i].layer(layer, hidden_dim);
    for (std::size_t d = 0; d < hidden_dim; ++d) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = row[d];
    }
  }
  return x;
}

std::vector<int> binary_labels(std::span<const Record> records) {
  require_labeled(records);
  std::vector<int> labels(records.size());
  std::transform(records.begin(), records.end(), labels.begin(),
                 [](const Record& r) { return r.label == Label::anomalous ? 1 : 0; });
  return labels;
}

std::vector<VideoSequence> sequences_at_layer(const Dump& dump, std::size_t layer) {
  const std::size_t dim = dump.manifest.hidden_dim;
  if (layer >= dump.manifest.num_layers) {
    throw DimensionError("layer " + std::to_string(layer) + " outside dump range [0, " +
                         std::to_string(dump.manifest.num_layers) + ")");
  }
  std::map<std::uint32_t, std::vector<std::size_t>> by_video;
  for (std::size_t i = 0; i < dump.records.size(); ++i) {
    by_video[dump.records[i].video_id].push_back(i);
  }

  std::vector<VideoSequence> out;
  out.reserve(by_video.size());
  for (auto& [video_id, rows] : by_video) {
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      return dump.records[a].frame_index < dump.records[b].frame_index;
    });
    VideoSequence seq;
    seq.video_id = video_id;
    seq.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const Record& r = dump.records[rows[k]];
      if (!seq.frame_indices.empty() && seq.frame_indices.back() == r.frame_index) {
        throw DataError("video " + std::to_string(video_id) + " repeats frame index " +
                            std::to_string(r.frame_index),
                        rows[k]);
      }
      seq.frame_indices.push_back(r.frame_index);
      const auto row = r.layer(layer, dim);
      for (std::size_t d = 0; d < dim; ++d) {
        seq.features(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d)) = row[d];
      }
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::map<std::uint32_t, Label> read_annotations(const std::filesystem::path& source) {
  std::ifstream in(source);
  if (!in) throw IoError("cannot open annotations '" + source.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("unparseable annotations '" + source.string() + "': " + e.what());
  }
  if (!j.is_object()) throw FormatError("annotations must be a JSON object of video_id -> label");

  std::map<std::uint32_t, Label> labels;
  for (const auto& [key, value] : j.items()) {
    std::uint32_t id = 0;
    const auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), id);
    if (ec != std::errc{} || end != key.data() + key.size()) {
      throw FormatError("annotation key '" + key + "' is not a video id");
    }
    if (value == 0 || value == "normal") labels[id] = Label::normal;
    else if (value == 1 || value == "anomalous") labels[id] = Label::anomalous;
    else throw FormatError("annotation for video " + key + " is not 0/1/normal/anomalous");
  }
  return labels;
}

void apply_annotations(std::span<Record> records, const std::map<std::uint32_t, Label>& labels) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto it = labels.find(records[i].video_id);
    if (it == labels.end()) {
      throw DataError("record " + std::to_string(i) + ": video " +
                      std::to_string(records[i].video_id) + " has no annotation", i);
    }
    records[i].label = it->second;
  }
}

std::string utc_timestamp_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace dataset
}  // namespace hiprobe

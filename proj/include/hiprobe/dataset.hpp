#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hiprobe {

/// N x D feature block, one sample per row.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Label : std::uint8_t {
  normal = 0,
  anomalous = 1,
  unlabeled = 255,
};

enum class LabelScheme { video_level, frame_level, unlabeled };

const char* to_string(LabelScheme scheme);
LabelScheme label_scheme_from_string(const std::string& text);

struct Manifest {
  std::uint32_t format_version = 1;
  std::string model_name;
  std::uint32_t num_layers = 0;
  std::uint32_t hidden_dim = 0;
  std::uint32_t sampling_k = 8;
  std::uint32_t segment_len = 24;
  LabelScheme label_scheme = LabelScheme::video_level;
  std::string created_utc;
};

/// One hidden-state capture: every layer's vector for a single sample or frame.
struct Record {
  Label label = Label::unlabeled;
  std::uint32_t video_id = 0;
  std::uint32_t frame_index = 0;
  std::vector<float> values;  // num_layers * hidden_dim, layer-major

  std::span<const float> layer(std::size_t index, std::size_t hidden_dim) const {
    return std::span<const float>(values).subspan(index * hidden_dim, hidden_dim);
  }
};

struct Dump {
  Manifest manifest;
  std::vector<Record> records;
};

/// Frames of one video at a single layer, ordered by frame index.
struct VideoSequence {
  std::uint32_t video_id = 0;
  std::vector<std::uint32_t> frame_indices;
  FeatureMatrix features;
};

namespace dataset {

inline constexpr char kMagic[4] = {'H', 'S', 'D', '1'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 1;
// magic(4) version(4) L(4) D(4) N(8) dtype(1)
inline constexpr std::size_t kHeaderSize = 25;

/// label(1) video_id(4) frame_index(4) then L*D little-endian f32.
constexpr std::size_t record_size(std::size_t num_layers, std::size_t hidden_dim) {
  return 1 + 4 + 4 + 4 * num_layers * hidden_dim;
}

/// Sidecar location: "<dump>.manifest.json".
std::filesystem::path manifest_path(const std::filesystem::path& dump_path);

/// Writes the binary dump and its JSON manifest sidecar. Returns the dump's byte count.
std::uint64_t write_dump(std::span<const Record> records, const Manifest& manifest,
                         const std::filesystem::path& destination);

/// Reads and fully validates a dump plus its manifest sidecar.
Dump read_dump(const std::filesystem::path& source);

/// Binary half of read_dump; the returned manifest carries only header fields.
Dump read_dump_binary(const std::filesystem::path& source);

/// Per-class sample of `fraction`, rounded half up with a floor of one per present
/// class. Selection depends only on record contents and `seed`, never on input
/// order; the result keeps the input order.
std::vector<Record> stratified_subset(std::span<const Record> records, double fraction,
                                      std::uint64_t seed);

/// Throws DataError on unlabeled records; probing needs labels 0/1.
void require_labeled(std::span<const Record> records);

FeatureMatrix layer_features(std::span<const Record> records, std::size_t layer,
                             std::size_t hidden_dim);

std::vector<int> binary_labels(std::span<const Record> records);

/// Groups records by video id and slices out one layer. Frame indices must be
/// strictly increasing within a video after sorting, i.e. no duplicates.
std::vector<VideoSequence> sequences_at_layer(const Dump& dump, std::size_t layer);

/// Video-level labels from an annotations file: {"<video_id>": 0 | 1 | "normal" | "anomalous"}.
std::map<std::uint32_t, Label> read_annotations(const std::filesystem::path& source);

/// Overwrites each record's label from its video's annotation. Records of
/// videos missing from the map raise DataError.
void apply_annotations(std::span<Record> records, const std::map<std::uint32_t, Label>& labels);

std::string utc_timestamp_now();

}  // namespace dataset
}  // namespace hiprobe

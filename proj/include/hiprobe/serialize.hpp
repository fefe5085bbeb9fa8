#pragma once

#include "hiprobe/localizer.hpp"
#include "hiprobe/saliency.hpp"
#include "hiprobe/scorer.hpp"
#include "hiprobe/synthlab.hpp"

#include <json.hpp>

#include <filesystem>

namespace hiprobe::serialize {

using nlohmann::json;

json to_json(const SaliencyReport& report);
SaliencyReport saliency_from_json(const json& j);

json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const json& j);

json to_json(const ScorerModel& model);
/// Validates shapes, finiteness and the std floor; throws FormatError.
ScorerModel model_from_json(const json& j);

json to_json(const ThresholdConfig& config);
ThresholdConfig threshold_from_json(const json& j);

json to_json(const AnomalySegment& segment);
json to_json(const Localization& localization);

json to_json(const LayerProfile& profile);
json to_json(std::span<const Window> windows);

/// Parses a JSON file; IoError when unreadable, FormatError when malformed.
json read_json_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames, so readers never see a partial file.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace hiprobe::serialize

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "maptext/pipeline.hpp"

namespace maptext::config {

using nlohmann::json;

// Keys mirror PipelineConfig field names. Example:
//   {"fcm": {"k": 3, "fuzzifier": 2.0, "epsilon": 1e-4, "max_iterations": 100, "seed": 0},
//    "selection": "darkest", "denoise_window": 3,
//    "se": {"width": 3, "height": 3, "hits": [[-1,-1], ...]},
//    "dilate_iterations": 1, "connectivity": 8, "area_threshold": 2000,
//    "grid": {"passes": [3], "sliding": false},
//    "cc_grid_repeats": [{"area_threshold": 410, "grid": {"passes": []}}],
//    "bg_color": 255}
json to_json(const PipelineConfig& cfg);

// Missing keys keep their defaults; unknown keys and bad values throw SchemaError.
PipelineConfig from_json(const json& doc);

// RFC 7386 merge of `patch` onto `base`, then parsed and validated.
PipelineConfig merge(const PipelineConfig& base, const json& patch);

PipelineConfig load(const std::filesystem::path& path);
void save(const PipelineConfig& cfg, const std::filesystem::path& path);

// Config fields that feed exactly `stage` (not its upstream).
json slice(const PipelineConfig& cfg, Stage stage);

std::string selection_to_string(const fcm::Selection& sel);
fcm::Selection parse_selection(const std::string& text);

// "3", "3,5", "none" or "0" -> GridSpec.
grid::GridSpec parse_grid(const std::string& text);
// "T1:g1;T2:g2" -> rounds.
std::vector<Round> parse_rounds(const std::string& text);

}  // namespace maptext::config

#pragma once

#include <filesystem>

#include <nlohmann/json_fwd.hpp>

#include "rgbdtrack/net/model.hpp"

namespace rgbdtrack::net {

nlohmann::json config_to_json(const NetConfig& cfg);
NetConfig config_from_json(const nlohmann::json& j);

/// Versioned binary container: magic, JSON header (config + tensor
/// directory), then raw little-endian doubles. Loading rejects unknown or
/// missing parameters and any shape mismatch.
void save_checkpoint(const TrackerModel& model, const std::filesystem::path& path);
TrackerModel load_checkpoint(const std::filesystem::path& path);

}  // namespace rgbdtrack::net

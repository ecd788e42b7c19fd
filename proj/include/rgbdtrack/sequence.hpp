#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rgbdtrack/attributes.hpp"
#include "rgbdtrack/geometry.hpp"

namespace rgbdtrack {

/// A sequence as stored on disk: frame references (loaded lazily), per-frame
/// ground truth and an optional 15 x N attribute table.
struct SequenceRecord {
  std::string id;
  std::vector<std::filesystem::path> rgb_paths;
  std::vector<std::filesystem::path> depth_paths;
  std::vector<GroundTruthEntry> groundtruth;
  std::optional<attrs::AttributeTable> attributes;

  std::size_t frame_count() const { return groundtruth.size(); }

  void check_invariants() const {
    if (rgb_paths.size() != groundtruth.size() || depth_paths.size() != groundtruth.size()) {
      throw InputError("SequenceRecord '" + id + "': frame reference counts disagree");
    }
    if (attributes && attributes->frame_count() != groundtruth.size()) {
      throw InputError("SequenceRecord '" + id + "': attribute table frame count mismatch");
    }
    if (attributes) attributes->check_invariants();
  }
};

}  // namespace rgbdtrack

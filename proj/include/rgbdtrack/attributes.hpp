#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rgbdtrack/attribute_id.hpp"
#include "rgbdtrack/geometry.hpp"

namespace rgbdtrack::attrs {

/// 21-frame window centered on t (10 frames either side), clamped to [0, n).
/// Returned bounds are inclusive.
std::pair<int, int> window(int t, int n);

inline constexpr double kRatioThreshold = 1.5;        // strict > for AC/DC/SC
inline constexpr double kFastMotionFraction = 0.3;    // inclusive >= for FM

/// Aspect-ratio change: max/min of w/h over present frames in the window
/// exceeds 1.5. Fewer than two present frames yields false.
bool aspect_change(std::span<const GroundTruthEntry> window_entries);

/// Size change: max/min of box area over present frames exceeds 1.5.
bool size_change(std::span<const GroundTruthEntry> window_entries);

/// Depth change: max/min of per-frame target depth means exceeds 1.5.
/// Entries without a valid mean (absent target or no valid depth pixels)
/// are skipped; fewer than two qualifying frames yields false.
bool depth_change(std::span<const std::optional<double>> window_means);

/// Fast motion: center displacement between consecutive frames is at least
/// 0.3 * sqrt(w*h) of the earlier frame. Either frame non-present yields false.
bool fast_motion(const GroundTruthEntry& prev, const GroundTruthEntry& cur);

/// Row-major 16-bit depth map view; value 0 denotes a missing measurement.
struct DepthView {
  const std::uint16_t* data = nullptr;
  int width = 0;
  int height = 0;
  std::ptrdiff_t row_stride = 0;  // in elements

  const std::uint16_t& at(int row, int col) const { return data[row * row_stride + col]; }
};

/// Mean of valid (nonzero) depth values inside the box, clipped to the frame.
/// nullopt when no valid pixel falls inside.
std::optional<double> mean_box_depth(const DepthView& depth, const BoundingBox& box);

/// Per-frame flags for the four formula-computed attributes.
struct ComputedFlags {
  std::vector<bool> ac, dc, fm, sc;
  std::size_t frame_count() const { return ac.size(); }
};

/// Evaluates AC/DC/FM/SC for every frame of a sequence. depth_means carries
/// one entry per frame (nullopt when unavailable); it may be empty, in which
/// case DC is false everywhere.
ComputedFlags compute_flags(std::span<const GroundTruthEntry> groundtruth,
                            std::span<const std::optional<double>> depth_means);

/// Manual per-frame flags for the ten hand-assigned attributes.
struct ManualFlags {
  std::vector<bool> bc, cm, ds, fo, nd, op, of, po, rt, so;
  std::size_t frame_count() const { return bc.size(); }
  static ManualFlags all_false(std::size_t n);
};

enum class Provenance { Computed, Manual };

/// Boolean 15 x N attribute matrix. NaN is true on a frame exactly when no
/// other attribute is.
class AttributeTable {
 public:
  AttributeTable() = default;
  explicit AttributeTable(std::size_t frame_count);

  std::size_t frame_count() const { return frames_; }
  bool get(AttributeId id, std::size_t frame) const;
  void set(AttributeId id, std::size_t frame, bool value);
  Provenance provenance(AttributeId id) const;

  /// Recomputes the NaN row from the other 14 rows.
  void refresh_unassigned();

  /// Throws InputError if the NaN exclusivity invariant is violated.
  void check_invariants() const;

  bool operator==(const AttributeTable& o) const;

 private:
  std::size_t frames_ = 0;
  std::array<std::vector<bool>, kAttributeCount> rows_;
};

/// Builds the full 15-row table from computed and manual flags; sets NaN per
/// frame where nothing else is true. Throws InputError on length mismatch.
AttributeTable assemble_table(const ComputedFlags& computed, const ManualFlags& manual);

}  // namespace rgbdtrack::attrs

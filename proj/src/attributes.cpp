#include "rgbdtrack/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rgbdtrack::attrs {

std::pair<int, int> window(int t, int n) {
  if (t < 0 || t >= n) throw InputError("window: frame index out of range");
  return {std::max(0, t - 10), std::min(n - 1, t + 10)};
}

namespace {

// max/min ratio of a per-frame quantity over present frames; false unless at
// least two frames qualify.
template <typename Extract>
bool ratio_exceeds(std::span<const GroundTruthEntry> entries, Extract extract) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  int count = 0;
  for (const auto& e : entries) {
    if (!e.is_present()) continue;
    const double v = extract(e.box());
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    ++count;
  }
  if (count < 2) return false;
  return hi / lo > kRatioThreshold;
}

}  // namespace

bool aspect_change(std::span<const GroundTruthEntry> window_entries) {
  return ratio_exceeds(window_entries, [](const BoundingBox& b) { return b.w / b.h; });
}

bool size_change(std::span<const GroundTruthEntry> window_entries) {
  return ratio_exceeds(window_entries, [](const BoundingBox& b) { return box_area(b); });
}

bool depth_change(std::span<const std::optional<double>> window_means) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  int count = 0;
  for (const auto& m : window_means) {
    if (!m.has_value()) continue;
    lo = std::min(lo, *m);
    hi = std::max(hi, *m);
    ++count;
  }
  if (count < 2) return false;
  return hi / lo > kRatioThreshold;
}

bool fast_motion(const GroundTruthEntry& prev, const GroundTruthEntry& cur) {
  if (!prev.is_present() || !cur.is_present()) return false;
  const auto [px, py] = box_center(prev.box());
  const auto [cx, cy] = box_center(cur.box());
  const double dist = std::hypot(cx - px, cy - py);
  const double size = std::sqrt(box_area(prev.box()));
  return dist >= kFastMotionFraction * size;
}

std::optional<double> mean_box_depth(const DepthView& depth, const BoundingBox& box) {
  if (depth.data == nullptr || depth.width <= 0 || depth.height <= 0) {
    throw InputError("mean_box_depth: empty depth view");
  }
  const PixelRect rect = pixel_rect(box, depth.width, depth.height);
  double sum = 0.0;
  std::int64_t n = 0;
  for (int r = rect.y0; r < rect.y1; ++r) {
    for (int c = rect.x0; c < rect.x1; ++c) {
      const std::uint16_t v = depth.at(r, c);
      if (v == 0) continue;  // missing measurement
      sum += v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

ComputedFlags compute_flags(std::span<const GroundTruthEntry> groundtruth,
                            std::span<const std::optional<double>> depth_means) {
  const int n = static_cast<int>(groundtruth.size());
  if (!depth_means.empty() && depth_means.size() != groundtruth.size()) {
    throw InputError("compute_flags: depth_means length does not match groundtruth");
  }
  ComputedFlags out;
  out.ac.resize(n, false);
  out.dc.resize(n, false);
  out.fm.resize(n, false);
  out.sc.resize(n, false);
  for (int t = 0; t < n; ++t) {
    const auto [lo, hi] = window(t, n);
    const auto win = groundtruth.subspan(lo, hi - lo + 1);
    out.ac[t] = aspect_change(win);
    out.sc[t] = size_change(win);
    if (!depth_means.empty()) {
      out.dc[t] = depth_change(depth_means.subspan(lo, hi - lo + 1));
    }
    if (t > 0) out.fm[t] = fast_motion(groundtruth[t - 1], groundtruth[t]);
  }
  return out;
}

ManualFlags ManualFlags::all_false(std::size_t n) {
  ManualFlags f;
  for (auto* v : {&f.bc, &f.cm, &f.ds, &f.fo, &f.nd, &f.op, &f.of, &f.po, &f.rt, &f.so}) {
    v->assign(n, false);
  }
  return f;
}

AttributeTable::AttributeTable(std::size_t frame_count) : frames_(frame_count) {
  for (auto& row : rows_) row.assign(frames_, false);
}

bool AttributeTable::get(AttributeId id, std::size_t frame) const {
  return rows_[static_cast<std::size_t>(id)].at(frame);
}

void AttributeTable::set(AttributeId id, std::size_t frame, bool value) {
  rows_[static_cast<std::size_t>(id)].at(frame) = value;
}

Provenance AttributeTable::provenance(AttributeId id) const {
  return attribute_is_computed(id) ? Provenance::Computed : Provenance::Manual;
}

void AttributeTable::refresh_unassigned() {
  auto& nan_row = rows_[static_cast<std::size_t>(AttributeId::NaN)];
  for (std::size_t f = 0; f < frames_; ++f) {
    bool any = false;
    for (AttributeId id : kAllAttributes) {
      if (id == AttributeId::NaN) continue;
      any = any || get(id, f);
    }
    nan_row[f] = !any;
  }
}

void AttributeTable::check_invariants() const {
  for (std::size_t f = 0; f < frames_; ++f) {
    bool any = false;
    for (AttributeId id : kAllAttributes) {
      if (id == AttributeId::NaN) continue;
      any = any || get(id, f);
    }
    if (get(AttributeId::NaN, f) == any) {
      throw InputError("attribute table: NaN exclusivity violated at frame " + std::to_string(f));
    }
  }
}

AttributeTable assemble_table(const ComputedFlags& computed, const ManualFlags& manual) {
  const std::size_t n = computed.frame_count();
  if (computed.dc.size() != n || computed.fm.size() != n || computed.sc.size() != n ||
      manual.frame_count() != n || manual.cm.size() != n || manual.ds.size() != n ||
      manual.fo.size() != n || manual.nd.size() != n || manual.op.size() != n ||
      manual.of.size() != n || manual.po.size() != n || manual.rt.size() != n ||
      manual.so.size() != n) {
    throw InputError("assemble_table: flag vectors disagree on frame count");
  }
  AttributeTable table(n);
  for (std::size_t f = 0; f < n; ++f) {
    table.set(AttributeId::AC, f, computed.ac[f]);
    table.set(AttributeId::DC, f, computed.dc[f]);
    table.set(AttributeId::FM, f, computed.fm[f]);
    table.set(AttributeId::SC, f, computed.sc[f]);
    table.set(AttributeId::BC, f, manual.bc[f]);
    table.set(AttributeId::CM, f, manual.cm[f]);
    table.set(AttributeId::DS, f, manual.ds[f]);
    table.set(AttributeId::FO, f, manual.fo[f]);
    table.set(AttributeId::ND, f, manual.nd[f]);
    table.set(AttributeId::OP, f, manual.op[f]);
    table.set(AttributeId::OF, f, manual.of[f]);
    table.set(AttributeId::PO, f, manual.po[f]);
    table.set(AttributeId::RT, f, manual.rt[f]);
    table.set(AttributeId::SO, f, manual.so[f]);
  }
  table.refresh_unassigned();
  return table;
}

bool AttributeTable::operator==(const AttributeTable& o) const {
  return frames_ == o.frames_ && rows_ == o.rows_;
}

}  // namespace rgbdtrack::attrs

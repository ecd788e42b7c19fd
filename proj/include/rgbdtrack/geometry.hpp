#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "rgbdtrack/errors.hpp"

namespace rgbdtrack {

/// Axis-aligned box in continuous pixel coordinates, origin at the image
/// top-left. Construction enforces w > 0, h > 0 and finite fields.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  BoundingBox() = default;
  BoundingBox(double x_, double y_, double w_, double h_) : x(x_), y(y_), w(w_), h(h_) {
    if (!(std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h))) {
      throw InputError("BoundingBox: fields must be finite");
    }
    if (!(w > 0.0 && h > 0.0)) {
      throw InputError("BoundingBox: width and height must be positive");
    }
  }

  double right() const { return x + w; }
  double bottom() const { return y + h; }

  bool operator==(const BoundingBox& o) const {
    return x == o.x && y == o.y && w == o.w && h == o.h;
  }
};

inline std::ostream& operator<<(std::ostream& os, const BoundingBox& b) {
  return os << "[" << b.x << "," << b.y << "," << b.w << "," << b.h << "]";
}

/// Per-frame annotation state. Training sequences carry an unannotated tail
/// which is distinct from target absence.
enum class AnnotationState { Present, Absent, Unannotated };

/// Ground-truth entry: a visible target box, explicit target absence, or an
/// unannotated frame (training tail only).
class GroundTruthEntry {
 public:
  static GroundTruthEntry present(const BoundingBox& b) { return GroundTruthEntry(AnnotationState::Present, b); }
  static GroundTruthEntry absent() { return GroundTruthEntry(AnnotationState::Absent, {}); }
  static GroundTruthEntry unannotated() { return GroundTruthEntry(AnnotationState::Unannotated, {}); }

  AnnotationState state() const { return state_; }
  bool is_present() const { return state_ == AnnotationState::Present; }
  bool is_absent() const { return state_ == AnnotationState::Absent; }
  bool is_unannotated() const { return state_ == AnnotationState::Unannotated; }

  const BoundingBox& box() const {
    if (!is_present()) throw InputError("GroundTruthEntry: no box on a non-present entry");
    return *box_;
  }

 private:
  GroundTruthEntry(AnnotationState s, std::optional<BoundingBox> b) : state_(s), box_(std::move(b)) {}
  AnnotationState state_;
  std::optional<BoundingBox> box_;
};

/// Per-frame tracker output: box plus the confidence score consumed by the
/// threshold-filtering protocol.
struct Prediction {
  BoundingBox box;
  double confidence = 0.0;

  Prediction() = default;
  Prediction(const BoundingBox& b, double conf) : box(b), confidence(conf) {
    if (!std::isfinite(confidence)) throw InputError("Prediction: confidence must be finite");
  }
};

inline double box_area(const BoundingBox& b) { return b.w * b.h; }

inline std::pair<double, double> box_center(const BoundingBox& b) {
  return {b.x + b.w / 2.0, b.y + b.h / 2.0};
}

/// Intersects a box with [0,frame_w]x[0,frame_h]. Empty or degenerate
/// intersections map to nullopt so the w>0,h>0 invariant stays unconditional.
std::optional<BoundingBox> clip_to_frame(const BoundingBox& b, double frame_w, double frame_h);

/// Integer pixel rectangle covered by a continuous box, clipped to the frame.
/// Bounds are half-open: columns [x0,x1), rows [y0,y1).
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  std::int64_t pixel_count() const { return empty() ? 0 : std::int64_t(width()) * height(); }
};

PixelRect pixel_rect(const BoundingBox& b, int frame_w, int frame_h);

}  // namespace rgbdtrack

#include "rgbdtrack/geometry.hpp"

#include <algorithm>

namespace rgbdtrack {

std::optional<BoundingBox> clip_to_frame(const BoundingBox& b, double frame_w, double frame_h) {
  if (!(frame_w > 0.0 && frame_h > 0.0)) {
    throw InputError("clip_to_frame: frame extents must be positive");
  }
  const double x0 = std::max(b.x, 0.0);
  const double y0 = std::max(b.y, 0.0);
  const double x1 = std::min(b.right(), frame_w);
  const double y1 = std::min(b.bottom(), frame_h);
  if (x1 - x0 <= 0.0 || y1 - y0 <= 0.0) return std::nullopt;
  return BoundingBox(x0, y0, x1 - x0, y1 - y0);
}

PixelRect pixel_rect(const BoundingBox& b, int frame_w, int frame_h) {
  PixelRect r;
  r.x0 = std::max(0, static_cast<int>(std::floor(b.x)));
  r.y0 = std::max(0, static_cast<int>(std::floor(b.y)));
  r.x1 = std::min(frame_w, static_cast<int>(std::ceil(b.right())));
  r.y1 = std::min(frame_h, static_cast<int>(std::ceil(b.bottom())));
  return r;
}

}  // namespace rgbdtrack

#include "rgbdtrack/tracker.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgproc.hpp>

namespace rgbdtrack::track {

CropGeometry centered_crop(const BoundingBox& box, double area_factor, int resolution) {
  if (area_factor <= 0.0 || resolution <= 0) {
    throw InputError("centered_crop: area factor and resolution must be positive");
  }
  CropGeometry geom;
  const auto [cx, cy] = box_center(box);
  geom.center_x = cx;
  geom.center_y = cy;
  geom.side = std::sqrt(area_factor * box_area(box));
  geom.resolution = resolution;
  return geom;
}

namespace {

cv::Mat extract_crop(const cv::Mat& frame, const CropGeometry& geom, int interpolation) {
  // integer source window, replicate-padded where it leaves the frame
  const int x0 = static_cast<int>(std::floor(geom.origin_x()));
  const int y0 = static_cast<int>(std::floor(geom.origin_y()));
  const int x1 = static_cast<int>(std::ceil(geom.origin_x() + geom.side));
  const int y1 = static_cast<int>(std::ceil(geom.origin_y() + geom.side));

  const int left = std::max(0, -x0);
  const int top = std::max(0, -y0);
  const int right = std::max(0, x1 - frame.cols);
  const int bottom = std::max(0, y1 - frame.rows);

  const cv::Rect inside(std::max(0, x0), std::max(0, y0),
                        std::min(frame.cols, x1) - std::max(0, x0),
                        std::min(frame.rows, y1) - std::max(0, y0));
  if (inside.width <= 0 || inside.height <= 0) {
    throw InputError("extract_crop: crop window lies outside the frame");
  }
  cv::Mat padded;
  cv::copyMakeBorder(frame(inside), padded, top, bottom, left, right, cv::BORDER_REPLICATE);
  cv::Mat resized;
  cv::resize(padded, resized, cv::Size(geom.resolution, geom.resolution), 0, 0, interpolation);
  return resized;
}

}  // namespace

cv::Mat extract_rgb_crop(const cv::Mat& frame, const CropGeometry& geom) {
  if (frame.type() != CV_8UC3) throw InputError("extract_rgb_crop: expected 8UC3 frame");
  return extract_crop(frame, geom, cv::INTER_LINEAR);
}

cv::Mat extract_depth_crop(const cv::Mat& frame, const CropGeometry& geom) {
  if (frame.type() != CV_16UC1) throw InputError("extract_depth_crop: expected 16UC1 frame");
  return extract_crop(frame, geom, cv::INTER_NEAREST);
}

nn::Tensor rgb_crop_tensor(const cv::Mat& crop) {
  if (crop.type() != CV_8UC3) throw InputError("rgb_crop_tensor: expected 8UC3 crop");
  nn::Tensor t({3, crop.rows, crop.cols});
  const std::int64_t plane = static_cast<std::int64_t>(crop.rows) * crop.cols;
  for (int y = 0; y < crop.rows; ++y) {
    for (int x = 0; x < crop.cols; ++x) {
      const auto& px = crop.at<cv::Vec3b>(y, x);
      const std::int64_t i = static_cast<std::int64_t>(y) * crop.cols + x;
      for (int c = 0; c < 3; ++c) t[c * plane + i] = px[c] / 255.0 - 0.5;
    }
  }
  return t;
}

nn::Tensor depth_crop_tensor(const cv::Mat& crop) {
  if (crop.type() != CV_16UC1) throw InputError("depth_crop_tensor: expected 16UC1 crop");
  double lo = 1e300, hi = -1e300;
  for (int y = 0; y < crop.rows; ++y) {
    for (int x = 0; x < crop.cols; ++x) {
      const std::uint16_t v = crop.at<std::uint16_t>(y, x);
      if (v == 0) continue;
      lo = std::min(lo, double(v));
      hi = std::max(hi, double(v));
    }
  }
  nn::Tensor t({3, crop.rows, crop.cols});
  const bool flat = !(hi > lo);
  const std::int64_t plane = static_cast<std::int64_t>(crop.rows) * crop.cols;
  for (int y = 0; y < crop.rows; ++y) {
    for (int x = 0; x < crop.cols; ++x) {
      const std::uint16_t v = crop.at<std::uint16_t>(y, x);
      const std::int64_t i = static_cast<std::int64_t>(y) * crop.cols + x;
      double value = 0.0;  // missing measurements sit at the center of the range
      if (v != 0) value = flat ? 0.0 : (double(v) - lo) / (hi - lo) - 0.5;
      for (int c = 0; c < 3; ++c) t[c * plane + i] = value;
    }
  }
  return t;
}

std::optional<BoundingBox> grid_corners_to_image_box(const std::array<double, 4>& corners,
                                                     const CropGeometry& geom, int grid_w,
                                                     int grid_h, double frame_w, double frame_h) {
  const double stride_x = static_cast<double>(geom.resolution) / grid_w;
  const double stride_y = static_cast<double>(geom.resolution) / grid_h;
  const auto [tlx, tly] =
      geom.crop_to_image((corners[0] + 0.5) * stride_x, (corners[1] + 0.5) * stride_y);
  const auto [brx, bry] =
      geom.crop_to_image((corners[2] + 0.5) * stride_x, (corners[3] + 0.5) * stride_y);
  if (!(brx > tlx) || !(bry > tly)) return std::nullopt;
  return clip_to_frame(BoundingBox(tlx, tly, brx - tlx, bry - tly), frame_w, frame_h);
}

std::array<double, 4> box_in_crop_norm(const BoundingBox& box, const CropGeometry& geom) {
  const auto [x0, y0] = geom.image_to_crop(box.x, box.y);
  const auto [x1, y1] = geom.image_to_crop(box.right(), box.bottom());
  const double r = geom.resolution;
  return {x0 / r, y0 / r, (x1 - x0) / r, (y1 - y0) / r};
}

NetCornerPredictor::NetCornerPredictor(std::shared_ptr<net::TrackerModel> model)
    : model_(std::move(model)) {}

void NetCornerPredictor::set_templates(const cv::Mat& rgb_template,
                                       const cv::Mat& depth_template) {
  auto rgb_in = nn::constant(rgb_crop_tensor(rgb_template));
  auto depth_in = nn::constant(depth_crop_tensor(depth_template));
  rgb_template_feat_ = nn::constant(model_->extract_features(rgb_in, net::Stream::Rgb)->value);
  depth_template_feat_ =
      nn::constant(model_->extract_features(depth_in, net::Stream::Depth)->value);
}

NetCornerPredictor::Output NetCornerPredictor::localize(const cv::Mat& rgb_search,
                                                        const cv::Mat& depth_search) {
  if (!rgb_template_feat_ || !depth_template_feat_) {
    throw InputError("NetCornerPredictor: templates not set");
  }
  auto rgb_in = nn::constant(rgb_crop_tensor(rgb_search));
  auto depth_in = nn::constant(depth_crop_tensor(depth_search));
  const auto fwd = model_->forward_with_template_features(rgb_template_feat_, depth_template_feat_,
                                                          rgb_in, depth_in);
  return {fwd.heatmaps.tl_map(), fwd.heatmaps.br_map()};
}

OnlineTracker::OnlineTracker(std::shared_ptr<CornerPredictor> predictor, TrackerOptions opts)
    : predictor_(std::move(predictor)), opts_(opts) {}

void OnlineTracker::init(const cv::Mat& rgb, const cv::Mat& depth, const BoundingBox& box) {
  if (box.x < 0.0 || box.y < 0.0 || box.right() > rgb.cols || box.bottom() > rgb.rows) {
    throw InputError("OnlineTracker::init: box lies outside the frame");
  }
  const CropGeometry geom =
      centered_crop(box, opts_.template_area_factor, predictor_->template_resolution());
  predictor_->set_templates(extract_rgb_crop(rgb, geom), extract_depth_crop(depth, geom));
  box_ = box;
}

Prediction OnlineTracker::track(const cv::Mat& rgb, const cv::Mat& depth) {
  if (!box_) throw InputError("OnlineTracker::track: not initialized");
  const CropGeometry geom =
      centered_crop(*box_, opts_.search_area_factor, predictor_->search_resolution());
  const auto maps = predictor_->localize(extract_rgb_crop(rgb, geom),
                                         extract_depth_crop(depth, geom));
  const int grid_h = maps.tl.rows();
  const int grid_w = maps.tl.cols();
  const auto [tlx, tly] = net::soft_argmax(maps.tl);
  const auto [brx, bry] = net::soft_argmax(maps.br);

  const auto mapped = grid_corners_to_image_box({tlx, tly, brx, bry}, geom, grid_w, grid_h,
                                                rgb.cols, rgb.rows);
  if (!mapped) {
    return {*box_, 0.0};  // degenerate output: keep the previous box, signal absence
  }
  box_ = *mapped;
  double peak_tl = 0.0, peak_br = 0.0;
  for (std::int64_t i = 0; i < maps.tl.size(); ++i) peak_tl = std::max(peak_tl, maps.tl[i]);
  for (std::int64_t i = 0; i < maps.br.size(); ++i) peak_br = std::max(peak_br, maps.br[i]);
  return {*box_, std::sqrt(peak_tl * peak_br)};
}

const BoundingBox& OnlineTracker::current_box() const {
  if (!box_) throw InputError("OnlineTracker: not initialized");
  return *box_;
}

OracleTracker::OracleTracker(std::vector<GroundTruthEntry> groundtruth)
    : gt_(std::move(groundtruth)) {}

void OracleTracker::init(const cv::Mat&, const cv::Mat&, const BoundingBox& box) {
  last_box_ = box;
  next_frame_ = 1;
}

Prediction OracleTracker::track(const cv::Mat&, const cv::Mat&) {
  if (next_frame_ >= gt_.size()) throw InputError("OracleTracker: ran past the sequence end");
  const auto& entry = gt_[next_frame_++];
  if (entry.is_present()) {
    last_box_ = entry.box();
    return {last_box_, 1.0};
  }
  return {last_box_, 0.0};
}

std::vector<Prediction> run_sequence(Tracker& tracker, const SequenceRecord& seq) {
  if (seq.frame_count() == 0) throw ProtocolError(seq.id + ": empty sequence");
  if (!seq.groundtruth[0].is_present()) {
    throw ProtocolError(seq.id + ": first-frame ground truth must be present");
  }
  const BoundingBox init_box = seq.groundtruth[0].box();
  std::vector<Prediction> predictions;
  predictions.reserve(seq.frame_count());
  {
    const cv::Mat rgb = io::load_rgb_frame(seq, 0);
    const cv::Mat depth = io::load_depth_frame(seq, 0);
    tracker.init(rgb, depth, init_box);
    predictions.emplace_back(init_box, 1.0);
  }
  for (std::size_t t = 1; t < seq.frame_count(); ++t) {
    const cv::Mat rgb = io::load_rgb_frame(seq, t);
    const cv::Mat depth = io::load_depth_frame(seq, t);
    predictions.push_back(tracker.track(rgb, depth));
  }
  return predictions;
}

}  // namespace rgbdtrack::track

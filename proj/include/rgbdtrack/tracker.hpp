#pragma once

#include <array>
#include <memory>
#include <optional>

#include <opencv2/core.hpp>

#include "rgbdtrack/dataset.hpp"
#include "rgbdtrack/geometry.hpp"
#include "rgbdtrack/net/model.hpp"
#include "rgbdtrack/sequence.hpp"

namespace rgbdtrack::track {

/// Square crop window in image space resized to a fixed resolution.
/// Crop pixel p maps to image coordinate origin + p * (side / resolution).
struct CropGeometry {
  double center_x = 0.0, center_y = 0.0;
  double side = 0.0;
  int resolution = 0;

  double origin_x() const { return center_x - side / 2.0; }
  double origin_y() const { return center_y - side / 2.0; }
  double scale() const { return side / resolution; }

  std::pair<double, double> crop_to_image(double cx, double cy) const {
    return {origin_x() + cx * scale(), origin_y() + cy * scale()};
  }
  std::pair<double, double> image_to_crop(double ix, double iy) const {
    return {(ix - origin_x()) / scale(), (iy - origin_y()) / scale()};
  }
};

/// Window centered on the box whose area is area_factor times the box area.
CropGeometry centered_crop(const BoundingBox& box, double area_factor, int resolution);

cv::Mat extract_rgb_crop(const cv::Mat& frame, const CropGeometry& geom);    // replicate padding
cv::Mat extract_depth_crop(const cv::Mat& frame, const CropGeometry& geom);  // nearest neighbor

/// [3,R,R] tensor in [-0.5, 0.5].
nn::Tensor rgb_crop_tensor(const cv::Mat& crop);
/// Valid depths min-max scaled to [-0.5, 0.5], missing pixels 0, replicated
/// to three channels.
nn::Tensor depth_crop_tensor(const cv::Mat& crop);

/// Grid corner coordinates (cell centers) -> image-space box, clipped to the
/// frame. nullopt when the clipped box is empty or the corners are inverted.
std::optional<BoundingBox> grid_corners_to_image_box(const std::array<double, 4>& corners,
                                                     const CropGeometry& geom, int grid_w,
                                                     int grid_h, double frame_w, double frame_h);

/// Target box expressed in crop-normalized [0,1] coordinates.
std::array<double, 4> box_in_crop_norm(const BoundingBox& box, const CropGeometry& geom);

/// Per-frame corner-map producer; the online loop is written against this so
/// tests can drive it with stub maps.
class CornerPredictor {
 public:
  virtual ~CornerPredictor() = default;

  struct Output {
    nn::Tensor tl, br;  // normalized [H,W] maps
  };

  virtual void set_templates(const cv::Mat& rgb_template, const cv::Mat& depth_template) = 0;
  virtual Output localize(const cv::Mat& rgb_search, const cv::Mat& depth_search) = 0;
  virtual int template_resolution() const = 0;
  virtual int search_resolution() const = 0;
};

/// Runs the fusion network with cached template features.
class NetCornerPredictor : public CornerPredictor {
 public:
  explicit NetCornerPredictor(std::shared_ptr<net::TrackerModel> model);

  void set_templates(const cv::Mat& rgb_template, const cv::Mat& depth_template) override;
  Output localize(const cv::Mat& rgb_search, const cv::Mat& depth_search) override;
  int template_resolution() const override { return model_->config().template_resolution; }
  int search_resolution() const override { return model_->config().search_resolution; }

 private:
  std::shared_ptr<net::TrackerModel> model_;
  nn::Var rgb_template_feat_, depth_template_feat_;
};

struct TrackerOptions {
  double template_area_factor = 2.0;
  double search_area_factor = 5.0;
};

/// Protocol-facing tracker interface: initialize on the first frame, then
/// produce one Prediction per subsequent frame.
class Tracker {
 public:
  virtual ~Tracker() = default;
  virtual void init(const cv::Mat& rgb, const cv::Mat& depth, const BoundingBox& box) = 0;
  virtual Prediction track(const cv::Mat& rgb, const cv::Mat& depth) = 0;
};

/// Crop -> forward -> coordinate mapping -> confidence loop around a
/// CornerPredictor. Confidence is the geometric mean of the two corner-map
/// peaks; a degenerate mapped box keeps the previous box with confidence 0.
class OnlineTracker : public Tracker {
 public:
  OnlineTracker(std::shared_ptr<CornerPredictor> predictor, TrackerOptions opts = {});

  void init(const cv::Mat& rgb, const cv::Mat& depth, const BoundingBox& box) override;
  Prediction track(const cv::Mat& rgb, const cv::Mat& depth) override;

  const BoundingBox& current_box() const;

 private:
  std::shared_ptr<CornerPredictor> predictor_;
  TrackerOptions opts_;
  std::optional<BoundingBox> box_;
};

/// Test-harness tracker that echoes ground truth with confidence 1 on
/// visible frames and repeats the last box with confidence 0 otherwise.
class OracleTracker : public Tracker {
 public:
  explicit OracleTracker(std::vector<GroundTruthEntry> groundtruth);

  void init(const cv::Mat& rgb, const cv::Mat& depth, const BoundingBox& box) override;
  Prediction track(const cv::Mat& rgb, const cv::Mat& depth) override;

 private:
  std::vector<GroundTruthEntry> gt_;
  std::size_t next_frame_ = 0;
  BoundingBox last_box_;
};

/// Echoes its init box everywhere with a fixed confidence.
class ConstantTracker : public Tracker {
 public:
  explicit ConstantTracker(double confidence) : confidence_(confidence) {}

  void init(const cv::Mat&, const cv::Mat&, const BoundingBox& box) override { box_ = box; }
  Prediction track(const cv::Mat&, const cv::Mat&) override { return {box_, confidence_}; }

 private:
  BoundingBox box_;
  double confidence_ = 0.0;
};

/// Initializes on frame 0 ground truth (must be Present), tracks the rest;
/// frame 0 echoes the init box with confidence 1.
std::vector<Prediction> run_sequence(Tracker& tracker, const SequenceRecord& seq);

}  // namespace rgbdtrack::track

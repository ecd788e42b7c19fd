#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <opencv2/imgcodecs.hpp>

#include "rgbdtrack/synth.hpp"
#include "rgbdtrack/tracker.hpp"
#include "testutil.hpp"

using namespace rgbdtrack;
using namespace rgbdtrack::track;

namespace {

// Emits fixed one-hot corner maps on a configurable grid.
class StubPredictor : public CornerPredictor {
 public:
  StubPredictor(int grid, int tl_x, int tl_y, int br_x, int br_y, int search_res = 128,
                int template_res = 64)
      : grid_(grid), search_res_(search_res), template_res_(template_res) {
    tl_ = nn::Tensor::zeros({grid, grid});
    br_ = nn::Tensor::zeros({grid, grid});
    tl_.at(tl_y, tl_x) = 1.0;
    br_.at(br_y, br_x) = 1.0;
  }

  void set_templates(const cv::Mat& rgb, const cv::Mat& depth) override {
    template_calls++;
    last_template_rgb = rgb.clone();
    last_template_depth = depth.clone();
  }
  Output localize(const cv::Mat&, const cv::Mat&) override { return {tl_, br_}; }
  int template_resolution() const override { return template_res_; }
  int search_resolution() const override { return search_res_; }

  int template_calls = 0;
  cv::Mat last_template_rgb, last_template_depth;

 private:
  int grid_, search_res_, template_res_;
  nn::Tensor tl_, br_;
};

class UniformPredictor : public CornerPredictor {
 public:
  explicit UniformPredictor(int grid) : grid_(grid) {}
  void set_templates(const cv::Mat&, const cv::Mat&) override {}
  Output localize(const cv::Mat&, const cv::Mat&) override {
    return {nn::Tensor::full({grid_, grid_}, 1.0 / (grid_ * grid_)),
            nn::Tensor::full({grid_, grid_}, 1.0 / (grid_ * grid_))};
  }
  int template_resolution() const override { return 64; }
  int search_resolution() const override { return 128; }

 private:
  int grid_;
};

cv::Mat gray_frame(int w = 200, int h = 150) { return cv::Mat(h, w, CV_8UC3, cv::Scalar(80, 80, 80)); }
cv::Mat flat_depth(int w = 200, int h = 150) { return cv::Mat(h, w, CV_16UC1, cv::Scalar(1500)); }

}  // namespace

TEST_CASE("centered_crop geometry and coordinate round trip") {
  const BoundingBox box(40, 40, 10, 10);  // center (45,45)
  const auto geom = centered_crop(box, 2.0, 128);
  CHECK(geom.center_x == doctest::Approx(45.0));
  CHECK(geom.side == doctest::Approx(std::sqrt(200.0)));

  nn::Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const double x = rng.uniform(0, 128), y = rng.uniform(0, 128);
    const auto [ix, iy] = geom.crop_to_image(x, y);
    const auto [bx, by] = geom.image_to_crop(ix, iy);
    CHECK(bx == doctest::Approx(x).epsilon(1e-9));
    CHECK(by == doctest::Approx(y).epsilon(1e-9));
  }
}

TEST_CASE("integer-aligned unit-scale crop copies pixels exactly") {
  cv::Mat frame = gray_frame(64, 64);
  nn::Rng rng(2);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      frame.at<cv::Vec3b>(y, x) = cv::Vec3b(static_cast<uchar>(rng.uniform(0, 255)),
                                            static_cast<uchar>(rng.uniform(0, 255)),
                                            static_cast<uchar>(rng.uniform(0, 255)));
    }
  }
  // box 16x16 at center (20,20), area factor 4 -> side 32, resolution 32
  const auto geom = centered_crop(BoundingBox(12, 12, 16, 16), 4.0, 32);
  REQUIRE(geom.side == doctest::Approx(32.0));
  const cv::Mat crop = extract_rgb_crop(frame, geom);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      CHECK(crop.at<cv::Vec3b>(y, x) == frame.at<cv::Vec3b>(y + 4, x + 4));
    }
  }
}

TEST_CASE("crops near the border are replicate padded") {
  cv::Mat frame = gray_frame(64, 64);
  frame.at<cv::Vec3b>(0, 0) = cv::Vec3b(1, 2, 3);
  const auto geom = centered_crop(BoundingBox(0, 0, 8, 8), 16.0, 32);  // side 32 at center (4,4)
  const cv::Mat crop = extract_rgb_crop(frame, geom);
  CHECK(crop.at<cv::Vec3b>(0, 0) == cv::Vec3b(1, 2, 3));  // replicated corner
}

TEST_CASE("depth tensor normalization handles missing pixels") {
  cv::Mat depth(4, 4, CV_16UC1, cv::Scalar(1000));
  depth.at<std::uint16_t>(0, 0) = 0;     // missing
  depth.at<std::uint16_t>(3, 3) = 2000;  // max
  const auto t = depth_crop_tensor(depth);
  CHECK(t.shape() == std::vector<int>{3, 4, 4});
  CHECK(t[0] == doctest::Approx(0.0));           // missing -> center
  CHECK(t[15] == doctest::Approx(0.5));          // max -> +0.5
  CHECK(t[1] == doctest::Approx(-0.5));          // min -> -0.5
  // replicated channels
  CHECK(t[16 + 5] == doctest::Approx(t[5]));
}

TEST_CASE("grid corners map through the crop affine transform") {
  CropGeometry geom;
  geom.center_x = 50;
  geom.center_y = 50;
  geom.side = 40;
  geom.resolution = 128;
  // hand oracle: crop pixel = (g + 0.5) * 16, image = 30 + pixel * 40/128
  const std::array<double, 4> corners = {2, 3, 5, 6};
  const auto box = grid_corners_to_image_box(corners, geom, 8, 8, 200, 200);
  REQUIRE(box.has_value());
  const double tlx = 30.0 + (2.5 * 16.0) * (40.0 / 128.0);
  const double tly = 30.0 + (3.5 * 16.0) * (40.0 / 128.0);
  const double brx = 30.0 + (5.5 * 16.0) * (40.0 / 128.0);
  const double bry = 30.0 + (6.5 * 16.0) * (40.0 / 128.0);
  CHECK(box->x == doctest::Approx(tlx).epsilon(1e-12));
  CHECK(box->y == doctest::Approx(tly).epsilon(1e-12));
  CHECK(box->w == doctest::Approx(brx - tlx).epsilon(1e-12));
  CHECK(box->h == doctest::Approx(bry - tly).epsilon(1e-12));

  SUBCASE("inverted corners are degenerate") {
    CHECK_FALSE(grid_corners_to_image_box({5, 3, 2, 6}, geom, 8, 8, 200, 200).has_value());
  }
}

TEST_CASE("online tracker maps stub one-hot corners to the expected box") {
  auto stub = std::make_shared<StubPredictor>(8, 2, 3, 5, 6);
  OnlineTracker tracker(stub);
  const BoundingBox init(90, 70, 20, 20);
  tracker.init(gray_frame(), flat_depth(), init);
  CHECK(stub->template_calls == 1);

  const auto pred = tracker.track(gray_frame(), flat_depth());
  // search crop: center (100,80), side sqrt(5*400)
  const auto geom = centered_crop(init, 5.0, 128);
  const auto expected = grid_corners_to_image_box({2, 3, 5, 6}, geom, 8, 8, 200, 150);
  REQUIRE(expected.has_value());
  CHECK(pred.box.x == doctest::Approx(expected->x).epsilon(1e-12));
  CHECK(pred.box.y == doctest::Approx(expected->y).epsilon(1e-12));
  CHECK(pred.box.w == doctest::Approx(expected->w).epsilon(1e-12));
  CHECK(pred.box.h == doctest::Approx(expected->h).epsilon(1e-12));
  CHECK(pred.confidence == doctest::Approx(1.0));  // one-hot peaks

  // output box stays inside the frame
  CHECK(pred.box.x >= 0.0);
  CHECK(pred.box.right() <= 200.0);
}

TEST_CASE("uniform heatmaps yield the uniform-peak confidence") {
  OnlineTracker tracker(std::make_shared<UniformPredictor>(8));
  tracker.init(gray_frame(), flat_depth(), BoundingBox(90, 70, 20, 20));
  const auto pred = tracker.track(gray_frame(), flat_depth());
  CHECK(pred.confidence == doctest::Approx(1.0 / 64.0).epsilon(1e-12));
}

TEST_CASE("degenerate corner output keeps the previous box with confidence 0") {
  auto stub = std::make_shared<StubPredictor>(8, 5, 3, 2, 6);  // br left of tl
  OnlineTracker tracker(stub);
  const BoundingBox init(90, 70, 20, 20);
  tracker.init(gray_frame(), flat_depth(), init);
  const auto pred = tracker.track(gray_frame(), flat_depth());
  CHECK(pred.box == init);
  CHECK(pred.confidence == 0.0);
}

TEST_CASE("init rejects boxes outside the frame and repeats deterministically") {
  auto stub = std::make_shared<StubPredictor>(8, 2, 2, 5, 5);
  OnlineTracker tracker(stub);
  CHECK_THROWS_AS(tracker.init(gray_frame(), flat_depth(), BoundingBox(190, 140, 20, 20)),
                  InputError);

  // an edge-touching box succeeds through replicate padding
  CHECK_NOTHROW(tracker.init(gray_frame(), flat_depth(), BoundingBox(0, 0, 20, 20)));
  const cv::Mat first = stub->last_template_rgb.clone();
  tracker.init(gray_frame(), flat_depth(), BoundingBox(0, 0, 20, 20));
  CHECK(cv::norm(first, stub->last_template_rgb, cv::NORM_INF) == 0.0);
}

TEST_CASE("run_sequence with the oracle tracker echoes ground truth") {
  testutil::TempDir tmp("runseq");
  auto cfg = synth::make_default_configs(2, 64)[1];  // includes a full occlusion
  synth::write_synth_dataset({cfg}, tmp.path(), io::Split::Test);
  const auto seq = io::load_sequence(tmp.path() / "test" / cfg.id);

  OracleTracker oracle(seq.groundtruth);
  const auto preds = run_sequence(oracle, seq);
  REQUIRE(preds.size() == seq.frame_count());
  CHECK(preds[0].confidence == doctest::Approx(1.0));
  for (std::size_t t = 0; t < preds.size(); ++t) {
    if (seq.groundtruth[t].is_present()) {
      CHECK(preds[t].box == seq.groundtruth[t].box());
      CHECK(preds[t].confidence == doctest::Approx(1.0));
    } else {
      CHECK(preds[t].confidence == doctest::Approx(0.0));
    }
  }

  // deterministic across repeated runs
  OracleTracker again(seq.groundtruth);
  const auto preds2 = run_sequence(again, seq);
  for (std::size_t t = 0; t < preds.size(); ++t) {
    CHECK(preds[t].box == preds2[t].box);
    CHECK(preds[t].confidence == preds2[t].confidence);
  }
}

TEST_CASE("run_sequence requires a present first frame") {
  testutil::TempDir tmp("runseqbad");
  auto cfg = synth::make_default_configs(1, 12)[0];
  cfg.full_occlusion = {{0, 5}};
  synth::write_synth_dataset({cfg}, tmp.path(), io::Split::Test);
  const auto seq = io::load_sequence(tmp.path() / "test" / cfg.id);
  OracleTracker oracle(seq.groundtruth);
  CHECK_THROWS_AS(run_sequence(oracle, seq), ProtocolError);
}

TEST_CASE("net-backed tracker runs end to end on a tiny model") {
  NetConfig cfg;
  cfg.channels = 8;
  cfg.heads = 1;
  cfg.ffn_width = 16;
  cfg.encoder_layers = 1;
  cfg.fusion_layers = 1;
  cfg.decoder_layers = 1;
  cfg.search_resolution = 64;
  cfg.template_resolution = 32;
  auto model = std::make_shared<net::TrackerModel>(cfg, 99);
  OnlineTracker tracker(std::make_shared<NetCornerPredictor>(model));

  auto synth_cfg = synth::make_default_configs(1, 7)[0];
  synth_cfg.frame_count = 6;
  const auto seq = synth::generate_sequence(synth_cfg);
  tracker.init(seq.rgb[0], seq.depth[0], seq.groundtruth[0].box());
  for (int t = 1; t < 6; ++t) {
    const auto pred = tracker.track(seq.rgb[t], seq.depth[t]);
    CHECK(std::isfinite(pred.confidence));
    CHECK(pred.confidence >= 0.0);
    CHECK(pred.confidence <= 1.0);
    CHECK(pred.box.x >= 0.0);
    CHECK(pred.box.right() <= synth_cfg.frame_width);
  }
}

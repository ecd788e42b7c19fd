#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "metric_oracle.hpp"
#include "rgbdtrack/metrics.hpp"

using namespace rgbdtrack;
using metrics::Aggregation;

namespace {

GroundTruthEntry gt_box(double x, double y, double w, double h) {
  return GroundTruthEntry::present(BoundingBox(x, y, w, h));
}

}  // namespace

TEST_CASE("iou examples") {
  const BoundingBox a(0, 0, 10, 10);
  CHECK(metrics::iou(a, a) == doctest::Approx(1.0));
  CHECK(metrics::iou(a, BoundingBox(20, 20, 5, 5)) == doctest::Approx(0.0));
  CHECK(metrics::iou(BoundingBox(0, 0, 2, 2), BoundingBox(1, 0, 2, 2)) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("iou symmetry and range") {
  nn::Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const BoundingBox a(rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(0.5, 40),
                        rng.uniform(0.5, 40));
    const BoundingBox b(rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(0.5, 40),
                        rng.uniform(0.5, 40));
    const double ab = metrics::iou(a, b);
    CHECK(ab == doctest::Approx(metrics::iou(b, a)).epsilon(1e-12));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(metrics::iou(a, a) == doctest::Approx(1.0));
  }
}

TEST_CASE("precision examples") {
  // retained overlaps {1.0, 0.5, 0.0} over 3 retained frames
  std::vector<GroundTruthEntry> gts = {gt_box(0, 0, 10, 10), gt_box(0, 0, 10, 10),
                                       gt_box(0, 0, 10, 10)};
  std::vector<Prediction> preds = {
      {BoundingBox(0, 0, 10, 10), 0.9},  // overlap 1.0
      {BoundingBox(0, 0, 10, 5), 0.9},   // overlap 0.5
      {BoundingBox(50, 50, 5, 5), 0.9},  // overlap 0.0
  };
  CHECK(metrics::precision(preds, gts, 0.5) == doctest::Approx(0.5));

  SUBCASE("all confidences below tau") {
    CHECK(metrics::precision(preds, gts, 0.95) == doctest::Approx(0.0));
  }
  SUBCASE("oracle predictions give 1.0") {
    std::vector<Prediction> oracle = {{BoundingBox(0, 0, 10, 10), 1.0},
                                      {BoundingBox(0, 0, 10, 10), 1.0},
                                      {BoundingBox(0, 0, 10, 10), 1.0}};
    CHECK(metrics::precision(oracle, gts, 1.0) == doctest::Approx(1.0));
  }
  SUBCASE("length mismatch rejected") {
    preds.pop_back();
    CHECK_THROWS_AS(metrics::precision(preds, gts, 0.5), InputError);
  }
  SUBCASE("unannotated frames rejected") {
    gts[1] = GroundTruthEntry::unannotated();
    CHECK_THROWS_AS(metrics::precision(preds, gts, 0.5), InputError);
  }
}

TEST_CASE("recall examples") {
  // 3 visible frames, retained overlaps {1.0, 0.5} on two, third withheld
  std::vector<GroundTruthEntry> gts = {gt_box(0, 0, 10, 10), gt_box(0, 0, 10, 10),
                                       gt_box(0, 0, 10, 10)};
  std::vector<Prediction> preds = {
      {BoundingBox(0, 0, 10, 10), 0.9},
      {BoundingBox(0, 0, 10, 5), 0.9},
      {BoundingBox(0, 0, 10, 10), 0.1},  // withheld at tau 0.5
  };
  CHECK(metrics::recall(preds, gts, 0.5) == doctest::Approx(0.5));
  CHECK(metrics::recall(preds, gts, 2.0) == doctest::Approx(0.0));

  std::vector<Prediction> oracle = {{BoundingBox(0, 0, 10, 10), 1.0},
                                    {BoundingBox(0, 0, 10, 10), 1.0},
                                    {BoundingBox(0, 0, 10, 10), 1.0}};
  CHECK(metrics::recall(oracle, gts, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("confidence <= 0 signals absence at every threshold") {
  std::vector<GroundTruthEntry> gts = {gt_box(0, 0, 10, 10)};
  std::vector<Prediction> preds = {{BoundingBox(0, 0, 10, 10), 0.0}};
  CHECK(metrics::precision(preds, gts, -5.0) == doctest::Approx(0.0));
  CHECK(metrics::recall(preds, gts, -5.0) == doctest::Approx(0.0));
}

TEST_CASE("f_measure") {
  CHECK(metrics::f_measure(0.5, 0.5) == doctest::Approx(0.5));
  CHECK(metrics::f_measure(0.545, 0.578) == doctest::Approx(0.561).epsilon(0.002));
  CHECK(metrics::f_measure(0.0, 0.7) == doctest::Approx(0.0));
  CHECK(metrics::f_measure(0.0, 0.0) == doctest::Approx(0.0));
  nn::Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const double p = rng.uniform();
    CHECK(metrics::f_measure(p, p) == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("sweep with a degenerate grid") {
  metrics::PredictionRuns preds = {{{BoundingBox(0, 0, 10, 10), 0.7},
                                    {BoundingBox(0, 0, 10, 5), 0.7}}};
  metrics::GroundTruthRuns gts = {{gt_box(0, 0, 10, 10), gt_box(0, 0, 10, 10)}};
  const auto result = metrics::sweep_thresholds(preds, gts);
  // one observed confidence plus the retain-all sentinel
  CHECK(result.thresholds.size() == 2);
  const double expected = metrics::f_measure(0.75, 0.75);
  CHECK(result.best_f == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("hand-built sweep matches exhaustive scan") {
  metrics::PredictionRuns preds = {{
      {BoundingBox(0, 0, 10, 10), 0.9},
      {BoundingBox(0, 0, 10, 5), 0.4},
      {BoundingBox(40, 40, 5, 5), 0.9},
      {BoundingBox(0, 0, 10, 10), 0.4},
  }};
  metrics::GroundTruthRuns gts = {{gt_box(0, 0, 10, 10), gt_box(0, 0, 10, 10),
                                   GroundTruthEntry::absent(), gt_box(0, 0, 10, 10)}};
  for (const auto mode : {Aggregation::SequenceAveraged, Aggregation::FramePooled}) {
    const auto result = metrics::sweep_thresholds(preds, gts, mode);
    const auto expected = metric_oracle::sweep(preds.front().empty() ? preds : preds, gts, mode);
    CHECK(result.best_f == doctest::Approx(expected.best_f).epsilon(1e-12));
  }
}

TEST_CASE("empty input rejected") {
  CHECK_THROWS_AS(metrics::sweep_thresholds({}, {}), InputError);
}

TEST_CASE("randomized instances agree with the brute-force oracle") {
  nn::Rng rng(2024);
  for (int i = 0; i < 200; ++i) {
    const auto inst = metric_oracle::random_instance(rng);
    for (const auto mode : {Aggregation::SequenceAveraged, Aggregation::FramePooled}) {
      const auto result = metrics::sweep_thresholds(inst.preds, inst.gts, mode);
      const auto expected = metric_oracle::sweep(inst.preds, inst.gts, mode);
      CHECK(std::abs(result.best_f - expected.best_f) <= 1e-9);
      for (double tau : expected.taus) {
        const auto [pr, re] = metrics::pr_re_at(inst.preds, inst.gts, tau, mode);
        const auto ref = metric_oracle::dataset_pr_re(inst.preds, inst.gts, tau, mode);
        CHECK(std::abs(pr - ref.pr) <= 1e-9);
        CHECK(std::abs(re - ref.re) <= 1e-9);
      }
    }
  }
}

TEST_CASE("raising tau never increases the retained count") {
  nn::Rng rng(99);
  for (int i = 0; i < 50; ++i) {
    const auto inst = metric_oracle::random_instance(rng);
    const auto& run = inst.preds.front();
    long prev = -1;
    for (double tau : {-1.0, 0.0, 0.2, 0.5, 0.8, 1.0, 2.0}) {
      long np = 0;
      for (const auto& p : run) np += metrics::prediction_retained(p.confidence, tau) ? 1 : 0;
      if (prev >= 0) CHECK(np <= prev);
      prev = np;
    }
  }
}

TEST_CASE("best_f equals the maximum over a 1000-point uniform grid") {
  nn::Rng rng(41);
  for (int i = 0; i < 20; ++i) {
    const auto inst = metric_oracle::random_instance(rng);
    const auto result = metrics::sweep_thresholds(inst.preds, inst.gts);
    double grid_best = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double tau = -0.1 + 1.3 * k / 999.0;
      const auto [pr, re] = metrics::pr_re_at(inst.preds, inst.gts, tau,
                                              Aggregation::SequenceAveraged);
      grid_best = std::max(grid_best, metrics::f_measure(pr, re));
    }
    CHECK(result.best_f >= grid_best - 1e-12);
    CHECK(result.best_f == doctest::Approx(std::max(grid_best, result.best_f)).epsilon(1e-9));
  }
}

TEST_CASE("per-attribute overlap") {
  using attrs::AttributeTable;
  std::vector<GroundTruthEntry> gts = {gt_box(0, 0, 10, 10), gt_box(0, 0, 10, 10)};

  SUBCASE("oracle predictions on SO frames") {
    std::vector<Prediction> preds = {{BoundingBox(0, 0, 10, 10), 1.0},
                                     {BoundingBox(0, 0, 10, 10), 1.0}};
    AttributeTable table(2);
    table.set(AttributeId::SO, 0, true);
    table.set(AttributeId::SO, 1, true);
    table.refresh_unassigned();
    const auto overlap = metrics::per_attribute_overlap(preds, gts, table);
    REQUIRE(overlap.count(AttributeId::SO) == 1);
    CHECK(overlap.at(AttributeId::SO) == doctest::Approx(1.0));
    CHECK(overlap.size() == 1);  // attributes without qualifying frames are omitted
  }

  SUBCASE("mean over BC frames, confidence ignored") {
    std::vector<Prediction> preds = {{BoundingBox(0, 0, 10, 6), 0.0},   // overlap 0.6
                                     {BoundingBox(0, 0, 10, 2), 0.9}};  // overlap 0.2
    AttributeTable table(2);
    table.set(AttributeId::BC, 0, true);
    table.set(AttributeId::BC, 1, true);
    table.refresh_unassigned();
    const auto overlap = metrics::per_attribute_overlap(preds, gts, table);
    CHECK(overlap.at(AttributeId::BC) == doctest::Approx(0.4).epsilon(1e-12));
  }

  SUBCASE("FO and OF are never reported") {
    std::vector<GroundTruthEntry> mixed = {GroundTruthEntry::absent(), gt_box(0, 0, 10, 10)};
    std::vector<Prediction> preds = {{BoundingBox(0, 0, 10, 10), 1.0},
                                     {BoundingBox(0, 0, 10, 10), 1.0}};
    AttributeTable table(2);
    table.set(AttributeId::FO, 0, true);
    table.set(AttributeId::OF, 1, true);
    table.set(AttributeId::SO, 1, true);
    table.refresh_unassigned();
    const auto overlap = metrics::per_attribute_overlap(preds, mixed, table);
    CHECK(overlap.count(AttributeId::FO) == 0);
    CHECK(overlap.count(AttributeId::OF) == 0);
    CHECK(overlap.count(AttributeId::SO) == 1);
  }
}

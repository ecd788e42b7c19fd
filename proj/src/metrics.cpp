#include "rgbdtrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace rgbdtrack::metrics {

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double iy = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return inter / (box_area(a) + box_area(b) - inter);
}

namespace {

void check_aligned(std::span<const Prediction> preds, std::span<const GroundTruthEntry> gts) {
  if (preds.size() != gts.size()) {
    throw InputError("metrics: prediction and ground-truth lists differ in length");
  }
  for (const auto& g : gts) {
    if (g.is_unannotated()) {
      throw InputError("metrics: unannotated frames must be excluded before evaluation");
    }
  }
}

double overlap(const Prediction& p, const GroundTruthEntry& g) {
  return g.is_present() ? iou(p.box, g.box()) : 0.0;
}

struct SequenceSums {
  double pr_sum = 0.0;
  std::int64_t retained = 0;  // N_p
  double re_sum = 0.0;
  std::int64_t visible = 0;  // N_g
};

SequenceSums sums_at(std::span<const Prediction> preds, std::span<const GroundTruthEntry> gts,
                     double tau) {
  SequenceSums s;
  for (std::size_t t = 0; t < preds.size(); ++t) {
    const bool retained = prediction_retained(preds[t].confidence, tau);
    const double om = retained ? overlap(preds[t], gts[t]) : 0.0;
    if (retained) {
      s.pr_sum += om;
      ++s.retained;
    }
    if (gts[t].is_present()) {
      s.re_sum += om;
      ++s.visible;
    }
  }
  return s;
}

double safe_div(double num, std::int64_t den) { return den == 0 ? 0.0 : num / den; }

}  // namespace

double precision(std::span<const Prediction> preds, std::span<const GroundTruthEntry> gts,
                 double tau) {
  check_aligned(preds, gts);
  const auto s = sums_at(preds, gts, tau);
  return safe_div(s.pr_sum, s.retained);
}

double recall(std::span<const Prediction> preds, std::span<const GroundTruthEntry> gts,
              double tau) {
  check_aligned(preds, gts);
  const auto s = sums_at(preds, gts, tau);
  return safe_div(s.re_sum, s.visible);
}

double f_measure(double pr, double re) {
  const double denom = pr + re;
  if (denom == 0.0) return 0.0;
  return 2.0 * pr * re / denom;
}

std::pair<double, double> pr_re_at(const PredictionRuns& preds, const GroundTruthRuns& gts,
                                   double tau, Aggregation mode) {
  if (preds.empty() || preds.size() != gts.size()) {
    throw InputError("pr_re_at: need at least one sequence with aligned ground truth");
  }
  if (mode == Aggregation::SequenceAveraged) {
    double pr = 0.0, re = 0.0;
    for (std::size_t s = 0; s < preds.size(); ++s) {
      check_aligned(preds[s], gts[s]);
      const auto sums = sums_at(preds[s], gts[s], tau);
      pr += safe_div(sums.pr_sum, sums.retained);
      re += safe_div(sums.re_sum, sums.visible);
    }
    return {pr / preds.size(), re / preds.size()};
  }
  SequenceSums pooled;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    check_aligned(preds[s], gts[s]);
    const auto sums = sums_at(preds[s], gts[s], tau);
    pooled.pr_sum += sums.pr_sum;
    pooled.retained += sums.retained;
    pooled.re_sum += sums.re_sum;
    pooled.visible += sums.visible;
  }
  return {safe_div(pooled.pr_sum, pooled.retained), safe_div(pooled.re_sum, pooled.visible)};
}

EvalResult sweep_thresholds(const PredictionRuns& preds, const GroundTruthRuns& gts,
                            Aggregation mode) {
  if (preds.empty()) throw InputError("sweep_thresholds: no sequences");
  std::set<double> grid;
  double min_conf = 0.0;
  for (const auto& run : preds) {
    for (const auto& p : run) {
      grid.insert(p.confidence);
      min_conf = std::min(min_conf, p.confidence);
    }
  }
  grid.insert(min_conf - 1.0);  // retain-all sentinel

  EvalResult result;
  result.mode = mode;
  for (double tau : grid) {
    const auto [pr, re] = pr_re_at(preds, gts, tau, mode);
    result.thresholds.push_back(tau);
    result.pr_curve.push_back(pr);
    result.re_curve.push_back(re);
    result.f_curve.push_back(f_measure(pr, re));
  }
  const auto best = std::max_element(result.f_curve.begin(), result.f_curve.end());
  const auto idx = static_cast<std::size_t>(best - result.f_curve.begin());
  result.best_f = result.f_curve[idx];
  result.best_threshold = result.thresholds[idx];
  result.best_pr = result.pr_curve[idx];
  result.best_re = result.re_curve[idx];
  return result;
}

namespace {

bool attribute_evaluated(AttributeId id) {
  // No ground-truth box exists on fully-occluded or out-of-frame frames.
  return id != AttributeId::FO && id != AttributeId::OF;
}

}  // namespace

void AttributeOverlapAccumulator::add(std::span<const Prediction> preds,
                                      std::span<const GroundTruthEntry> gts,
                                      const attrs::AttributeTable& table) {
  check_aligned(preds, gts);
  if (table.frame_count() != gts.size()) {
    throw InputError("per_attribute_overlap: attribute table frame count mismatch");
  }
  for (AttributeId id : kAllAttributes) {
    if (!attribute_evaluated(id)) continue;
    auto& [sum, count] = sums[id];
    for (std::size_t t = 0; t < gts.size(); ++t) {
      if (!table.get(id, t) || !gts[t].is_present()) continue;
      sum += iou(preds[t].box, gts[t].box());
      ++count;
    }
  }
}

std::map<AttributeId, double> AttributeOverlapAccumulator::means() const {
  std::map<AttributeId, double> out;
  for (const auto& [id, sc] : sums) {
    if (sc.second > 0) out[id] = sc.first / static_cast<double>(sc.second);
  }
  return out;
}

std::map<AttributeId, double> per_attribute_overlap(std::span<const Prediction> preds,
                                                    std::span<const GroundTruthEntry> gts,
                                                    const attrs::AttributeTable& table) {
  AttributeOverlapAccumulator acc;
  acc.add(preds, gts, table);
  return acc.means();
}

}  // namespace rgbdtrack::metrics

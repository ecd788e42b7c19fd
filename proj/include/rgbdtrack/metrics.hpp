#pragma once

#include <map>
#include <span>
#include <vector>

#include "rgbdtrack/attribute_id.hpp"
#include "rgbdtrack/attributes.hpp"
#include "rgbdtrack/geometry.hpp"

namespace rgbdtrack::metrics {

/// Intersection-over-union of two boxes; 0 when disjoint.
double iou(const BoundingBox& a, const BoundingBox& b);

/// A prediction counts as made when its confidence clears the threshold.
/// Confidence <= 0 is the explicit target-absent signal and is withheld at
/// every threshold.
inline bool prediction_retained(double confidence, double tau) {
  return confidence > 0.0 && confidence >= tau;
}

/// Mean overlap over frames with a retained prediction; overlap against an
/// absent target counts as 0. Returns 0 when nothing is retained.
/// Unannotated ground-truth entries are rejected (exclude them upstream).
double precision(std::span<const Prediction> preds, std::span<const GroundTruthEntry> gts,
                 double tau);

/// Mean overlap over frames where the target is visible; withheld predictions
/// contribute 0. Returns 0 when no frame is visible.
double recall(std::span<const Prediction> preds, std::span<const GroundTruthEntry> gts,
              double tau);

/// Harmonic mean of precision and recall; 0 when both are 0.
double f_measure(double pr, double re);

/// How per-sequence precision/recall combine across a dataset.
enum class Aggregation {
  SequenceAveraged,  // Pr/Re averaged over sequences, F of the averages
  FramePooled,       // frames pooled across sequences before averaging
};

struct EvalResult {
  Aggregation mode = Aggregation::SequenceAveraged;
  std::vector<double> thresholds;  // ascending
  std::vector<double> pr_curve;
  std::vector<double> re_curve;
  std::vector<double> f_curve;
  double best_f = 0.0;
  double best_threshold = 0.0;
  double best_pr = 0.0;
  double best_re = 0.0;
};

using PredictionRuns = std::vector<std::vector<Prediction>>;
using GroundTruthRuns = std::vector<std::vector<GroundTruthEntry>>;

/// Precision/recall across sequences at a single threshold.
std::pair<double, double> pr_re_at(const PredictionRuns& preds, const GroundTruthRuns& gts,
                                   double tau, Aggregation mode);

/// Sweeps the threshold over every distinct confidence plus a retain-all
/// sentinel. Pr/Re are piecewise constant between distinct confidences, so
/// the maximum over this grid is exact.
EvalResult sweep_thresholds(const PredictionRuns& preds, const GroundTruthRuns& gts,
                            Aggregation mode = Aggregation::SequenceAveraged);

/// Mean unfiltered overlap per attribute over frames carrying the attribute
/// with visible ground truth. FO and OF are excluded (no ground-truth box on
/// those frames); attributes with no qualifying frame are omitted.
std::map<AttributeId, double> per_attribute_overlap(std::span<const Prediction> preds,
                                                    std::span<const GroundTruthEntry> gts,
                                                    const attrs::AttributeTable& table);

/// Accumulator for pooling per-attribute overlap across sequences.
struct AttributeOverlapAccumulator {
  std::map<AttributeId, std::pair<double, std::int64_t>> sums;  // sum, count

  void add(std::span<const Prediction> preds, std::span<const GroundTruthEntry> gts,
           const attrs::AttributeTable& table);
  std::map<AttributeId, double> means() const;
};

}  // namespace rgbdtrack::metrics

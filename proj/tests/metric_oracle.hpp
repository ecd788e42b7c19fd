#pragma once

// Brute-force reference for the evaluation protocol: direct frame and
// threshold enumeration, written independently of the library implementation.

#include <algorithm>
#include <set>
#include <vector>

#include "rgbdtrack/geometry.hpp"
#include "rgbdtrack/metrics.hpp"
#include "rgbdtrack/nn/tensor.hpp"

namespace metric_oracle {

using rgbdtrack::BoundingBox;
using rgbdtrack::GroundTruthEntry;
using rgbdtrack::Prediction;

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double x0 = std::max(a.x, b.x);
  const double y0 = std::max(a.y, b.y);
  const double x1 = std::min(a.x + a.w, b.x + b.w);
  const double y1 = std::min(a.y + a.h, b.y + b.h);
  const double iw = x1 - x0;
  const double ih = y1 - y0;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

inline bool retained(double confidence, double tau) { return confidence > 0.0 && confidence >= tau; }

struct PrRe {
  double pr = 0.0;
  double re = 0.0;
};

inline PrRe sequence_pr_re(const std::vector<Prediction>& preds,
                           const std::vector<GroundTruthEntry>& gts, double tau) {
  double pr_sum = 0.0, re_sum = 0.0;
  long np = 0, ng = 0;
  for (std::size_t t = 0; t < preds.size(); ++t) {
    double omega = 0.0;
    if (retained(preds[t].confidence, tau) && gts[t].is_present()) {
      omega = iou(preds[t].box, gts[t].box());
    }
    if (retained(preds[t].confidence, tau)) {
      pr_sum += omega;
      ++np;
    }
    if (gts[t].is_present()) {
      re_sum += omega;
      ++ng;
    }
  }
  return {np == 0 ? 0.0 : pr_sum / np, ng == 0 ? 0.0 : re_sum / ng};
}

inline PrRe dataset_pr_re(const std::vector<std::vector<Prediction>>& preds,
                          const std::vector<std::vector<GroundTruthEntry>>& gts, double tau,
                          rgbdtrack::metrics::Aggregation mode) {
  if (mode == rgbdtrack::metrics::Aggregation::SequenceAveraged) {
    double pr = 0.0, re = 0.0;
    for (std::size_t s = 0; s < preds.size(); ++s) {
      const PrRe r = sequence_pr_re(preds[s], gts[s], tau);
      pr += r.pr;
      re += r.re;
    }
    return {pr / preds.size(), re / preds.size()};
  }
  double pr_sum = 0.0, re_sum = 0.0;
  long np = 0, ng = 0;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    for (std::size_t t = 0; t < preds[s].size(); ++t) {
      double omega = 0.0;
      if (retained(preds[s][t].confidence, tau) && gts[s][t].is_present()) {
        omega = iou(preds[s][t].box, gts[s][t].box());
      }
      if (retained(preds[s][t].confidence, tau)) {
        pr_sum += omega;
        ++np;
      }
      if (gts[s][t].is_present()) {
        re_sum += omega;
        ++ng;
      }
    }
  }
  return {np == 0 ? 0.0 : pr_sum / np, ng == 0 ? 0.0 : re_sum / ng};
}

inline double f_score(double pr, double re) { return pr + re == 0.0 ? 0.0 : 2 * pr * re / (pr + re); }

struct SweepOut {
  double best_f = 0.0;
  double best_tau = 0.0;
  std::vector<double> taus;
};

inline SweepOut sweep(const std::vector<std::vector<Prediction>>& preds,
                      const std::vector<std::vector<GroundTruthEntry>>& gts,
                      rgbdtrack::metrics::Aggregation mode) {
  std::set<double> taus;
  double min_conf = 0.0;
  for (const auto& run : preds) {
    for (const auto& p : run) {
      taus.insert(p.confidence);
      min_conf = std::min(min_conf, p.confidence);
    }
  }
  taus.insert(min_conf - 1.0);
  SweepOut out;
  bool first = true;
  for (double tau : taus) {
    const PrRe r = dataset_pr_re(preds, gts, tau, mode);
    const double f = f_score(r.pr, r.re);
    out.taus.push_back(tau);
    if (first || f > out.best_f) {
      out.best_f = f;
      out.best_tau = tau;
      first = false;
    }
  }
  return out;
}

struct MicroInstance {
  std::vector<std::vector<Prediction>> preds;
  std::vector<std::vector<GroundTruthEntry>> gts;
};

/// Randomized micro-instance: up to 5 sequences of up to 20 frames with
/// absent targets, tied confidences and explicit zero-confidence frames.
inline MicroInstance random_instance(rgbdtrack::nn::Rng& rng) {
  MicroInstance inst;
  const int sequences = 1 + static_cast<int>(rng.uniform() * 5);
  for (int s = 0; s < sequences; ++s) {
    const int frames = 1 + static_cast<int>(rng.uniform() * 20);
    std::vector<Prediction> preds;
    std::vector<GroundTruthEntry> gts;
    for (int t = 0; t < frames; ++t) {
      const BoundingBox pred_box(rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 30),
                                 rng.uniform(1, 30));
      double conf;
      const double pick = rng.uniform();
      if (pick < 0.15) {
        conf = 0.0;
      } else if (pick < 0.45) {
        conf = std::array<double, 3>{0.2, 0.5, 0.8}[static_cast<int>(rng.uniform() * 3)];
      } else {
        conf = rng.uniform(0.01, 1.0);
      }
      preds.emplace_back(pred_box, conf);
      if (rng.uniform() < 0.25) {
        gts.push_back(GroundTruthEntry::absent());
      } else {
        gts.push_back(GroundTruthEntry::present(BoundingBox(
            rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 30), rng.uniform(1, 30))));
      }
    }
    inst.preds.push_back(std::move(preds));
    inst.gts.push_back(std::move(gts));
  }
  return inst;
}

}  // namespace metric_oracle

#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "rgbdtrack/net/model.hpp"
#include "rgbdtrack/synth.hpp"

namespace rgbdtrack::net {

struct TrainingPair {
  nn::Tensor rgb_template, depth_template;  // [3,r,r]
  nn::Tensor rgb_search, depth_search;      // [3,R,R]
  std::array<double, 4> target_box{};       // (x,y,w,h) normalized to the search crop
};

/// One optimizer update on the mean box loss over the batch; returns the
/// pre-update loss. Throws TrainingError when the loss turns non-finite.
double training_step(TrackerModel& model, std::span<const TrainingPair> batch, nn::Adam& optimizer);

/// Mean IoU between predicted and target boxes in crop coordinates.
double mean_training_iou(const TrackerModel& model, std::span<const TrainingPair> batch);

struct FitReport {
  std::vector<double> losses;
  double mean_iou = 0.0;
};

FitReport fit(TrackerModel& model, std::span<const TrainingPair> pairs, int steps,
              const nn::AdamConfig& adam,
              const std::function<void(int, double)>& on_step = nullptr);

/// Template/search crop pairs cut from generated sequences: the template from
/// the first visible frame, searches from later visible frames with a
/// deterministic center jitter.
std::vector<TrainingPair> make_training_pairs(const std::vector<synth::SynthConfig>& configs,
                                              const NetConfig& net_cfg, int pairs_per_sequence,
                                              std::uint64_t seed);

/// Default learning rate: the published setting for the paper profile, a
/// desk-scale setting for the toy profile.
double default_learning_rate(Profile profile);

}  // namespace rgbdtrack::net

#include "rgbdtrack/net/train.hpp"

#include <algorithm>
#include <cmath>

#include "rgbdtrack/tracker.hpp"

namespace rgbdtrack::net {

double default_learning_rate(Profile profile) {
  return profile == Profile::Paper ? 1e-5 : 1e-3;
}

namespace {

double iou_xywh(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  const double aw = std::max(a[2], 0.0), ah = std::max(a[3], 0.0);
  const double bw = std::max(b[2], 0.0), bh = std::max(b[3], 0.0);
  const double ix = std::min(a[0] + aw, b[0] + bw) - std::max(a[0], b[0]);
  const double iy = std::min(a[1] + ah, b[1] + bh) - std::max(a[1], b[1]);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = aw * ah + bw * bh - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

nn::Var pair_loss(const TrackerModel& model, const TrainingPair& pair) {
  const auto fwd = model.forward(nn::constant(pair.rgb_template),
                                 nn::constant(pair.depth_template),
                                 nn::constant(pair.rgb_search), nn::constant(pair.depth_search));
  auto gt = nn::constant(nn::Tensor::from(
      {1, 4}, {pair.target_box[0], pair.target_box[1], pair.target_box[2], pair.target_box[3]}));
  return box_loss_graph(fwd.box_norm, gt, model.config().lambda_iou, model.config().lambda_l1,
                        model.config().generalized_iou);
}

}  // namespace

double training_step(TrackerModel& model, std::span<const TrainingPair> batch,
                     nn::Adam& optimizer) {
  if (batch.empty()) throw InputError("training_step: empty batch");
  model.params().zero_grad();
  std::vector<nn::Var> losses;
  losses.reserve(batch.size());
  for (const auto& pair : batch) losses.push_back(pair_loss(model, pair));
  auto total = nn::scale(nn::add_n(losses), 1.0 / static_cast<double>(batch.size()));
  const double loss = total->value.item();
  if (!std::isfinite(loss)) {
    throw TrainingError("training_step: non-finite loss (" + std::to_string(loss) + ") over " +
                        std::to_string(batch.size()) + " pairs");
  }
  nn::backward(total);
  optimizer.step();
  return loss;
}

double mean_training_iou(const TrackerModel& model, std::span<const TrainingPair> batch) {
  if (batch.empty()) throw InputError("mean_training_iou: empty batch");
  double total = 0.0;
  for (const auto& pair : batch) {
    const auto fwd = model.forward(nn::constant(pair.rgb_template),
                                   nn::constant(pair.depth_template),
                                   nn::constant(pair.rgb_search), nn::constant(pair.depth_search));
    const auto& b = fwd.box_norm->value;
    total += iou_xywh({b[0], b[1], b[2], b[3]}, pair.target_box);
  }
  return total / static_cast<double>(batch.size());
}

FitReport fit(TrackerModel& model, std::span<const TrainingPair> pairs, int steps,
              const nn::AdamConfig& adam, const std::function<void(int, double)>& on_step) {
  std::vector<nn::Var> params;
  for (const auto& [name, var] : model.params().all()) params.push_back(var);
  nn::Adam optimizer(std::move(params), adam);
  FitReport report;
  report.losses.reserve(steps);
  for (int s = 0; s < steps; ++s) {
    const double loss = training_step(model, pairs, optimizer);
    report.losses.push_back(loss);
    if (on_step) on_step(s, loss);
  }
  report.mean_iou = mean_training_iou(model, pairs);
  return report;
}

std::vector<TrainingPair> make_training_pairs(const std::vector<synth::SynthConfig>& configs,
                                              const NetConfig& net_cfg, int pairs_per_sequence,
                                              std::uint64_t seed) {
  if (pairs_per_sequence <= 0) throw InputError("make_training_pairs: need a positive pair count");
  nn::Rng rng(seed);
  std::vector<TrainingPair> pairs;
  for (const auto& cfg : configs) {
    const synth::GeneratedSequence seq = synth::generate_sequence(cfg);
    std::vector<std::size_t> visible_frames;
    for (std::size_t t = 0; t < seq.groundtruth.size(); ++t) {
      if (seq.groundtruth[t].is_present()) visible_frames.push_back(t);
    }
    if (visible_frames.size() < 2) {
      throw ConfigError(cfg.id + ": need at least two visible frames for training pairs");
    }
    const std::size_t template_frame = visible_frames.front();
    const BoundingBox template_box = seq.groundtruth[template_frame].box();
    const auto template_geom =
        track::centered_crop(template_box, 2.0, net_cfg.template_resolution);
    const nn::Tensor rgb_tpl =
        track::rgb_crop_tensor(track::extract_rgb_crop(seq.rgb[template_frame], template_geom));
    const nn::Tensor depth_tpl = track::depth_crop_tensor(
        track::extract_depth_crop(seq.depth[template_frame], template_geom));

    for (int k = 0; k < pairs_per_sequence; ++k) {
      const std::size_t pick = 1 + static_cast<std::size_t>(
          rng.uniform() * static_cast<double>(visible_frames.size() - 1));
      const std::size_t frame = visible_frames[std::min(pick, visible_frames.size() - 1)];
      const BoundingBox gt = seq.groundtruth[frame].box();
      auto geom = track::centered_crop(gt, 5.0, net_cfg.search_resolution);
      // deterministic center jitter keeps the localization task non-trivial
      geom.center_x += rng.uniform(-0.15, 0.15) * geom.side;
      geom.center_y += rng.uniform(-0.15, 0.15) * geom.side;
      TrainingPair pair;
      pair.rgb_template = rgb_tpl;
      pair.depth_template = depth_tpl;
      pair.rgb_search = track::rgb_crop_tensor(track::extract_rgb_crop(seq.rgb[frame], geom));
      pair.depth_search =
          track::depth_crop_tensor(track::extract_depth_crop(seq.depth[frame], geom));
      pair.target_box = track::box_in_crop_norm(gt, geom);
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

}  // namespace rgbdtrack::net

// Command-line surface: dataset validation, synthetic dataset generation,
// tracking, evaluation, report rendering and desk-scale training.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rgbdtrack/dataset.hpp"
#include "rgbdtrack/evaluate.hpp"
#include "rgbdtrack/net/checkpoint.hpp"
#include "rgbdtrack/net/train.hpp"
#include "rgbdtrack/synth.hpp"
#include "rgbdtrack/tracker.hpp"

namespace fs = std::filesystem;
using namespace rgbdtrack;
using nlohmann::json;

namespace {

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

int cmd_validate(const fs::path& root) {
  const auto report = io::validate_dataset(root);
  for (const auto& e : report.entries) {
    std::cout << e.sequence << '\t' << e.check << '\t' << (e.passed ? "PASS" : "FAIL");
    if (!e.detail.empty()) std::cout << '\t' << e.detail;
    std::cout << '\n';
  }
  const auto failures = report.failures();
  std::cout << (failures.empty() ? "validation passed" : "validation FAILED") << " ("
            << report.entries.size() - failures.size() << "/" << report.entries.size()
            << " checks)\n";
  return failures.empty() ? 0 : 1;
}

synth::SynthConfig sequence_from_json(const json& j) {
  synth::SynthConfig cfg;
  cfg.id = j.at("id").get<std::string>();
  cfg.seed = j.value("seed", 1ULL);
  cfg.frame_width = j.value("frame_width", cfg.frame_width);
  cfg.frame_height = j.value("frame_height", cfg.frame_height);
  cfg.frame_count = j.value("frame_count", cfg.frame_count);
  for (const auto& w : j.at("trajectory")) {
    cfg.trajectory.push_back({w.at(0).get<int>(), w.at(1).get<double>(), w.at(2).get<double>()});
  }
  for (const auto& s : j.at("size_schedule")) {
    cfg.size_schedule.push_back({s.at(0).get<int>(), s.at(1).get<double>(), s.at(2).get<double>()});
  }
  auto intervals = [](const json& arr) {
    std::vector<synth::Interval> out;
    for (const auto& iv : arr) out.push_back({iv.at(0).get<int>(), iv.at(1).get<int>()});
    return out;
  };
  if (j.contains("full_occlusion")) cfg.full_occlusion = intervals(j["full_occlusion"]);
  if (j.contains("partial_occlusion")) cfg.partial_occlusion = intervals(j["partial_occlusion"]);
  if (j.contains("out_of_frame")) cfg.out_of_frame = intervals(j["out_of_frame"]);
  if (j.contains("target_depth")) {
    for (const auto& d : j["target_depth"]) {
      cfg.target_depth.push_back({d.at(0).get<int>(), d.at(1).get<double>()});
    }
  }
  cfg.target_depth_mm = j.value("target_depth_mm", cfg.target_depth_mm);
  cfg.background_depth_mm = j.value("background_depth_mm", cfg.background_depth_mm);
  cfg.depth_jitter_mm = j.value("depth_jitter_mm", cfg.depth_jitter_mm);
  cfg.depth_dropout = j.value("depth_dropout", cfg.depth_dropout);
  cfg.distractor_count = j.value("distractor_count", cfg.distractor_count);
  cfg.annotated_prefix = j.value("annotated_prefix", cfg.annotated_prefix);
  return cfg;
}

int cmd_synth(const fs::path& config_path, const fs::path& root) {
  const json cfg = load_json(config_path);
  io::Split split = cfg.value("split", std::string("test")) == "train" ? io::Split::Train
                                                                       : io::Split::Test;
  std::vector<synth::SynthConfig> sequences;
  if (cfg.contains("sequences")) {
    for (const auto& s : cfg["sequences"]) sequences.push_back(sequence_from_json(s));
  } else {
    sequences = synth::make_default_configs(cfg.value("default_count", 5),
                                            cfg.value("base_seed", 1ULL));
  }
  synth::write_synth_dataset(sequences, root, split);
  std::cout << "wrote " << sequences.size() << " sequences under " << root.string() << "/"
            << io::split_dir(split) << "\n";
  return 0;
}

std::unique_ptr<track::Tracker> make_tracker(const std::string& model_spec,
                                             const SequenceRecord& seq,
                                             std::shared_ptr<net::TrackerModel>& cache) {
  if (model_spec == "oracle") {
    return std::make_unique<track::OracleTracker>(seq.groundtruth);
  }
  if (!cache) {
    cache = std::make_shared<net::TrackerModel>(net::load_checkpoint(model_spec));
  }
  return std::make_unique<track::OnlineTracker>(std::make_shared<track::NetCornerPredictor>(cache));
}

int cmd_track(const std::string& model_spec, const fs::path& root, const fs::path& out,
              const std::string& split_name) {
  const io::Split split = split_name == "train" ? io::Split::Train : io::Split::Test;
  const auto ids = io::list_sequences(root, split);
  if (ids.empty()) throw LoadError("no sequences under " + root.string());
  std::shared_ptr<net::TrackerModel> model;
  for (const auto& id : ids) {
    const auto seq = io::load_sequence(root / io::split_dir(split) / id);
    auto tracker = make_tracker(model_spec, seq, model);
    const auto preds = track::run_sequence(*tracker, seq);
    io::write_results(out / (id + ".txt"), preds);
    std::cout << id << '\t' << preds.size() << " frames\n";
  }
  return 0;
}

int cmd_evaluate(const fs::path& results, const fs::path& root, const std::string& mode_name,
                 const std::string& name, fs::path bundle_out) {
  const auto mode = mode_name == "frame_pooled" ? metrics::Aggregation::FramePooled
                                                : metrics::Aggregation::SequenceAveraged;
  eval::ReportBundle bundle;
  bundle.trackers.push_back(eval::evaluate_dataset(results, root, mode, name));
  if (bundle_out.empty()) bundle_out = results / "report_bundle.json";
  eval::save_bundle(bundle, bundle_out);
  std::cout << eval::render_summary(bundle) << '\n'
            << eval::render_attribute_table(bundle) << "bundle: " << bundle_out.string() << "\n";
  return 0;
}

int cmd_report(const std::vector<fs::path>& bundles, const fs::path& out_dir) {
  eval::ReportBundle merged;
  for (const auto& b : bundles) {
    const auto bundle = eval::load_bundle(b);
    merged.trackers.insert(merged.trackers.end(), bundle.trackers.begin(), bundle.trackers.end());
  }
  eval::write_report_tables(merged, out_dir);
  std::cout << eval::render_summary(merged) << '\n' << eval::render_attribute_table(merged);
  std::cout << "tables written to " << out_dir.string() << "\n";
  return 0;
}

void apply_net_overrides(net::NetConfig& cfg, const json& j) {
  if (j.contains("backbone")) cfg.backbone = net::backbone_from_string(j["backbone"]);
  cfg.channels = j.value("channels", cfg.channels);
  cfg.heads = j.value("heads", cfg.heads);
  cfg.ffn_width = j.value("ffn_width", cfg.ffn_width);
  cfg.encoder_layers = j.value("encoder_layers", cfg.encoder_layers);
  cfg.fusion_layers = j.value("fusion_layers", cfg.fusion_layers);
  cfg.decoder_layers = j.value("decoder_layers", cfg.decoder_layers);
  cfg.search_resolution = j.value("search_resolution", cfg.search_resolution);
  cfg.template_resolution = j.value("template_resolution", cfg.template_resolution);
  if (j.contains("fusion_variant")) cfg.fusion_variant = net::fusion_from_string(j["fusion_variant"]);
  cfg.positional_embeddings = j.value("positional_embeddings", cfg.positional_embeddings);
  cfg.lambda_iou = j.value("lambda_iou", cfg.lambda_iou);
  cfg.lambda_l1 = j.value("lambda_l1", cfg.lambda_l1);
  cfg.generalized_iou = j.value("generalized_iou", cfg.generalized_iou);
}

int cmd_train(const fs::path& config_path) {
  const json cfg_json = load_json(config_path);
  net::NetConfig cfg = cfg_json.value("profile", std::string("toy")) == "paper"
                           ? net::NetConfig::paper()
                           : net::NetConfig::toy();
  if (cfg_json.contains("net")) apply_net_overrides(cfg, cfg_json["net"]);
  cfg.validate();

  const auto seed = cfg_json.value("seed", 7ULL);
  const int steps = cfg_json.value("steps", 500);
  const int sequences = cfg_json.value("sequences", 4);
  const int pairs_per_sequence = cfg_json.value("pairs_per_sequence", 5);
  const double lr = cfg_json.value("learning_rate", net::default_learning_rate(cfg.profile));
  const int log_every = cfg_json.value("log_every", 25);
  const fs::path output = cfg_json.value("output", std::string("model.ckpt"));

  net::TrackerModel model(cfg, seed);
  const auto pairs = net::make_training_pairs(synth::make_default_configs(sequences, seed + 1),
                                              cfg, pairs_per_sequence, seed + 2);
  std::cout << "training on " << pairs.size() << " pairs, " << steps << " steps, lr " << lr
            << "\n";
  const auto report = net::fit(model, pairs, steps, {.lr = lr}, [&](int step, double loss) {
    if (step % log_every == 0 || step == steps - 1) {
      std::cout << "step " << step << "\tloss " << loss << "\n";
    }
  });
  std::cout << "mean training IoU " << report.mean_iou << "\n";
  net::save_checkpoint(model, output);
  std::cout << "checkpoint: " << output.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale RGB-D tracking toolkit"};
  app.require_subcommand(1);

  std::string root, results, out, config, model_spec;
  std::string split = "test", mode = "sequence_averaged", name = "tracker";
  std::string bundle_out;
  std::vector<std::string> bundles;

  auto* validate = app.add_subcommand("validate", "check a dataset tree");
  validate->add_option("root", root, "dataset root")->required();

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("config", config, "synthesis config (json)")->required();
  synth_cmd->add_option("root", root, "output dataset root")->required();

  auto* track_cmd = app.add_subcommand("track", "run a tracker over a dataset split");
  track_cmd->add_option("model", model_spec, "checkpoint path or 'oracle'")->required();
  track_cmd->add_option("root", root, "dataset root")->required();
  track_cmd->add_option("out", out, "results directory")->required();
  track_cmd->add_option("--split", split, "train or test")->capture_default_str();

  auto* eval_cmd = app.add_subcommand("evaluate", "score tracker results");
  eval_cmd->add_option("results", results, "results directory")->required();
  eval_cmd->add_option("root", root, "dataset root")->required();
  eval_cmd->add_option("--mode", mode, "sequence_averaged or frame_pooled")->capture_default_str();
  eval_cmd->add_option("--name", name, "tracker name")->capture_default_str();
  eval_cmd->add_option("--out", bundle_out, "bundle output path");

  auto* report_cmd = app.add_subcommand("report", "render tables from report bundles");
  report_cmd->add_option("bundle", bundles, "bundle json file(s)")->required();
  report_cmd->add_option("out", out, "output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "train the tracker on synthetic pairs");
  train_cmd->add_option("config", config, "training config (json)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(root);
    if (synth_cmd->parsed()) return cmd_synth(config, root);
    if (track_cmd->parsed()) return cmd_track(model_spec, root, out, split);
    if (eval_cmd->parsed()) return cmd_evaluate(results, root, mode, name, bundle_out);
    if (report_cmd->parsed()) {
      std::vector<fs::path> paths(bundles.begin(), bundles.end());
      return cmd_report(paths, out);
    }
    if (train_cmd->parsed()) return cmd_train(config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

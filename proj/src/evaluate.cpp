#include "rgbdtrack/evaluate.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rgbdtrack::eval {

TrackerReport evaluate_dataset(const fs::path& results_root, const fs::path& dataset_root,
                               metrics::Aggregation mode, const std::string& tracker_name) {
  const auto ids = io::list_sequences(dataset_root, io::Split::Test);
  if (ids.empty()) throw LoadError("no test sequences under " + dataset_root.string());

  metrics::PredictionRuns preds;
  metrics::GroundTruthRuns gts;
  metrics::AttributeOverlapAccumulator attr_acc;
  for (const auto& id : ids) {
    const auto seq = io::load_sequence(dataset_root / io::split_dir(io::Split::Test) / id);
    const fs::path result_file = results_root / (id + ".txt");
    if (!fs::exists(result_file)) {
      throw LoadError("missing result file for sequence '" + id + "': " + result_file.string());
    }
    auto run = io::read_results(result_file);
    if (run.size() != seq.frame_count()) {
      throw LoadError("sequence '" + id + "': " + std::to_string(run.size()) +
                      " predictions for " + std::to_string(seq.frame_count()) + " frames");
    }
    // evaluation operates on annotated frames only
    std::vector<Prediction> run_kept;
    std::vector<GroundTruthEntry> gt_kept;
    for (std::size_t t = 0; t < seq.frame_count(); ++t) {
      if (seq.groundtruth[t].is_unannotated()) continue;
      run_kept.push_back(run[t]);
      gt_kept.push_back(seq.groundtruth[t]);
    }
    if (seq.attributes && gt_kept.size() == seq.frame_count()) {
      attr_acc.add(run_kept, gt_kept, *seq.attributes);
    }
    preds.push_back(std::move(run_kept));
    gts.push_back(std::move(gt_kept));
  }

  TrackerReport report;
  report.tracker = tracker_name;
  report.dataset = dataset_root.filename().string();
  report.result = metrics::sweep_thresholds(preds, gts, mode);
  report.attribute_overlap = attr_acc.means();
  for (std::size_t s = 0; s < preds.size(); ++s) {
    SequenceScore score;
    score.id = ids[s];
    score.pr = metrics::precision(preds[s], gts[s], report.result.best_threshold);
    score.re = metrics::recall(preds[s], gts[s], report.result.best_threshold);
    score.f = metrics::f_measure(score.pr, score.re);
    report.per_sequence.push_back(score);
  }
  return report;
}

namespace {

nlohmann::json report_to_json(const TrackerReport& r) {
  nlohmann::json attrs = nlohmann::json::object();
  for (const auto& [id, v] : r.attribute_overlap) attrs[std::string(attribute_name(id))] = v;
  nlohmann::json seqs = nlohmann::json::array();
  for (const auto& s : r.per_sequence) {
    seqs.push_back({{"id", s.id}, {"pr", s.pr}, {"re", s.re}, {"f", s.f}});
  }
  return nlohmann::json{
      {"tracker", r.tracker},
      {"dataset", r.dataset},
      {"mode", r.result.mode == metrics::Aggregation::SequenceAveraged ? "sequence_averaged"
                                                                       : "frame_pooled"},
      {"pr", r.result.best_pr},
      {"re", r.result.best_re},
      {"f", r.result.best_f},
      {"best_threshold", r.result.best_threshold},
      {"thresholds", r.result.thresholds},
      {"pr_curve", r.result.pr_curve},
      {"re_curve", r.result.re_curve},
      {"f_curve", r.result.f_curve},
      {"attribute_overlap", attrs},
      {"per_sequence", seqs},
  };
}

TrackerReport report_from_json(const nlohmann::json& j) {
  TrackerReport r;
  r.tracker = j.at("tracker").get<std::string>();
  r.dataset = j.at("dataset").get<std::string>();
  r.result.mode = j.at("mode").get<std::string>() == "frame_pooled"
                      ? metrics::Aggregation::FramePooled
                      : metrics::Aggregation::SequenceAveraged;
  r.result.best_pr = j.at("pr").get<double>();
  r.result.best_re = j.at("re").get<double>();
  r.result.best_f = j.at("f").get<double>();
  r.result.best_threshold = j.at("best_threshold").get<double>();
  r.result.thresholds = j.at("thresholds").get<std::vector<double>>();
  r.result.pr_curve = j.at("pr_curve").get<std::vector<double>>();
  r.result.re_curve = j.at("re_curve").get<std::vector<double>>();
  r.result.f_curve = j.at("f_curve").get<std::vector<double>>();
  for (const auto& [key, value] : j.at("attribute_overlap").items()) {
    r.attribute_overlap[attribute_from_name(key)] = value.get<double>();
  }
  for (const auto& s : j.at("per_sequence")) {
    r.per_sequence.push_back({s.at("id").get<std::string>(), s.at("pr").get<double>(),
                              s.at("re").get<double>(), s.at("f").get<double>()});
  }
  return r;
}

void check_consistency(const TrackerReport& r, const std::string& where) {
  const double expected = metrics::f_measure(r.result.best_pr, r.result.best_re);
  if (std::abs(expected - r.result.best_f) > 1e-9) {
    throw ParseError(where + ": stored F does not equal f_measure(Pr, Re) for tracker '" +
                     r.tracker + "'");
  }
  for (const auto& s : r.per_sequence) {
    if (std::abs(metrics::f_measure(s.pr, s.re) - s.f) > 1e-9) {
      throw ParseError(where + ": per-sequence F mismatch in '" + s.id + "'");
    }
  }
}

}  // namespace

void save_bundle(const ReportBundle& bundle, const fs::path& file) {
  nlohmann::json j;
  j["version"] = 1;
  j["trackers"] = nlohmann::json::array();
  for (const auto& r : bundle.trackers) j["trackers"].push_back(report_to_json(r));
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw LoadError("cannot write bundle " + file.string());
  out << j.dump(2) << '\n';
}

ReportBundle load_bundle(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw LoadError("cannot open bundle " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
  ReportBundle bundle;
  for (const auto& r : j.at("trackers")) bundle.trackers.push_back(report_from_json(r));
  for (const auto& r : bundle.trackers) check_consistency(r, file.string());
  return bundle;
}

namespace {

std::string format3(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

}  // namespace

std::string render_summary(const ReportBundle& bundle) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "tracker" << std::setw(16) << "dataset" << std::setw(8)
     << "Pr" << std::setw(8) << "Re" << std::setw(8) << "F" << "tau*\n";
  for (const auto& r : bundle.trackers) {
    os << std::left << std::setw(20) << r.tracker << std::setw(16) << r.dataset << std::setw(8)
       << format3(r.result.best_pr) << std::setw(8) << format3(r.result.best_re) << std::setw(8)
       << format3(r.result.best_f) << r.result.best_threshold << '\n';
  }
  return os.str();
}

std::string render_attribute_table(const ReportBundle& bundle) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "attribute";
  for (const auto& r : bundle.trackers) os << std::setw(20) << r.tracker;
  os << '\n';
  for (AttributeId id : kAllAttributes) {
    if (id == AttributeId::FO || id == AttributeId::OF) continue;
    bool any = false;
    for (const auto& r : bundle.trackers) any = any || r.attribute_overlap.count(id);
    if (!any) continue;
    os << std::left << std::setw(10) << attribute_name(id);
    for (const auto& r : bundle.trackers) {
      const auto it = r.attribute_overlap.find(id);
      os << std::setw(20) << (it == r.attribute_overlap.end() ? "-" : format3(it->second));
    }
    os << '\n';
  }
  return os.str();
}

void write_report_tables(const ReportBundle& bundle, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "summary.tsv");
    out << "tracker\tdataset\tmode\tpr\tre\tf\tbest_threshold\n";
    for (const auto& r : bundle.trackers) {
      out << r.tracker << '\t' << r.dataset << '\t'
          << (r.result.mode == metrics::Aggregation::SequenceAveraged ? "sequence_averaged"
                                                                      : "frame_pooled")
          << '\t' << r.result.best_pr << '\t' << r.result.best_re << '\t' << r.result.best_f
          << '\t' << r.result.best_threshold << '\n';
    }
  }
  {
    // plot data for per-attribute mean-overlap bar charts
    std::ofstream out(out_dir / "attribute_overlap.tsv");
    out << "attribute";
    for (const auto& r : bundle.trackers) out << '\t' << r.tracker;
    out << '\n';
    for (AttributeId id : kAllAttributes) {
      if (id == AttributeId::FO || id == AttributeId::OF) continue;
      out << attribute_name(id);
      for (const auto& r : bundle.trackers) {
        const auto it = r.attribute_overlap.find(id);
        out << '\t';
        if (it != r.attribute_overlap.end()) {
          out << it->second;
        } else {
          out << "nan";
        }
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(out_dir / "per_sequence.tsv");
    out << "tracker\tsequence\tpr\tre\tf\n";
    for (const auto& r : bundle.trackers) {
      for (const auto& s : r.per_sequence) {
        out << r.tracker << '\t' << s.id << '\t' << s.pr << '\t' << s.re << '\t' << s.f << '\n';
      }
    }
  }
}

}  // namespace rgbdtrack::eval

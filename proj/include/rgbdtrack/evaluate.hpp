#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rgbdtrack/dataset.hpp"
#include "rgbdtrack/metrics.hpp"

namespace rgbdtrack::eval {

namespace fs = std::filesystem;

struct SequenceScore {
  std::string id;
  double pr = 0.0, re = 0.0, f = 0.0;  // at the dataset-level best threshold
};

struct TrackerReport {
  std::string tracker;
  std::string dataset;
  metrics::EvalResult result;
  std::map<AttributeId, double> attribute_overlap;
  std::vector<SequenceScore> per_sequence;
};

struct ReportBundle {
  std::vector<TrackerReport> trackers;
};

/// Evaluates one tracker's result files against the test split: threshold
/// sweep plus per-attribute overlap pooled over sequences that carry
/// attribute tables. Throws when a sequence lacks a result file.
TrackerReport evaluate_dataset(const fs::path& results_root, const fs::path& dataset_root,
                               metrics::Aggregation mode, const std::string& tracker_name);

void save_bundle(const ReportBundle& bundle, const fs::path& file);
/// Loads and revalidates (every stored F must equal f_measure(Pr, Re)).
ReportBundle load_bundle(const fs::path& file);

/// summary.tsv (tracker, pr, re, f, threshold) and attribute_overlap.tsv
/// (attribute x tracker plot data).
void write_report_tables(const ReportBundle& bundle, const fs::path& out_dir);

std::string render_summary(const ReportBundle& bundle);
std::string render_attribute_table(const ReportBundle& bundle);

}  // namespace rgbdtrack::eval

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "rgbdtrack/attributes.hpp"
#include "rgbdtrack/geometry.hpp"
#include "rgbdtrack/sequence.hpp"

namespace rgbdtrack::io {

namespace fs = std::filesystem;

// On-disk layout:
//   root/<split>/<sequence>/rgb/00000001.jpg      8-bit, 3 channels
//   root/<split>/<sequence>/depth/00000001.png    16-bit, millimeters, 0 = missing
//   root/<split>/<sequence>/groundtruth.txt       one line per frame
//   root/<split>/<sequence>/attributes.csv        optional, 15 rows x N columns
//
// Ground-truth lines: "x,y,w,h"; "nan,nan,nan,nan" marks target absence; an
// empty line marks an unannotated frame (training tail).

enum class Split { Train, Test };

std::string_view split_dir(Split split);

std::string frame_filename(std::size_t index_one_based, std::string_view extension);

std::vector<GroundTruthEntry> read_groundtruth(const fs::path& file);
void write_groundtruth(const fs::path& file, std::span<const GroundTruthEntry> entries);

std::vector<Prediction> read_results(const fs::path& file);
void write_results(const fs::path& file, std::span<const Prediction> predictions);

attrs::AttributeTable read_attribute_table(const fs::path& file);
void write_attribute_table(const fs::path& file, const attrs::AttributeTable& table);

/// Loads a sequence directory; frames stay on disk and are loaded on demand.
SequenceRecord load_sequence(const fs::path& sequence_dir);

std::vector<std::string> list_sequences(const fs::path& root, Split split);
std::vector<SequenceRecord> load_split(const fs::path& root, Split split);

cv::Mat load_rgb_frame(const SequenceRecord& seq, std::size_t frame);    // 8UC3
cv::Mat load_depth_frame(const SequenceRecord& seq, std::size_t frame);  // 16UC1

attrs::DepthView depth_view(const cv::Mat& depth16);

/// Per-frame target depth means for a whole sequence (nullopt where the
/// target is not present or no valid depth pixel falls inside the box).
std::vector<std::optional<double>> sequence_depth_means(const SequenceRecord& seq);

struct ValidationEntry {
  std::string sequence;  // "<split>/<id>"
  std::string check;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;

  bool all_passed() const;
  std::vector<ValidationEntry> failures() const;
};

/// Structural checks over every sequence found under root; failures become
/// report entries rather than errors.
ValidationReport validate_dataset(const fs::path& root);

}  // namespace rgbdtrack::io

#include "rgbdtrack/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

namespace rgbdtrack::io {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token, const fs::path& file, std::size_t line_no) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    throw ParseError(file.string() + ":" + std::to_string(line_no) + ": bad number '" +
                     std::string(token) + "'");
  }
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::vector<std::string> read_lines(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw LoadError("cannot open " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

void write_text(const fs::path& file, const std::string& contents) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw LoadError("cannot write " + file.string());
  out << contents;
  if (!out) throw LoadError("write failed for " + file.string());
}

bool is_nan_token(std::string_view token) {
  if (token.size() != 3) return false;
  auto lower = [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); };
  return lower(token[0]) == 'n' && lower(token[1]) == 'a' && lower(token[2]) == 'n';
}

}  // namespace

std::string_view split_dir(Split split) { return split == Split::Train ? "train" : "test"; }

std::string frame_filename(std::size_t index_one_based, std::string_view extension) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%08zu", index_one_based);
  return std::string(buf) + "." + std::string(extension);
}

std::vector<GroundTruthEntry> read_groundtruth(const fs::path& file) {
  const auto lines = read_lines(file);
  std::vector<GroundTruthEntry> entries;
  entries.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = strip_cr(lines[i]);
    const std::size_t line_no = i + 1;
    if (line.empty()) {
      entries.push_back(GroundTruthEntry::unannotated());
      continue;
    }
    const auto fields = split_csv(line);
    if (fields.size() != 4) {
      throw ParseError(file.string() + ":" + std::to_string(line_no) +
                       ": expected 4 fields, got " + std::to_string(fields.size()));
    }
    const bool any_nan = std::any_of(fields.begin(), fields.end(), is_nan_token);
    if (any_nan) {
      if (!std::all_of(fields.begin(), fields.end(), is_nan_token)) {
        throw ParseError(file.string() + ":" + std::to_string(line_no) +
                         ": mixed nan and numeric fields");
      }
      entries.push_back(GroundTruthEntry::absent());
      continue;
    }
    const double x = parse_double(fields[0], file, line_no);
    const double y = parse_double(fields[1], file, line_no);
    const double w = parse_double(fields[2], file, line_no);
    const double h = parse_double(fields[3], file, line_no);
    if (!(std::isfinite(x) && std::isfinite(y)) || !(w > 0.0) || !(h > 0.0) ||
        !std::isfinite(w) || !std::isfinite(h)) {
      throw ParseError(file.string() + ":" + std::to_string(line_no) + ": invalid box");
    }
    entries.push_back(GroundTruthEntry::present(BoundingBox(x, y, w, h)));
  }
  return entries;
}

void write_groundtruth(const fs::path& file, std::span<const GroundTruthEntry> entries) {
  std::ostringstream out;
  for (const auto& e : entries) {
    switch (e.state()) {
      case AnnotationState::Present: {
        const auto& b = e.box();
        out << format_double(b.x) << ',' << format_double(b.y) << ',' << format_double(b.w) << ','
            << format_double(b.h) << '\n';
        break;
      }
      case AnnotationState::Absent:
        out << "nan,nan,nan,nan\n";
        break;
      case AnnotationState::Unannotated:
        out << '\n';
        break;
    }
  }
  write_text(file, out.str());
}

std::vector<Prediction> read_results(const fs::path& file) {
  const auto lines = read_lines(file);
  std::vector<Prediction> preds;
  preds.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = strip_cr(lines[i]);
    const std::size_t line_no = i + 1;
    if (line.empty()) {
      throw ParseError(file.string() + ":" + std::to_string(line_no) +
                       ": empty line (results carry a prediction on every frame)");
    }
    const auto fields = split_csv(line);
    if (fields.size() != 5) {
      throw ParseError(file.string() + ":" + std::to_string(line_no) +
                       ": expected 5 fields, got " + std::to_string(fields.size()));
    }
    const double x = parse_double(fields[0], file, line_no);
    const double y = parse_double(fields[1], file, line_no);
    const double w = parse_double(fields[2], file, line_no);
    const double h = parse_double(fields[3], file, line_no);
    const double conf = parse_double(fields[4], file, line_no);
    try {
      preds.emplace_back(BoundingBox(x, y, w, h), conf);
    } catch (const InputError& e) {
      throw ParseError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return preds;
}

void write_results(const fs::path& file, std::span<const Prediction> predictions) {
  std::ostringstream out;
  for (const auto& p : predictions) {
    out << format_double(p.box.x) << ',' << format_double(p.box.y) << ','
        << format_double(p.box.w) << ',' << format_double(p.box.h) << ','
        << format_double(p.confidence) << '\n';
  }
  write_text(file, out.str());
}

attrs::AttributeTable read_attribute_table(const fs::path& file) {
  const auto lines = read_lines(file);
  std::vector<std::pair<AttributeId, std::vector<bool>>> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = strip_cr(lines[i]);
    if (line.empty()) continue;
    const std::size_t line_no = i + 1;
    const auto fields = split_csv(line);
    const AttributeId id = attribute_from_name(fields[0]);
    std::vector<bool> values;
    values.reserve(fields.size() - 1);
    for (std::size_t f = 1; f < fields.size(); ++f) {
      if (fields[f] == "0") {
        values.push_back(false);
      } else if (fields[f] == "1") {
        values.push_back(true);
      } else {
        throw ParseError(file.string() + ":" + std::to_string(line_no) + ": expected 0 or 1, got '" +
                         std::string(fields[f]) + "'");
      }
    }
    rows.emplace_back(id, std::move(values));
  }
  if (rows.size() != kAttributeCount) {
    throw ParseError(file.string() + ": expected " + std::to_string(kAttributeCount) +
                     " attribute rows, got " + std::to_string(rows.size()));
  }
  std::array<bool, kAttributeCount> seen{};
  const std::size_t n = rows.front().second.size();
  attrs::AttributeTable table(n);
  for (const auto& [id, values] : rows) {
    if (seen[static_cast<std::size_t>(id)]) {
      throw ParseError(file.string() + ": duplicate row for " + std::string(attribute_name(id)));
    }
    seen[static_cast<std::size_t>(id)] = true;
    if (values.size() != n) {
      throw ParseError(file.string() + ": row " + std::string(attribute_name(id)) + " has " +
                       std::to_string(values.size()) + " columns, expected " + std::to_string(n));
    }
    for (std::size_t f = 0; f < n; ++f) table.set(id, f, values[f]);
  }
  try {
    table.check_invariants();
  } catch (const InputError& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
  return table;
}

void write_attribute_table(const fs::path& file, const attrs::AttributeTable& table) {
  table.check_invariants();
  std::ostringstream out;
  for (AttributeId id : kAllAttributes) {
    out << attribute_name(id);
    for (std::size_t f = 0; f < table.frame_count(); ++f) {
      out << ',' << (table.get(id, f) ? '1' : '0');
    }
    out << '\n';
  }
  write_text(file, out.str());
}

namespace {

std::vector<fs::path> list_frames(const fs::path& dir, std::string_view extension,
                                  const std::string& context) {
  if (!fs::is_directory(dir)) throw LoadError(context + ": missing directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() == "." + std::string(extension)) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  // zero-padded, strictly increasing frame numbers
  std::size_t width = 0;
  long long prev = -1;
  for (const auto& f : files) {
    const std::string stem = f.stem().string();
    if (stem.empty() || !std::all_of(stem.begin(), stem.end(),
                                     [](unsigned char c) { return std::isdigit(c); })) {
      throw LoadError(context + ": non-numeric frame name " + f.filename().string());
    }
    if (width == 0) width = stem.size();
    if (stem.size() != width) {
      throw LoadError(context + ": inconsistent zero padding at " + f.filename().string());
    }
    const long long num = std::stoll(stem);
    if (num <= prev) throw LoadError(context + ": frame numbers not strictly increasing");
    prev = num;
  }
  return files;
}

}  // namespace

SequenceRecord load_sequence(const fs::path& sequence_dir) {
  const std::string context = sequence_dir.string();
  SequenceRecord seq;
  seq.id = sequence_dir.filename().string();
  seq.rgb_paths = list_frames(sequence_dir / "rgb", "jpg", context);
  seq.depth_paths = list_frames(sequence_dir / "depth", "png", context);
  if (seq.rgb_paths.size() != seq.depth_paths.size()) {
    throw LoadError(context + ": rgb has " + std::to_string(seq.rgb_paths.size()) +
                    " frames but depth has " + std::to_string(seq.depth_paths.size()));
  }
  seq.groundtruth = read_groundtruth(sequence_dir / "groundtruth.txt");
  if (seq.groundtruth.size() != seq.rgb_paths.size()) {
    throw LoadError(context + ": groundtruth has " + std::to_string(seq.groundtruth.size()) +
                    " lines but rgb has " + std::to_string(seq.rgb_paths.size()) + " frames");
  }
  const fs::path attr_file = sequence_dir / "attributes.csv";
  if (fs::exists(attr_file)) {
    seq.attributes = read_attribute_table(attr_file);
    if (seq.attributes->frame_count() != seq.groundtruth.size()) {
      throw LoadError(context + ": attribute table covers " +
                      std::to_string(seq.attributes->frame_count()) + " frames, expected " +
                      std::to_string(seq.groundtruth.size()));
    }
  }
  return seq;
}

std::vector<std::string> list_sequences(const fs::path& root, Split split) {
  const fs::path dir = root / split_dir(split);
  if (!fs::is_directory(dir)) return {};
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) ids.push_back(entry.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<SequenceRecord> load_split(const fs::path& root, Split split) {
  std::vector<SequenceRecord> seqs;
  for (const auto& id : list_sequences(root, split)) {
    seqs.push_back(load_sequence(root / split_dir(split) / id));
  }
  return seqs;
}

cv::Mat load_rgb_frame(const SequenceRecord& seq, std::size_t frame) {
  const auto& path = seq.rgb_paths.at(frame);
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (img.empty()) throw LoadError("cannot decode " + path.string());
  return img;
}

cv::Mat load_depth_frame(const SequenceRecord& seq, std::size_t frame) {
  const auto& path = seq.depth_paths.at(frame);
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (img.empty()) throw LoadError("cannot decode " + path.string());
  if (img.type() != CV_16UC1) throw LoadError(path.string() + ": expected 16-bit single-channel depth");
  return img;
}

attrs::DepthView depth_view(const cv::Mat& depth16) {
  if (depth16.type() != CV_16UC1) throw InputError("depth_view: expected CV_16UC1");
  attrs::DepthView view;
  view.data = depth16.ptr<std::uint16_t>(0);
  view.width = depth16.cols;
  view.height = depth16.rows;
  view.row_stride = static_cast<std::ptrdiff_t>(depth16.step1());
  return view;
}

std::vector<std::optional<double>> sequence_depth_means(const SequenceRecord& seq) {
  std::vector<std::optional<double>> means(seq.frame_count());
  for (std::size_t t = 0; t < seq.frame_count(); ++t) {
    if (!seq.groundtruth[t].is_present()) continue;
    const cv::Mat depth = load_depth_frame(seq, t);
    means[t] = attrs::mean_box_depth(depth_view(depth), seq.groundtruth[t].box());
  }
  return means;
}

bool ValidationReport::all_passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

std::vector<ValidationEntry> ValidationReport::failures() const {
  std::vector<ValidationEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [](const auto& e) { return !e.passed; });
  return out;
}

namespace {

class SequenceValidator {
 public:
  SequenceValidator(ValidationReport& report, std::string name, fs::path dir)
      : report_(report), name_(std::move(name)), dir_(std::move(dir)) {}

  void run() {
    if (!check_layout()) return;
    check_frame_counts();
    check_images();
    check_boxes();
    check_attributes();
  }

 private:
  void add(const std::string& check, bool passed, const std::string& detail = "") {
    report_.entries.push_back({name_, check, passed, detail});
  }

  bool check_layout() {
    std::vector<std::string> missing;
    for (const char* part : {"rgb", "depth"}) {
      if (!fs::is_directory(dir_ / part)) missing.push_back(part);
    }
    if (!fs::exists(dir_ / "groundtruth.txt")) missing.push_back("groundtruth.txt");
    if (!missing.empty()) {
      std::string detail = "missing:";
      for (const auto& m : missing) detail += " " + m;
      add("layout", false, detail);
      return false;
    }
    add("layout", true);
    try {
      rgb_ = list_frames(dir_ / "rgb", "jpg", name_);
      depth_ = list_frames(dir_ / "depth", "png", name_);
      add("frame_names", true);
    } catch (const Error& e) {
      add("frame_names", false, e.what());
      return false;
    }
    try {
      gt_ = read_groundtruth(dir_ / "groundtruth.txt");
      add("groundtruth_parse", true);
    } catch (const Error& e) {
      add("groundtruth_parse", false, e.what());
      return false;
    }
    return true;
  }

  void check_frame_counts() {
    const bool ok = rgb_.size() == depth_.size() && rgb_.size() == gt_.size();
    add("frame_count", ok,
        ok ? "" : "rgb=" + std::to_string(rgb_.size()) + " depth=" + std::to_string(depth_.size()) +
                  " groundtruth=" + std::to_string(gt_.size()));
  }

  void check_images() {
    bool depth_ok = true, rgb_ok = true;
    std::string depth_detail, rgb_detail;
    for (const auto& p : depth_) {
      const cv::Mat img = cv::imread(p.string(), cv::IMREAD_UNCHANGED);
      if (img.empty() || img.type() != CV_16UC1) {
        depth_ok = false;
        depth_detail = p.filename().string() + " is not 16-bit single-channel";
        break;
      }
    }
    add("depth_bit_depth", depth_ok, depth_detail);
    for (std::size_t i = 0; i < rgb_.size(); ++i) {
      const cv::Mat img = cv::imread(rgb_[i].string(), cv::IMREAD_UNCHANGED);
      if (img.empty() || img.channels() != 3 || img.depth() != CV_8U) {
        rgb_ok = false;
        rgb_detail = rgb_[i].filename().string() + " is not 8-bit 3-channel";
        break;
      }
      if (i < gt_.size()) frame_sizes_.push_back({img.cols, img.rows});
    }
    add("rgb_channels", rgb_ok, rgb_detail);
  }

  void check_boxes() {
    bool ok = true;
    std::string detail;
    const std::size_t n = std::min(gt_.size(), frame_sizes_.size());
    for (std::size_t t = 0; t < n; ++t) {
      if (!gt_[t].is_present()) continue;
      const auto& b = gt_[t].box();
      const auto [w, h] = frame_sizes_[t];
      if (b.x < 0.0 || b.y < 0.0 || b.right() > w || b.bottom() > h) {
        ok = false;
        detail = "frame " + std::to_string(t + 1) + " box extends outside the image";
        break;
      }
    }
    add("box_within_image", ok, detail);
  }

  void check_attributes() {
    const fs::path file = dir_ / "attributes.csv";
    if (!fs::exists(file)) return;  // optional
    try {
      const auto table = read_attribute_table(file);
      const bool shape_ok = table.frame_count() == gt_.size();
      add("attribute_shape", shape_ok,
          shape_ok ? "" : "table covers " + std::to_string(table.frame_count()) +
                          " frames, expected " + std::to_string(gt_.size()));
      add("nan_exclusivity", true);
    } catch (const Error& e) {
      const std::string what = e.what();
      if (what.find("NaN exclusivity") != std::string::npos) {
        add("nan_exclusivity", false, what);
      } else {
        add("attribute_shape", false, what);
      }
    }
  }

  ValidationReport& report_;
  std::string name_;
  fs::path dir_;
  std::vector<fs::path> rgb_, depth_;
  std::vector<GroundTruthEntry> gt_;
  std::vector<std::pair<int, int>> frame_sizes_;
};

}  // namespace

ValidationReport validate_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw LoadError("dataset root not found: " + root.string());
  ValidationReport report;
  for (Split split : {Split::Train, Split::Test}) {
    for (const auto& id : list_sequences(root, split)) {
      const std::string name = std::string(split_dir(split)) + "/" + id;
      SequenceValidator(report, name, root / split_dir(split) / id).run();
    }
  }
  return report;
}

}  // namespace rgbdtrack::io

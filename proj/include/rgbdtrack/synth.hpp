#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "rgbdtrack/attributes.hpp"
#include "rgbdtrack/dataset.hpp"
#include "rgbdtrack/geometry.hpp"
#include "rgbdtrack/sequence.hpp"

namespace rgbdtrack::synth {

struct Waypoint {
  int frame = 0;
  double x = 0.0, y = 0.0;  // target center
};

struct SizeKey {
  int frame = 0;
  double w = 0.0, h = 0.0;
};

struct DepthKey {
  int frame = 0;
  double depth_mm = 0.0;
};

struct Interval {
  int begin = 0, end = 0;  // [begin, end)
  bool contains(int t) const { return t >= begin && t < end; }
};

/// Scripted sequence description. All schedules interpolate linearly between
/// keys and hold constant outside them. The generated output is a pure
/// function of this struct.
struct SynthConfig {
  std::string id = "seq";
  std::uint64_t seed = 1;
  int frame_width = 160;
  int frame_height = 120;
  int frame_count = 60;
  std::vector<Waypoint> trajectory;   // target center over time
  std::vector<SizeKey> size_schedule; // target box size over time
  std::vector<Interval> full_occlusion;
  std::vector<Interval> partial_occlusion;
  std::vector<Interval> out_of_frame;
  std::vector<DepthKey> target_depth;  // defaults to a constant plane
  double target_depth_mm = 1200.0;
  double background_depth_mm = 3000.0;
  double depth_jitter_mm = 2.0;    // bounded uniform noise on every plane
  double depth_dropout = 0.02;     // probability of a missing (0) measurement
  int distractor_count = 0;
  int annotated_prefix = -1;       // >=0: frames beyond it written unannotated
};

/// Scripted truth for a generated sequence: visibility, the expected values
/// of the computed attributes derived from the schedules, and the manual
/// attribute flags implied by the scripted events.
struct EventLog {
  std::vector<bool> visible;
  attrs::ComputedFlags computed;
  std::vector<bool> fo, of, po, so;

  attrs::ManualFlags manual_flags() const;
};

struct GeneratedSequence {
  SynthConfig config;
  std::vector<cv::Mat> rgb;    // 8UC3
  std::vector<cv::Mat> depth;  // 16UC1, millimeters
  std::vector<GroundTruthEntry> groundtruth;  // Present/Absent for every frame
  EventLog log;
  attrs::AttributeTable attribute_table;
};

/// Renders the sequence described by cfg. Identical configs produce
/// bit-identical output. Throws ConfigError when a schedule places a visible
/// target outside the frame or intervals fall outside [0, N).
GeneratedSequence generate_sequence(const SynthConfig& cfg);

/// Writes sequences in the on-disk dataset layout. Attribute tables are
/// emitted for the test split; the train split applies annotated_prefix.
void write_synth_dataset(const std::vector<SynthConfig>& configs, const std::filesystem::path& root,
                         io::Split split = io::Split::Test);

/// A varied set of scripted sequences covering occlusion, disappearance,
/// size/aspect/depth change, fast motion and distractors.
std::vector<SynthConfig> make_default_configs(int count, std::uint64_t base_seed);

}  // namespace rgbdtrack::synth

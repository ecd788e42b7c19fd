#include "rgbdtrack/synth.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>

namespace rgbdtrack::synth {

namespace {

// Self-contained RNG helpers so generated bytes do not depend on the standard
// library's distribution implementations.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed ^ 0x9e3779b97f4a7c15ULL) {
    next();
    next();
  }

  std::uint64_t next() {
    // splitmix64
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  int range(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  return seed * 0x100000001b3ULL + salt + 0xcbf29ce484222325ULL;
}

template <typename Key, typename Value, typename Get>
Value interpolate(const std::vector<Key>& keys, int t, Get get) {
  if (keys.front().frame >= t) return get(keys.front());
  if (keys.back().frame <= t) return get(keys.back());
  for (std::size_t i = 1; i < keys.size(); ++i) {
    if (keys[i].frame >= t) {
      const auto& a = keys[i - 1];
      const auto& b = keys[i];
      const double u = double(t - a.frame) / double(b.frame - a.frame);
      const Value va = get(a);
      const Value vb = get(b);
      return va + (vb - va) * u;
    }
  }
  return get(keys.back());
}

double interp_depth(const SynthConfig& cfg, int t) {
  if (cfg.target_depth.empty()) return cfg.target_depth_mm;
  return interpolate<DepthKey, double>(cfg.target_depth, t,
                                       [](const DepthKey& k) { return k.depth_mm; });
}

BoundingBox scheduled_box(const SynthConfig& cfg, int t) {
  const double cx = interpolate<Waypoint, double>(cfg.trajectory, t,
                                                  [](const Waypoint& w) { return w.x; });
  const double cy = interpolate<Waypoint, double>(cfg.trajectory, t,
                                                  [](const Waypoint& w) { return w.y; });
  const double w = interpolate<SizeKey, double>(cfg.size_schedule, t,
                                                [](const SizeKey& k) { return k.w; });
  const double h = interpolate<SizeKey, double>(cfg.size_schedule, t,
                                                [](const SizeKey& k) { return k.h; });
  try {
    return BoundingBox(cx - w / 2.0, cy - h / 2.0, w, h);
  } catch (const InputError& e) {
    throw ConfigError(cfg.id + ": invalid scheduled box at frame " + std::to_string(t) + ": " +
                      e.what());
  }
}

bool in_any(const std::vector<Interval>& intervals, int t) {
  return std::any_of(intervals.begin(), intervals.end(),
                     [&](const Interval& iv) { return iv.contains(t); });
}

void check_intervals(const SynthConfig& cfg, const std::vector<Interval>& intervals,
                     const char* what) {
  for (const auto& iv : intervals) {
    if (iv.begin < 0 || iv.end > cfg.frame_count || iv.begin >= iv.end) {
      throw ConfigError(cfg.id + ": " + what + " interval [" + std::to_string(iv.begin) + "," +
                        std::to_string(iv.end) + ") outside [0," +
                        std::to_string(cfg.frame_count) + ")");
    }
  }
}

void fill_rect(cv::Mat& img, const PixelRect& r, const cv::Vec3b& color) {
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) img.at<cv::Vec3b>(y, x) = color;
  }
}

void fill_striped(cv::Mat& img, const PixelRect& r, const cv::Vec3b& a, const cv::Vec3b& b) {
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) {
      img.at<cv::Vec3b>(y, x) = (((x - r.x0) / 3) % 2 == 0) ? a : b;
    }
  }
}

void fill_depth(cv::Mat& depth, const PixelRect& r, double mm) {
  const auto v = static_cast<std::uint16_t>(std::clamp(mm, 1.0, 65535.0));
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) depth.at<std::uint16_t>(y, x) = v;
  }
}

PixelRect left_half(const PixelRect& r) {
  PixelRect h = r;
  h.x1 = r.x0 + r.width() / 2;
  return h;
}

struct DistractorTrack {
  double cx, cy, radius, phase, speed, w, h, depth_mm;
};

std::vector<DistractorTrack> make_distractors(const SynthConfig& cfg, Rng& rng) {
  std::vector<DistractorTrack> tracks;
  for (int i = 0; i < cfg.distractor_count; ++i) {
    DistractorTrack d;
    d.cx = 20.0 + rng.unit() * (cfg.frame_width - 40.0);
    d.cy = 20.0 + rng.unit() * (cfg.frame_height - 40.0);
    d.radius = 5.0 + rng.unit() * 10.0;
    d.phase = rng.unit() * 6.28318530717958648;
    d.speed = 0.05 + rng.unit() * 0.1;
    d.w = 8.0 + rng.unit() * 8.0;
    d.h = 8.0 + rng.unit() * 8.0;
    d.depth_mm = (cfg.target_depth_mm + cfg.background_depth_mm) / 2.0 + 100.0 * i;
    tracks.push_back(d);
  }
  return tracks;
}

// Analytic per-frame target depth mean matching what the renderer emits
// (occluder mix included, noise excluded).
std::optional<double> expected_depth_mean(const SynthConfig& cfg, int t, bool visible, bool po,
                                          const BoundingBox& box) {
  if (!visible) return std::nullopt;
  const PixelRect r = pixel_rect(box, cfg.frame_width, cfg.frame_height);
  if (r.empty()) return std::nullopt;
  const double target = interp_depth(cfg, t);
  if (!po) return target;
  const double occ = 0.6 * target;
  const auto occ_pixels = static_cast<double>(left_half(r).pixel_count());
  const auto total = static_cast<double>(r.pixel_count());
  return (occ_pixels * occ + (total - occ_pixels) * target) / total;
}

EventLog build_event_log(const SynthConfig& cfg, const std::vector<BoundingBox>& boxes,
                         const std::vector<bool>& visible) {
  const int n = cfg.frame_count;
  EventLog log;
  log.visible = visible;
  log.fo.resize(n);
  log.of.resize(n);
  log.po.resize(n);
  log.so.resize(n);
  for (int t = 0; t < n; ++t) {
    log.fo[t] = in_any(cfg.full_occlusion, t);
    log.of[t] = in_any(cfg.out_of_frame, t);
    log.po[t] = in_any(cfg.partial_occlusion, t) && visible[t];
    log.so[t] = cfg.distractor_count > 0;
  }

  std::vector<std::optional<double>> means(n);
  for (int t = 0; t < n; ++t) {
    means[t] = expected_depth_mean(cfg, t, visible[t], log.po[t], boxes[t]);
  }

  auto& flags = log.computed;
  flags.ac.resize(n, false);
  flags.dc.resize(n, false);
  flags.fm.resize(n, false);
  flags.sc.resize(n, false);
  for (int t = 0; t < n; ++t) {
    const int lo = std::max(0, t - 10);
    const int hi = std::min(n - 1, t + 10);
    double ar_lo = 1e300, ar_hi = -1e300;
    double area_lo = 1e300, area_hi = -1e300;
    double d_lo = 1e300, d_hi = -1e300;
    int present = 0, with_depth = 0;
    for (int u = lo; u <= hi; ++u) {
      if (visible[u]) {
        const double ar = boxes[u].w / boxes[u].h;
        const double area = boxes[u].w * boxes[u].h;
        ar_lo = std::min(ar_lo, ar);
        ar_hi = std::max(ar_hi, ar);
        area_lo = std::min(area_lo, area);
        area_hi = std::max(area_hi, area);
        ++present;
      }
      if (means[u]) {
        d_lo = std::min(d_lo, *means[u]);
        d_hi = std::max(d_hi, *means[u]);
        ++with_depth;
      }
    }
    flags.ac[t] = present >= 2 && ar_hi / ar_lo > 1.5;
    flags.sc[t] = present >= 2 && area_hi / area_lo > 1.5;
    flags.dc[t] = with_depth >= 2 && d_hi / d_lo > 1.5;
    if (t > 0 && visible[t - 1] && visible[t]) {
      const double dx = (boxes[t].x + boxes[t].w / 2) - (boxes[t - 1].x + boxes[t - 1].w / 2);
      const double dy = (boxes[t].y + boxes[t].h / 2) - (boxes[t - 1].y + boxes[t - 1].h / 2);
      const double size = std::sqrt(boxes[t - 1].w * boxes[t - 1].h);
      flags.fm[t] = std::hypot(dx, dy) >= 0.3 * size;
    }
  }
  return log;
}

}  // namespace

attrs::ManualFlags EventLog::manual_flags() const {
  attrs::ManualFlags m = attrs::ManualFlags::all_false(visible.size());
  m.fo = fo;
  m.of = of;
  m.po = po;
  m.so = so;
  return m;
}

GeneratedSequence generate_sequence(const SynthConfig& cfg) {
  if (cfg.frame_count <= 0) throw ConfigError(cfg.id + ": frame_count must be positive");
  if (cfg.frame_width <= 0 || cfg.frame_height <= 0) {
    throw ConfigError(cfg.id + ": frame size must be positive");
  }
  if (cfg.trajectory.empty() || cfg.size_schedule.empty()) {
    throw ConfigError(cfg.id + ": trajectory and size schedule need at least one key");
  }
  check_intervals(cfg, cfg.full_occlusion, "full_occlusion");
  check_intervals(cfg, cfg.partial_occlusion, "partial_occlusion");
  check_intervals(cfg, cfg.out_of_frame, "out_of_frame");

  const int n = cfg.frame_count;
  std::vector<BoundingBox> boxes;
  std::vector<bool> visible(n);
  boxes.reserve(n);
  for (int t = 0; t < n; ++t) {
    boxes.push_back(scheduled_box(cfg, t));
    visible[t] = !in_any(cfg.full_occlusion, t) && !in_any(cfg.out_of_frame, t);
    if (visible[t]) {
      const auto& b = boxes[t];
      if (b.x < 0.0 || b.y < 0.0 || b.right() > cfg.frame_width || b.bottom() > cfg.frame_height) {
        throw ConfigError(cfg.id + ": schedule places the visible target outside the frame at frame " +
                          std::to_string(t));
      }
    }
  }

  GeneratedSequence out;
  out.config = cfg;
  out.log = build_event_log(cfg, boxes, visible);

  Rng base(mix_seed(cfg.seed, 0));
  // background texture: 8x8 blocks of muted colors
  cv::Mat background(cfg.frame_height, cfg.frame_width, CV_8UC3);
  for (int by = 0; by < (cfg.frame_height + 7) / 8; ++by) {
    for (int bx = 0; bx < (cfg.frame_width + 7) / 8; ++bx) {
      const cv::Vec3b color(static_cast<uchar>(base.range(40, 140)),
                            static_cast<uchar>(base.range(40, 140)),
                            static_cast<uchar>(base.range(40, 140)));
      for (int y = by * 8; y < std::min(cfg.frame_height, by * 8 + 8); ++y) {
        for (int x = bx * 8; x < std::min(cfg.frame_width, bx * 8 + 8); ++x) {
          background.at<cv::Vec3b>(y, x) = color;
        }
      }
    }
  }
  const cv::Vec3b target_a(static_cast<uchar>(base.range(180, 255)),
                           static_cast<uchar>(base.range(0, 80)),
                           static_cast<uchar>(base.range(180, 255)));
  const cv::Vec3b target_b(static_cast<uchar>(base.range(0, 80)),
                           static_cast<uchar>(base.range(180, 255)),
                           static_cast<uchar>(base.range(0, 80)));
  const cv::Vec3b occluder_color(20, 200, 200);
  const auto distractors = make_distractors(cfg, base);

  out.rgb.reserve(n);
  out.depth.reserve(n);
  out.groundtruth.reserve(n);
  for (int t = 0; t < n; ++t) {
    cv::Mat rgb = background.clone();
    cv::Mat depth(cfg.frame_height, cfg.frame_width, CV_16UC1);
    fill_depth(depth, {0, 0, cfg.frame_width, cfg.frame_height}, cfg.background_depth_mm);

    for (const auto& d : distractors) {
      const double cx = d.cx + d.radius * std::cos(d.phase + d.speed * t);
      const double cy = d.cy + d.radius * std::sin(d.phase + d.speed * t);
      const BoundingBox db(cx - d.w / 2, cy - d.h / 2, d.w, d.h);
      const PixelRect r = pixel_rect(db, cfg.frame_width, cfg.frame_height);
      if (r.empty()) continue;
      fill_striped(rgb, r, target_b, target_a);  // similar texture, swapped
      fill_depth(depth, r, d.depth_mm);
    }

    const bool fo = in_any(cfg.full_occlusion, t);
    const bool po = out.log.po[t];
    const bool draw_target = visible[t] || fo;  // an out-of-frame target left the view
    const PixelRect rect = pixel_rect(boxes[t], cfg.frame_width, cfg.frame_height);
    const double target_mm = interp_depth(cfg, t);
    if (draw_target && !rect.empty()) {
      fill_striped(rgb, rect, target_a, target_b);
      fill_depth(depth, rect, target_mm);
    }
    if (po && !rect.empty()) {
      fill_rect(rgb, left_half(rect), occluder_color);
      fill_depth(depth, left_half(rect), 0.6 * target_mm);
    }
    if (fo && !rect.empty()) {
      PixelRect cover = rect;
      cover.x0 = std::max(0, cover.x0 - 2);
      cover.y0 = std::max(0, cover.y0 - 2);
      cover.x1 = std::min(cfg.frame_width, cover.x1 + 2);
      cover.y1 = std::min(cfg.frame_height, cover.y1 + 2);
      fill_rect(rgb, cover, occluder_color);
      fill_depth(depth, cover, 0.6 * target_mm);
    }

    // sensor-like noise: bounded jitter plus dropout to 0
    Rng noise(mix_seed(cfg.seed, 0x1000 + static_cast<std::uint64_t>(t)));
    const int jitter = static_cast<int>(std::lround(cfg.depth_jitter_mm));
    for (int y = 0; y < cfg.frame_height; ++y) {
      for (int x = 0; x < cfg.frame_width; ++x) {
        auto& v = depth.at<std::uint16_t>(y, x);
        if (jitter > 0) {
          const int jittered = static_cast<int>(v) + noise.range(-jitter, jitter);
          v = static_cast<std::uint16_t>(std::clamp(jittered, 1, 65535));
        }
        if (noise.unit() < cfg.depth_dropout) v = 0;
      }
    }

    out.rgb.push_back(std::move(rgb));
    out.depth.push_back(std::move(depth));
    out.groundtruth.push_back(visible[t] ? GroundTruthEntry::present(boxes[t])
                                         : GroundTruthEntry::absent());
  }

  out.attribute_table = attrs::assemble_table(out.log.computed, out.log.manual_flags());
  return out;
}

void write_synth_dataset(const std::vector<SynthConfig>& configs, const std::filesystem::path& root,
                         io::Split split) {
  namespace fs = std::filesystem;
  for (const auto& cfg : configs) {
    const GeneratedSequence seq = generate_sequence(cfg);
    const fs::path dir = root / io::split_dir(split) / cfg.id;
    fs::create_directories(dir / "rgb");
    fs::create_directories(dir / "depth");
    const std::vector<int> jpeg_params = {cv::IMWRITE_JPEG_QUALITY, 95};
    for (int t = 0; t < cfg.frame_count; ++t) {
      const auto idx = static_cast<std::size_t>(t) + 1;
      if (!cv::imwrite((dir / "rgb" / io::frame_filename(idx, "jpg")).string(), seq.rgb[t],
                       jpeg_params)) {
        throw LoadError(cfg.id + ": failed to write rgb frame " + std::to_string(idx));
      }
      if (!cv::imwrite((dir / "depth" / io::frame_filename(idx, "png")).string(), seq.depth[t])) {
        throw LoadError(cfg.id + ": failed to write depth frame " + std::to_string(idx));
      }
    }
    std::vector<GroundTruthEntry> gt = seq.groundtruth;
    if (cfg.annotated_prefix >= 0) {
      for (std::size_t t = cfg.annotated_prefix; t < gt.size(); ++t) {
        gt[t] = GroundTruthEntry::unannotated();
      }
    }
    io::write_groundtruth(dir / "groundtruth.txt", gt);
    io::write_attribute_table(dir / "attributes.csv", seq.attribute_table);
  }
}

std::vector<SynthConfig> make_default_configs(int count, std::uint64_t base_seed) {
  std::vector<SynthConfig> configs;
  for (int i = 0; i < count; ++i) {
    SynthConfig cfg;
    cfg.seed = base_seed + static_cast<std::uint64_t>(i) * 101;
    cfg.frame_count = 60;
    char name[32];
    std::snprintf(name, sizeof(name), "seq%02d", i);
    cfg.id = name;
    switch (i % 6) {
      case 0:  // distractors, gentle drift
        cfg.trajectory = {{0, 40, 40}, {59, 110, 80}};
        cfg.size_schedule = {{0, 16, 16}};
        cfg.distractor_count = 3;
        break;
      case 1:  // full occlusion mid-sequence
        cfg.trajectory = {{0, 50, 60}, {59, 120, 50}};
        cfg.size_schedule = {{0, 18, 14}};
        cfg.full_occlusion = {{25, 34}};
        break;
      case 2:  // target leaves the frame and returns
        cfg.trajectory = {{0, 40, 60},  {27, 140, 60}, {28, 200, 60},
                          {41, 200, 60}, {42, 140, 60}, {59, 60, 60}};
        cfg.size_schedule = {{0, 16, 16}};
        cfg.out_of_frame = {{28, 42}};
        break;
      case 3:  // size change then aspect change
        cfg.trajectory = {{0, 80, 60}};
        cfg.size_schedule = {{0, 14, 14}, {18, 14, 14}, {26, 22, 22},
                             {38, 22, 22}, {46, 30, 15}, {59, 30, 15}};
        break;
      case 4:  // depth change
        cfg.trajectory = {{0, 70, 50}, {59, 90, 70}};
        cfg.size_schedule = {{0, 16, 16}};
        cfg.target_depth = {{0, 1000}, {24, 1000}, {36, 1800}, {59, 1800}};
        break;
      default:  // fast motion spike
        cfg.trajectory = {{0, 50, 50}, {40, 70, 60}, {41, 85, 60}, {59, 100, 70}};
        cfg.size_schedule = {{0, 12, 12}};
        cfg.partial_occlusion = {{10, 16}};
        break;
    }
    configs.push_back(cfg);
  }
  return configs;
}

}  // namespace rgbdtrack::synth

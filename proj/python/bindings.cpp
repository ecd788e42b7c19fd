#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rgbdtrack/attributes.hpp"
#include "rgbdtrack/dataset.hpp"
#include "rgbdtrack/evaluate.hpp"
#include "rgbdtrack/geometry.hpp"
#include "rgbdtrack/metrics.hpp"
#include "rgbdtrack/net/model.hpp"
#include "rgbdtrack/synth.hpp"
#include "rgbdtrack/tracker.hpp"

namespace py = pybind11;
using namespace rgbdtrack;

namespace {

metrics::Aggregation parse_mode(const std::string& mode) {
  if (mode == "sequence_averaged") return metrics::Aggregation::SequenceAveraged;
  if (mode == "frame_pooled") return metrics::Aggregation::FramePooled;
  throw InputError("unknown aggregation mode: " + mode);
}

attrs::DepthView view_from_array(const py::array_t<std::uint16_t>& depth) {
  if (depth.ndim() != 2) throw InputError("depth array must be 2-D");
  attrs::DepthView view;
  view.data = depth.data();
  view.height = static_cast<int>(depth.shape(0));
  view.width = static_cast<int>(depth.shape(1));
  view.row_stride = depth.strides(0) / static_cast<std::ptrdiff_t>(sizeof(std::uint16_t));
  return view;
}

py::dict report_to_dict(const eval::TrackerReport& report) {
  py::dict attrs_d;
  for (const auto& [id, v] : report.attribute_overlap) {
    attrs_d[py::str(std::string(attribute_name(id)))] = v;
  }
  py::list per_seq;
  for (const auto& s : report.per_sequence) {
    per_seq.append(py::dict(py::arg("id") = s.id, py::arg("pr") = s.pr, py::arg("re") = s.re,
                            py::arg("f") = s.f));
  }
  using py::arg;
  return py::dict(arg("tracker") = report.tracker, arg("dataset") = report.dataset,
                  arg("pr") = report.result.best_pr, arg("re") = report.result.best_re,
                  arg("f") = report.result.best_f,
                  arg("best_threshold") = report.result.best_threshold,
                  arg("thresholds") = report.result.thresholds,
                  arg("pr_curve") = report.result.pr_curve,
                  arg("re_curve") = report.result.re_curve,
                  arg("f_curve") = report.result.f_curve, arg("attribute_overlap") = attrs_d,
                  arg("per_sequence") = per_seq);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "desk-scale RGB-D tracking toolkit (evaluation protocol, attributes, synthetic "
            "benchmark, fusion tracker)";

  py::register_exception<Error>(m, "ToolkitError");

  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init<double, double, double, double>(), py::arg("x"), py::arg("y"), py::arg("w"),
           py::arg("h"))
      .def_readonly("x", &BoundingBox::x)
      .def_readonly("y", &BoundingBox::y)
      .def_readonly("w", &BoundingBox::w)
      .def_readonly("h", &BoundingBox::h)
      .def("__repr__", [](const BoundingBox& b) {
        return "BoundingBox(" + std::to_string(b.x) + ", " + std::to_string(b.y) + ", " +
               std::to_string(b.w) + ", " + std::to_string(b.h) + ")";
      });

  py::class_<GroundTruthEntry>(m, "GroundTruthEntry")
      .def_static("present", &GroundTruthEntry::present)
      .def_static("absent", &GroundTruthEntry::absent)
      .def_static("unannotated", &GroundTruthEntry::unannotated)
      .def_property_readonly("is_present", &GroundTruthEntry::is_present)
      .def_property_readonly("is_absent", &GroundTruthEntry::is_absent)
      .def_property_readonly("is_unannotated", &GroundTruthEntry::is_unannotated)
      .def_property_readonly("box", [](const GroundTruthEntry& e) -> py::object {
        if (!e.is_present()) return py::none();
        return py::cast(e.box());
      });

  py::class_<Prediction>(m, "Prediction")
      .def(py::init<const BoundingBox&, double>(), py::arg("box"), py::arg("confidence"))
      .def_readonly("box", &Prediction::box)
      .def_readonly("confidence", &Prediction::confidence);

  m.def("box_area", &box_area);
  m.def("box_center", &box_center);
  m.def("clip_to_frame", [](const BoundingBox& b, double w, double h) -> py::object {
    const auto clipped = clip_to_frame(b, w, h);
    if (!clipped) return py::none();
    return py::cast(*clipped);
  });

  m.def("iou", &metrics::iou);
  m.def(
      "precision",
      [](const std::vector<Prediction>& preds, const std::vector<GroundTruthEntry>& gts,
         double tau) { return metrics::precision(preds, gts, tau); },
      py::arg("predictions"), py::arg("groundtruth"), py::arg("tau"));
  m.def(
      "recall",
      [](const std::vector<Prediction>& preds, const std::vector<GroundTruthEntry>& gts,
         double tau) { return metrics::recall(preds, gts, tau); },
      py::arg("predictions"), py::arg("groundtruth"), py::arg("tau"));
  m.def("f_measure", &metrics::f_measure);
  m.def(
      "sweep_thresholds",
      [](const metrics::PredictionRuns& preds, const metrics::GroundTruthRuns& gts,
         const std::string& mode) {
        const auto r = metrics::sweep_thresholds(preds, gts, parse_mode(mode));
        using py::arg;
        return py::dict(arg("thresholds") = r.thresholds, arg("pr_curve") = r.pr_curve,
                        arg("re_curve") = r.re_curve, arg("f_curve") = r.f_curve,
                        arg("best_f") = r.best_f, arg("best_pr") = r.best_pr,
                        arg("best_re") = r.best_re, arg("best_threshold") = r.best_threshold);
      },
      py::arg("predictions"), py::arg("groundtruth"), py::arg("mode") = "sequence_averaged");

  m.def("attribute_window", &attrs::window, py::arg("frame"), py::arg("frame_count"));
  m.def(
      "compute_attribute_flags",
      [](const std::vector<GroundTruthEntry>& gts,
         const std::vector<std::optional<double>>& depth_means) {
        const auto flags = attrs::compute_flags(gts, depth_means);
        using py::arg;
        return py::dict(arg("ac") = flags.ac, arg("dc") = flags.dc, arg("fm") = flags.fm,
                        arg("sc") = flags.sc);
      },
      py::arg("groundtruth"), py::arg("depth_means") = std::vector<std::optional<double>>{});
  m.def(
      "mean_box_depth",
      [](const py::array_t<std::uint16_t>& depth, const BoundingBox& box) -> py::object {
        const auto mean = attrs::mean_box_depth(view_from_array(depth), box);
        if (!mean) return py::none();
        return py::float_(*mean);
      },
      py::arg("depth"), py::arg("box"));

  m.def(
      "soft_argmax",
      [](const py::array_t<double>& map) {
        if (map.ndim() != 2) throw InputError("soft_argmax: map must be 2-D");
        nn::Tensor t({static_cast<int>(map.shape(0)), static_cast<int>(map.shape(1))});
        auto r = map.unchecked<2>();
        for (py::ssize_t y = 0; y < map.shape(0); ++y) {
          for (py::ssize_t x = 0; x < map.shape(1); ++x) {
            t.at(static_cast<int>(y), static_cast<int>(x)) = r(y, x);
          }
        }
        return net::soft_argmax(t);
      },
      py::arg("map"));
  m.def("box_loss", &net::box_loss, py::arg("pred"), py::arg("gt"), py::arg("lambda_iou") = 2.0,
        py::arg("lambda_l1") = 5.0, py::arg("generalized") = false);

  py::class_<SequenceRecord>(m, "SequenceRecord")
      .def_readonly("id", &SequenceRecord::id)
      .def_property_readonly("frame_count", &SequenceRecord::frame_count)
      .def_readonly("groundtruth", &SequenceRecord::groundtruth)
      .def_property_readonly("rgb_paths",
                             [](const SequenceRecord& s) {
                               std::vector<std::string> out;
                               for (const auto& p : s.rgb_paths) out.push_back(p.string());
                               return out;
                             })
      .def_property_readonly("depth_paths", [](const SequenceRecord& s) {
        std::vector<std::string> out;
        for (const auto& p : s.depth_paths) out.push_back(p.string());
        return out;
      });

  m.def("load_sequence", &io::load_sequence, py::arg("sequence_dir"));
  m.def("list_sequences", [](const std::filesystem::path& root, const std::string& split) {
    return io::list_sequences(root, split == "train" ? io::Split::Train : io::Split::Test);
  });
  m.def("read_results", &io::read_results);
  m.def("write_results", [](const std::filesystem::path& file,
                            const std::vector<Prediction>& preds) { io::write_results(file, preds); });
  m.def("validate_dataset", [](const std::filesystem::path& root) {
    const auto report = io::validate_dataset(root);
    py::list entries;
    for (const auto& e : report.entries) {
      entries.append(py::dict(py::arg("sequence") = e.sequence, py::arg("check") = e.check,
                              py::arg("passed") = e.passed, py::arg("detail") = e.detail));
    }
    return py::dict(py::arg("all_passed") = report.all_passed(), py::arg("entries") = entries);
  });

  m.def(
      "write_default_dataset",
      [](const std::filesystem::path& root, int count, std::uint64_t seed,
         const std::string& split) {
        synth::write_synth_dataset(synth::make_default_configs(count, seed), root,
                                   split == "train" ? io::Split::Train : io::Split::Test);
      },
      py::arg("root"), py::arg("count") = 5, py::arg("seed") = 1,
      py::arg("split") = "test");

  m.def(
      "track_oracle",
      [](const std::filesystem::path& dataset_root, const std::filesystem::path& results_dir) {
        for (const auto& id : io::list_sequences(dataset_root, io::Split::Test)) {
          const auto seq = io::load_sequence(dataset_root / "test" / id);
          track::OracleTracker oracle(seq.groundtruth);
          io::write_results(results_dir / (id + ".txt"), track::run_sequence(oracle, seq));
        }
      },
      py::arg("dataset_root"), py::arg("results_dir"));

  m.def(
      "evaluate_dataset",
      [](const std::filesystem::path& results, const std::filesystem::path& root,
         const std::string& mode, const std::string& name) {
        return report_to_dict(eval::evaluate_dataset(results, root, parse_mode(mode), name));
      },
      py::arg("results_root"), py::arg("dataset_root"), py::arg("mode") = "sequence_averaged",
      py::arg("name") = "tracker");
}

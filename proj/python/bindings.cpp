#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fieldcalib/dataset_io.hpp"
#include "fieldcalib/hdecomp.hpp"
#include "fieldcalib/metrics.hpp"
#include "fieldcalib/optimizer.hpp"
#include "fieldcalib/synth.hpp"

namespace py = pybind11;
using namespace fieldcalib;

namespace {

const CalibrationObject& soccer_field() {
  static const CalibrationObject object = build_soccer_field();
  return object;
}

std::vector<ParamDistribution> hypotheses_for(const std::string& preset) {
  if (preset == "main_tribune") return main_tribune_hypotheses();
  if (preset == "published") return published_hypotheses();
  throw Error(ErrorCode::kInvalidArgument, "unknown hypothesis preset '" + preset + "'");
}

Homography raster_homography(const Mat3& h, const std::string& axis, bool image_to_world) {
  Homography out;
  out.h = h;
  out.axis_system = parse_axis_system(axis);
  out.direction = image_to_world ? HomographyDirection::kImageToWorld : HomographyDirection::kWorldToImage;
  if (out.axis_system != AxisSystem::kSoccerNet) out = align_homography(out);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sports-field camera calibration from annotated field markings.";
  m.attr("__version__") = version();

  py::register_exception<Error>(m, "FieldCalibError", PyExc_RuntimeError);

  py::class_<ImageDims>(m, "ImageDims")
      .def(py::init([](double w, double h) { return ImageDims{w, h}; }), py::arg("width") = 960.0,
           py::arg("height") = 540.0)
      .def_readwrite("width", &ImageDims::width)
      .def_readwrite("height", &ImageDims::height)
      .def("__repr__", [](const ImageDims& d) {
        return "ImageDims(" + std::to_string(d.width) + ", " + std::to_string(d.height) + ")";
      });

  // Angles are exposed in radians, like the C++ API.
  py::class_<CameraParams>(m, "CameraParams")
      .def(py::init([](double fov, double pan, double tilt, double roll, const Vec3& position) {
             CameraParams phi;
             phi.fov = fov;
             phi.pan = pan;
             phi.tilt = tilt;
             phi.roll = roll;
             phi.position = position;
             return phi;
           }),
           py::arg("fov") = 0.0, py::arg("pan") = 0.0, py::arg("tilt") = 0.0, py::arg("roll") = 0.0,
           py::arg("position") = Vec3::Zero())
      .def_readwrite("fov", &CameraParams::fov)
      .def_readwrite("pan", &CameraParams::pan)
      .def_readwrite("tilt", &CameraParams::tilt)
      .def_readwrite("roll", &CameraParams::roll)
      .def_readwrite("position", &CameraParams::position)
      .def("is_valid", &is_valid)
      .def("__repr__", [](const CameraParams& c) {
        return py::str("CameraParams(fov={:.4f}, pan={:.4f}, tilt={:.4f}, roll={:.4f}, position=[{:.3f}, {:.3f}, {:.3f}])")
            .format(c.fov, c.pan, c.tilt, c.roll, c.position.x(), c.position.y(), c.position.z())
            .cast<std::string>();
      });

  py::class_<RadialDistortion>(m, "RadialDistortion")
      .def(py::init([](double k1, double k2) { return RadialDistortion{k1, k2}; }), py::arg("k1") = 0.0,
           py::arg("k2") = 0.0)
      .def_readwrite("k1", &RadialDistortion::k1)
      .def_readwrite("k2", &RadialDistortion::k2);

  m.def("deg2rad", &deg2rad);
  m.def("rad2deg", &rad2deg);

  m.def(
      "segment_labels", [] {
        std::vector<std::string> out;
        for (const auto& s : soccer_field().segments()) out.push_back(s.label.name);
        return out;
      },
      "Labels of the soccer-field calibration object.");

  m.def(
      "project",
      [](const CameraParams& phi, const Vec3& x, const ImageDims& dims) -> py::object {
        const auto p = project(phi, dims, x);
        if (!p.in_front) return py::none();
        return py::cast(ndc_to_raster(p.ndc, dims));
      },
      py::arg("phi"), py::arg("x"), py::arg("dims") = ImageDims{},
      "Raster pixel of world point x, or None behind the camera.");

  m.def(
      "homography_from_camera", [](const CameraParams& phi, const ImageDims& dims) {
        return homography_from_camera(phi, dims).h;
      },
      py::arg("phi"), py::arg("dims") = ImageDims{}, "World plane (z = 0) to raster pixel homography.");

  py::class_<DecompositionResult>(m, "DecompositionResult")
      .def_readonly("phi", &DecompositionResult::phi)
      .def_readonly("initial", &DecompositionResult::initial)
      .def_readonly("focal", &DecompositionResult::focal)
      .def_readonly("refined", &DecompositionResult::refined)
      .def_readonly("rejected", &DecompositionResult::rejected)
      .def_readonly("reason", &DecompositionResult::reason)
      .def_readonly("correspondences_used", &DecompositionResult::correspondences_used)
      .def_readonly("rmse_initial", &DecompositionResult::rmse_initial)
      .def_readonly("rmse_refined", &DecompositionResult::rmse_refined);

  m.def(
      "decompose",
      [](const Mat3& h, const ImageDims& dims, const std::string& axis_system, bool image_to_world) {
        return decompose(raster_homography(h, axis_system, image_to_world), dims);
      },
      py::arg("h"), py::arg("dims") = ImageDims{}, py::arg("axis_system") = "soccernet",
      py::arg("image_to_world") = false);

  py::class_<CalibrationResult>(m, "CalibrationResult")
      .def_readonly("phi", &CalibrationResult::phi)
      .def_readonly("psi", &CalibrationResult::psi)
      .def_readonly("final_loss", &CalibrationResult::final_loss)
      .def_readonly("hypothesis", &CalibrationResult::hypothesis)
      .def_readonly("verified", &CalibrationResult::verified)
      .def_readonly("loss_trace", &CalibrationResult::loss_trace)
      .def_property_readonly("candidate_losses", [](const CalibrationResult& r) {
        std::map<std::string, double> out;
        for (const auto& c : r.candidates) out[c.hypothesis] = c.final_loss;
        return out;
      });

  m.def(
      "calibrate",
      [](const ImageAnnotations& annotations, const ImageDims& dims, const std::string& hypotheses,
         const std::string& stacked, bool distortion, int steps, double tau, bool trace) {
        const auto& object = soccer_field();
        const auto obs = SegmentObservations::build(object, dims,
                                                    {observations_from_annotations(annotations, object, dims)});
        OptimizerConfig config;
        config.steps = steps;
        config.tau = tau;
        config.optimize_distortion = distortion;
        config.record_trace = trace;
        config.validate();
        const SelectionMode mode = stacked.empty() ? SelectionMode::argmin() : SelectionMode::stacked(stacked);
        py::gil_scoped_release release;
        return calibrate(obs, 0, object, hypotheses_for(hypotheses), config, mode);
      },
      py::arg("annotations"), py::arg("dims") = ImageDims{}, py::arg("hypotheses") = "main_tribune",
      py::arg("stacked") = "", py::arg("distortion") = false, py::arg("steps") = 2000, py::arg("tau") = 0.019,
      py::arg("trace") = false,
      "Calibrates one image from annotations {label: [[x, y], ...]} in raster pixels.");

  m.def(
      "reproject",
      [](const CameraParams& phi, const RadialDistortion& psi, const ImageDims& dims) {
        return reproject_object(phi, psi, soccer_field(), dims);
      },
      py::arg("phi"), py::arg("psi") = RadialDistortion{}, py::arg("dims") = ImageDims{},
      "Visible segments as {label: [polyline, ...]} in raster pixels.");

  py::class_<EvalCounts>(m, "EvalCounts")
      .def_readonly("tp", &EvalCounts::tp)
      .def_readonly("fp", &EvalCounts::fp)
      .def_readonly("fn", &EvalCounts::fn)
      .def("accuracy", &EvalCounts::accuracy);

  m.def(
      "ac_at_t",
      [](const CameraParams& phi, const RadialDistortion& psi, const ImageAnnotations& annotations, double t,
         const ImageDims& dims) { return ac_at_t(reproject_object(phi, psi, soccer_field(), dims), annotations, t); },
      py::arg("phi"), py::arg("psi"), py::arg("annotations"), py::arg("t"), py::arg("dims") = ImageDims{});
  m.def("compound_score", &compound_score, py::arg("ac5"), py::arg("ac10"), py::arg("ac20"), py::arg("cr"));
  m.def("completeness_ratio", &completeness_ratio, py::arg("delivered"), py::arg("total"));
  m.def(
      "iou",
      [](const Mat3& pred, const Mat3& gt, const ImageDims& dims, bool whole) {
        Homography p, g;
        p.h = pred;
        g.h = gt;
        return iou_topview(p, g, dims, whole ? IouMode::kWhole : IouMode::kPart);
      },
      py::arg("pred"), py::arg("gt"), py::arg("dims") = ImageDims{}, py::arg("whole") = false,
      "Top-view IoU of two world-to-image homographies.");

  m.def(
      "sample_camera",
      [](const std::string& hypothesis, std::uint64_t seed, const std::string& preset) {
        for (const auto& d : hypotheses_for(preset)) {
          if (d.name == hypothesis) return sample_camera(d, seed);
        }
        throw Error(ErrorCode::kInvalidArgument, "unknown hypothesis '" + hypothesis + "'");
      },
      py::arg("hypothesis") = "center", py::arg("seed") = 0, py::arg("preset") = "main_tribune");

  m.def(
      "render_annotations",
      [](const CameraParams& phi, const RadialDistortion& psi, const ImageDims& dims, double noise,
         std::uint64_t seed) {
        RenderOptions ro;
        ro.noise_sigma = noise;
        ro.seed = seed;
        return render_observations(phi, psi, soccer_field(), dims, ro).annotations;
      },
      py::arg("phi"), py::arg("psi") = RadialDistortion{}, py::arg("dims") = ImageDims{}, py::arg("noise") = 0.0,
      py::arg("seed") = 0, "Synthetic annotations {label: [[x, y], ...]} seen by a camera.");
}

// Python module gr3dkit._core. Conversion only; every number comes from the
// C++ library.

#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gr3dkit/camera.h"
#include "gr3dkit/error.h"
#include "gr3dkit/eval.h"
#include "gr3dkit/geom2d.h"
#include "gr3dkit/geom3d.h"
#include "gr3dkit/ground_text.h"
#include "gr3dkit/io.h"

namespace py = pybind11;

namespace gr3dkit {
namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Box3D> boxes3d(const Array& a, const char* name) {
  if (a.ndim() != 2 || a.shape(1) != 9) {
    throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must have shape (N, 9)");
  }
  std::vector<Box3D> out;
  const auto v = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    Box3D b;
    b.center = Vec3(v(i, 0), v(i, 1), v(i, 2));
    b.size = Vec3(v(i, 3), v(i, 4), v(i, 5));
    b.angles = {v(i, 6), v(i, 7), v(i, 8)};
    check_box(b);
    out.push_back(b);
  }
  return out;
}

std::vector<Box2D> boxes2d(const Array& a, const char* name) {
  if (a.ndim() != 2 || a.shape(1) != 4) {
    throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must have shape (N, 4)");
  }
  std::vector<Box2D> out;
  const auto v = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    Box2D b{v(i, 0), v(i, 1), v(i, 2), v(i, 3)};
    check_box(b);
    out.push_back(b);
  }
  return out;
}

template <class BoxT, class Fn>
py::array_t<double> pairwise(const std::vector<BoxT>& a, const std::vector<BoxT>& b, Fn iou) {
  py::array_t<double> out({a.size(), b.size()});
  auto m = out.mutable_unchecked<2>();
  std::vector<double> values(a.size() * b.size());
  {
    py::gil_scoped_release release;
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < b.size(); ++j) values[i * b.size() + j] = iou(a[i], b[j]);
    }
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = values[i * b.size() + j];
  }
  return out;
}

EvalOptions options(const std::optional<std::vector<double>>& thresholds, bool all_points,
                    unsigned jobs) {
  EvalOptions o;
  if (thresholds) o.thresholds = *thresholds;
  o.interpolation = all_points ? Interpolation::kAllPoints : Interpolation::k101Point;
  o.jobs = jobs;
  return o;
}

// Reports cross the boundary as the same JSON document the CLI writes.
std::string evaluate(bool three_d, const std::string& pred, const std::string& gt,
                     const std::optional<std::vector<double>>& thresholds, bool all_points,
                     unsigned jobs) {
  py::gil_scoped_release release;
  const auto p = io::parse_detection_records(pred, "<predictions>");
  const auto g = io::parse_detection_records(gt, "<ground truth>");
  const EvalOptions o = options(thresholds, all_points, jobs);
  const EvalReport r = three_d ? evaluate_3d(io::predictions_3d(p, "<predictions>"),
                                             io::ground_truth_3d(g, "<ground truth>"), o)
                               : evaluate_2d(io::predictions_2d(p, "<predictions>"),
                                             io::ground_truth_2d(g, "<ground truth>"), o);
  return io::to_json(r).dump();
}

py::tuple token_tuple(const GroundingToken& t) {
  const auto range = py::make_tuple(t.range.begin, t.range.end);
  return std::visit(
      [&](const auto& v) -> py::tuple {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Text>) {
          return py::make_tuple("text", v.text, range);
        } else if constexpr (std::is_same_v<T, Box2D>) {
          return py::make_tuple("bbox", py::make_tuple(v.x1, v.y1, v.x2, v.y2), range);
        } else if constexpr (std::is_same_v<T, Box3D>) {
          return py::make_tuple("bbox3d", io::to_json(v).template get<std::vector<double>>(), range);
        } else if constexpr (std::is_same_v<T, Points3D>) {
          py::array_t<double> pts({v.points.size(), std::size_t{3}});
          auto m = pts.mutable_unchecked<2>();
          for (std::size_t i = 0; i < v.points.size(); ++i) {
            for (int k = 0; k < 3; ++k) m(i, k) = v.points[i][k];
          }
          return py::make_tuple("points3d", pts, range);
        } else {
          return py::make_tuple("malformed", v.text, range);
        }
      },
      t.value);
}

py::array_t<double> sample_points(const py::array_t<float, py::array::c_style | py::array::forcecast>& depth,
                                  const std::optional<py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>>& valid,
                                  const std::vector<double>& intrinsics,
                                  const std::vector<double>& region, std::size_t n,
                                  std::uint64_t seed) {
  if (depth.ndim() != 2) throw Error(ErrorCode::kInvalidArgument, "depth must be (H, W)");
  if (intrinsics.size() != 4) throw Error(ErrorCode::kInvalidArgument, "intrinsics must be (fx, fy, cx, cy)");
  if (region.size() != 4) throw Error(ErrorCode::kInvalidArgument, "region must be (x1, y1, x2, y2)");
  const int h = static_cast<int>(depth.shape(0)), w = static_cast<int>(depth.shape(1));
  std::vector<float> d(depth.data(), depth.data() + depth.size());
  std::vector<std::uint8_t> mask;
  if (valid) {
    if (valid->size() != depth.size()) throw Error(ErrorCode::kInvalidArgument, "mask shape differs from depth");
    mask.assign(valid->data(), valid->data() + valid->size());
  }
  std::vector<Vec3> pts;
  {
    py::gil_scoped_release release;
    const DepthMap map(w, h, std::move(d), std::move(mask));
    const CameraIntrinsics k{intrinsics[0], intrinsics[1], intrinsics[2], intrinsics[3], w, h};
    pts = sample_region_points(map, k, {region[0], region[1], region[2], region[3]}, n, seed);
  }
  py::array_t<double> out({pts.size(), std::size_t{3}});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int k = 0; k < 3; ++k) m(i, k) = pts[i][k];
  }
  return out;
}

}  // namespace
}  // namespace gr3dkit

PYBIND11_MODULE(_core, m) {
  using namespace gr3dkit;
  m.doc() = "Native core of gr3dkit.";
  m.attr("FORMAT_VERSION") = kGroundTextFormatVersion;

  static py::exception<Error> error(m, "Error", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("iou3d", [](const Array& a, const Array& b) {
    return pairwise(boxes3d(a, "a"), boxes3d(b, "b"), [](const Box3D& x, const Box3D& y) { return iou3d(x, y); });
  }, py::arg("a"), py::arg("b"), "Pairwise 3D IoU of (N, 9) and (M, 9) box arrays.");
  m.def("iou2d", [](const Array& a, const Array& b) {
    return pairwise(boxes2d(a, "a"), boxes2d(b, "b"), [](const Box2D& x, const Box2D& y) { return iou2d(x, y); });
  }, py::arg("a"), py::arg("b"), "Pairwise 2D IoU of (N, 4) and (M, 4) box arrays.");

  m.def("evaluate_3d", [](const std::string& pred, const std::string& gt,
                          std::optional<std::vector<double>> thresholds, bool all_points, unsigned jobs) {
    return evaluate(true, pred, gt, thresholds, all_points, jobs);
  }, py::arg("pred"), py::arg("gt"), py::arg("thresholds") = py::none(),
     py::arg("all_points") = false, py::arg("jobs") = 1,
     "Evaluate JSON-lines predictions against ground truth; returns the JSON report.");
  m.def("evaluate_2d", [](const std::string& pred, const std::string& gt,
                          std::optional<std::vector<double>> thresholds, bool all_points, unsigned jobs) {
    return evaluate(false, pred, gt, thresholds, all_points, jobs);
  }, py::arg("pred"), py::arg("gt"), py::arg("thresholds") = py::none(),
     py::arg("all_points") = false, py::arg("jobs") = 1);
  m.def("evaluate_gcot", [](const std::string& records) {
    return io::to_json(evaluate_gcot(io::parse_gcot_records(records, "<records>"))).dump();
  }, py::arg("records"));

  m.def("parse", [](const std::string& text, bool strict) {
    py::list out;
    for (const auto& t : parse(text, strict ? ParseMode::kStrict : ParseMode::kLenient)) {
      out.append(token_tuple(t));
    }
    return out;
  }, py::arg("text"), py::arg("strict") = false,
     "Tokenize grounded text into (kind, value, (begin, end)) tuples.");
  m.def("canonical_text", [](const std::string& text) {
    return serialize(parse(text, ParseMode::kStrict));
  }, py::arg("text"), "Re-serialize grounded text in canonical form.");

  m.def("sample_region_points", &sample_points, py::arg("depth"), py::arg("valid") = py::none(),
        py::arg("intrinsics"), py::arg("region"), py::arg("n") = 100, py::arg("seed") = 0);

  m.def("normalize_intrinsics", [](double fx, int width, int height) {
    const auto n = normalize_intrinsics({fx, fx, 0.5 * width, 0.5 * height, width, height});
    return py::make_tuple(n.width, n.height, n.scale);
  }, py::arg("fx"), py::arg("width"), py::arg("height"));
}

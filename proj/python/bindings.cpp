#include "freemap/eval.hpp"
#include "freemap/io.hpp"
#include "freemap/pipeline.hpp"
#include "freemap/raycast.hpp"
#include "freemap/scene.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace freemap;
using nlohmann::json;

namespace {

using Points = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Vec3> to_points(const Points& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw std::invalid_argument("points must have shape (N, 3)");
  const auto r = a.unchecked<2>();
  std::vector<Vec3> out(static_cast<std::size_t>(r.shape(0)));
  for (py::ssize_t i = 0; i < r.shape(0); ++i) out[static_cast<std::size_t>(i)] = Vec3(r(i, 0), r(i, 1), r(i, 2));
  return out;
}

Vec3 to_vec3(const Points& a) {
  if (a.size() != 3) throw std::invalid_argument("expected 3 coordinates");
  return Vec3(a.data()[0], a.data()[1], a.data()[2]);
}

py::array_t<double> from_points(const std::vector<Vec3>& pts) {
  py::array_t<double> a({static_cast<py::ssize_t>(pts.size()), py::ssize_t{3}});
  auto w = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int k = 0; k < 3; ++k) w(static_cast<py::ssize_t>(i), k) = pts[i][k];
  return a;
}

py::array_t<std::int32_t> from_cells(const std::vector<Index3>& cells) {
  py::array_t<std::int32_t> a({static_cast<py::ssize_t>(cells.size()), py::ssize_t{3}});
  auto w = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (int k = 0; k < 3; ++k) w(static_cast<py::ssize_t>(i), k) = cells[i][k];
  return a;
}

Pose to_pose(const Points& m) {
  if (m.ndim() != 2 || m.shape(0) != 4 || m.shape(1) != 4) throw std::invalid_argument("pose must be a 4x4 matrix");
  const auto r = m.unchecked<2>();
  Pose p = Pose::Identity();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) p.matrix()(i, j) = r(i, j);
  return p;
}

py::array_t<double> from_pose(const Pose& p) {
  py::array_t<double> a({py::ssize_t{4}, py::ssize_t{4}});
  auto w = a.mutable_unchecked<2>();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) w(i, j) = p.matrix()(i, j);
  return a;
}

template <typename T>
py::array_t<T> from_vector(const std::vector<T>& v) {
  py::array_t<T> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

PipelineConfig resolve_config(const py::object& config) {
  if (config.is_none()) return preset_config("outdoor");
  if (py::isinstance<py::str>(config)) return preset_config(config.cast<std::string>());
  return config_from_json(from_py(config));
}

SyntheticScene resolve_scene(const py::object& scene) {
  if (py::isinstance<py::str>(scene)) return bundled_scenario(scene.cast<std::string>());
  return scene_from_json(from_py(scene));
}

py::dict metrics_dict(const MetricsReport& r) { return to_py(metrics_to_json(r)); }

py::dict timings_dict(const StageTimings& t) {
  py::dict d;
  d["raycast"] = t.raycast;
  d["free_space"] = t.free_space;
  d["label"] = t.label;
  d["integrate"] = t.integrate;
  d["clear"] = t.clear;
  d["total"] = t.total;
  return d;
}

py::dict step_dict(const StepResult& r) {
  std::vector<std::uint8_t> labels;
  labels.reserve(r.labeled.labels.size());
  for (DynamicLevel l : r.labeled.labels) labels.push_back(static_cast<std::uint8_t>(l));
  py::dict d;
  d["points"] = from_points(r.labeled.points);
  d["labels"] = from_vector(labels);
  d["newly_freed"] = from_cells(r.update.newly_freed.sorted());
  d["freed"] = r.update.freed;
  d["reverted"] = r.update.reverted;
  d["released_blocks"] = r.update.released_blocks;
  d["raised_subvoxels"] = r.clear.raised_subvoxels;
  d["enhanced_endpoints"] = r.enhanced_endpoints;
  d["traversed_voxels"] = r.traversed_voxels;
  d["occupied_voxels"] = r.occupied_voxels;
  d["timings_ms"] = timings_dict(r.timings);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Online dynamic object removal for LiDAR maps";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_RuntimeError);

  m.attr("STATIC") = static_cast<int>(DynamicLevel::kStatic);
  m.attr("AGGRESSIVE") = static_cast<int>(DynamicLevel::kAggressive);
  m.attr("MODERATE") = static_cast<int>(DynamicLevel::kModerate);
  m.attr("CONSERVATIVE") = static_cast<int>(DynamicLevel::kConservative);

  m.def(
      "preset_config", [](const std::string& name) { return to_py(to_json(preset_config(name))); }, py::arg("name"));
  m.def(
      "validate_config", [](const py::object& c) { return to_py(to_json(resolve_config(c))); }, py::arg("config"),
      "Fill defaults and validate; returns the complete configuration.");

  py::class_<Pipeline>(m, "Pipeline")
      .def(py::init([](const py::object& config) { return Pipeline(resolve_config(config)); }),
           py::arg("config") = py::none())
      .def(
          "step",
          [](Pipeline& p, const Points& points, const Points& pose) {
            Scan s{to_points(points), to_pose(pose), p.timestep() + 1};
            StepResult r;
            {
              py::gil_scoped_release release;
              r = p.step(s);
            }
            return step_dict(r);
          },
          py::arg("points"), py::arg("pose"), "Process the next scan (sensor-frame points, 4x4 sensor-to-world pose).")
      .def_property_readonly("timestep", &Pipeline::timestep)
      .def_property_readonly("config", [](const Pipeline& p) { return to_py(to_json(p.config())); })
      .def("static_points", [](const Pipeline& p) { return from_points(p.snapshot().points); })
      .def("free_voxel_count",
           [](const Pipeline& p) {
             std::size_t n = 0;
             p.free_map().for_each_stored_voxel([&](const Index3&, const FreeVoxel& v) { n += v.free; });
             return n;
           })
      .def("released_block_count", [](const Pipeline& p) { return p.free_map().released_block_count(); })
      .def(
          "write_map", [](const Pipeline& p, const std::string& path) { write_map(path, p.snapshot()); },
          py::arg("path"));

  m.def(
      "traverse",
      [](const Points& origin, const Points& endpoint, double edge) {
        return from_cells(traverse(Ray{to_vec3(origin), to_vec3(endpoint)}, edge));
      },
      py::arg("origin"), py::arg("endpoint"), py::arg("edge"),
      "Voxels crossed from origin up to, not including, the endpoint voxel.");

  m.def("bundled_scenario_names", &bundled_scenario_names);
  m.def(
      "scenario", [](const std::string& name) { return to_py(scene_to_json(bundled_scenario(name))); },
      py::arg("name"));
  m.def(
      "scenario_config", [](const py::object& scene) { return to_py(to_json(scenario_config(resolve_scene(scene)))); },
      py::arg("scene"));
  m.def(
      "simulate_scan",
      [](const py::object& scene, int t) {
        const DatasetFrame f = simulate_scan(resolve_scene(scene), t);
        return py::make_tuple(from_points(f.points), from_vector(f.dynamic), from_pose(f.pose));
      },
      py::arg("scene"), py::arg("t"), "Returns (points, dynamic_flags, pose) for frame t.");
  m.def(
      "write_scene_dataset",
      [](const py::object& scene, const std::string& dir) { write_scene_dataset(resolve_scene(scene), dir); },
      py::arg("scene"), py::arg("dir"));

  py::class_<GroundTruth>(m, "GroundTruth")
      .def_property_readonly("static_voxels", [](const GroundTruth& g) { return g.static_voxels.size(); })
      .def_property_readonly("dynamic_voxels", [](const GroundTruth& g) { return g.dynamic_voxels.size(); })
      .def_readonly("voxel_size", &GroundTruth::voxel_size);

  py::class_<GroundTruthBuilder>(m, "GroundTruthBuilder")
      .def(py::init<double>(), py::arg("voxel_size"))
      .def(
          "add",
          [](GroundTruthBuilder& b, const Points& points, const py::array_t<std::uint8_t, py::array::forcecast>& dyn) {
            const std::vector<std::uint8_t> flags(dyn.data(), dyn.data() + dyn.size());
            b.add(to_points(points), flags);
          },
          py::arg("points"), py::arg("dynamic"), "World-frame points with one 0/1 flag each.")
      .def("finish", &GroundTruthBuilder::finish);

  m.def(
      "score",
      [](const Points& map_points, const GroundTruth& gt, std::optional<double> max_range,
         const std::optional<Points>& trajectory) {
        const auto pts = to_points(map_points);
        if (!max_range) return metrics_dict(score(pts, gt));
        if (!trajectory) throw std::invalid_argument("max_range needs a trajectory");
        return metrics_dict(score_within_range(pts, gt, *max_range, to_points(*trajectory)));
      },
      py::arg("map_points"), py::arg("gt"), py::arg("max_range") = py::none(), py::arg("trajectory") = py::none());
  m.def("f1_score", &f1_score, py::arg("pr"), py::arg("rr"));

  m.def(
      "read_scan_bin",
      [](const std::string& path) {
        const ScanRecord r = read_scan_bin(path);
        return py::make_tuple(from_points(r.points), from_vector(r.intensity));
      },
      py::arg("path"), "Returns (points, intensity).");
  m.def(
      "read_poses",
      [](const std::string& path, const std::optional<std::string>& calib) {
        const auto poses = read_poses(path, calib ? std::optional<Pose>(read_calib(*calib)) : std::nullopt);
        py::list out;
        for (const Pose& p : poses) out.append(from_pose(p));
        return out;
      },
      py::arg("path"), py::arg("calib") = py::none());
  m.def(
      "read_ply",
      [](const std::string& path) {
        const PlyData d = read_ply(path);
        return py::make_tuple(from_points(d.points), d.comments);
      },
      py::arg("path"), "Returns (points, comments).");
}

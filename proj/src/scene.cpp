#include "freemap/scene.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace freemap {

namespace {

using nlohmann::json;

constexpr double kDeg = M_PI / 180.0;
constexpr double kEps = 1e-9;

// Entry distance of the ray into the box, ignoring boxes that contain the origin.
std::optional<double> ray_box(const Aabb& box, const Vec3& o, const Vec3& d) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < box.min[a] || o[a] > box.max[a]) return std::nullopt;
      continue;
    }
    double ta = (box.min[a] - o[a]) / d[a];
    double tb = (box.max[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1 || t0 <= kEps) return std::nullopt;
  return t0;
}

std::optional<double> ray_plane(const Plane& plane, const Vec3& o, const Vec3& d) {
  const double denom = plane.normal.dot(d);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const double t = (plane.offset - plane.normal.dot(o)) / denom;
  if (t <= kEps) return std::nullopt;
  return t;
}

Vec3 vec(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument(where + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Trajectory trajectory_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument(where + " must be a non-empty array");
  std::vector<Keyframe> keys;
  for (const json& k : j) {
    Keyframe kf;
    kf.time = k.at("t").get<double>();
    kf.position = vec(k.at("position"), where + ".position");
    kf.yaw = k.value("yaw_deg", 0.0) * kDeg;
    keys.push_back(kf);
  }
  return Trajectory(std::move(keys));
}

json trajectory_json(const Trajectory& tr) {
  json out = json::array();
  for (const Keyframe& k : tr.keys()) {
    out.push_back({{"t", k.time}, {"position", vec_json(k.position)}, {"yaw_deg", k.yaw / kDeg}});
  }
  return out;
}

json box_json(const Vec3& lo, const Vec3& hi) { return {{"type", "box"}, {"min", vec_json(lo)}, {"max", vec_json(hi)}}; }

json key(double t, double x, double y, double z, double yaw_deg = 0.0) {
  return {{"t", t}, {"position", json::array({x, y, z})}, {"yaw_deg", yaw_deg}};
}

// Surfaces sit slightly off the grid planes so returns do not straddle cell boundaries.
constexpr double kOff = 0.03;

json room_crossing() {
  json s;
  s["name"] = "room-crossing";
  s["preset"] = "indoor";
  s["rate_hz"] = 10.0;
  s["frames"] = 100;
  const double lo = kOff;
  const double hi = 10.0 + kOff;
  const double top = 3.0 + kOff;
  const double w = 0.2;
  s["static"] = json::array({
      box_json({lo - w, lo - w, lo - w}, {hi + w, hi + w, lo}),    // floor
      box_json({lo - w, lo - w, top}, {hi + w, hi + w, top + w}),  // ceiling
      box_json({lo - w, lo - w, lo}, {lo, hi + w, top}),           // walls
      box_json({hi, lo - w, lo}, {hi + w, hi + w, top}),
      box_json({lo, lo - w, lo}, {hi, lo, top}),
      box_json({lo, hi, lo}, {hi, hi + w, top}),
  });
  const double cz = lo + 1.0;
  const double cy = 6.5 + kOff;
  s["dynamic"] = json::array({{{"name", "box"},
                               {"size", {1.0, 1.0, 2.0}},
                               {"trajectory", {key(0.0, 1.0 + kOff, cy, cz), key(8.0, 9.0 + kOff, cy, cz),
                                               key(10.0, 7.0 + kOff, cy, cz)}}}});
  s["sensor"] = {{"phi_min_deg", -180.0}, {"phi_max_deg", 180.0}, {"theta_min_deg", -30.0},
                 {"theta_max_deg", 30.0}, {"cols", 1024},         {"rows", 64},
                 {"max_range", 30.0},     {"mount_yaw_deg", 0.0}, {"trajectory", {key(0.0, 5.0, 3.0, 1.5)}}};
  return s;
}

json trailing_vehicle() {
  json s;
  s["name"] = "trailing-vehicle";
  s["preset"] = "outdoor";
  s["rate_hz"] = 10.0;
  s["frames"] = 100;
  const double ground = 0.02;
  s["static"] = json::array({
      {{"type", "plane"}, {"normal", {0.0, 0.0, 1.0}}, {"offset", ground}},
      box_json({-120.0, 8.0 + kOff, ground}, {200.0, 9.0 + kOff, 3.0}),
      box_json({-120.0, -9.0 - kOff, ground}, {200.0, -8.0 - kOff, 3.0}),
  });
  // Ego drives +x at 8 m/s; the follower keeps its front 3 m behind the sensor.
  const double v = 8.0;
  const double cz = ground + 0.75;
  json traj = json::array();
  const std::vector<std::pair<double, double>> lanes{{0.0, 0.0}, {3.0, 0.0}, {4.0, 3.5}, {6.0, 3.5},
                                                      {7.0, 0.0}, {10.0, 0.0}};
  for (const auto& [t, y] : lanes) traj.push_back(key(t, v * t - 5.0, y + kOff, cz));
  s["dynamic"] = json::array({{{"name", "follower"}, {"size", {4.0, 1.8, 1.5}}, {"trajectory", traj}}});
  s["sensor"] = {{"phi_min_deg", -90.0},
                 {"phi_max_deg", 90.0},
                 {"theta_min_deg", -20.0},
                 {"theta_max_deg", 5.0},
                 {"cols", 512},
                 {"rows", 64},
                 {"max_range", 80.0},
                 {"mount_yaw_deg", 180.0},
                 {"trajectory", {key(0.0, 0.0, 0.0, 1.8), key(10.0, v * 10.0, 0.0, 1.8)}}};
  return s;
}

json sky_crossing() {
  json s;
  s["name"] = "sky-crossing";
  s["preset"] = "outdoor";
  s["rate_hz"] = 10.0;
  s["frames"] = 100;
  const double ground = 0.02;
  s["static"] = json::array({
      {{"type", "plane"}, {"normal", {0.0, 0.0, 1.0}}, {"offset", ground}},
      box_json({20.0 + kOff, -25.0, ground}, {30.0 + kOff, -12.0, 8.0}),
      box_json({-18.0, -6.0 + kOff, ground}, {-16.0, -4.0 + kOff, 2.5}),
      box_json({6.0 + kOff, -3.0, ground}, {6.5 + kOff, -2.5, 1.0}),
  });
  const double cz = ground + 1.75;
  const double cy = 10.0 + kOff;
  s["dynamic"] = json::array({{{"name", "truck"},
                               {"size", {8.0, 2.5, 3.5}},
                               {"trajectory", {key(0.0, -25.0, cy, cz), key(10.0, 25.0, cy, cz)}}}});
  s["sensor"] = {{"phi_min_deg", -180.0}, {"phi_max_deg", 180.0}, {"theta_min_deg", -15.0},
                 {"theta_max_deg", 15.0}, {"cols", 1024},         {"rows", 64},
                 {"max_range", 80.0},     {"mount_yaw_deg", 0.0}, {"trajectory", {key(0.0, 0.0, 0.0, 1.8)}}};
  return s;
}

json corridor() {
  json s;
  s["name"] = "corridor";
  s["preset"] = "indoor";
  s["rate_hz"] = 10.0;
  s["frames"] = 100;
  const double lo = kOff;
  const double top = 3.0 + kOff;
  const double w = 0.2;
  s["static"] = json::array({
      box_json({-w, lo - w, lo - w}, {30.0 + w, 3.0 + lo + w, lo}),
      box_json({-w, lo - w, top}, {30.0 + w, 3.0 + lo + w, top + w}),
      box_json({-w, lo - w, lo}, {30.0 + w, lo, top}),
      box_json({-w, 3.0 + lo, lo}, {30.0 + w, 3.0 + lo + w, top}),
      box_json({-w - 0.2, lo, lo}, {-w, 3.0 + lo, top}),
      box_json({30.0 + w, lo, lo}, {30.0 + w + 0.2, 3.0 + lo, top}),
      box_json({12.0 + kOff, 2.5 + lo, lo}, {12.6 + kOff, 3.0 + lo, 1.0}),
  });
  const double cz = lo + 0.9;
  s["dynamic"] = json::array({{{"name", "person"},
                               {"size", {0.5, 0.5, 1.8}},
                               {"trajectory", {key(0.0, 20.0, 0.6 + lo, cz), key(10.0, 8.0, 0.6 + lo, cz)}}}});
  s["sensor"] = {{"phi_min_deg", -180.0},
                 {"phi_max_deg", 180.0},
                 {"theta_min_deg", -30.0},
                 {"theta_max_deg", 30.0},
                 {"cols", 1024},
                 {"rows", 32},
                 {"max_range", 30.0},
                 {"mount_yaw_deg", 0.0},
                 {"trajectory", {key(0.0, 2.0, 1.9 + lo, 1.2), key(10.0, 12.0, 1.9 + lo, 1.2)}}};
  return s;
}

json sparse_sensor() {
  json s;
  s["name"] = "sparse-sensor";
  s["preset"] = "sparse";
  s["rate_hz"] = 10.0;
  s["frames"] = 60;
  const double ground = 0.02;
  s["static"] = json::array({
      {{"type", "plane"}, {"normal", {0.0, 0.0, 1.0}}, {"offset", ground}},
      box_json({-50.0, 12.0 + kOff, ground}, {150.0, 20.0, 10.0}),
      box_json({-50.0, -20.0, ground}, {150.0, -12.0 - kOff, 10.0}),
  });
  const double cz = ground + 0.75;
  s["dynamic"] = json::array({{{"name", "car"},
                               {"size", {4.0, 1.8, 1.5}},
                               {"trajectory", {key(0.0, 90.0, -3.5 + kOff, cz), key(6.0, 30.0, -3.5 + kOff, cz)}}}});
  s["sensor"] = {{"phi_min_deg", -180.0},
                 {"phi_max_deg", 180.0},
                 {"theta_min_deg", -15.0},
                 {"theta_max_deg", 17.0},
                 {"cols", 900},
                 {"rows", 16},
                 {"max_range", 80.0},
                 {"mount_yaw_deg", 0.0},
                 {"trajectory", {key(0.0, 0.0, 0.0, 1.8), key(6.0, 60.0, 0.0, 1.8)}}};
  return s;
}

}  // namespace

Trajectory::Trajectory(std::vector<Keyframe> keys) : keys_(std::move(keys)) {
  if (keys_.empty()) throw std::invalid_argument("trajectory needs at least one keyframe");
  for (std::size_t i = 1; i < keys_.size(); ++i) {
    if (!(keys_[i].time > keys_[i - 1].time)) throw std::invalid_argument("trajectory times must increase strictly");
  }
}

std::size_t Trajectory::segment(double t, double& alpha) const {
  alpha = 0.0;
  if (keys_.size() == 1 || t <= keys_.front().time) return 0;
  if (t >= keys_.back().time) return keys_.size() - 1;
  const auto it = std::upper_bound(keys_.begin(), keys_.end(), t,
                                   [](double v, const Keyframe& k) { return v < k.time; });
  const std::size_t i = static_cast<std::size_t>(it - keys_.begin()) - 1;
  alpha = (t - keys_[i].time) / (keys_[i + 1].time - keys_[i].time);
  return i;
}

Vec3 Trajectory::position(double t) const {
  if (keys_.empty()) return Vec3::Zero();
  double a = 0.0;
  const std::size_t i = segment(t, a);
  if (a == 0.0) return keys_[i].position;
  return keys_[i].position + a * (keys_[i + 1].position - keys_[i].position);
}

double Trajectory::yaw(double t) const {
  if (keys_.empty()) return 0.0;
  double a = 0.0;
  const std::size_t i = segment(t, a);
  if (a == 0.0) return keys_[i].yaw;
  return keys_[i].yaw + a * (keys_[i + 1].yaw - keys_[i].yaw);
}

Aabb DynamicBox::bounds(double t) const {
  const Vec3 c = trajectory.position(t);
  return {c - size / 2.0, c + size / 2.0};
}

SensorModel BeamTable::sensor_model(const SensorModel& limits) const {
  SensorModel s = limits;
  s.phi_min = phi_min;
  s.phi_max = phi_max;
  s.theta_min = theta_min;
  s.theta_max = theta_max;
  s.phi_res = (phi_max - phi_min) / cols;
  s.theta_res = (theta_max - theta_min) / rows;
  s.fov_mask.clear();
  return s;
}

Vec3 BeamTable::direction(int col, int row) const {
  const double phi = phi_min + (col + 0.5) * (phi_max - phi_min) / cols;
  const double theta = theta_min + (row + 0.5) * (theta_max - theta_min) / rows;
  return {std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), std::sin(theta)};
}

Pose SyntheticScene::pose(int t) const {
  const double time = time_of(t);
  Pose p = Pose::Identity();
  p.linear() = Eigen::AngleAxisd(sensor.yaw(time) + mount_yaw, Vec3::UnitZ()).toRotationMatrix();
  p.translation() = sensor.position(time);
  return p;
}

void SyntheticScene::validate() const {
  auto fail = [&](const std::string& what) { throw std::invalid_argument("scene '" + name + "': " + what); };
  if (!(rate_hz > 0.0)) fail("rate_hz must be positive");
  if (frames < 1) fail("frames must be >= 1");
  if (beams.cols < 1 || beams.rows < 1) fail("sensor needs at least one row and column");
  if (!(beams.phi_max > beams.phi_min) || !(beams.theta_max > beams.theta_min)) fail("sensor bounds must increase");
  if (!(max_range > 0.0)) fail("sensor max_range must be positive");
  if (sensor.keys().empty()) fail("sensor trajectory is empty");
  for (const Aabb& b : boxes) {
    if (!((b.max - b.min).array() > 0.0).all()) fail("static box has zero or negative extent");
  }
  for (const Plane& p : planes) {
    if (!(p.normal.norm() > 0.0)) fail("plane normal must be non-zero");
  }
  for (const DynamicBox& d : dynamic) {
    if (!(d.size.array() > 0.0).all()) fail("dynamic box '" + d.name + "' has zero or negative extent");
    if (d.trajectory.keys().empty()) fail("dynamic box '" + d.name + "' has no trajectory");
  }
}

std::optional<Hit> nearest_hit(const SyntheticScene& scene, double time, const Vec3& origin, const Vec3& dir,
                               double max_range) {
  std::optional<Hit> best;
  auto consider = [&](std::optional<double> t, bool dynamic) {
    if (!t || *t > max_range) return;
    if (!best || *t < best->distance) best = Hit{*t, dynamic};
  };
  for (const Plane& p : scene.planes) consider(ray_plane(p, origin, dir), false);
  for (const Aabb& b : scene.boxes) consider(ray_box(b, origin, dir), false);
  for (const DynamicBox& d : scene.dynamic) consider(ray_box(d.bounds(time), origin, dir), true);
  return best;
}

DatasetFrame simulate_scan(const SyntheticScene& scene, int t) {
  DatasetFrame frame;
  frame.pose = scene.pose(t);
  const double time = scene.time_of(t);
  const Vec3 origin = frame.pose.translation();
  const Eigen::Matrix3d r = frame.pose.linear();
  for (int row = 0; row < scene.beams.rows; ++row) {
    for (int col = 0; col < scene.beams.cols; ++col) {
      const Vec3 d = scene.beams.direction(col, row);
      const auto hit = nearest_hit(scene, time, origin, r * d, scene.max_range);
      if (!hit) continue;
      frame.points.push_back(d * hit->distance);
      frame.dynamic.push_back(hit->dynamic ? 1 : 0);
    }
  }
  return frame;
}

SyntheticScene scene_from_json(const nlohmann::json& doc) {
  try {
    SyntheticScene s;
    s.name = doc.value("name", std::string("scene"));
    s.preset = doc.value("preset", std::string("outdoor"));
    s.rate_hz = doc.value("rate_hz", 10.0);
    s.frames = doc.value("frames", 100);
    for (const json& p : doc.value("static", json::array())) {
      const std::string type = p.at("type").get<std::string>();
      if (type == "box") {
        s.boxes.push_back({vec(p.at("min"), "box.min"), vec(p.at("max"), "box.max")});
      } else if (type == "plane") {
        const Vec3 n = vec(p.at("normal"), "plane.normal");
        if (!(n.norm() > 0.0)) throw std::invalid_argument("plane normal must be non-zero");
        const double norm = n.norm();
        s.planes.push_back({n / norm, p.at("offset").get<double>() / norm});
      } else {
        throw std::invalid_argument("unknown static primitive type '" + type + "'");
      }
    }
    for (const json& d : doc.value("dynamic", json::array())) {
      DynamicBox box;
      box.name = d.value("name", std::string("object"));
      box.size = vec(d.at("size"), "dynamic.size");
      box.trajectory = trajectory_from_json(d.at("trajectory"), "dynamic.trajectory");
      s.dynamic.push_back(std::move(box));
    }
    const json& sensor = doc.at("sensor");
    s.beams.phi_min = sensor.value("phi_min_deg", -180.0) * kDeg;
    s.beams.phi_max = sensor.value("phi_max_deg", 180.0) * kDeg;
    s.beams.theta_min = sensor.value("theta_min_deg", -25.0) * kDeg;
    s.beams.theta_max = sensor.value("theta_max_deg", 3.0) * kDeg;
    s.beams.cols = sensor.value("cols", 1024);
    s.beams.rows = sensor.value("rows", 64);
    s.max_range = sensor.value("max_range", 100.0);
    s.mount_yaw = sensor.value("mount_yaw_deg", 0.0) * kDeg;
    s.sensor = trajectory_from_json(sensor.at("trajectory"), "sensor.trajectory");
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("invalid scene document: ") + e.what());
  }
}

nlohmann::json scene_to_json(const SyntheticScene& s) {
  json doc;
  doc["name"] = s.name;
  doc["preset"] = s.preset;
  doc["rate_hz"] = s.rate_hz;
  doc["frames"] = s.frames;
  json st = json::array();
  for (const Plane& p : s.planes) st.push_back({{"type", "plane"}, {"normal", vec_json(p.normal)}, {"offset", p.offset}});
  for (const Aabb& b : s.boxes) st.push_back(box_json(b.min, b.max));
  doc["static"] = st;
  json dy = json::array();
  for (const DynamicBox& d : s.dynamic) {
    dy.push_back({{"name", d.name}, {"size", vec_json(d.size)}, {"trajectory", trajectory_json(d.trajectory)}});
  }
  doc["dynamic"] = dy;
  doc["sensor"] = {{"phi_min_deg", s.beams.phi_min / kDeg},
                   {"phi_max_deg", s.beams.phi_max / kDeg},
                   {"theta_min_deg", s.beams.theta_min / kDeg},
                   {"theta_max_deg", s.beams.theta_max / kDeg},
                   {"cols", s.beams.cols},
                   {"rows", s.beams.rows},
                   {"max_range", s.max_range},
                   {"mount_yaw_deg", s.mount_yaw / kDeg},
                   {"trajectory", trajectory_json(s.sensor)}};
  return doc;
}

SyntheticScene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open scene file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
  return scene_from_json(doc);
}

const std::vector<std::string>& bundled_scenario_names() {
  static const std::vector<std::string> names{"room-crossing", "trailing-vehicle", "corridor", "sparse-sensor",
                                              "sky-crossing"};
  return names;
}

SyntheticScene bundled_scenario(const std::string& name) {
  if (name == "room-crossing") return scene_from_json(room_crossing());
  if (name == "trailing-vehicle") return scene_from_json(trailing_vehicle());
  if (name == "corridor") return scene_from_json(corridor());
  if (name == "sparse-sensor") return scene_from_json(sparse_sensor());
  if (name == "sky-crossing") return scene_from_json(sky_crossing());
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

PipelineConfig scenario_config(const SyntheticScene& scene) {
  PipelineConfig c = preset_config(scene.preset);
  c.sensor = scene.beams.sensor_model(c.sensor);
  c.validate();
  return c;
}

void write_scene_dataset(const SyntheticScene& scene, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<Pose> poses;
  for (int t = 0; t < scene.frames; ++t) {
    const DatasetFrame frame = simulate_scan(scene, t);
    write_dataset_frame(dir, static_cast<std::size_t>(t), frame);
    poses.push_back(frame.pose);
  }
  write_poses((std::filesystem::path(dir) / "poses.txt").string(), poses);
  write_json((std::filesystem::path(dir) / "config.json").string(), to_json(scenario_config(scene)));
  write_json((std::filesystem::path(dir) / "scene.json").string(), scene_to_json(scene));
}

}  // namespace freemap

#pragma once

#include "freemap/config.hpp"
#include "freemap/frontend.hpp"
#include "freemap/io.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace freemap {

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
};

/// Infinite plane {x : normal . x = offset}.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
};

struct Keyframe {
  double time = 0.0;  // s
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;  // rad
};

/// Piecewise-linear motion; held constant before the first and after the last keyframe.
class Trajectory {
 public:
  Trajectory() = default;
  /// Throws std::invalid_argument unless times are strictly increasing and non-empty.
  explicit Trajectory(std::vector<Keyframe> keys);

  Vec3 position(double t) const;
  double yaw(double t) const;
  const std::vector<Keyframe>& keys() const { return keys_; }

 private:
  std::size_t segment(double t, double& alpha) const;

  std::vector<Keyframe> keys_;
};

/// Axis-aligned box whose center follows a trajectory.
struct DynamicBox {
  std::string name;
  Vec3 size = Vec3::Ones();
  Trajectory trajectory;

  Aabb bounds(double t) const;
};

/// Beam layout: rows x cols beams at the pixel centers of the matching depth image.
struct BeamTable {
  double phi_min = -M_PI;
  double phi_max = M_PI;
  double theta_min = -25.0 * M_PI / 180.0;
  double theta_max = 3.0 * M_PI / 180.0;
  int cols = 1024;
  int rows = 64;

  /// Depth-image layout whose pixels coincide with the beams.
  SensorModel sensor_model(const SensorModel& limits) const;
  Vec3 direction(int col, int row) const;
};

struct SyntheticScene {
  std::string name;
  std::string preset = "outdoor";
  double rate_hz = 10.0;
  int frames = 100;
  std::vector<Aabb> boxes;
  std::vector<Plane> planes;
  std::vector<DynamicBox> dynamic;
  BeamTable beams;
  double max_range = 100.0;  // m
  double mount_yaw = 0.0;    // rad, sensor heading relative to the trajectory yaw
  Trajectory sensor;

  double time_of(int t) const { return t / rate_hz; }
  /// Sensor-to-world transform at frame t.
  Pose pose(int t) const;
  /// Throws std::invalid_argument on degenerate primitives or bad settings.
  void validate() const;
};

struct Hit {
  double distance = 0.0;
  bool dynamic = false;
};

/// Nearest intersection along the unit direction `dir` within (0, max_range].
/// Rays starting inside a primitive ignore that primitive.
std::optional<Hit> nearest_hit(const SyntheticScene& scene, double time, const Vec3& origin, const Vec3& dir,
                               double max_range);

/// One return per beam that hits something; points in the sensor frame with exact flags.
DatasetFrame simulate_scan(const SyntheticScene& scene, int t);

SyntheticScene scene_from_json(const nlohmann::json& doc);
nlohmann::json scene_to_json(const SyntheticScene& scene);
SyntheticScene load_scene(const std::string& path);

/// "room-crossing", "trailing-vehicle", "corridor", "sparse-sensor", "sky-crossing".
const std::vector<std::string>& bundled_scenario_names();
SyntheticScene bundled_scenario(const std::string& name);

/// Preset configuration with the sensor layout replaced by the scene's beams.
PipelineConfig scenario_config(const SyntheticScene& scene);

/// Writes every frame, poses.txt and config.json into a KITTI-style directory.
void write_scene_dataset(const SyntheticScene& scene, const std::string& dir);

}  // namespace freemap

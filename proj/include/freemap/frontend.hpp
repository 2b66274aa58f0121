#pragma once

#include "freemap/free_space_map.hpp"
#include "freemap/grid.hpp"
#include "freemap/raycast.hpp"
#include "freemap/voxel_set.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace freemap {

using Pose = Eigen::Isometry3d;

/// Angular layout of the depth image plus the raycast enhancement limits.
/// Azimuth phi = atan2(y, x); elevation theta = atan2(z, hypot(x, y)).
/// Bins are half-open: [min, max).
struct SensorModel {
  double phi_min = -M_PI;
  double phi_max = M_PI;
  double theta_min = -25.0 * M_PI / 180.0;
  double theta_max = 3.0 * M_PI / 180.0;
  double phi_res = 0.2 * M_PI / 180.0;
  double theta_res = 0.4375 * M_PI / 180.0;
  /// Row-major (row = elevation bin, col = azimuth bin); empty means all pixels in the pattern.
  std::vector<std::uint8_t> fov_mask;
  double r_max = 50.0;  // m
  double r_m = 0.5;     // m

  int cols() const;  // azimuth bins (m)
  int rows() const;  // elevation bins (n)
  bool in_pattern(int col, int row) const;
  /// Unit bearing through the pixel center.
  Vec3 pixel_direction(int col, int row) const;

  /// Throws std::invalid_argument on inconsistent values.
  void validate() const;
};

/// Named sensor layouts: "hdl64", "os2-128", "vlp16", "solid-state".
SensorModel sensor_preset(const std::string& name);

struct Scan {
  std::vector<Vec3> points;  // sensor frame
  Pose pose = Pose::Identity();  // sensor -> world
  int timestep = 0;
};

/// Throws std::invalid_argument unless the rotation is orthonormal with det +1 (1e-6).
void validate_pose(const Pose& pose);

struct DepthImage {
  int cols = 0;
  int rows = 0;
  std::vector<float> range;           // valid where occupied
  std::vector<std::uint8_t> occupied;  // 1 when at least one point maps to the pixel

  std::size_t index(int col, int row) const { return static_cast<std::size_t>(row) * cols + col; }
  bool is_occupied(int col, int row) const { return occupied[index(col, row)] != 0; }
  float at(int col, int row) const { return range[index(col, row)]; }
};

/// Pixel bin of a sensor-frame point, or false when outside the angular bounds.
bool pixel_of(const SensorModel& sensor, const Vec3& p, int& col, int& row);

/// Minimum range per pixel. Points outside the angular bounds are dropped.
DepthImage project_depth_image(const std::vector<Vec3>& points, const SensorModel& sensor);

/// Pixels inside the scanning pattern that received no return.
struct PixelRegion {
  int cols = 0;
  int rows = 0;
  std::vector<std::uint8_t> mask;

  bool contains(int col, int row) const { return mask[static_cast<std::size_t>(row) * cols + col] != 0; }
  std::size_t count() const;
};

PixelRegion enhancement_region(const DepthImage& image, const SensorModel& sensor);

struct FillOptions {
  int window_radius = 2;  // (2k+1)^2 window
  int max_passes = 2;     // propagation passes; pixels still unreached take r_max
};

/// Recovered free-space depth E: for pixels in the region, the margin-reduced
/// and clamped inverse-distance-weighted fill; zero elsewhere.
std::vector<float> recover_free_depth(const DepthImage& image, const PixelRegion& region, const SensorModel& sensor,
                                      const FillOptions& fill = {});

/// One virtual endpoint per pixel with E > 0, along the pixel-center bearing, in the world frame.
std::vector<Vec3> enhanced_endpoints(const std::vector<float>& depth, const SensorModel& sensor, const Pose& pose);

struct FreeSpaceUpdate {
  explicit FreeSpaceUpdate(int block_shift) : newly_freed(block_shift) {}

  VoxelSet newly_freed;  // V_i: f went 0 -> 1 during this update and stayed 1
  std::size_t freed = 0;
  std::size_t reverted = 0;
  std::size_t released_blocks = 0;
};

/// Called at the instant a voxel's free flag is set, with the map in the
/// state the decision was made on.
using FreedObserver = std::function<void(const Index3& voxel, const FreeSpaceMap& map)>;

/// Conservative free-space update for one scan.
///
/// Counters first: traversed voxels gain a free observation and drop their
/// occupied streak; occupied voxels gain an occupied observation and drop
/// their free streak. Then every traversed non-free voxel whose whole
/// moderate neighborhood has n_free >= free_threshold becomes free. Finally an
/// occupied voxel with n_occupied >= recovery_threshold clears the free flag of
/// itself and its moderate neighborhood, and fully free blocks are released.
FreeSpaceUpdate estimate_free_space(const ScanTraversal& traversal, FreeSpaceMap& map,
                                   const FreedObserver& on_freed = {});

struct LabeledScan {
  std::vector<Vec3> points;  // world frame
  std::vector<DynamicLevel> labels;
  std::unordered_map<Index3, DynamicLevel> voxel_labels;
  int timestep = 0;

  std::size_t count(DynamicLevel level) const;
};

/// Labels world-frame points from the current free space: scan voxels inside
/// free space are conservative, their moderate-radius scan neighbors moderate,
/// and the aggressive-radius scan neighbors of those aggressive.
LabeledScan label_scan(const std::vector<Vec3>& world_points, const FreeSpaceMap& map);

}  // namespace freemap

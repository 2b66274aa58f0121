#include "freemap/pipeline.hpp"

#include <chrono>
#include <stdexcept>
#include <string>

namespace freemap {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

Pipeline::Pipeline(const PipelineConfig& config)
    : config_((config.validate(), config)),
      grid_(config.grid),
      free_map_(grid_),
      static_map_(grid_),
      registry_(config.registry_compaction) {}

StepResult Pipeline::step(const Scan& scan) {
  if (scan.timestep != t_ + 1) {
    throw std::invalid_argument("scan timestep " + std::to_string(scan.timestep) + " does not follow " +
                                std::to_string(t_));
  }
  validate_pose(scan.pose);

  const auto start = Clock::now();
  StepResult result;
  auto mark = start;

  std::vector<Vec3> sensor_points;
  sensor_points.reserve(scan.points.size());
  for (const Vec3& p : scan.points) {
    if (p.allFinite()) sensor_points.push_back(p);
  }
  std::vector<Vec3> world_points;
  world_points.reserve(sensor_points.size());
  for (const Vec3& p : sensor_points) world_points.push_back(scan.pose * p);

  std::vector<Vec3> enhanced;
  if (config_.enable_raycast_enhancement) {
    const DepthImage image = project_depth_image(sensor_points, config_.sensor);
    const PixelRegion region = enhancement_region(image, config_.sensor);
    enhanced = enhanced_endpoints(recover_free_depth(image, region, config_.sensor, config_.fill), config_.sensor,
                                  scan.pose);
  }
  RaycastOptions options;
  options.max_range = config_.max_ray_range;
  const ScanTraversal traversal =
      collect_scan_traversal(scan.pose.translation(), world_points, enhanced, free_map_, options);
  result.enhanced_endpoints = enhanced.size();
  result.traversed_voxels = traversal.traversed.size();
  result.occupied_voxels = traversal.occupied.size();
  result.timings.raycast = ms_since(mark);

  mark = Clock::now();
  result.update = estimate_free_space(traversal, free_map_, on_freed_);
  result.timings.free_space = ms_since(mark);

  mark = Clock::now();
  result.labeled = label_scan(world_points, free_map_);
  result.labeled.timestep = scan.timestep;
  result.timings.label = ms_since(mark);

  mark = Clock::now();
  integrate(result.labeled, static_map_, registry_, scan.timestep);
  result.timings.integrate = ms_since(mark);

  if (config_.enable_backend) {
    mark = Clock::now();
    result.clear = clear_map(result.update.newly_freed, static_map_, registry_);
    result.timings.clear = ms_since(mark);
  }

  t_ = scan.timestep;
  result.timings.total = ms_since(start);
  return result;
}

StaticMapSnapshot Pipeline::snapshot() const {
  StaticMapSnapshot snap;
  snap.points = extract_static_map(static_map_);
  snap.config = to_json(config_);
  snap.timestep = t_;
  return snap;
}

}  // namespace freemap

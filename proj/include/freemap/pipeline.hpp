#pragma once

#include "freemap/backend.hpp"
#include "freemap/config.hpp"
#include "freemap/free_space_map.hpp"
#include "freemap/frontend.hpp"
#include "freemap/static_space_map.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace freemap {

/// Wall time per stage of one step, in milliseconds.
struct StageTimings {
  double raycast = 0.0;  // depth image, enhancement and traversal
  double free_space = 0.0;
  double label = 0.0;
  double integrate = 0.0;
  double clear = 0.0;
  double total = 0.0;

  double stage_sum() const { return raycast + free_space + label + integrate + clear; }
};

struct StepResult {
  LabeledScan labeled;
  FreeSpaceUpdate update{1};
  ClearReport clear;
  StageTimings timings;
  std::size_t enhanced_endpoints = 0;
  std::size_t traversed_voxels = 0;
  std::size_t occupied_voxels = 0;
};

struct StaticMapSnapshot {
  std::vector<Vec3> points;  // static subvoxel centers, sorted by subvoxel index
  nlohmann::json config;
  int timestep = -1;  // last processed step, -1 before the first
};

/// Online dynamic-object removal over a stream of posed scans.
///
/// Each step runs: depth image, raycast enhancement (optional), traversal,
/// free-space update, labeling, integration and map clearing (optional).
class Pipeline {
 public:
  explicit Pipeline(const PipelineConfig& config);

  /// Throws std::invalid_argument unless scan.timestep == timestep() + 1 and
  /// the pose is a rigid transform. Non-finite points are dropped.
  StepResult step(const Scan& scan);

  int timestep() const { return t_; }
  const PipelineConfig& config() const { return config_; }
  const Grid& grid() const { return grid_; }
  const FreeSpaceMap& free_map() const { return free_map_; }
  const StaticSpaceMap& static_map() const { return static_map_; }
  const TimestepRegistry& registry() const { return registry_; }

  /// Called whenever a voxel becomes free during a step.
  void set_freed_observer(FreedObserver observer) { on_freed_ = std::move(observer); }

  StaticMapSnapshot snapshot() const;

 private:
  PipelineConfig config_;
  Grid grid_;
  FreeSpaceMap free_map_;
  StaticSpaceMap static_map_;
  TimestepRegistry registry_;
  FreedObserver on_freed_;
  int t_ = -1;
};

}  // namespace freemap

#pragma once

#include "freemap/grid.hpp"

#include <cstdint>
#include <optional>
#include <unordered_set>
#include <vector>

namespace freemap {

using VoxelKeySet = std::unordered_set<std::uint64_t, CellHash>;

/// Voxelized ground truth at the evaluation resolution. A voxel touched by
/// both a static and a dynamic point is static.
struct GroundTruth {
  double voxel_size = 0.2;
  VoxelKeySet static_voxels;   // M_sta
  VoxelKeySet dynamic_voxels;  // M_dyn
};

/// Accumulates labeled world-frame frames into a GroundTruth.
class GroundTruthBuilder {
 public:
  explicit GroundTruthBuilder(double voxel_size);

  /// Throws std::invalid_argument when the flag count differs from the point count.
  void add(const std::vector<Vec3>& world_points, const std::vector<std::uint8_t>& dynamic_flags);
  GroundTruth finish() const;

 private:
  double voxel_size_;
  VoxelKeySet static_;
  VoxelKeySet all_;
};

/// Set of evaluation voxels touched by the points (floor convention of floor_index).
VoxelKeySet voxelize(const std::vector<Vec3>& points, double voxel_size);

struct MetricsReport {
  std::optional<double> pr;  // undefined when M_sta is empty
  std::optional<double> rr;  // undefined when M_dyn is empty
  std::optional<double> f1;  // defined when both pr and rr are
  std::size_t preserved_static = 0;  // |v(M) & M_sta|
  std::size_t static_total = 0;      // |M_sta|
  std::size_t kept_dynamic = 0;      // |v(M) & M_dyn|
  std::size_t dynamic_total = 0;     // |M_dyn|
  std::size_t predicted_voxels = 0;  // |v(M)|
  double voxel_size = 0.0;
  std::optional<double> max_range;
};

/// Harmonic mean; 0 when both inputs are 0.
double f1_score(double pr, double rr);

MetricsReport score(const std::vector<Vec3>& map_points, const GroundTruth& gt);

/// Scores only voxels whose centers lie within `max_range` of at least one
/// trajectory position, on both the prediction and the ground-truth side.
MetricsReport score_within_range(const std::vector<Vec3>& map_points, const GroundTruth& gt, double max_range,
                                 const std::vector<Vec3>& trajectory);

}  // namespace freemap

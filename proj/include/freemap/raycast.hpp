#pragma once

#include "freemap/free_space_map.hpp"
#include "freemap/grid.hpp"
#include "freemap/voxel_set.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <span>
#include <vector>

namespace freemap {

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 endpoint = Vec3::Zero();
};

/// Walks the cells pierced by the segment from `origin` to `endpoint`
/// (Amanatides & Woo). `start` and `end` are the cells holding the two
/// points; `visit` is called for every cell from `start` up to but excluding
/// `end`. The walk takes exactly the Manhattan distance between `start` and
/// `end` in steps, so it always terminates on `end` regardless of rounding.
/// On ties the x axis steps first, then y, then z.
template <typename Visit>
void walk_cells(const Vec3& origin, const Vec3& endpoint, double edge, const Index3& start, const Index3& end,
                Visit&& visit) {
  const Vec3 d = endpoint - origin;
  Index3 cell = start;
  std::int32_t remaining[3];
  std::int32_t step[3];
  double t_max[3];
  double t_delta[3];
  std::int64_t total = 0;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const std::int32_t diff = end[a] - start[a];
    remaining[a] = std::abs(diff);
    total += remaining[a];
    if (diff == 0) {
      step[a] = 0;
      t_max[a] = kInf;
      t_delta[a] = kInf;
      continue;
    }
    step[a] = diff > 0 ? 1 : -1;
    const double boundary = (diff > 0 ? start[a] + 1 : start[a]) * edge;
    if (d[a] == 0.0) {
      // Start and end cells disagree on an axis the segment does not move
      // along (the point sits on a face); step across immediately.
      t_max[a] = 0.0;
      t_delta[a] = 0.0;
    } else {
      t_max[a] = (boundary - origin[a]) / d[a];
      t_delta[a] = edge / std::abs(d[a]);
    }
  }
  if (total == 0) return;
  visit(cell);
  for (std::int64_t k = 1; k < total; ++k) {
    int axis = -1;
    for (int a = 0; a < 3; ++a) {
      if (remaining[a] == 0) continue;
      if (axis < 0 || t_max[a] < t_max[axis]) axis = a;
    }
    cell[axis] += step[axis];
    t_max[axis] += t_delta[axis];
    --remaining[axis];
    visit(cell);
  }
}

/// Cells of edge length `edge` traversed by the ray, in order from the origin.
/// Includes the origin cell and excludes the endpoint cell, which belongs to
/// the occupied set. A zero-length ray yields an empty list.
/// Throws std::invalid_argument on non-finite input or a non-positive edge.
std::vector<Index3> traverse(const Ray& ray, double edge);

/// Same walk with cells located by the grid's voxel indexing.
std::vector<Index3> traverse(const Ray& ray, const Grid& grid);

/// Per-scan voxel sets: V_f (traversed) and V_o (occupied by a real return).
struct ScanTraversal {
  explicit ScanTraversal(int block_shift) : traversed(block_shift), occupied(block_shift) {}

  VoxelSet traversed;
  VoxelSet occupied;
};

struct RaycastOptions {
  /// Do not emit voxels inside released free blocks.
  bool skip_free_blocks = true;
  /// Clip real-measurement rays to this length; <= 0 disables clipping.
  double max_range = 0.0;
};

/// Collects V_o from the real endpoints and V_f from the rays to both real
/// and enhanced endpoints, with V_o taking precedence over V_f.
ScanTraversal collect_scan_traversal(const Vec3& origin, std::span<const Vec3> real_endpoints,
                                     std::span<const Vec3> enhanced_endpoints, const FreeSpaceMap& free_map,
                                     const RaycastOptions& options = {});

}  // namespace freemap

#include "freemap/raycast.hpp"

#include <stdexcept>

namespace freemap {

namespace {

void check_ray(const Ray& ray) {
  if (!ray.origin.allFinite() || !ray.endpoint.allFinite()) {
    throw std::invalid_argument("ray endpoints must be finite");
  }
}

// Emits the voxels of one ray into `out`, skipping voxels of released blocks.
class RayAccumulator {
 public:
  RayAccumulator(const FreeSpaceMap& map, VoxelSet& out, bool skip_free)
      : map_(map), grid_(map.grid()), out_(out), skip_free_(skip_free) {}

  void cast(const Vec3& origin, const Index3& origin_voxel, const Vec3& endpoint) {
    const Index3 end = grid_.cell(endpoint, Level::kVoxel);
    walk_cells(origin, endpoint, grid_.config().voxel_size, origin_voxel, end, [&](const Index3& v) {
      if (skip_free_) {
        const Index3 block = grid_.voxel_to_block(v);
        if (block != cached_block_ || !cache_valid_) {
          cached_block_ = block;
          cache_valid_ = true;
          cached_released_ = map_.is_block_released(block);
        }
        if (cached_released_) return;
      }
      out_.insert(v);
    });
  }

 private:
  const FreeSpaceMap& map_;
  const Grid& grid_;
  VoxelSet& out_;
  bool skip_free_;
  Index3 cached_block_;
  bool cache_valid_ = false;
  bool cached_released_ = false;
};

}  // namespace

std::vector<Index3> traverse(const Ray& ray, double edge) {
  check_ray(ray);
  if (!(edge > 0.0)) throw std::invalid_argument("cell edge length must be positive");
  std::vector<Index3> out;
  walk_cells(ray.origin, ray.endpoint, edge, floor_index(ray.origin, edge), floor_index(ray.endpoint, edge),
             [&](const Index3& c) { out.push_back(c); });
  return out;
}

std::vector<Index3> traverse(const Ray& ray, const Grid& grid) {
  check_ray(ray);
  std::vector<Index3> out;
  walk_cells(ray.origin, ray.endpoint, grid.config().voxel_size, grid.cell(ray.origin, Level::kVoxel),
             grid.cell(ray.endpoint, Level::kVoxel), [&](const Index3& c) { out.push_back(c); });
  return out;
}

ScanTraversal collect_scan_traversal(const Vec3& origin, std::span<const Vec3> real_endpoints,
                                     std::span<const Vec3> enhanced_endpoints, const FreeSpaceMap& free_map,
                                     const RaycastOptions& options) {
  const Grid& grid = free_map.grid();
  const int shift = grid.depth(Level::kBlock) - grid.depth(Level::kVoxel);
  ScanTraversal result(shift);
  if (!origin.allFinite()) throw std::invalid_argument("sensor origin must be finite");
  const Index3 origin_voxel = grid.cell(origin, Level::kVoxel);

  RayAccumulator acc(free_map, result.traversed, options.skip_free_blocks);
  for (const Vec3& p : real_endpoints) {
    result.occupied.insert(grid.cell(p, Level::kVoxel));
    Vec3 end = p;
    if (options.max_range > 0.0) {
      const Vec3 d = p - origin;
      const double len = d.norm();
      if (len > options.max_range) end = origin + d * (options.max_range / len);
    }
    acc.cast(origin, origin_voxel, end);
  }
  for (const Vec3& p : enhanced_endpoints) acc.cast(origin, origin_voxel, p);

  result.occupied.for_each([&](const Index3& v) { result.traversed.erase(v); });
  return result;
}

}  // namespace freemap

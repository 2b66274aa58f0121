#include "freemap/eval.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace freemap {

namespace {

MetricsReport score_sets(const VoxelKeySet& predicted, const VoxelKeySet& sta, const VoxelKeySet& dyn, double voxel) {
  MetricsReport r;
  r.voxel_size = voxel;
  r.predicted_voxels = predicted.size();
  r.static_total = sta.size();
  r.dynamic_total = dyn.size();
  for (std::uint64_t k : predicted) {
    if (sta.contains(k)) {
      ++r.preserved_static;
    } else if (dyn.contains(k)) {
      ++r.kept_dynamic;
    }
  }
  if (r.static_total > 0) r.pr = static_cast<double>(r.preserved_static) / static_cast<double>(r.static_total);
  if (r.dynamic_total > 0) {
    r.rr = 1.0 - static_cast<double>(r.kept_dynamic) / static_cast<double>(r.dynamic_total);
  }
  if (r.pr && r.rr) r.f1 = f1_score(*r.pr, *r.rr);
  return r;
}

// Positions hashed into cubes of edge max_range; a voxel center can only be
// within range of positions in its own or an adjacent cube.
class RangeFilter {
 public:
  RangeFilter(const std::vector<Vec3>& positions, double max_range) : range_(max_range) {
    for (const Vec3& p : positions) cells_[pack(floor_index(p, range_))].push_back(p);
  }

  bool within(const Vec3& q) const {
    const Index3 c = floor_index(q, range_);
    const double r2 = range_ * range_;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          auto it = cells_.find(pack(c + Index3{dx, dy, dz}));
          if (it == cells_.end()) continue;
          for (const Vec3& p : it->second) {
            if ((p - q).squaredNorm() <= r2) return true;
          }
        }
    return false;
  }

 private:
  double range_;
  std::unordered_map<std::uint64_t, std::vector<Vec3>, CellHash> cells_;
};

}  // namespace

VoxelKeySet voxelize(const std::vector<Vec3>& points, double voxel_size) {
  VoxelKeySet out;
  out.reserve(points.size());
  for (const Vec3& p : points) out.insert(pack(floor_index(p, voxel_size)));
  return out;
}

GroundTruthBuilder::GroundTruthBuilder(double voxel_size) : voxel_size_(voxel_size) {
  if (!(voxel_size > 0.0)) throw std::invalid_argument("evaluation voxel size must be positive");
}

void GroundTruthBuilder::add(const std::vector<Vec3>& world_points, const std::vector<std::uint8_t>& dynamic_flags) {
  if (world_points.size() != dynamic_flags.size()) {
    throw std::invalid_argument("ground truth needs one dynamic flag per point (" +
                                std::to_string(world_points.size()) + " points, " +
                                std::to_string(dynamic_flags.size()) + " flags)");
  }
  for (std::size_t i = 0; i < world_points.size(); ++i) {
    const std::uint64_t k = pack(floor_index(world_points[i], voxel_size_));
    all_.insert(k);
    if (!dynamic_flags[i]) static_.insert(k);
  }
}

GroundTruth GroundTruthBuilder::finish() const {
  GroundTruth gt;
  gt.voxel_size = voxel_size_;
  gt.static_voxels = static_;
  for (std::uint64_t k : all_) {
    if (!static_.contains(k)) gt.dynamic_voxels.insert(k);
  }
  return gt;
}

double f1_score(double pr, double rr) { return pr + rr > 0.0 ? 2.0 * pr * rr / (pr + rr) : 0.0; }

MetricsReport score(const std::vector<Vec3>& map_points, const GroundTruth& gt) {
  return score_sets(voxelize(map_points, gt.voxel_size), gt.static_voxels, gt.dynamic_voxels, gt.voxel_size);
}

MetricsReport score_within_range(const std::vector<Vec3>& map_points, const GroundTruth& gt, double max_range,
                                 const std::vector<Vec3>& trajectory) {
  if (!(max_range > 0.0)) throw std::invalid_argument("max_range must be positive");
  if (std::isinf(max_range)) {
    MetricsReport r = score(map_points, gt);
    r.max_range = max_range;
    return r;
  }
  const RangeFilter filter(trajectory, max_range);
  const double v = gt.voxel_size;
  auto keep = [&](const VoxelKeySet& in) {
    VoxelKeySet out;
    for (std::uint64_t k : in) {
      const Index3 c = unpack(k);
      const Vec3 center((c.x + 0.5) * v, (c.y + 0.5) * v, (c.z + 0.5) * v);
      if (filter.within(center)) out.insert(k);
    }
    return out;
  };
  MetricsReport r =
      score_sets(keep(voxelize(map_points, v)), keep(gt.static_voxels), keep(gt.dynamic_voxels), v);
  r.max_range = max_range;
  return r;
}

}  // namespace freemap

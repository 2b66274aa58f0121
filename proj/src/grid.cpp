#include "freemap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace freemap {

std::string_view to_string(Level level) {
  switch (level) {
    case Level::kSubvoxel: return "subvoxel";
    case Level::kVoxel: return "voxel";
    case Level::kBlock: return "block";
  }
  return "unknown";
}

std::string_view to_string(DynamicLevel level) {
  switch (level) {
    case DynamicLevel::kStatic: return "static";
    case DynamicLevel::kAggressive: return "aggressive";
    case DynamicLevel::kModerate: return "moderate";
    case DynamicLevel::kConservative: return "conservative";
  }
  return "unknown";
}

std::int32_t chebyshev(const Index3& a, const Index3& b) {
  const Index3 d = a - b;
  return std::max({std::abs(d.x), std::abs(d.y), std::abs(d.z)});
}

Index3 floor_index(const Vec3& p, double edge) {
  if (!(edge > 0.0) || !std::isfinite(edge)) {
    throw std::invalid_argument("cell edge length must be positive and finite");
  }
  if (!p.allFinite()) {
    throw std::invalid_argument("point coordinates must be finite");
  }
  Index3 out;
  for (int a = 0; a < 3; ++a) {
    const double c = std::floor(p[a] / edge);
    if (c < kMinCellCoord || c > kMaxCellCoord) {
      std::ostringstream msg;
      msg << "coordinate " << p[a] << " is outside the indexable range for cell size " << edge;
      throw std::out_of_range(msg.str());
    }
    out[a] = static_cast<std::int32_t>(c);
  }
  return out;
}

namespace {

// Returns k with 2^k * base == value, or -1.
int exact_log2_ratio(double value, double base) {
  const double ratio = value / base;
  const double k = std::round(std::log2(ratio));
  if (k < 0 || k > 16) return -1;
  if (std::abs(std::ldexp(base, static_cast<int>(k)) - value) > 1e-9 * value) return -1;
  return static_cast<int>(k);
}

}  // namespace

void GridConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("GridConfig: " + what); };
  if (!(subvoxel_size > 0.0) || !std::isfinite(subvoxel_size)) fail("subvoxel_size must be positive");
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) fail("voxel_size must be positive");
  if (!(block_size > 0.0) || !std::isfinite(block_size)) fail("block_size must be positive");
  if (exact_log2_ratio(voxel_size, subvoxel_size) < 0) {
    fail("voxel_size / subvoxel_size must be a power of two");
  }
  const int block_shift = exact_log2_ratio(block_size, voxel_size);
  if (block_shift < 0) fail("block_size / voxel_size must be a power of two");
  if (block_shift == 0) fail("a block must contain more than one voxel");
  if (free_threshold < 1) fail("free_threshold must be >= 1");
  if (recovery_threshold < 1) fail("recovery_threshold must be >= 1");
  if (free_threshold > 60000 || recovery_threshold > 60000) fail("thresholds must fit the 16-bit counters");
  if (moderate_radius < 1) fail("moderate_radius must be >= 1");
  if (aggressive_radius < moderate_radius) fail("aggressive_radius must be >= moderate_radius");
}

Grid::Grid(const GridConfig& config) : config_(config) {
  config_.validate();
  depths_[0] = 0;
  depths_[1] = exact_log2_ratio(config_.voxel_size, config_.subvoxel_size);
  depths_[2] = depths_[1] + exact_log2_ratio(config_.block_size, config_.voxel_size);
  block_shift_ = depths_[2] - depths_[1];
}

double Grid::edge(Level level) const {
  switch (level) {
    case Level::kSubvoxel: return config_.subvoxel_size;
    case Level::kVoxel: return config_.voxel_size;
    case Level::kBlock: return config_.block_size;
  }
  return 0.0;
}

int Grid::voxels_per_block() const {
  const int n = voxels_per_block_axis();
  return n * n * n;
}

int Grid::subvoxels_per_voxel() const {
  const int n = subvoxels_per_voxel_axis();
  return n * n * n;
}

GridIndex Grid::global_index(const Vec3& p, Level level) const {
  const Index3 sub = floor_index(p, config_.subvoxel_size);
  return {sub >> depth(level), level};
}

std::int32_t Grid::mask(Level index_level, Level within) const {
  if (static_cast<int>(index_level) >= static_cast<int>(within)) {
    throw std::logic_error("local index requires a finer index level than the enclosing level");
  }
  return (std::int32_t{1} << (depth(within) - depth(index_level))) - 1;
}

GridIndex Grid::local_index(const GridIndex& index, Level within) const {
  return {index.cell & mask(index.level, within), index.level};
}

GridIndex Grid::coarsen(const GridIndex& index, Level to) const {
  if (static_cast<int>(to) < static_cast<int>(index.level)) {
    throw std::logic_error("cannot coarsen an index to a finer level");
  }
  return {index.cell >> (depth(to) - depth(index.level)), to};
}

int Grid::voxel_offset_in_block(const Index3& voxel) const {
  const std::int32_t m = (1 << block_shift_) - 1;
  const Index3 l = voxel & m;
  return (l.z << (2 * block_shift_)) | (l.y << block_shift_) | l.x;
}

int Grid::subvoxel_offset_in_voxel(const Index3& subvoxel) const {
  const int s = depth(Level::kVoxel);
  const std::int32_t m = (1 << s) - 1;
  const Index3 l = subvoxel & m;
  return (l.z << (2 * s)) | (l.y << s) | l.x;
}

Index3 Grid::voxel_from_offset(const Index3& block, int offset) const {
  const std::int32_t m = (1 << block_shift_) - 1;
  const Index3 local{offset & m, (offset >> block_shift_) & m, (offset >> (2 * block_shift_)) & m};
  return (block << block_shift_) + local;
}

Index3 Grid::subvoxel_from_offset(const Index3& voxel, int offset) const {
  const int s = depth(Level::kVoxel);
  const std::int32_t m = (1 << s) - 1;
  const Index3 local{offset & m, (offset >> s) & m, (offset >> (2 * s)) & m};
  return (voxel << s) + local;
}

Vec3 Grid::center(const Index3& cell, Level level) const {
  const double e = edge(level);
  return {(cell.x + 0.5) * e, (cell.y + 0.5) * e, (cell.z + 0.5) * e};
}

std::vector<Index3> neighborhood(const Index3& center, int radius) {
  if (radius < 0) throw std::invalid_argument("neighborhood radius must be >= 0");
  std::vector<Index3> out;
  const int side = 2 * radius + 1;
  out.reserve(static_cast<std::size_t>(side) * side * side);
  for_each_offset(radius, [&](const Index3& d) { out.push_back(center + d); });
  return out;
}

}  // namespace freemap

#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

namespace freemap {

using Vec3 = Eigen::Vector3d;

/// Resolution level of a grid index. Ordered fine to coarse.
enum class Level : std::uint8_t { kSubvoxel = 0, kVoxel = 1, kBlock = 2 };

std::string_view to_string(Level level);

/// Four-valued dynamism label, totally ordered static < aggressive < moderate < conservative.
enum class DynamicLevel : std::uint8_t {
  kStatic = 0,
  kAggressive = 1,
  kModerate = 2,
  kConservative = 3,
};

std::string_view to_string(DynamicLevel level);

/// Integer cell coordinates at some (implicit) level.
struct Index3 {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;

  constexpr bool operator==(const Index3&) const = default;
  constexpr auto operator<=>(const Index3&) const = default;

  constexpr Index3 operator+(const Index3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Index3 operator-(const Index3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Index3 operator>>(int s) const { return {x >> s, y >> s, z >> s}; }
  constexpr Index3 operator<<(int s) const {
    // Left shift of negative values is well defined in C++20.
    return {x << s, y << s, z << s};
  }
  constexpr Index3 operator&(std::int32_t m) const { return {x & m, y & m, z & m}; }

  constexpr std::int32_t operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr std::int32_t& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
};

/// Chebyshev (L-infinity) distance between two cells.
std::int32_t chebyshev(const Index3& a, const Index3& b);

/// Cell coordinates tagged with their level.
struct GridIndex {
  Index3 cell;
  Level level = Level::kVoxel;

  bool operator==(const GridIndex&) const = default;
};

// Packed keys hold 21 bits per axis, enough for +-2^20 cells.
inline constexpr std::int32_t kMaxCellCoord = (1 << 20) - 1;
inline constexpr std::int32_t kMinCellCoord = -(1 << 20);

constexpr std::uint64_t pack(const Index3& i) {
  constexpr std::uint64_t mask = (std::uint64_t{1} << 21) - 1;
  return ((static_cast<std::uint64_t>(i.x - kMinCellCoord) & mask) << 42) |
         ((static_cast<std::uint64_t>(i.y - kMinCellCoord) & mask) << 21) |
         (static_cast<std::uint64_t>(i.z - kMinCellCoord) & mask);
}

constexpr Index3 unpack(std::uint64_t key) {
  constexpr std::uint64_t mask = (std::uint64_t{1} << 21) - 1;
  return {static_cast<std::int32_t>((key >> 42) & mask) + kMinCellCoord,
          static_cast<std::int32_t>((key >> 21) & mask) + kMinCellCoord,
          static_cast<std::int32_t>(key & mask) + kMinCellCoord};
}

/// splitmix64 finalizer; spreads packed coordinates over the table.
struct CellHash {
  std::size_t operator()(std::uint64_t key) const noexcept {
    key += 0x9e3779b97f4a7c15ULL;
    key = (key ^ (key >> 30)) * 0xbf58476d1ce4e5b9ULL;
    key = (key ^ (key >> 27)) * 0x94d049bb133111ebULL;
    return static_cast<std::size_t>(key ^ (key >> 31));
  }
};

/// Cell containing `p` for an arbitrary edge length: component-wise floor(p / edge).
/// Throws std::invalid_argument on non-finite input or non-positive edge and
/// std::out_of_range when the cell does not fit a packed key.
Index3 floor_index(const Vec3& p, double edge);

/// Parameters of the three-level map.
struct GridConfig {
  double subvoxel_size = 0.1;  // m
  double voxel_size = 0.4;     // m
  double block_size = 3.2;     // m
  int free_threshold = 6;       // consecutive free observations before a voxel may be freed
  int recovery_threshold = 20;  // consecutive occupied observations before free space reverts
  int moderate_radius = 1;      // 1 -> 27-neighborhood
  int aggressive_radius = 2;    // 2 -> 125-neighborhood

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

/// Validated grid geometry: depths and all index arithmetic between levels.
///
/// Depths are measured relative to the subvoxel level, so the subvoxel depth
/// is always 0. Global indices at the voxel and block level are derived from
/// the subvoxel index by arithmetic shift, which keeps a point's subvoxel,
/// voxel and block mutually consistent even when floating-point division
/// would round differently at a cell boundary.
class Grid {
 public:
  explicit Grid(const GridConfig& config);

  const GridConfig& config() const { return config_; }

  int depth(Level level) const { return depths_[static_cast<int>(level)]; }
  double edge(Level level) const;

  /// Number of voxels along one block axis.
  int voxels_per_block_axis() const { return 1 << (depth(Level::kBlock) - depth(Level::kVoxel)); }
  int voxels_per_block() const;
  /// Number of subvoxels along one voxel axis.
  int subvoxels_per_voxel_axis() const { return 1 << depth(Level::kVoxel); }
  int subvoxels_per_voxel() const;

  GridIndex global_index(const Vec3& p, Level level) const;
  Index3 cell(const Vec3& p, Level level) const { return global_index(p, level).cell; }

  /// Offset of `index` inside its enclosing cell at `within` (bitwise AND with the level mask).
  GridIndex local_index(const GridIndex& index, Level within) const;
  /// Arithmetic right shift to a coarser level.
  GridIndex coarsen(const GridIndex& index, Level to) const;

  /// The bit mask used by local_index for `index_level` inside `within`.
  std::int32_t mask(Level index_level, Level within) const;

  /// Linear offset of a voxel inside its block, in [0, voxels_per_block()).
  int voxel_offset_in_block(const Index3& voxel) const;
  /// Linear offset of a subvoxel inside its voxel, in [0, subvoxels_per_voxel()).
  int subvoxel_offset_in_voxel(const Index3& subvoxel) const;
  Index3 voxel_from_offset(const Index3& block, int offset) const;
  Index3 subvoxel_from_offset(const Index3& voxel, int offset) const;

  Index3 voxel_to_block(const Index3& voxel) const { return voxel >> block_shift_; }
  Index3 subvoxel_to_voxel(const Index3& subvoxel) const { return subvoxel >> depth(Level::kVoxel); }

  Vec3 center(const Index3& cell, Level level) const;

 private:
  GridConfig config_;
  std::array<int, 3> depths_{};
  int block_shift_ = 0;  // block depth - voxel depth
};

/// All cells within Chebyshev distance `radius` of `center`, including itself.
/// Ordered z-major, then y, then x. Cardinality (2r+1)^3.
std::vector<Index3> neighborhood(const Index3& center, int radius);

/// Visit offsets of a cubic neighborhood without allocating.
template <typename Fn>
void for_each_offset(int radius, Fn&& fn) {
  for (int dz = -radius; dz <= radius; ++dz)
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx) fn(Index3{dx, dy, dz});
}

}  // namespace freemap

template <>
struct std::hash<freemap::Index3> {
  std::size_t operator()(const freemap::Index3& i) const noexcept {
    return freemap::CellHash{}(freemap::pack(i));
  }
};

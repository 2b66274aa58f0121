#pragma once

#include "freemap/grid.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

namespace freemap {

/// Occupancy record of one subvoxel: the timestep of the observation that set
/// it and that observation's dynamic level.
struct StaticSubVoxel {
  static constexpr std::int32_t kEmpty = -1;

  std::int32_t t_o = kEmpty;
  DynamicLevel level = DynamicLevel::kStatic;

  bool occupied() const { return t_o != kEmpty; }
  bool operator==(const StaticSubVoxel&) const = default;
};

/// Subvoxel-resolution occupancy. Blocks are hashed; each block holds one
/// slot per voxel and a voxel's dense subvoxel array is allocated on first
/// occupancy.
class StaticSpaceMap {
 public:
  explicit StaticSpaceMap(const Grid& grid);
  StaticSpaceMap(const StaticSpaceMap& other);
  StaticSpaceMap(StaticSpaceMap&&) noexcept = default;
  StaticSpaceMap& operator=(const StaticSpaceMap& other);
  StaticSpaceMap& operator=(StaticSpaceMap&&) noexcept = default;

  const Grid& grid() const { return grid_; }

  const StaticSubVoxel* find(const Index3& subvoxel) const;
  StaticSubVoxel& get_or_create(const Index3& subvoxel);

  /// Subvoxels of a voxel, or an empty span if the voxel was never occupied.
  std::span<const StaticSubVoxel> voxel(const Index3& voxel) const;
  std::span<StaticSubVoxel> mutable_voxel(const Index3& voxel);

  std::size_t allocated_voxel_count() const { return voxel_count_; }
  std::size_t occupied_subvoxel_count() const;

  /// Visit every occupied subvoxel as (subvoxel index, record).
  template <typename Fn>
  void for_each_occupied(Fn&& fn) const {
    const int per_block = grid_.voxels_per_block();
    for (const auto& [key, block] : blocks_) {
      const Index3 b = unpack(key);
      for (int v = 0; v < per_block; ++v) {
        const auto& arr = block.voxels[static_cast<std::size_t>(v)];
        if (!arr) continue;
        const Index3 vox = grid_.voxel_from_offset(b, v);
        for (int s = 0; s < static_cast<int>(arr->size()); ++s) {
          const StaticSubVoxel& sv = (*arr)[static_cast<std::size_t>(s)];
          if (sv.occupied()) fn(grid_.subvoxel_from_offset(vox, s), sv);
        }
      }
    }
  }

 private:
  using SubVoxels = std::vector<StaticSubVoxel>;
  struct Block {
    std::vector<std::unique_ptr<SubVoxels>> voxels;
  };

  const SubVoxels* find_voxel(const Index3& voxel) const;
  SubVoxels& voxel_storage(const Index3& voxel);

  Grid grid_;
  std::unordered_map<std::uint64_t, Block, CellHash> blocks_;
  std::size_t voxel_count_ = 0;
};

}  // namespace freemap

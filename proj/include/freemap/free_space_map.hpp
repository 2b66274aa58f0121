#pragma once

#include "freemap/grid.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace freemap {

/// Free-space record of one voxel: the free flag plus consecutive free and
/// occupied observation counts.
struct FreeVoxel {
  bool free = false;
  std::uint16_t n_free = 0;
  std::uint16_t n_occupied = 0;

  bool operator==(const FreeVoxel&) const = default;
};

/// Voxel-resolution free-space estimate stored as hashed blocks of dense voxel grids.
///
/// A block absent from the map has never been observed. A block whose voxels
/// are all free can be released: its storage is dropped and the block is only
/// flagged free. Voxels in a released block read as free with saturated free
/// counters (n_free = free_threshold, n_occupied = 0).
class FreeSpaceMap {
 public:
  struct Block {
    bool free = false;
    int free_count = 0;  // voxels with free == true; maintained by set_free()
    std::vector<FreeVoxel> voxels;
  };

  enum class VoxelState { kUnobserved, kReleased, kStored };

  struct Lookup {
    VoxelState state = VoxelState::kUnobserved;
    FreeVoxel* voxel = nullptr;  // only for kStored
  };

  explicit FreeSpaceMap(const Grid& grid);
  FreeSpaceMap(const FreeSpaceMap& other) : grid_(other.grid_), blocks_(other.blocks_) {}
  FreeSpaceMap(FreeSpaceMap&& other) noexcept : grid_(other.grid_), blocks_(std::move(other.blocks_)) {
    other.drop_cache();
  }
  FreeSpaceMap& operator=(const FreeSpaceMap& other) {
    grid_ = other.grid_;
    blocks_ = other.blocks_;
    drop_cache();
    return *this;
  }
  FreeSpaceMap& operator=(FreeSpaceMap&& other) noexcept {
    grid_ = other.grid_;
    blocks_ = std::move(other.blocks_);
    drop_cache();
    other.drop_cache();
    return *this;
  }

  const Grid& grid() const { return grid_; }

  /// Query a voxel. With `create`, an absent block is allocated with default
  /// voxels; a released block is reported as such and left released.
  Lookup voxel_at(const Index3& voxel, bool create);
  /// Read-only view; never allocates.
  FreeVoxel peek(const Index3& voxel) const;
  VoxelState state(const Index3& voxel) const;
  bool is_free(const Index3& voxel) const;

  /// Writable storage for a voxel. Allocates an absent block with default
  /// voxels; re-allocates a released block with every voxel restored to its
  /// released-equivalent state {free, n_free = free_threshold, n_occupied = 0}.
  FreeVoxel& materialize(const Index3& voxel);

  /// Sets the free flag and keeps the block's free count in step.
  void set_free(const Index3& voxel, FreeVoxel& v, bool free);

  /// Releases the block's storage if all of its voxels are free.
  bool release_block_if_free(const Index3& block);

  bool is_block_released(const Index3& block) const;
  const Block* find_block(const Index3& block) const;

  std::size_t block_count() const { return blocks_.size(); }
  std::size_t released_block_count() const;
  std::size_t stored_voxel_count() const;

  template <typename Fn>
  void for_each_block(Fn&& fn) const {
    for (const auto& [key, block] : blocks_) fn(unpack(key), block);
  }

  /// Visit every stored voxel (blocks with storage only).
  template <typename Fn>
  void for_each_stored_voxel(Fn&& fn) const {
    for (const auto& [key, block] : blocks_) {
      if (block.free) continue;
      const Index3 b = unpack(key);
      for (int i = 0; i < static_cast<int>(block.voxels.size()); ++i) {
        fn(grid_.voxel_from_offset(b, i), block.voxels[static_cast<std::size_t>(i)]);
      }
    }
  }

  /// Voxel record as seen by neighborhood checks: stored value, the saturated
  /// record for released blocks, or the default record when unobserved.
  FreeVoxel effective(const Index3& voxel) const;

 private:
  Block* block_for(const Index3& block, bool create);
  void drop_cache() {
    cached_key_ = ~std::uint64_t{0};
    cached_block_ = nullptr;
  }

  Grid grid_;
  std::unordered_map<std::uint64_t, Block, CellHash> blocks_;
  std::uint64_t cached_key_ = ~std::uint64_t{0};
  Block* cached_block_ = nullptr;
};

}  // namespace freemap

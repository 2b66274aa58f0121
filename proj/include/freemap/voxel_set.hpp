#pragma once

#include "freemap/grid.hpp"

#include <bit>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace freemap {

/// Set of voxel indices stored as one occupancy bitmap per hashed block.
///
/// Consecutive inserts along a ray mostly hit the same block, so the last
/// touched block is cached. Iteration visits blocks in container order and
/// voxels in ascending offset order within a block.
class VoxelSet {
 public:
  explicit VoxelSet(int block_shift);
  VoxelSet(const VoxelSet& other)
      : shift_(other.shift_), words_per_block_(other.words_per_block_), blocks_(other.blocks_), size_(other.size_) {}
  VoxelSet(VoxelSet&& other) noexcept
      : shift_(other.shift_),
        words_per_block_(other.words_per_block_),
        blocks_(std::move(other.blocks_)),
        size_(other.size_) {
    other.clear();
  }
  VoxelSet& operator=(const VoxelSet& other) {
    VoxelSet copy(other);
    *this = std::move(copy);
    return *this;
  }
  VoxelSet& operator=(VoxelSet&& other) noexcept {
    shift_ = other.shift_;
    words_per_block_ = other.words_per_block_;
    blocks_ = std::move(other.blocks_);
    size_ = other.size_;
    cached_key_ = ~std::uint64_t{0};
    cached_words_ = nullptr;
    other.clear();
    return *this;
  }

  int block_shift() const { return shift_; }

  /// Returns true if the voxel was not present.
  bool insert(const Index3& voxel);
  bool contains(const Index3& voxel) const;
  bool erase(const Index3& voxel);
  void clear();

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::size_t block_count() const { return blocks_.size(); }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& [key, words] : blocks_) {
      const Index3 block = unpack(key);
      for (std::size_t w = 0; w < words.size(); ++w) {
        std::uint64_t bits = words[w];
        while (bits != 0) {
          const int b = std::countr_zero(bits);
          bits &= bits - 1;
          fn(voxel_at(block, static_cast<int>(w * 64 + b)));
        }
      }
    }
  }

  /// Visit each block with its occupancy words (bit i = local offset i).
  template <typename Fn>
  void for_each_block(Fn&& fn) const {
    for (const auto& [key, words] : blocks_) fn(unpack(key), words);
  }

  std::vector<Index3> to_vector() const;
  /// Sorted (x, y, z) ascending; useful for deterministic output.
  std::vector<Index3> sorted() const;

  Index3 voxel_at(const Index3& block, int offset) const;
  int offset_of(const Index3& voxel) const;

 private:
  using Words = std::vector<std::uint64_t>;

  Words* block_words(const Index3& block, bool create);

  int shift_;
  int words_per_block_;
  std::unordered_map<std::uint64_t, Words, CellHash> blocks_;
  std::size_t size_ = 0;
  std::uint64_t cached_key_ = ~std::uint64_t{0};
  Words* cached_words_ = nullptr;
};

}  // namespace freemap

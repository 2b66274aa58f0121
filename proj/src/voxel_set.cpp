#include "freemap/voxel_set.hpp"

#include <algorithm>
#include <stdexcept>

namespace freemap {

VoxelSet::VoxelSet(int block_shift) : shift_(block_shift) {
  if (block_shift < 1 || block_shift > 6) {
    throw std::invalid_argument("VoxelSet block shift must be in [1, 6]");
  }
  const int voxels = 1 << (3 * shift_);
  words_per_block_ = std::max(1, voxels / 64);
}

VoxelSet::Words* VoxelSet::block_words(const Index3& block, bool create) {
  const std::uint64_t key = pack(block);
  if (key == cached_key_) return cached_words_;
  auto it = blocks_.find(key);
  if (it == blocks_.end()) {
    if (!create) return nullptr;
    it = blocks_.emplace(key, Words(static_cast<std::size_t>(words_per_block_), 0)).first;
  }
  // Node-based container: element pointers stay valid across rehashing.
  cached_key_ = key;
  cached_words_ = &it->second;
  return cached_words_;
}

int VoxelSet::offset_of(const Index3& voxel) const {
  const std::int32_t m = (1 << shift_) - 1;
  const Index3 l = voxel & m;
  return (l.z << (2 * shift_)) | (l.y << shift_) | l.x;
}

Index3 VoxelSet::voxel_at(const Index3& block, int offset) const {
  const std::int32_t m = (1 << shift_) - 1;
  const Index3 local{offset & m, (offset >> shift_) & m, (offset >> (2 * shift_)) & m};
  return (block << shift_) + local;
}

bool VoxelSet::insert(const Index3& voxel) {
  Words* words = block_words(voxel >> shift_, true);
  const int off = offset_of(voxel);
  std::uint64_t& w = (*words)[static_cast<std::size_t>(off >> 6)];
  const std::uint64_t bit = std::uint64_t{1} << (off & 63);
  if (w & bit) return false;
  w |= bit;
  ++size_;
  return true;
}

bool VoxelSet::contains(const Index3& voxel) const {
  const std::uint64_t key = pack(voxel >> shift_);
  const Words* words = nullptr;
  if (key == cached_key_) {
    words = cached_words_;
  } else {
    auto it = blocks_.find(key);
    if (it == blocks_.end()) return false;
    words = &it->second;
  }
  const int off = offset_of(voxel);
  return ((*words)[static_cast<std::size_t>(off >> 6)] >> (off & 63)) & 1U;
}

bool VoxelSet::erase(const Index3& voxel) {
  Words* words = block_words(voxel >> shift_, false);
  if (words == nullptr) return false;
  const int off = offset_of(voxel);
  std::uint64_t& w = (*words)[static_cast<std::size_t>(off >> 6)];
  const std::uint64_t bit = std::uint64_t{1} << (off & 63);
  if (!(w & bit)) return false;
  w &= ~bit;
  --size_;
  return true;
}

void VoxelSet::clear() {
  blocks_.clear();
  size_ = 0;
  cached_key_ = ~std::uint64_t{0};
  cached_words_ = nullptr;
}

std::vector<Index3> VoxelSet::to_vector() const {
  std::vector<Index3> out;
  out.reserve(size_);
  for_each([&](const Index3& v) { out.push_back(v); });
  return out;
}

std::vector<Index3> VoxelSet::sorted() const {
  auto out = to_vector();
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace freemap

#include "freemap/free_space_map.hpp"

#include <algorithm>

namespace freemap {

FreeSpaceMap::FreeSpaceMap(const Grid& grid) : grid_(grid) {}

FreeSpaceMap::Block* FreeSpaceMap::block_for(const Index3& block, bool create) {
  const std::uint64_t key = pack(block);
  if (key == cached_key_) return cached_block_;
  auto it = blocks_.find(key);
  if (it == blocks_.end()) {
    if (!create) return nullptr;
    Block fresh;
    fresh.voxels.assign(static_cast<std::size_t>(grid_.voxels_per_block()), FreeVoxel{});
    it = blocks_.emplace(key, std::move(fresh)).first;
  }
  cached_key_ = key;
  cached_block_ = &it->second;
  return cached_block_;
}

const FreeSpaceMap::Block* FreeSpaceMap::find_block(const Index3& block) const {
  auto it = blocks_.find(pack(block));
  return it == blocks_.end() ? nullptr : &it->second;
}

FreeSpaceMap::Lookup FreeSpaceMap::voxel_at(const Index3& voxel, bool create) {
  Block* b = block_for(grid_.voxel_to_block(voxel), create);
  if (b == nullptr) return {};
  if (b->free) return {VoxelState::kReleased, nullptr};
  return {VoxelState::kStored, &b->voxels[static_cast<std::size_t>(grid_.voxel_offset_in_block(voxel))]};
}

FreeSpaceMap::VoxelState FreeSpaceMap::state(const Index3& voxel) const {
  const Block* b = find_block(grid_.voxel_to_block(voxel));
  if (b == nullptr) return VoxelState::kUnobserved;
  return b->free ? VoxelState::kReleased : VoxelState::kStored;
}

FreeVoxel FreeSpaceMap::peek(const Index3& voxel) const {
  const Block* b = find_block(grid_.voxel_to_block(voxel));
  if (b == nullptr || b->free) return {};
  return b->voxels[static_cast<std::size_t>(grid_.voxel_offset_in_block(voxel))];
}

FreeVoxel FreeSpaceMap::effective(const Index3& voxel) const {
  const Block* b = find_block(grid_.voxel_to_block(voxel));
  if (b == nullptr) return {};
  if (b->free) {
    return {true, static_cast<std::uint16_t>(grid_.config().free_threshold), 0};
  }
  return b->voxels[static_cast<std::size_t>(grid_.voxel_offset_in_block(voxel))];
}

bool FreeSpaceMap::is_free(const Index3& voxel) const {
  const Block* b = find_block(grid_.voxel_to_block(voxel));
  if (b == nullptr) return false;
  if (b->free) return true;
  return b->voxels[static_cast<std::size_t>(grid_.voxel_offset_in_block(voxel))].free;
}

FreeVoxel& FreeSpaceMap::materialize(const Index3& voxel) {
  Block* b = block_for(grid_.voxel_to_block(voxel), true);
  if (b->free) {
    const FreeVoxel seeded{true, static_cast<std::uint16_t>(grid_.config().free_threshold), 0};
    b->voxels.assign(static_cast<std::size_t>(grid_.voxels_per_block()), seeded);
    b->free = false;
    b->free_count = grid_.voxels_per_block();
  }
  return b->voxels[static_cast<std::size_t>(grid_.voxel_offset_in_block(voxel))];
}

void FreeSpaceMap::set_free(const Index3& voxel, FreeVoxel& v, bool free) {
  if (v.free == free) return;
  v.free = free;
  Block* b = block_for(grid_.voxel_to_block(voxel), false);
  b->free_count += free ? 1 : -1;
}

bool FreeSpaceMap::release_block_if_free(const Index3& block) {
  Block* b = block_for(block, false);
  if (b == nullptr || b->free) return false;
  if (b->free_count != static_cast<int>(b->voxels.size())) return false;
  b->free = true;
  std::vector<FreeVoxel>().swap(b->voxels);
  return true;
}

bool FreeSpaceMap::is_block_released(const Index3& block) const {
  const Block* b = find_block(block);
  return b != nullptr && b->free;
}

std::size_t FreeSpaceMap::released_block_count() const {
  return static_cast<std::size_t>(
      std::count_if(blocks_.begin(), blocks_.end(), [](const auto& kv) { return kv.second.free; }));
}

std::size_t FreeSpaceMap::stored_voxel_count() const {
  std::size_t n = 0;
  for (const auto& [key, block] : blocks_) n += block.voxels.size();
  return n;
}

}  // namespace freemap

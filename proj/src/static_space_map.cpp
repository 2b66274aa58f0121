#include "freemap/static_space_map.hpp"

namespace freemap {

StaticSpaceMap::StaticSpaceMap(const Grid& grid) : grid_(grid) {}

StaticSpaceMap::StaticSpaceMap(const StaticSpaceMap& other) : grid_(other.grid_), voxel_count_(other.voxel_count_) {
  blocks_.reserve(other.blocks_.size());
  for (const auto& [key, block] : other.blocks_) {
    Block copy;
    copy.voxels.resize(block.voxels.size());
    for (std::size_t i = 0; i < block.voxels.size(); ++i) {
      if (block.voxels[i]) copy.voxels[i] = std::make_unique<SubVoxels>(*block.voxels[i]);
    }
    blocks_.emplace(key, std::move(copy));
  }
}

StaticSpaceMap& StaticSpaceMap::operator=(const StaticSpaceMap& other) {
  if (this != &other) *this = StaticSpaceMap(other);
  return *this;
}

const StaticSpaceMap::SubVoxels* StaticSpaceMap::find_voxel(const Index3& voxel) const {
  auto it = blocks_.find(pack(grid_.voxel_to_block(voxel)));
  if (it == blocks_.end()) return nullptr;
  return it->second.voxels[static_cast<std::size_t>(grid_.voxel_offset_in_block(voxel))].get();
}

StaticSpaceMap::SubVoxels& StaticSpaceMap::voxel_storage(const Index3& voxel) {
  auto [it, inserted] = blocks_.try_emplace(pack(grid_.voxel_to_block(voxel)));
  if (inserted) it->second.voxels.resize(static_cast<std::size_t>(grid_.voxels_per_block()));
  auto& slot = it->second.voxels[static_cast<std::size_t>(grid_.voxel_offset_in_block(voxel))];
  if (!slot) {
    slot = std::make_unique<SubVoxels>(static_cast<std::size_t>(grid_.subvoxels_per_voxel()));
    ++voxel_count_;
  }
  return *slot;
}

const StaticSubVoxel* StaticSpaceMap::find(const Index3& subvoxel) const {
  const SubVoxels* arr = find_voxel(grid_.subvoxel_to_voxel(subvoxel));
  if (arr == nullptr) return nullptr;
  const StaticSubVoxel& s = (*arr)[static_cast<std::size_t>(grid_.subvoxel_offset_in_voxel(subvoxel))];
  return s.occupied() ? &s : nullptr;
}

StaticSubVoxel& StaticSpaceMap::get_or_create(const Index3& subvoxel) {
  SubVoxels& arr = voxel_storage(grid_.subvoxel_to_voxel(subvoxel));
  return arr[static_cast<std::size_t>(grid_.subvoxel_offset_in_voxel(subvoxel))];
}

std::span<const StaticSubVoxel> StaticSpaceMap::voxel(const Index3& voxel) const {
  const SubVoxels* arr = find_voxel(voxel);
  if (arr == nullptr) return {};
  return {arr->data(), arr->size()};
}

std::span<StaticSubVoxel> StaticSpaceMap::mutable_voxel(const Index3& voxel) {
  auto it = blocks_.find(pack(grid_.voxel_to_block(voxel)));
  if (it == blocks_.end()) return {};
  auto& slot = it->second.voxels[static_cast<std::size_t>(grid_.voxel_offset_in_block(voxel))];
  if (!slot) return {};
  return {slot->data(), slot->size()};
}

std::size_t StaticSpaceMap::occupied_subvoxel_count() const {
  std::size_t n = 0;
  for_each_occupied([&](const Index3&, const StaticSubVoxel&) { ++n; });
  return n;
}

}  // namespace freemap

#include "freemap/backend.hpp"

#include <algorithm>
#include <set>

namespace freemap {

namespace {

bool holds_stamp(const StaticSpaceMap& map, const Index3& voxel, std::int32_t t) {
  for (const StaticSubVoxel& s : map.voxel(voxel)) {
    if (s.t_o == t) return true;
  }
  return false;
}

int block_shift(const Grid& grid) { return grid.depth(Level::kBlock) - grid.depth(Level::kVoxel); }

}  // namespace

void TimestepRegistry::add(std::int32_t t, const Index3& voxel) { entries_[t].voxels.push_back(pack(voxel)); }

const std::vector<std::uint64_t>* TimestepRegistry::entries(std::int32_t t) const {
  auto it = entries_.find(t);
  return it == entries_.end() ? nullptr : &it->second.voxels;
}

std::vector<Index3> TimestepRegistry::voxels(std::int32_t t, const StaticSpaceMap& map) const {
  std::vector<Index3> out;
  auto it = entries_.find(t);
  if (it == entries_.end()) return out;
  std::vector<std::uint64_t> keys = it->second.voxels;
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  for (std::uint64_t k : keys) {
    const Index3 v = unpack(k);
    if (holds_stamp(map, v, t)) out.push_back(v);
  }
  return out;
}

bool TimestepRegistry::maybe_compact(std::int32_t t, const StaticSpaceMap& map) {
  auto it = entries_.find(t);
  if (it == entries_.end()) return false;
  Entry& e = it->second;
  if (e.voxels.size() < threshold_ || e.voxels.size() < 2 * e.compacted_size) return false;
  std::vector<std::uint64_t> live;
  for (const Index3& v : voxels(t, map)) live.push_back(pack(v));
  if (live.empty()) {
    entries_.erase(it);
    return true;
  }
  e.voxels = std::move(live);
  e.compacted_size = e.voxels.size();
  return true;
}

std::size_t TimestepRegistry::entry_count() const {
  std::size_t n = 0;
  for (const auto& [t, e] : entries_) n += e.voxels.size();
  return n;
}

std::size_t integrate(const LabeledScan& labeled, StaticSpaceMap& map, TimestepRegistry& registry, std::int32_t t) {
  const Grid& grid = map.grid();
  VoxelSet stamped(block_shift(grid));
  std::size_t changed = 0;
  for (std::size_t i = 0; i < labeled.points.size(); ++i) {
    const Index3 sub = grid.cell(labeled.points[i], Level::kSubvoxel);
    const DynamicLevel level = labeled.labels[i];
    StaticSubVoxel& s = map.get_or_create(sub);
    if (s.occupied() && !(level < s.level)) continue;
    s.t_o = t;
    s.level = level;
    ++changed;
    const Index3 voxel = grid.subvoxel_to_voxel(sub);
    if (stamped.insert(voxel)) registry.add(t, voxel);
  }
  return changed;
}

ClearingTiers clearing_tiers(std::int32_t t_q, const VoxelSet& newly_free, const VoxelSet& stamped_voxels,
                             const GridConfig& config) {
  const int shift = stamped_voxels.block_shift();
  ClearingTiers tiers{t_q, VoxelSet(shift), VoxelSet(shift), VoxelSet(shift)};
  newly_free.for_each([&](const Index3& v) {
    if (stamped_voxels.contains(v)) tiers.conservative.insert(v);
  });
  tiers.conservative.for_each([&](const Index3& v) {
    for_each_offset(config.moderate_radius, [&](const Index3& d) {
      const Index3 u = v + d;
      if (stamped_voxels.contains(u) && !tiers.conservative.contains(u)) tiers.moderate.insert(u);
    });
  });
  tiers.moderate.for_each([&](const Index3& v) {
    for_each_offset(config.aggressive_radius, [&](const Index3& d) {
      const Index3 u = v + d;
      if (stamped_voxels.contains(u) && !tiers.conservative.contains(u) && !tiers.moderate.contains(u)) {
        tiers.aggressive.insert(u);
      }
    });
  });
  return tiers;
}

ClearReport clear_map(const VoxelSet& newly_free, StaticSpaceMap& map, TimestepRegistry& registry) {
  ClearReport report;
  if (newly_free.empty()) return report;
  const Grid& grid = map.grid();
  const int shift = block_shift(grid);

  std::set<std::int32_t> stamps;
  newly_free.for_each([&](const Index3& v) {
    for (const StaticSubVoxel& s : map.voxel(v)) {
      if (s.occupied()) stamps.insert(s.t_o);
    }
  });
  report.timesteps.assign(stamps.begin(), stamps.end());

  // Tiers for every t_q are computed against the map as it was before any raise;
  // raising levels does not change stamps, so the order of application is irrelevant.
  std::vector<ClearingTiers> all_tiers;
  for (std::int32_t t_q : report.timesteps) {
    registry.maybe_compact(t_q, map);
    VoxelSet stamped(shift);
    for (const Index3& v : registry.voxels(t_q, map)) stamped.insert(v);
    all_tiers.push_back(clearing_tiers(t_q, newly_free, stamped, grid.config()));
  }

  auto raise = [&](std::int32_t t_q, const VoxelSet& tier, DynamicLevel level) {
    tier.for_each([&](const Index3& v) {
      for (StaticSubVoxel& s : map.mutable_voxel(v)) {
        if (s.t_o == t_q && s.level < level) {
          s.level = level;
          ++report.raised_subvoxels;
        }
      }
    });
  };
  for (const ClearingTiers& tiers : all_tiers) {
    report.conservative_voxels += tiers.conservative.size();
    report.moderate_voxels += tiers.moderate.size();
    report.aggressive_voxels += tiers.aggressive.size();
    raise(tiers.t_q, tiers.conservative, DynamicLevel::kConservative);
    raise(tiers.t_q, tiers.moderate, DynamicLevel::kModerate);
    raise(tiers.t_q, tiers.aggressive, DynamicLevel::kAggressive);
  }
  return report;
}

std::vector<Index3> extract_static_subvoxels(const StaticSpaceMap& map) {
  std::vector<Index3> out;
  map.for_each_occupied([&](const Index3& sub, const StaticSubVoxel& s) {
    if (s.level == DynamicLevel::kStatic) out.push_back(sub);
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Vec3> extract_static_map(const StaticSpaceMap& map) {
  std::vector<Vec3> out;
  const Grid& grid = map.grid();
  for (const Index3& sub : extract_static_subvoxels(map)) out.push_back(grid.center(sub, Level::kSubvoxel));
  return out;
}

}  // namespace freemap

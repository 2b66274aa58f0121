#pragma once

#include "freemap/frontend.hpp"
#include "freemap/grid.hpp"
#include "freemap/static_space_map.hpp"
#include "freemap/voxel_set.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace freemap {

/// Index from timestep to the voxels holding subvoxels stamped with it.
///
/// Entries are appended per step and never removed eagerly, so a voxel may
/// stay listed after its subvoxels were re-stamped. Lookups re-check t_o;
/// `compact` drops stale entries once a timestep's list outgrows the threshold.
class TimestepRegistry {
 public:
  explicit TimestepRegistry(std::size_t compaction_threshold = 4096) : threshold_(compaction_threshold) {}

  void add(std::int32_t t, const Index3& voxel);
  /// Voxels holding at least one subvoxel with t_o == t (verified against the map).
  std::vector<Index3> voxels(std::int32_t t, const StaticSpaceMap& map) const;
  /// Raw entries, possibly stale or duplicated.
  const std::vector<std::uint64_t>* entries(std::int32_t t) const;

  /// Rewrites the entry list of `t` without stale or duplicate voxels when it
  /// exceeds the threshold and is at least twice its last compacted size.
  bool maybe_compact(std::int32_t t, const StaticSpaceMap& map);

  std::size_t timestep_count() const { return entries_.size(); }
  std::size_t entry_count() const;
  std::size_t compaction_threshold() const { return threshold_; }

 private:
  struct Entry {
    std::vector<std::uint64_t> voxels;
    std::size_t compacted_size = 0;
  };

  std::size_t threshold_;
  std::map<std::int32_t, Entry> entries_;
};

/// Writes labeled points into the static map. An empty subvoxel adopts the
/// point's (t, level); an occupied one is overwritten only by a strictly lower
/// level. Every created or overwritten subvoxel's voxel is registered under t.
/// Returns the number of subvoxels created or overwritten.
std::size_t integrate(const LabeledScan& labeled, StaticSpaceMap& map, TimestepRegistry& registry, std::int32_t t);

struct ClearReport {
  std::vector<std::int32_t> timesteps;  // T_q, ascending
  std::size_t conservative_voxels = 0;
  std::size_t moderate_voxels = 0;
  std::size_t aggressive_voxels = 0;
  std::size_t raised_subvoxels = 0;
};

/// Per-timestep tiers grown from the newly free voxels.
struct ClearingTiers {
  std::int32_t t_q = 0;
  VoxelSet conservative;
  VoxelSet moderate;
  VoxelSet aggressive;
};

/// Tier sets for one timestep t_q: conservative = V_i within V_tq, then
/// moderate and aggressive growth restricted to V_tq.
ClearingTiers clearing_tiers(std::int32_t t_q, const VoxelSet& newly_free, const VoxelSet& stamped_voxels,
                             const GridConfig& config);

/// Raises the dynamic level of subvoxels whose stamp timestep's tiers contain
/// their voxel. Levels are only ever raised.
ClearReport clear_map(const VoxelSet& newly_free, StaticSpaceMap& map, TimestepRegistry& registry);

/// Centers of all subvoxels whose level is static, sorted by subvoxel index.
std::vector<Vec3> extract_static_map(const StaticSpaceMap& map);
std::vector<Index3> extract_static_subvoxels(const StaticSpaceMap& map);

}  // namespace freemap

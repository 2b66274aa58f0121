#include "freemap/grid.hpp"
#include "freemap/voxel_set.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace freemap;

namespace {

Grid outdoor() { return Grid(GridConfig{}); }

}  // namespace

TEST(GridIndex, GlobalIndexFloorsNegativeCoordinates) {
  const Grid g = outdoor();
  EXPECT_EQ(g.cell({0.55, -0.15, 0.0}, Level::kSubvoxel), (Index3{5, -2, 0}));
  EXPECT_EQ(g.cell({0.0, 0.0, 0.0}, Level::kVoxel), (Index3{0, 0, 0}));
  EXPECT_EQ(g.cell({3.2, 3.2, 3.2}, Level::kBlock), (Index3{1, 1, 1}));
  EXPECT_EQ(floor_index({0.55, -0.15, 0.0}, 0.1), (Index3{5, -2, 0}));
  EXPECT_EQ(floor_index({0.0, 0.0, 0.0}, 0.4), (Index3{0, 0, 0}));
}

TEST(GridIndex, RejectsNonFiniteAndOutOfRange) {
  const Grid g = outdoor();
  EXPECT_THROW(g.cell({std::nan(""), 0, 0}, Level::kVoxel), std::invalid_argument);
  EXPECT_THROW(g.cell({0, std::numeric_limits<double>::infinity(), 0}, Level::kVoxel), std::invalid_argument);
  EXPECT_THROW(g.cell({1e9, 0, 0}, Level::kVoxel), std::out_of_range);
  EXPECT_THROW(floor_index({0, 0, 0}, 0.0), std::invalid_argument);
}

TEST(GridIndex, MasksMatchDepths) {
  const Grid g = outdoor();
  EXPECT_EQ(g.depth(Level::kSubvoxel), 0);
  EXPECT_EQ(g.depth(Level::kVoxel), 2);
  EXPECT_EQ(g.depth(Level::kBlock), 5);
  EXPECT_EQ(g.mask(Level::kSubvoxel, Level::kVoxel), 0b00000011);
  EXPECT_EQ(g.mask(Level::kVoxel, Level::kBlock), 0b00000111);
  EXPECT_EQ(g.voxels_per_block(), 512);
  EXPECT_EQ(g.subvoxels_per_voxel(), 64);
}

TEST(GridIndex, LocalIndexIsNonNegativeModulo) {
  const Grid g = outdoor();
  EXPECT_EQ(g.local_index({{5, -2, 0}, Level::kSubvoxel}, Level::kVoxel).cell, (Index3{1, 2, 0}));
  EXPECT_EQ(g.local_index({{8, 0, -1}, Level::kVoxel}, Level::kBlock).cell, (Index3{0, 0, 7}));
  EXPECT_THROW(g.local_index({{1, 1, 1}, Level::kBlock}, Level::kVoxel), std::logic_error);
  EXPECT_THROW(g.local_index({{1, 1, 1}, Level::kVoxel}, Level::kVoxel), std::logic_error);
}

TEST(GridIndex, CoarsenIsFloorDivision) {
  const Grid g = outdoor();
  EXPECT_EQ(g.coarsen({{5, -2, 0}, Level::kSubvoxel}, Level::kVoxel).cell, (Index3{1, -1, 0}));
  EXPECT_EQ(g.coarsen({{0, 0, 0}, Level::kVoxel}, Level::kBlock).cell, (Index3{0, 0, 0}));
  EXPECT_THROW(g.coarsen({{0, 0, 0}, Level::kBlock}, Level::kVoxel), std::logic_error);
}

TEST(GridIndex, ShiftAndMaskMatchFloorDivOracle) {
  const Grid g = outdoor();
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int32_t> dist(-(1 << 20), (1 << 20) - 1);
  for (int i = 0; i < 100000; ++i) {
    const Index3 c{dist(rng), dist(rng), dist(rng)};
    const Index3 coarse = g.coarsen({c, Level::kSubvoxel}, Level::kVoxel).cell;
    const Index3 local = g.local_index({c, Level::kSubvoxel}, Level::kVoxel).cell;
    for (int a = 0; a < 3; ++a) {
      ASSERT_EQ(coarse[a], oracle::floor_div(c[a], 4));
      ASSERT_EQ(local[a], oracle::floor_mod(c[a], 4));
    }
    ASSERT_EQ((coarse << 2) + local, c);
  }
}

TEST(GridIndex, PointRoundTripAcrossLevels) {
  const Grid g = outdoor();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1000.0, 1000.0);
  for (int i = 0; i < 100000; ++i) {
    const Vec3 p(dist(rng), dist(rng), dist(rng));
    const GridIndex s = g.global_index(p, Level::kSubvoxel);
    const GridIndex v = g.global_index(p, Level::kVoxel);
    const GridIndex b = g.global_index(p, Level::kBlock);
    ASSERT_EQ(g.coarsen(s, Level::kVoxel).cell, v.cell);
    ASSERT_EQ(g.coarsen(v, Level::kBlock).cell, b.cell);
    ASSERT_EQ((b.cell << 3) + g.local_index(v, Level::kBlock).cell, v.cell);
  }
}

TEST(GridIndex, OffsetsRoundTrip) {
  const Grid g = outdoor();
  const Index3 block{-3, 2, 0};
  std::set<int> seen;
  for (int o = 0; o < g.voxels_per_block(); ++o) {
    const Index3 v = g.voxel_from_offset(block, o);
    EXPECT_EQ(g.voxel_to_block(v), block);
    EXPECT_EQ(g.voxel_offset_in_block(v), o);
    seen.insert(o);
  }
  EXPECT_EQ(seen.size(), 512u);
  const Index3 voxel{-1, -1, 5};
  for (int o = 0; o < g.subvoxels_per_voxel(); ++o) {
    const Index3 s = g.subvoxel_from_offset(voxel, o);
    EXPECT_EQ(g.subvoxel_to_voxel(s), voxel);
    EXPECT_EQ(g.subvoxel_offset_in_voxel(s), o);
  }
}

TEST(GridIndex, CenterLiesInsideCell) {
  const Grid g = outdoor();
  const Index3 c{-4, 7, 0};
  EXPECT_EQ(g.cell(g.center(c, Level::kVoxel), Level::kVoxel), c);
  EXPECT_EQ(g.cell(g.center(c, Level::kSubvoxel), Level::kSubvoxel), c);
}

TEST(GridConfig, ValidatesRatiosAndThresholds) {
  EXPECT_NO_THROW(GridConfig{}.validate());
  GridConfig c;
  c.voxel_size = 0.3;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = GridConfig{};
  c.block_size = 4.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = GridConfig{};
  c.free_threshold = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = GridConfig{};
  c.recovery_threshold = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = GridConfig{};
  c.moderate_radius = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = GridConfig{};
  c.aggressive_radius = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = GridConfig{};
  c.subvoxel_size = 0.05;
  c.voxel_size = 0.2;
  EXPECT_NO_THROW(Grid{c});
  EXPECT_EQ(Grid{c}.depth(Level::kBlock), 6);
}

TEST(DynamicLevelOrder, IsTotal) {
  EXPECT_LT(DynamicLevel::kStatic, DynamicLevel::kAggressive);
  EXPECT_LT(DynamicLevel::kAggressive, DynamicLevel::kModerate);
  EXPECT_LT(DynamicLevel::kModerate, DynamicLevel::kConservative);
  EXPECT_EQ(to_string(DynamicLevel::kModerate), "moderate");
  EXPECT_EQ(to_string(Level::kBlock), "block");
}

TEST(Neighborhood, Cardinality) {
  const Index3 c{3, -1, 0};
  EXPECT_EQ(neighborhood(c, 1).size(), 27u);
  EXPECT_EQ(neighborhood(c, 2).size(), 125u);
  const auto zero = neighborhood(c, 0);
  ASSERT_EQ(zero.size(), 1u);
  EXPECT_EQ(zero[0], c);
  for (const Index3& n : neighborhood(c, 2)) EXPECT_LE(chebyshev(n, c), 2);
  const auto n2 = neighborhood(c, 2);
  EXPECT_EQ(std::set<Index3>(n2.begin(), n2.end()).size(), 125u);
  EXPECT_THROW(neighborhood(c, -1), std::invalid_argument);
}

TEST(PackedKey, RoundTrip) {
  for (const Index3& i : {Index3{0, 0, 0}, Index3{kMinCellCoord, kMaxCellCoord, -1}, Index3{-5, 17, 1 << 19}}) {
    EXPECT_EQ(unpack(pack(i)), i);
  }
}

TEST(VoxelSet, InsertEraseIterate) {
  VoxelSet s(3);
  EXPECT_TRUE(s.insert({0, 0, 0}));
  EXPECT_FALSE(s.insert({0, 0, 0}));
  EXPECT_TRUE(s.insert({-1, 9, 3}));
  EXPECT_TRUE(s.insert({7, 7, 7}));
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.block_count(), 2u);
  EXPECT_TRUE(s.contains({-1, 9, 3}));
  EXPECT_FALSE(s.contains({-1, 9, 4}));
  std::set<Index3> seen;
  s.for_each([&](const Index3& v) { seen.insert(v); });
  EXPECT_EQ(seen, (std::set<Index3>{{0, 0, 0}, {-1, 9, 3}, {7, 7, 7}}));
  EXPECT_TRUE(s.erase({0, 0, 0}));
  EXPECT_FALSE(s.erase({0, 0, 0}));
  EXPECT_EQ(s.size(), 2u);
  const auto sorted = s.sorted();
  EXPECT_TRUE(std::is_sorted(sorted.begin(), sorted.end()));
  VoxelSet copy = s;
  copy.insert({100, 100, 100});
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(copy.size(), 3u);
  s.clear();
  EXPECT_TRUE(s.empty());
  EXPECT_THROW(VoxelSet(0), std::invalid_argument);
}

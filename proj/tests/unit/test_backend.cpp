#include "freemap/backend.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

using namespace freemap;

namespace {

int block_shift(const Grid& g) { return g.depth(Level::kBlock) - g.depth(Level::kVoxel); }

LabeledScan one_point(const Vec3& p, DynamicLevel level) {
  LabeledScan s;
  s.points = {p};
  s.labels = {level};
  return s;
}

VoxelSet voxels(const Grid& g, std::initializer_list<Index3> list) {
  VoxelSet s(block_shift(g));
  for (const Index3& v : list) s.insert(v);
  return s;
}

std::set<Index3> as_set(const VoxelSet& s) {
  const auto v = s.to_vector();
  return {v.begin(), v.end()};
}

}  // namespace

TEST(Integrate, LowerLevelReplacesAndRestamps) {
  const Grid g{GridConfig{}};
  StaticSpaceMap map(g);
  TimestepRegistry reg;
  const Vec3 p(0.05, 0.05, 0.05);
  EXPECT_EQ(integrate(one_point(p, DynamicLevel::kModerate), map, reg, 3), 1u);
  EXPECT_EQ(integrate(one_point(p, DynamicLevel::kStatic), map, reg, 4), 1u);
  const StaticSubVoxel* s = map.find({0, 0, 0});
  ASSERT_NE(s, nullptr);
  EXPECT_EQ(*s, (StaticSubVoxel{4, DynamicLevel::kStatic}));
  EXPECT_EQ(reg.voxels(4, map), (std::vector<Index3>{{0, 0, 0}}));
  EXPECT_TRUE(reg.voxels(3, map).empty());
}

TEST(Integrate, HigherOrEqualLevelLeavesSubvoxel) {
  const Grid g{GridConfig{}};
  StaticSpaceMap map(g);
  TimestepRegistry reg;
  const Vec3 p(0.05, 0.05, 0.05);
  integrate(one_point(p, DynamicLevel::kStatic), map, reg, 0);
  EXPECT_EQ(integrate(one_point(p, DynamicLevel::kConservative), map, reg, 1), 0u);
  EXPECT_EQ(integrate(one_point(p, DynamicLevel::kStatic), map, reg, 2), 0u);
  EXPECT_EQ(*map.find({0, 0, 0}), (StaticSubVoxel{0, DynamicLevel::kStatic}));
}

TEST(Integrate, EmptySubvoxelAdoptsLabel) {
  const Grid g{GridConfig{}};
  StaticSpaceMap map(g);
  TimestepRegistry reg;
  integrate(one_point({-0.05, 1.0, 2.0}, DynamicLevel::kAggressive), map, reg, 7);
  EXPECT_EQ(*map.find(g.cell({-0.05, 1.0, 2.0}, Level::kSubvoxel)), (StaticSubVoxel{7, DynamicLevel::kAggressive}));
  EXPECT_EQ(reg.voxels(7, map).size(), 1u);
}

TEST(Integrate, RegistersEachVoxelOncePerStep) {
  const Grid g{GridConfig{}};
  StaticSpaceMap map(g);
  TimestepRegistry reg;
  LabeledScan s;
  for (int i = 0; i < 4; ++i) {
    s.points.emplace_back(0.05 + 0.1 * i, 0.05, 0.05);
    s.labels.push_back(DynamicLevel::kStatic);
  }
  EXPECT_EQ(integrate(s, map, reg, 0), 4u);
  ASSERT_NE(reg.entries(0), nullptr);
  EXPECT_EQ(reg.entries(0)->size(), 1u);
}

TEST(TimestepRegistry, StaleEntriesAreFilteredAndCompacted) {
  const Grid g{GridConfig{}};
  StaticSpaceMap map(g);
  TimestepRegistry reg(4);
  for (int i = 0; i < 10; ++i) {
    integrate(one_point(g.center({i, 0, 0}, Level::kVoxel), DynamicLevel::kModerate), map, reg, 0);
  }
  EXPECT_EQ(reg.voxels(0, map).size(), 10u);
  for (int i = 0; i < 6; ++i) {
    integrate(one_point(g.center({i, 0, 0}, Level::kVoxel), DynamicLevel::kStatic), map, reg, 1);
  }
  EXPECT_EQ(reg.entries(0)->size(), 10u);
  EXPECT_EQ(reg.voxels(0, map).size(), 4u);
  EXPECT_EQ(reg.voxels(1, map).size(), 6u);
  EXPECT_TRUE(reg.maybe_compact(0, map));
  EXPECT_EQ(reg.entries(0)->size(), 4u);
  EXPECT_FALSE(reg.maybe_compact(0, map));
  EXPECT_EQ(reg.voxels(0, map).size(), 4u);
  EXPECT_EQ(reg.entries(99), nullptr);
  EXPECT_TRUE(reg.voxels(99, map).empty());
}

TEST(TimestepRegistry, NoFalseNegatives) {
  const Grid g{GridConfig{}};
  StaticSpaceMap map(g);
  TimestepRegistry reg(8);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_int_distribution<int> lvl(0, 3);
  for (int t = 0; t < 30; ++t) {
    LabeledScan s;
    for (int i = 0; i < 50; ++i) {
      s.points.emplace_back(u(rng), u(rng), u(rng));
      s.labels.push_back(static_cast<DynamicLevel>(lvl(rng)));
    }
    integrate(s, map, reg, t);
    if (t % 5 == 0) {
      for (int q = 0; q <= t; ++q) reg.maybe_compact(q, map);
    }
  }
  std::map<std::int32_t, std::set<Index3>> truth;
  map.for_each_occupied([&](const Index3& s, const StaticSubVoxel& sv) { truth[sv.t_o].insert(g.subvoxel_to_voxel(s)); });
  for (int t = 0; t < 30; ++t) {
    const auto got = reg.voxels(t, map);
    EXPECT_EQ(std::set<Index3>(got.begin(), got.end()), truth[t]) << "t=" << t;
  }
}

TEST(ClearMap, EmptyIncrementLeavesMapUnchanged) {
  const Grid g{GridConfig{}};
  StaticSpaceMap map(g);
  TimestepRegistry reg;
  integrate(one_point({0.05, 0.05, 0.05}, DynamicLevel::kStatic), map, reg, 0);
  const auto report = clear_map(VoxelSet(block_shift(g)), map, reg);
  EXPECT_TRUE(report.timesteps.empty());
  EXPECT_EQ(report.raised_subvoxels, 0u);
  EXPECT_EQ(map.find({0, 0, 0})->level, DynamicLevel::kStatic);
}

TEST(ClearMap, RaisesNewlyFreeAndAdjacentVoxels) {
  const Grid g{GridConfig{}};
  StaticSpaceMap map(g);
  TimestepRegistry reg;
  LabeledScan s;
  for (int x = 0; x < 4; ++x) {
    s.points.push_back(g.center({x, 0, 0}, Level::kVoxel));
    s.labels.push_back(DynamicLevel::kStatic);
  }
  integrate(s, map, reg, 5);
  // A later timestep owns a subvoxel next door; it must not be touched.
  integrate(one_point(g.center({0, 1, 0}, Level::kVoxel), DynamicLevel::kStatic), map, reg, 6);

  const auto report = clear_map(voxels(g, {{0, 0, 0}}), map, reg);
  EXPECT_EQ(report.timesteps, (std::vector<std::int32_t>{5}));
  auto level_at = [&](const Index3& v) { return map.find(g.cell(g.center(v, Level::kVoxel), Level::kSubvoxel))->level; };
  EXPECT_EQ(level_at({0, 0, 0}), DynamicLevel::kConservative);
  EXPECT_EQ(level_at({1, 0, 0}), DynamicLevel::kModerate);
  EXPECT_EQ(level_at({2, 0, 0}), DynamicLevel::kAggressive);
  EXPECT_EQ(level_at({3, 0, 0}), DynamicLevel::kAggressive);
  EXPECT_EQ(level_at({0, 1, 0}), DynamicLevel::kStatic);
  EXPECT_EQ(report.conservative_voxels, 1u);
  EXPECT_EQ(report.moderate_voxels, 1u);
  EXPECT_EQ(report.aggressive_voxels, 2u);
  EXPECT_EQ(report.raised_subvoxels, 4u);
}

TEST(ClearMap, NeverLowersLevels) {
  const Grid g{GridConfig{}};
  StaticSpaceMap map(g);
  TimestepRegistry reg;
  integrate(one_point(g.center({0, 0, 0}, Level::kVoxel), DynamicLevel::kStatic), map, reg, 0);
  integrate(one_point(g.center({1, 0, 0}, Level::kVoxel), DynamicLevel::kConservative), map, reg, 0);
  clear_map(voxels(g, {{0, 0, 0}}), map, reg);
  EXPECT_EQ(map.find(g.cell(g.center({1, 0, 0}, Level::kVoxel), Level::kSubvoxel))->level,
            DynamicLevel::kConservative);
}

TEST(ClearingTiers, DisjointAndWithinStampedSet) {
  const Grid g{GridConfig{}};
  const VoxelSet stamped = voxels(g, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {5, 0, 0}, {0, 2, 0}});
  const auto tiers = clearing_tiers(4, voxels(g, {{0, 0, 0}, {9, 9, 9}}), stamped, g.config());
  EXPECT_EQ(tiers.t_q, 4);
  EXPECT_EQ(as_set(tiers.conservative), (std::set<Index3>{{0, 0, 0}}));
  EXPECT_EQ(as_set(tiers.moderate), (std::set<Index3>{{1, 0, 0}}));
  EXPECT_EQ(as_set(tiers.aggressive), (std::set<Index3>{{2, 0, 0}, {0, 2, 0}}));
}

TEST(ClearMap, RandomInstancesMatchOracle) {
  GridConfig cfg;
  const Grid g{cfg};
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    StaticSpaceMap map(g);
    TimestepRegistry reg(16);
    std::map<Index3, oracle::SubVoxelState> flat;
    std::uniform_int_distribution<int> t_dist(0, 3);
    std::uniform_int_distribution<int> lvl(0, 3);
    std::bernoulli_distribution occupied(0.35);
    std::uniform_int_distribution<int> sub(0, 3);
    for (int t = 0; t < 4; ++t) {
      LabeledScan s;
      for (int x = 0; x < 10; ++x)
        for (int y = 0; y < 10; ++y)
          for (int z = 0; z < 10; ++z) {
            if (!occupied(rng) || t_dist(rng) != t) continue;
            const Index3 sv = (Index3{x, y, z} << 2) + Index3{sub(rng), sub(rng), sub(rng)};
            s.points.push_back(g.center(sv, Level::kSubvoxel));
            s.labels.push_back(static_cast<DynamicLevel>(lvl(rng)));
          }
      integrate(s, map, reg, t);
    }
    map.for_each_occupied([&](const Index3& s, const StaticSubVoxel& sv) { flat[s] = {sv.t_o, sv.level}; });
    std::set<Index3> newly;
    VoxelSet vi(block_shift(g));
    std::bernoulli_distribution pick(0.04);
    for (int x = 0; x < 10; ++x)
      for (int y = 0; y < 10; ++y)
        for (int z = 0; z < 10; ++z)
          if (pick(rng)) {
            newly.insert({x, y, z});
            vi.insert({x, y, z});
          }
    const auto expected = oracle::clear_oracle(flat, newly, g.depth(Level::kVoxel), 1, 2);
    clear_map(vi, map, reg);
    std::map<Index3, oracle::SubVoxelState> got;
    map.for_each_occupied([&](const Index3& s, const StaticSubVoxel& sv) { got[s] = {sv.t_o, sv.level}; });
    ASSERT_EQ(got, expected) << "trial " << trial;
  }
}

TEST(ExtractStaticMap, FiltersNonStaticAndRecovers) {
  const Grid g{GridConfig{}};
  StaticSpaceMap map(g);
  TimestepRegistry reg;
  integrate(one_point({0.05, 0.05, 0.05}, DynamicLevel::kStatic), map, reg, 0);
  integrate(one_point({0.15, 0.05, 0.05}, DynamicLevel::kStatic), map, reg, 0);
  EXPECT_EQ(extract_static_subvoxels(map), (std::vector<Index3>{{0, 0, 0}, {1, 0, 0}}));
  integrate(one_point({5.05, 0.05, 0.05}, DynamicLevel::kAggressive), map, reg, 1);
  EXPECT_EQ(extract_static_map(map).size(), 2u);

  clear_map(voxels(g, {{0, 0, 0}}), map, reg);
  EXPECT_TRUE(extract_static_map(map).empty());
  integrate(one_point({0.05, 0.05, 0.05}, DynamicLevel::kStatic), map, reg, 2);
  const auto pts = extract_static_map(map);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_NEAR((pts[0] - Vec3(0.05, 0.05, 0.05)).norm(), 0.0, 1e-12);
}

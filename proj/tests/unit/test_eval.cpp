#include "freemap/eval.hpp"
#include "freemap/pipeline.hpp"
#include "freemap/scene.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <random>

using namespace freemap;

namespace {

GroundTruth two_class_truth() {
  GroundTruthBuilder b(0.2);
  b.add({{0.1, 0.1, 0.1}, {1.1, 0.1, 0.1}, {2.1, 0.1, 0.1}, {3.1, 0.1, 0.1}}, {0, 0, 1, 1});
  return b.finish();
}

}  // namespace

TEST(GroundTruth, SingleStaticPoint) {
  GroundTruthBuilder b(0.2);
  b.add({{0.5, 0.5, 0.5}}, {0});
  const auto gt = b.finish();
  EXPECT_EQ(gt.static_voxels.size(), 1u);
  EXPECT_TRUE(gt.dynamic_voxels.empty());
  EXPECT_DOUBLE_EQ(gt.voxel_size, 0.2);
}

TEST(GroundTruth, SharedVoxelIsStatic) {
  GroundTruthBuilder b(0.2);
  b.add({{0.01, 0.01, 0.01}}, {1});
  b.add({{0.15, 0.15, 0.15}}, {0});
  const auto gt = b.finish();
  EXPECT_EQ(gt.static_voxels.size(), 1u);
  EXPECT_TRUE(gt.dynamic_voxels.empty());
}

TEST(GroundTruth, RequiresFlagPerPoint) {
  GroundTruthBuilder b(0.2);
  EXPECT_THROW(b.add({{0, 0, 0}}, {}), std::invalid_argument);
  EXPECT_THROW(GroundTruthBuilder(0.0), std::invalid_argument);
}

TEST(GroundTruth, ClassesAreDisjoint) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3, 3);
  std::bernoulli_distribution dyn(0.3);
  GroundTruthBuilder b(0.2);
  for (int f = 0; f < 5; ++f) {
    std::vector<Vec3> pts;
    std::vector<std::uint8_t> flags;
    for (int i = 0; i < 2000; ++i) {
      pts.emplace_back(u(rng), u(rng), u(rng));
      flags.push_back(dyn(rng) ? 1 : 0);
    }
    b.add(pts, flags);
  }
  const auto gt = b.finish();
  for (auto k : gt.dynamic_voxels) EXPECT_FALSE(gt.static_voxels.contains(k));
}

TEST(Score, PerfectMap) {
  const auto gt = two_class_truth();
  const auto r = score({{0.1, 0.1, 0.1}, {1.1, 0.1, 0.1}}, gt);
  EXPECT_DOUBLE_EQ(*r.pr, 1.0);
  EXPECT_DOUBLE_EQ(*r.rr, 1.0);
  EXPECT_DOUBLE_EQ(*r.f1, 1.0);
}

TEST(Score, EverythingKept) {
  const auto gt = two_class_truth();
  const auto r = score({{0.1, 0.1, 0.1}, {1.1, 0.1, 0.1}, {2.1, 0.1, 0.1}, {3.1, 0.1, 0.1}}, gt);
  EXPECT_DOUBLE_EQ(*r.pr, 1.0);
  EXPECT_DOUBLE_EQ(*r.rr, 0.0);
  EXPECT_DOUBLE_EQ(*r.f1, 0.0);
  EXPECT_EQ(r.kept_dynamic, 2u);
  EXPECT_EQ(r.dynamic_total, 2u);
}

TEST(Score, F1FromPublishedRates) { EXPECT_NEAR(f1_score(0.9876, 0.9790), 0.9833, 1e-4); }

TEST(Score, F1Degenerate) { EXPECT_EQ(f1_score(0.0, 0.0), 0.0); }

TEST(Score, UndefinedClasses) {
  GroundTruthBuilder b(0.2);
  b.add({{0.1, 0.1, 0.1}}, {0});
  const auto r = score({}, b.finish());
  ASSERT_TRUE(r.pr.has_value());
  EXPECT_DOUBLE_EQ(*r.pr, 0.0);
  EXPECT_FALSE(r.rr.has_value());
  EXPECT_FALSE(r.f1.has_value());
  const auto empty = score({{1, 1, 1}}, GroundTruthBuilder(0.2).finish());
  EXPECT_FALSE(empty.pr.has_value());
  EXPECT_FALSE(empty.rr.has_value());
}

TEST(Score, PermutationAndDuplicationInvariant) {
  const auto gt = two_class_truth();
  std::vector<Vec3> pts{{0.1, 0.1, 0.1}, {2.1, 0.1, 0.1}, {2.15, 0.12, 0.1}};
  const auto a = score(pts, gt);
  std::reverse(pts.begin(), pts.end());
  pts.push_back(pts.front());
  const auto b = score(pts, gt);
  EXPECT_EQ(*a.pr, *b.pr);
  EXPECT_EQ(*a.rr, *b.rr);
  EXPECT_EQ(a.predicted_voxels, b.predicted_voxels);
}

TEST(Score, MonotoneInPredictedVoxels) {
  const auto gt = two_class_truth();
  const auto base = score({{0.1, 0.1, 0.1}}, gt);
  const auto more_static = score({{0.1, 0.1, 0.1}, {1.1, 0.1, 0.1}}, gt);
  EXPECT_GE(*more_static.pr, *base.pr);
  EXPECT_EQ(*more_static.rr, *base.rr);
  const auto more_dynamic = score({{0.1, 0.1, 0.1}, {2.1, 0.1, 0.1}}, gt);
  EXPECT_LE(*more_dynamic.rr, *base.rr);
  EXPECT_EQ(*more_dynamic.pr, *base.pr);
}

TEST(Score, FloorConventionMatchesGrid) {
  const auto keys = voxelize({{-0.01, 0.0, 0.19999}}, 0.2);
  ASSERT_EQ(keys.size(), 1u);
  EXPECT_EQ(unpack(*keys.begin()), (Index3{-1, 0, 0}));
}

TEST(ScoreWithinRange, InfiniteRangeEqualsScore) {
  const auto gt = two_class_truth();
  const std::vector<Vec3> pts{{0.1, 0.1, 0.1}, {2.1, 0.1, 0.1}};
  const auto a = score(pts, gt);
  const auto b = score_within_range(pts, gt, std::numeric_limits<double>::infinity(), {{0, 0, 0}});
  EXPECT_EQ(*a.pr, *b.pr);
  EXPECT_EQ(*a.rr, *b.rr);
  EXPECT_EQ(a.static_total, b.static_total);
  EXPECT_THROW(score_within_range(pts, gt, 0.0, {}), std::invalid_argument);
}

TEST(ScoreWithinRange, DistantVoxelsExcludedFromBothSides) {
  GroundTruthBuilder b(0.2);
  b.add({{1.1, 0.1, 0.1}, {25.1, 0.1, 0.1}, {3.1, 0.1, 0.1}, {26.1, 0.1, 0.1}}, {0, 0, 1, 1});
  const auto gt = b.finish();
  const std::vector<Vec3> pts{{1.1, 0.1, 0.1}, {25.1, 0.1, 0.1}, {26.1, 0.1, 0.1}};
  const auto r = score_within_range(pts, gt, 20.0, {{0, 0, 0}, {-5, 0, 0}});
  EXPECT_EQ(r.static_total, 1u);
  EXPECT_EQ(r.dynamic_total, 1u);
  EXPECT_EQ(r.predicted_voxels, 1u);
  EXPECT_DOUBLE_EQ(*r.pr, 1.0);
  EXPECT_DOUBLE_EQ(*r.rr, 1.0);
  EXPECT_DOUBLE_EQ(*r.max_range, 20.0);
  // Any trajectory position counts.
  const auto r2 = score_within_range(pts, gt, 20.0, {{0, 0, 0}, {30, 0, 0}});
  EXPECT_EQ(r2.static_total, 2u);
  EXPECT_EQ(r2.dynamic_total, 2u);
}

TEST(ScoreWithinRange, TrailingSceneRejectionNotLowered) {
  SyntheticScene scene = bundled_scenario("trailing-vehicle");
  scene.beams.cols = 256;
  scene.beams.rows = 32;
  const PipelineConfig cfg = scenario_config(scene);
  Pipeline p(cfg);
  GroundTruthBuilder b(cfg.eval_voxel_size);
  std::vector<Vec3> trajectory;
  for (int t = 0; t < scene.frames; ++t) {
    const DatasetFrame f = simulate_scan(scene, t);
    p.step(Scan{f.points, f.pose, t});
    std::vector<Vec3> world;
    for (const Vec3& q : f.points) world.push_back(f.pose * q);
    b.add(world, f.dynamic);
    trajectory.push_back(f.pose.translation());
  }
  const auto gt = b.finish();
  const auto pts = p.snapshot().points;
  const auto full = score(pts, gt);
  const auto near = score_within_range(pts, gt, 20.0, trajectory);
  ASSERT_TRUE(full.rr && near.rr);
  EXPECT_GT(*full.rr, 0.5);
  EXPECT_GE(*near.rr, *full.rr);
}

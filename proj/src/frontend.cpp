#include "freemap/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace freemap {

namespace {

constexpr double kDeg = M_PI / 180.0;

int bins(double span, double res) {
  // Guard against spans that are an exact multiple of the resolution up to rounding.
  return static_cast<int>(std::ceil(span / res - 1e-9));
}

std::uint16_t saturating_inc(std::uint16_t n) {
  return n == std::numeric_limits<std::uint16_t>::max() ? n : static_cast<std::uint16_t>(n + 1);
}

}  // namespace

int SensorModel::cols() const { return bins(phi_max - phi_min, phi_res); }
int SensorModel::rows() const { return bins(theta_max - theta_min, theta_res); }

bool SensorModel::in_pattern(int col, int row) const {
  if (fov_mask.empty()) return true;
  return fov_mask[static_cast<std::size_t>(row) * cols() + col] != 0;
}

Vec3 SensorModel::pixel_direction(int col, int row) const {
  const double phi = phi_min + (col + 0.5) * phi_res;
  const double theta = theta_min + (row + 0.5) * theta_res;
  return {std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), std::sin(theta)};
}

void SensorModel::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(std::string("SensorModel: ") + what); };
  if (!(phi_res > 0.0) || !(theta_res > 0.0)) fail("angular resolutions must be positive");
  if (!(phi_max > phi_min) || !(theta_max > theta_min)) fail("angular bounds must be increasing");
  if (phi_min < -M_PI - 1e-9 || phi_max > M_PI + 1e-9) fail("azimuth bounds must lie in [-pi, pi]");
  if (theta_min < -M_PI / 2 - 1e-9 || theta_max > M_PI / 2 + 1e-9) fail("elevation bounds must lie in [-pi/2, pi/2]");
  if (!(r_max > 0.0)) fail("r_max must be positive");
  if (!(r_m >= 0.0) || !(r_m < r_max)) fail("r_m must satisfy 0 <= r_m < r_max");
  if (!fov_mask.empty() && fov_mask.size() != static_cast<std::size_t>(cols()) * rows()) {
    fail("fov_mask size must equal cols * rows");
  }
}

SensorModel sensor_preset(const std::string& name) {
  SensorModel s;
  if (name == "hdl64") {
    s.theta_min = -24.9 * kDeg;
    s.theta_max = 2.0 * kDeg;
    s.theta_res = (26.9 / 64.0) * kDeg;
    s.phi_res = 0.2 * kDeg;
  } else if (name == "os2-128") {
    s.theta_min = -11.25 * kDeg;
    s.theta_max = 11.25 * kDeg;
    s.theta_res = (22.5 / 128.0) * kDeg;
    s.phi_res = (360.0 / 2048.0) * kDeg;
  } else if (name == "vlp16") {
    s.theta_min = -16.0 * kDeg;
    s.theta_max = 16.0 * kDeg;
    s.theta_res = 2.0 * kDeg;
    s.phi_res = 0.2 * kDeg;
    s.r_max = 30.0;
  } else if (name == "solid-state") {
    s.phi_min = -35.2 * kDeg;
    s.phi_max = 35.2 * kDeg;
    s.theta_min = -38.6 * kDeg;
    s.theta_max = 38.6 * kDeg;
    s.phi_res = 0.2 * kDeg;
    s.theta_res = 0.2 * kDeg;
  } else {
    throw std::invalid_argument("unknown sensor preset '" + name + "'");
  }
  return s;
}

void validate_pose(const Pose& pose) {
  const Eigen::Matrix3d r = pose.linear();
  if (!pose.matrix().allFinite()) throw std::invalid_argument("pose contains non-finite values");
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-6 || std::abs(r.determinant() - 1.0) > 1e-6) {
    throw std::invalid_argument("pose rotation is not a proper rotation");
  }
}

bool pixel_of(const SensorModel& sensor, const Vec3& p, int& col, int& row) {
  if (!p.allFinite()) return false;
  const double phi = std::atan2(p.y(), p.x());
  const double theta = std::atan2(p.z(), std::hypot(p.x(), p.y()));
  const double fc = std::floor((phi - sensor.phi_min) / sensor.phi_res);
  const double fr = std::floor((theta - sensor.theta_min) / sensor.theta_res);
  if (fc < 0 || fr < 0 || fc >= sensor.cols() || fr >= sensor.rows()) return false;
  // Half-open bounds: a point exactly at the upper angle is outside.
  if (phi >= sensor.phi_max || theta >= sensor.theta_max) return false;
  col = static_cast<int>(fc);
  row = static_cast<int>(fr);
  return true;
}

DepthImage project_depth_image(const std::vector<Vec3>& points, const SensorModel& sensor) {
  DepthImage img;
  img.cols = sensor.cols();
  img.rows = sensor.rows();
  const std::size_t n = static_cast<std::size_t>(img.cols) * img.rows;
  img.range.assign(n, std::numeric_limits<float>::infinity());
  img.occupied.assign(n, 0);
  for (const Vec3& p : points) {
    int c = 0;
    int r = 0;
    if (!pixel_of(sensor, p, c, r)) continue;
    const std::size_t i = img.index(c, r);
    img.range[i] = std::min(img.range[i], static_cast<float>(p.norm()));
    img.occupied[i] = 1;
  }
  return img;
}

std::size_t PixelRegion::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

PixelRegion enhancement_region(const DepthImage& image, const SensorModel& sensor) {
  PixelRegion region{image.cols, image.rows, std::vector<std::uint8_t>(image.occupied.size(), 0)};
  for (int r = 0; r < image.rows; ++r) {
    for (int c = 0; c < image.cols; ++c) {
      if (!image.is_occupied(c, r) && sensor.in_pattern(c, r)) region.mask[image.index(c, r)] = 1;
    }
  }
  return region;
}

std::vector<float> recover_free_depth(const DepthImage& image, const PixelRegion& region, const SensorModel& sensor,
                                      const FillOptions& fill) {
  const int cols = image.cols;
  const int rows = image.rows;
  const std::size_t n = static_cast<std::size_t>(cols) * rows;
  std::vector<float> depth(n, 0.0f);
  if (region.count() == 0) return depth;

  const bool wraps = (sensor.phi_max - sensor.phi_min) >= 2.0 * M_PI - sensor.phi_res * 0.5;
  const int k = std::max(0, fill.window_radius);

  // Known values: measured pixels first, then filled pixels pass by pass.
  std::vector<float> value(image.range);
  std::vector<std::uint8_t> known(image.occupied);
  std::vector<std::uint32_t> pending;
  for (std::size_t i = 0; i < n; ++i) {
    if (region.mask[i]) pending.push_back(static_cast<std::uint32_t>(i));
  }

  std::vector<std::pair<std::uint32_t, float>> filled;
  for (int pass = 0; pass < fill.max_passes && !pending.empty(); ++pass) {
    filled.clear();
    std::vector<std::uint32_t> still_pending;
    for (std::uint32_t idx : pending) {
      const int c0 = static_cast<int>(idx % static_cast<std::uint32_t>(cols));
      const int r0 = static_cast<int>(idx / static_cast<std::uint32_t>(cols));
      double wsum = 0.0;
      double vsum = 0.0;
      for (int dr = -k; dr <= k; ++dr) {
        const int r = r0 + dr;
        if (r < 0 || r >= rows) continue;
        for (int dc = -k; dc <= k; ++dc) {
          if (dr == 0 && dc == 0) continue;
          int c = c0 + dc;
          if (c < 0 || c >= cols) {
            if (!wraps) continue;
            c = (c + cols) % cols;
          }
          const std::size_t j = static_cast<std::size_t>(r) * cols + c;
          if (!known[j]) continue;
          const double w = 1.0 / std::sqrt(static_cast<double>(dr * dr + dc * dc));
          wsum += w;
          vsum += w * value[j];
        }
      }
      if (wsum > 0.0) {
        filled.emplace_back(idx, static_cast<float>(vsum / wsum));
      } else {
        still_pending.push_back(idx);
      }
    }
    for (const auto& [idx, v] : filled) {
      value[idx] = v;
      known[idx] = 1;
    }
    pending.swap(still_pending);
  }

  const double r_max = sensor.r_max;
  for (std::size_t i = 0; i < n; ++i) {
    if (!region.mask[i]) continue;
    if (!known[i]) {
      depth[i] = static_cast<float>(r_max);
      continue;
    }
    depth[i] = static_cast<float>(std::max(std::min(value[i] - sensor.r_m, r_max), 0.0));
  }
  return depth;
}

std::vector<Vec3> enhanced_endpoints(const std::vector<float>& depth, const SensorModel& sensor, const Pose& pose) {
  std::vector<Vec3> out;
  const int cols = sensor.cols();
  const int rows = sensor.rows();
  if (depth.size() != static_cast<std::size_t>(cols) * rows) {
    throw std::invalid_argument("depth image size does not match the sensor model");
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const float e = depth[static_cast<std::size_t>(r) * cols + c];
      if (e > 0.0f) out.push_back(pose * (sensor.pixel_direction(c, r) * static_cast<double>(e)));
    }
  }
  return out;
}

FreeSpaceUpdate estimate_free_space(const ScanTraversal& traversal, FreeSpaceMap& map, const FreedObserver& on_freed) {
  const Grid& grid = map.grid();
  const GridConfig& cfg = grid.config();
  FreeSpaceUpdate out(grid.depth(Level::kBlock) - grid.depth(Level::kVoxel));
  const auto tau_f = static_cast<std::uint16_t>(cfg.free_threshold);
  const auto tau_r = static_cast<std::uint16_t>(cfg.recovery_threshold);

  // Counters. Voxels of released blocks are already free with saturated counters.
  traversal.traversed.for_each([&](const Index3& v) {
    const auto hit = map.voxel_at(v, true);
    if (hit.state != FreeSpaceMap::VoxelState::kStored) return;
    hit.voxel->n_free = saturating_inc(hit.voxel->n_free);
    hit.voxel->n_occupied = 0;
  });
  traversal.occupied.for_each([&](const Index3& v) {
    FreeVoxel& fv = map.materialize(v);
    fv.n_occupied = saturating_inc(fv.n_occupied);
    fv.n_free = 0;
  });

  // Free flags, evaluated on the settled counters.
  traversal.traversed.for_each([&](const Index3& v) {
    const auto hit = map.voxel_at(v, false);
    if (hit.state != FreeSpaceMap::VoxelState::kStored) return;
    FreeVoxel& fv = *hit.voxel;
    if (fv.free || fv.n_free < tau_f) return;
    bool supported = true;
    for_each_offset(cfg.moderate_radius, [&](const Index3& d) {
      if (supported && map.effective(v + d).n_free < tau_f) supported = false;
    });
    if (!supported) return;
    map.set_free(v, fv, true);
    out.newly_freed.insert(v);
    ++out.freed;
    if (on_freed) on_freed(v, map);
  });

  // Sustained occupancy reverts the voxel and its neighborhood.
  traversal.occupied.for_each([&](const Index3& v) {
    if (map.peek(v).n_occupied < tau_r) return;
    for_each_offset(cfg.moderate_radius, [&](const Index3& d) {
      const Index3 u = v + d;
      if (map.state(u) == FreeSpaceMap::VoxelState::kUnobserved) return;
      if (!map.is_free(u)) return;
      FreeVoxel& fu = map.materialize(u);
      map.set_free(u, fu, false);
      ++out.reverted;
      out.newly_freed.erase(u);
    });
  });

  traversal.traversed.for_each_block([&](const Index3& block, const auto&) {
    if (map.release_block_if_free(block)) ++out.released_blocks;
  });
  return out;
}

std::size_t LabeledScan::count(DynamicLevel level) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), level));
}

LabeledScan label_scan(const std::vector<Vec3>& world_points, const FreeSpaceMap& map) {
  const Grid& grid = map.grid();
  const GridConfig& cfg = grid.config();
  const int shift = grid.depth(Level::kBlock) - grid.depth(Level::kVoxel);

  LabeledScan out;
  out.points = world_points;
  std::vector<Index3> point_voxels;
  point_voxels.reserve(world_points.size());
  VoxelSet scan(shift);
  for (const Vec3& p : world_points) {
    point_voxels.push_back(grid.cell(p, Level::kVoxel));
    scan.insert(point_voxels.back());
  }

  VoxelSet conservative(shift);
  scan.for_each([&](const Index3& v) {
    if (map.is_free(v)) conservative.insert(v);
  });
  VoxelSet moderate(shift);
  conservative.for_each([&](const Index3& v) {
    for_each_offset(cfg.moderate_radius, [&](const Index3& d) {
      const Index3 u = v + d;
      if (scan.contains(u) && !conservative.contains(u)) moderate.insert(u);
    });
  });
  VoxelSet aggressive(shift);
  moderate.for_each([&](const Index3& v) {
    for_each_offset(cfg.aggressive_radius, [&](const Index3& d) {
      const Index3 u = v + d;
      if (scan.contains(u) && !conservative.contains(u) && !moderate.contains(u)) aggressive.insert(u);
    });
  });

  out.voxel_labels.reserve(scan.size());
  scan.for_each([&](const Index3& v) {
    DynamicLevel level = DynamicLevel::kStatic;
    if (conservative.contains(v)) {
      level = DynamicLevel::kConservative;
    } else if (moderate.contains(v)) {
      level = DynamicLevel::kModerate;
    } else if (aggressive.contains(v)) {
      level = DynamicLevel::kAggressive;
    }
    out.voxel_labels.emplace(v, level);
  });
  out.labels.reserve(world_points.size());
  for (const Index3& v : point_voxels) out.labels.push_back(out.voxel_labels.at(v));
  return out;
}

}  // namespace freemap

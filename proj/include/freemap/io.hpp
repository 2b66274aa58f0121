#pragma once

#include "freemap/eval.hpp"
#include "freemap/frontend.hpp"
#include "freemap/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace freemap {

/// Malformed or unreadable input; the message carries the file and position.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScanRecord {
  std::vector<Vec3> points;
  std::vector<float> intensity;
};

/// Consecutive 16-byte records of little-endian float32 (x, y, z, intensity).
ScanRecord read_scan_bin(const std::string& path);
void write_scan_bin(const std::string& path, const std::vector<Vec3>& points,
                    const std::vector<float>& intensity = {});

/// The velodyne-to-camera transform "Tr" of a KITTI calib file.
Pose read_calib(const std::string& path);

/// One 3x4 row-major matrix per line. With `tr`, each pose P becomes
/// Tr^-1 * P * Tr so it maps sensor-frame points. Rotations within 1e-3 of
/// orthonormal are projected onto the nearest rotation; worse ones are rejected.
std::vector<Pose> read_poses(const std::string& path, const std::optional<Pose>& tr = std::nullopt);
void write_poses(const std::string& path, const std::vector<Pose>& poses);

/// SemanticKITTI moving classes.
const std::set<std::uint32_t>& default_dynamic_classes();

/// Raw 32-bit label words (class in the low 16 bits, instance in the high 16).
std::vector<std::uint32_t> read_label_words(const std::string& path);
void write_label_words(const std::string& path, const std::vector<std::uint32_t>& words);

/// Per-point dynamic flags. Throws FormatError when the count differs from `expected_count`.
std::vector<std::uint8_t> read_labels(const std::string& path, std::size_t expected_count,
                                      const std::set<std::uint32_t>& dynamic_classes = default_dynamic_classes());

struct DatasetFrame {
  std::vector<Vec3> points;  // sensor frame
  Pose pose = Pose::Identity();
  std::vector<std::uint8_t> dynamic;  // empty when the dataset has no labels
};

/// KITTI-style directory: velodyne/NNNNNN.bin, labels/NNNNNN.label (optional),
/// poses.txt, calib.txt (optional), config.json (optional pipeline config).
class Dataset {
 public:
  explicit Dataset(const std::string& dir);

  std::size_t size() const { return poses_.size(); }
  bool has_labels() const { return has_labels_; }
  const std::vector<Pose>& poses() const { return poses_; }
  /// Pipeline configuration stored next to the data, if any.
  const std::optional<nlohmann::json>& config() const { return config_; }

  DatasetFrame frame(std::size_t i) const;
  std::string scan_path(std::size_t i) const;
  std::string label_path(std::size_t i) const;

  std::set<std::uint32_t> dynamic_classes = default_dynamic_classes();

 private:
  std::string dir_;
  std::vector<Pose> poses_;
  bool has_labels_ = false;
  std::optional<nlohmann::json> config_;
};

/// Writes one frame into a dataset directory (creating subdirectories). With
/// labels, flags become label words 252 (dynamic) and 40 (static).
void write_dataset_frame(const std::string& dir, std::size_t index, const DatasetFrame& frame,
                         bool with_labels = true);

struct PlyData {
  std::vector<Vec3> points;
  std::vector<std::string> comments;
};

/// Binary little-endian PLY with float64 x, y, z. Each comment becomes one header line.
void write_ply(const std::string& path, const std::vector<Vec3>& points, const std::vector<std::string>& comments = {});
PlyData read_ply(const std::string& path);

/// Snapshot as PLY with the config echo and timestep in header comments.
void write_map(const std::string& path, const StaticMapSnapshot& snapshot);

nlohmann::json metrics_to_json(const MetricsReport& report);
/// Metrics plus the configuration and any extra fields, as indented JSON.
void write_metrics(const std::string& path, const MetricsReport& report, const nlohmann::json& config,
                   const nlohmann::json& extra = nlohmann::json::object());

void write_json(const std::string& path, const nlohmann::json& doc);

}  // namespace freemap

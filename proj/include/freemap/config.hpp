#pragma once

#include "freemap/frontend.hpp"
#include "freemap/grid.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>

namespace freemap {

/// Raised for invalid configuration documents, presets and overrides.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PipelineConfig {
  std::string preset = "outdoor";
  GridConfig grid;
  SensorModel sensor;
  FillOptions fill;
  bool enable_raycast_enhancement = true;
  bool enable_backend = true;
  double eval_voxel_size = 0.2;  // m
  /// Clip real-measurement rays to this length; 0 keeps them whole.
  double max_ray_range = 0.0;  // m
  std::size_t registry_compaction = 4096;

  /// Throws ConfigError.
  void validate() const;
};

/// "outdoor", "indoor" or "sparse". Throws ConfigError for other names.
PipelineConfig preset_config(const std::string& name);

/// Full effective configuration. Angles are written in degrees.
nlohmann::json to_json(const PipelineConfig& config);

/// Reads a configuration document. Keys not present keep the value of the
/// preset named by "preset" (default "outdoor"); unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& doc);
PipelineConfig load_config(const std::string& path);

/// Applies "section.key=value" (for example "grid.free_threshold=3").
void apply_override(PipelineConfig& config, const std::string& assignment);

}  // namespace freemap

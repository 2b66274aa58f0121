#include "freemap/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace freemap {

namespace {

using nlohmann::json;

constexpr double kDeg = M_PI / 180.0;

template <typename T>
T get(const json& section, const char* key, const std::string& where) {
  try {
    return section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void check_known(const json& doc, const json& reference, const std::string& where) {
  if (!doc.is_object()) throw ConfigError((where.empty() ? "config" : where) + " must be an object");
  for (const auto& [key, value] : doc.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!reference.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    if (reference[key].is_object()) check_known(value, reference[key], path);
  }
}

PipelineConfig parse_full(const json& j) {
  PipelineConfig c;
  c.preset = get<std::string>(j, "preset", "config");
  const json& g = j.at("grid");
  c.grid.subvoxel_size = get<double>(g, "subvoxel_size", "grid");
  c.grid.voxel_size = get<double>(g, "voxel_size", "grid");
  c.grid.block_size = get<double>(g, "block_size", "grid");
  c.grid.free_threshold = get<int>(g, "free_threshold", "grid");
  c.grid.recovery_threshold = get<int>(g, "recovery_threshold", "grid");
  c.grid.moderate_radius = get<int>(g, "moderate_radius", "grid");
  c.grid.aggressive_radius = get<int>(g, "aggressive_radius", "grid");
  const json& s = j.at("sensor");
  c.sensor.phi_min = get<double>(s, "phi_min_deg", "sensor") * kDeg;
  c.sensor.phi_max = get<double>(s, "phi_max_deg", "sensor") * kDeg;
  c.sensor.theta_min = get<double>(s, "theta_min_deg", "sensor") * kDeg;
  c.sensor.theta_max = get<double>(s, "theta_max_deg", "sensor") * kDeg;
  c.sensor.phi_res = get<double>(s, "phi_res_deg", "sensor") * kDeg;
  c.sensor.theta_res = get<double>(s, "theta_res_deg", "sensor") * kDeg;
  c.sensor.r_max = get<double>(s, "r_max", "sensor");
  c.sensor.r_m = get<double>(s, "r_m", "sensor");
  c.sensor.fov_mask = get<std::vector<std::uint8_t>>(s, "fov_mask", "sensor");
  const json& f = j.at("fill");
  c.fill.window_radius = get<int>(f, "window_radius", "fill");
  c.fill.max_passes = get<int>(f, "max_passes", "fill");
  const json& p = j.at("pipeline");
  c.enable_raycast_enhancement = get<bool>(p, "enable_raycast_enhancement", "pipeline");
  c.enable_backend = get<bool>(p, "enable_backend", "pipeline");
  c.max_ray_range = get<double>(p, "max_ray_range", "pipeline");
  c.registry_compaction = get<std::size_t>(p, "registry_compaction", "pipeline");
  c.eval_voxel_size = get<double>(j.at("eval"), "voxel_size", "eval");
  c.validate();
  return c;
}

}  // namespace

void PipelineConfig::validate() const {
  try {
    grid.validate();
    sensor.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (fill.window_radius < 1) throw ConfigError("fill.window_radius must be >= 1");
  if (fill.max_passes < 0) throw ConfigError("fill.max_passes must be >= 0");
  if (!(eval_voxel_size > 0.0)) throw ConfigError("eval.voxel_size must be positive");
  if (!(max_ray_range >= 0.0)) throw ConfigError("pipeline.max_ray_range must be >= 0");
  if (registry_compaction == 0) throw ConfigError("pipeline.registry_compaction must be >= 1");
}

PipelineConfig preset_config(const std::string& name) {
  PipelineConfig c;
  c.preset = name;
  if (name == "outdoor") {
    c.sensor = sensor_preset("hdl64");
  } else if (name == "indoor") {
    c.grid.subvoxel_size = 0.05;
    c.grid.voxel_size = 0.2;
    c.grid.block_size = 3.2;
    c.sensor = sensor_preset("os2-128");
    c.sensor.r_max = 30.0;
    c.sensor.r_m = 0.25;
    c.eval_voxel_size = 0.1;
  } else if (name == "sparse") {
    c.grid.free_threshold = 3;
    c.sensor = sensor_preset("vlp16");
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected outdoor, indoor or sparse)");
  }
  return c;
}

nlohmann::json to_json(const PipelineConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["grid"] = {{"subvoxel_size", c.grid.subvoxel_size},
               {"voxel_size", c.grid.voxel_size},
               {"block_size", c.grid.block_size},
               {"free_threshold", c.grid.free_threshold},
               {"recovery_threshold", c.grid.recovery_threshold},
               {"moderate_radius", c.grid.moderate_radius},
               {"aggressive_radius", c.grid.aggressive_radius}};
  j["sensor"] = {{"phi_min_deg", c.sensor.phi_min / kDeg},
                 {"phi_max_deg", c.sensor.phi_max / kDeg},
                 {"theta_min_deg", c.sensor.theta_min / kDeg},
                 {"theta_max_deg", c.sensor.theta_max / kDeg},
                 {"phi_res_deg", c.sensor.phi_res / kDeg},
                 {"theta_res_deg", c.sensor.theta_res / kDeg},
                 {"r_max", c.sensor.r_max},
                 {"r_m", c.sensor.r_m},
                 {"fov_mask", c.sensor.fov_mask}};
  j["fill"] = {{"window_radius", c.fill.window_radius}, {"max_passes", c.fill.max_passes}};
  j["pipeline"] = {{"enable_raycast_enhancement", c.enable_raycast_enhancement},
                   {"enable_backend", c.enable_backend},
                   {"max_ray_range", c.max_ray_range},
                   {"registry_compaction", c.registry_compaction}};
  j["eval"] = {{"voxel_size", c.eval_voxel_size}};
  return j;
}

PipelineConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  const std::string preset = doc.contains("preset") && doc["preset"].is_string() ? doc["preset"].get<std::string>()
                                                                                 : std::string("outdoor");
  json base = to_json(preset_config(preset));
  check_known(doc, base, "");
  base.merge_patch(doc);
  return parse_full(base);
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(doc);
}

void apply_override(PipelineConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json j = to_json(config);
  json::json_pointer ptr("/" + [&] {
    std::string p = key;
    std::replace(p.begin(), p.end(), '.', '/');
    return p;
  }());
  if (!j.contains(ptr) || j[ptr].is_object()) throw ConfigError("unknown config key '" + key + "'");
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  const json& current = j[ptr];
  const bool compatible = (current.is_number() && value.is_number()) || current.type() == value.type();
  if (!compatible) throw ConfigError("override '" + key + "' has the wrong type");
  j[ptr] = value;
  if (key == "preset") {
    config = preset_config(value.get<std::string>());
    return;
  }
  config = parse_full(j);
}

}  // namespace freemap

// freemap: replay, evaluate, synthesize and benchmark.

#include "freemap/config.hpp"
#include "freemap/eval.hpp"
#include "freemap/io.hpp"
#include "freemap/pipeline.hpp"
#include "freemap/scene.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace freemap;

namespace {

enum class LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("FREEMAP_LOG");
  if (env == nullptr) return LogLevel::kInfo;
  const std::string v = env;
  if (v == "quiet" || v == "0") return LogLevel::kQuiet;
  if (v == "debug" || v == "2") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void log(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(log_level())) std::cerr << "[freemap] " << msg << "\n";
}

/// Frames from a dataset directory, a scene file or a bundled scenario.
class FrameSource {
 public:
  explicit FrameSource(const std::string& input) {
    if (fs::is_directory(input)) {
      dataset_ = std::make_unique<Dataset>(input);
      if (dataset_->config()) config_ = *dataset_->config();
      return;
    }
    if (fs::is_regular_file(input)) {
      scene_ = load_scene(input);
    } else {
      const auto& names = bundled_scenario_names();
      if (std::find(names.begin(), names.end(), input) == names.end()) {
        throw FormatError(input + ": not a dataset directory, scene file or bundled scenario");
      }
      scene_ = bundled_scenario(input);
    }
    config_ = to_json(scenario_config(*scene_));
  }

  std::size_t size() const { return dataset_ ? dataset_->size() : static_cast<std::size_t>(scene_->frames); }
  bool has_labels() const { return dataset_ ? dataset_->has_labels() : true; }
  DatasetFrame frame(std::size_t i) const {
    return dataset_ ? dataset_->frame(i) : simulate_scan(*scene_, static_cast<int>(i));
  }
  Pose pose(std::size_t i) const { return dataset_ ? dataset_->poses()[i] : scene_->pose(static_cast<int>(i)); }
  const std::optional<json>& config() const { return config_; }

 private:
  std::unique_ptr<Dataset> dataset_;
  std::optional<SyntheticScene> scene_;
  std::optional<json> config_;
};

struct ConfigFlags {
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;
  bool no_backend = false;
  bool no_enhancement = false;
  std::optional<double> max_ray_range;
  std::optional<double> voxel_size;

  void add_to(CLI::App* app, bool with_range) {
    app->add_option("--config", config_path, "Pipeline configuration file (JSON)")->check(CLI::ExistingFile);
    app->add_option("--preset", preset, "Parameter preset")->check(CLI::IsMember({"outdoor", "indoor", "sparse"}));
    app->add_option("--set", overrides, "Override a config value, e.g. grid.free_threshold=3");
    app->add_flag("--no-backend", no_backend, "Disable map clearing");
    app->add_flag("--no-raycast-enh", no_enhancement, "Disable raycast enhancement");
    if (with_range) app->add_option("--max-range", max_ray_range, "Clip measurement rays to this length (m)");
    app->add_option("--voxel-size", voxel_size, "Free-space voxel edge (m)");
  }

  PipelineConfig resolve(const std::optional<json>& input_config) const {
    PipelineConfig c;
    if (!config_path.empty()) {
      c = load_config(config_path);
    } else if (!preset.empty()) {
      c = preset_config(preset);
    } else if (input_config) {
      c = config_from_json(*input_config);
    } else {
      c = preset_config("outdoor");
    }
    for (const std::string& o : overrides) apply_override(c, o);
    if (no_backend) c.enable_backend = false;
    if (no_enhancement) c.enable_raycast_enhancement = false;
    if (max_ray_range) c.max_ray_range = *max_ray_range;
    if (voxel_size) c.grid.voxel_size = *voxel_size;
    c.validate();
    return c;
  }
};

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

const std::vector<std::string> kStages{"raycast", "free_space", "label", "integrate", "clear", "total"};

std::vector<double> stage_values(const std::vector<StageTimings>& timings, const std::string& stage) {
  std::vector<double> out;
  for (const StageTimings& t : timings) {
    if (stage == "raycast") out.push_back(t.raycast);
    if (stage == "free_space") out.push_back(t.free_space);
    if (stage == "label") out.push_back(t.label);
    if (stage == "integrate") out.push_back(t.integrate);
    if (stage == "clear") out.push_back(t.clear);
    if (stage == "total") out.push_back(t.total);
  }
  return out;
}

json latency_summary(const std::vector<StageTimings>& timings) {
  json j;
  j["steps"] = timings.size();
  for (const std::string& s : kStages) {
    const auto v = stage_values(timings, s);
    j["stages_ms"][s] = {{"median", percentile(v, 0.5)}, {"p95", percentile(v, 0.95)}};
  }
  return j;
}

struct RunOutput {
  StaticMapSnapshot snapshot;
  std::vector<StageTimings> timings;
};

RunOutput replay(const FrameSource& source, const PipelineConfig& config, std::size_t frames,
                 const std::string& label_dir) {
  Pipeline pipeline(config);
  RunOutput out;
  if (!label_dir.empty()) fs::create_directories(label_dir);
  for (std::size_t i = 0; i < frames; ++i) {
    const DatasetFrame f = source.frame(i);
    const StepResult r = pipeline.step({f.points, f.pose, static_cast<int>(i)});
    out.timings.push_back(r.timings);
    if (!label_dir.empty()) {
      std::vector<std::uint32_t> words;
      words.reserve(r.labeled.labels.size());
      for (DynamicLevel l : r.labeled.labels) words.push_back(static_cast<std::uint32_t>(l));
      char name[32];
      std::snprintf(name, sizeof(name), "%06zu.level", i);
      write_label_words((fs::path(label_dir) / name).string(), words);
    }
    if (log_level() == LogLevel::kDebug || (i + 1) % 25 == 0 || i + 1 == frames) {
      log(LogLevel::kInfo, "step " + std::to_string(i + 1) + "/" + std::to_string(frames) + "  " +
                               std::to_string(r.timings.total) + " ms  freed " + std::to_string(r.update.freed) +
                               "  conservative " + std::to_string(r.labeled.count(DynamicLevel::kConservative)));
    }
  }
  out.snapshot = pipeline.snapshot();
  return out;
}

std::size_t frame_count(const FrameSource& source, int limit) {
  if (limit > 0) return std::min(source.size(), static_cast<std::size_t>(limit));
  return source.size();
}

int cmd_run(const std::string& input, const ConfigFlags& flags, const std::string& out_dir, int limit,
            bool save_labels) {
  const FrameSource source(input);
  const PipelineConfig config = flags.resolve(source.config());
  const std::size_t frames = frame_count(source, limit);
  log(LogLevel::kInfo, "replaying " + std::to_string(frames) + " frames from " + input);
  fs::create_directories(out_dir);
  const RunOutput out = replay(source, config, frames, save_labels ? (fs::path(out_dir) / "levels").string() : "");
  write_map((fs::path(out_dir) / "map.ply").string(), out.snapshot);
  json latency = latency_summary(out.timings);
  latency["config"] = to_json(config);
  write_json((fs::path(out_dir) / "latency.json").string(), latency);
  log(LogLevel::kInfo, "wrote " + std::to_string(out.snapshot.points.size()) + " static points to " +
                           (fs::path(out_dir) / "map.ply").string());
  return 0;
}

int cmd_eval(const std::string& map_path, const std::string& input, std::optional<double> voxel,
             std::optional<double> max_range, const std::string& out_path) {
  const PlyData map = read_ply(map_path);
  const FrameSource source(input);
  if (!source.has_labels()) throw FormatError(input + ": no labels directory; ground truth needs labels");
  double voxel_size = 0.2;
  json map_config;
  for (const std::string& c : map.comments) {
    if (c.rfind("config ", 0) == 0) map_config = json::parse(c.substr(7));
  }
  if (map_config.is_object() && map_config.contains("eval")) voxel_size = map_config["eval"]["voxel_size"];
  if (voxel) voxel_size = *voxel;
  if (!(voxel_size > 0.0)) throw ConfigError("--voxel-size must be positive");

  GroundTruthBuilder builder(voxel_size);
  std::vector<Vec3> trajectory;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const DatasetFrame f = source.frame(i);
    std::vector<Vec3> world;
    world.reserve(f.points.size());
    for (const Vec3& p : f.points) world.push_back(f.pose * p);
    builder.add(world, f.dynamic);
    trajectory.push_back(f.pose.translation());
  }
  const GroundTruth gt = builder.finish();
  const MetricsReport report =
      max_range ? score_within_range(map.points, gt, *max_range, trajectory) : score(map.points, gt);
  json extra;
  extra["map"] = map_path;
  extra["dataset"] = input;
  write_metrics(out_path, report, map_config, extra);
  auto fmt = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("undefined"); };
  log(LogLevel::kInfo, "PR " + fmt(report.pr) + "  RR " + fmt(report.rr) + "  F1 " + fmt(report.f1));
  return 0;
}

int cmd_synth(const std::string& scenario, const std::string& out_dir, int frames) {
  SyntheticScene scene = fs::is_regular_file(scenario) ? load_scene(scenario) : bundled_scenario(scenario);
  if (frames > 0) scene.frames = frames;
  write_scene_dataset(scene, out_dir);
  log(LogLevel::kInfo, "wrote " + std::to_string(scene.frames) + " frames of '" + scene.name + "' to " + out_dir);
  return 0;
}

int cmd_bench(const std::string& input, const ConfigFlags& flags, int repetitions, int limit,
              const std::string& out_path) {
  if (repetitions < 1) throw ConfigError("--repetitions must be >= 1");
  const FrameSource source(input);
  const PipelineConfig config = flags.resolve(source.config());
  const std::size_t frames = frame_count(source, limit);
  std::vector<DatasetFrame> cached;
  for (std::size_t i = 0; i < frames; ++i) cached.push_back(source.frame(i));

  // One sample per repetition: the median step time of that pass.
  std::vector<StageTimings> samples;
  for (int rep = 0; rep < repetitions; ++rep) {
    Pipeline pipeline(config);
    std::vector<StageTimings> pass;
    for (std::size_t i = 0; i < frames; ++i) {
      pass.push_back(pipeline.step({cached[i].points, cached[i].pose, static_cast<int>(i)}).timings);
    }
    StageTimings s;
    s.raycast = percentile(stage_values(pass, "raycast"), 0.5);
    s.free_space = percentile(stage_values(pass, "free_space"), 0.5);
    s.label = percentile(stage_values(pass, "label"), 0.5);
    s.integrate = percentile(stage_values(pass, "integrate"), 0.5);
    s.clear = percentile(stage_values(pass, "clear"), 0.5);
    s.total = percentile(stage_values(pass, "total"), 0.5);
    samples.push_back(s);
    log(LogLevel::kInfo, "repetition " + std::to_string(rep + 1) + ": median step " + std::to_string(s.total) + " ms");
  }
  json doc;
  doc["input"] = input;
  doc["frames"] = frames;
  doc["repetitions"] = repetitions;
  for (const std::string& stage : kStages) {
    const auto v = stage_values(samples, stage);
    if (repetitions == 1) {
      doc["stages_ms"][stage] = {{"value", v.front()}};
    } else {
      doc["stages_ms"][stage] = {{"median", percentile(v, 0.5)}, {"p95", percentile(v, 0.95)}, {"samples", v}};
    }
  }
  doc["config"] = to_json(config);
  if (!out_path.empty()) {
    write_json(out_path, doc);
  } else {
    std::cout << doc.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online dynamic object removal for LiDAR maps"};
  app.require_subcommand(1);

  std::string input;
  std::string out;
  int limit = 0;

  auto* run = app.add_subcommand("run", "Replay a dataset or scenario through the pipeline");
  ConfigFlags run_flags;
  bool save_labels = false;
  run->add_option("input", input, "Dataset directory, scene file or bundled scenario")->required();
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--frames", limit, "Process only the first N frames");
  run->add_flag("--save-levels", save_labels, "Write per-point dynamic levels for every step");
  run_flags.add_to(run, true);

  auto* eval = app.add_subcommand("eval", "Score a static map against ground truth");
  std::string map_path;
  std::optional<double> eval_voxel;
  std::optional<double> eval_range;
  eval->add_option("--map", map_path, "Map PLY written by run")->required()->check(CLI::ExistingFile);
  eval->add_option("--dataset", input, "Labeled dataset directory, scene file or bundled scenario")->required();
  eval->add_option("--voxel-size", eval_voxel, "Evaluation voxel edge (m)");
  eval->add_option("--max-range", eval_range, "Only score voxels within this range of the trajectory (m)");
  eval->add_option("--out", out, "Metrics file")->required();

  auto* synth = app.add_subcommand("synth", "Generate a labeled dataset from a synthetic scene");
  std::string scenario;
  synth->add_option("scenario", scenario, "Bundled scenario name or scene file")->required();
  synth->add_option("--out", out, "Output dataset directory")->required();
  synth->add_option("--frames", limit, "Override the number of frames");

  auto* bench = app.add_subcommand("bench", "Measure per-stage step latency");
  ConfigFlags bench_flags;
  int repetitions = 1;
  bench->add_option("input", input, "Dataset directory, scene file or bundled scenario")->required();
  bench->add_option("--repetitions", repetitions, "Full replays to time");
  bench->add_option("--frames", limit, "Use only the first N frames");
  bench->add_option("--out", out, "Statistics file (stdout when omitted)");
  bench_flags.add_to(bench, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) return cmd_run(input, run_flags, out, limit, save_labels);
    if (*eval) return cmd_eval(map_path, input, eval_voxel, eval_range, out);
    if (*synth) return cmd_synth(scenario, out, limit);
    if (*bench) return cmd_bench(input, bench_flags, repetitions, limit, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

"""Online dynamic object removal for LiDAR maps."""

from ._core import (
    AGGRESSIVE,
    CONSERVATIVE,
    MODERATE,
    STATIC,
    ConfigError,
    FormatError,
    GroundTruth,
    GroundTruthBuilder,
    Pipeline,
    bundled_scenario_names,
    f1_score,
    preset_config,
    read_ply,
    read_poses,
    read_scan_bin,
    scenario,
    scenario_config,
    score,
    simulate_scan,
    traverse,
    validate_config,
    write_scene_dataset,
)

__all__ = [
    "AGGRESSIVE",
    "CONSERVATIVE",
    "MODERATE",
    "STATIC",
    "ConfigError",
    "FormatError",
    "GroundTruth",
    "GroundTruthBuilder",
    "Pipeline",
    "bundled_scenario_names",
    "f1_score",
    "preset_config",
    "read_ply",
    "read_poses",
    "read_scan_bin",
    "scenario",
    "scenario_config",
    "score",
    "simulate_scan",
    "traverse",
    "validate_config",
    "write_scene_dataset",
]

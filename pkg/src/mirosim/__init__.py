"""Deterministic small-size robot soccer simulator with a vision, tracking and fuzzy-control pipeline."""

from .control import ControlGains, backward_control, compute_errors, forward_control, proportional_control, turn_control
from .fuzzy import RuleBase, default_rule_base, fuzzy_control, load_rule_base
from .geometry import Point2, bearing, distance, normalize_angle
from .harness import ConfigError, MatchResult, ScenarioConfig, load_config, run_match, run_round_robin
from .shoot import GoalkeeperView, Phase, ShootConfig, ShootState, choose_shoot_direction, kick_point_for, shoot_step
from .tracker import BallTracker, FilterParams, update_and_predict
from .vision import BallVision, CalibrationMap, extract_ball, fit_calibration, pixel_to_world, render_frame
from .world import BallState, FieldSpec, PhysicsConfig, Pose, RobotBody, WheelCommand, WorldState, step_world

__version__ = "0.1.0"

__all__ = [
    "BallState", "BallTracker", "BallVision", "CalibrationMap", "ConfigError", "ControlGains",
    "FieldSpec", "FilterParams", "GoalkeeperView", "MatchResult", "Phase", "PhysicsConfig", "Point2",
    "Pose", "RobotBody", "RuleBase", "ScenarioConfig", "ShootConfig", "ShootState", "WheelCommand",
    "WorldState", "backward_control", "bearing", "choose_shoot_direction", "compute_errors",
    "default_rule_base", "distance", "extract_ball", "fit_calibration", "forward_control",
    "fuzzy_control", "kick_point_for", "load_config", "load_rule_base", "normalize_angle",
    "pixel_to_world", "proportional_control", "render_frame", "run_match", "run_round_robin",
    "shoot_step", "step_world", "turn_control", "update_and_predict",
]

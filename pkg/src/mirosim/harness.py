"""Scenario configuration and the fixed-period match loop.

Each tick: render the camera frame, find the ball, update the tracker,
let every robot's policy pick a wheel command, step the physics, and
append one row to the trajectory log.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np
import yaml

from .control import ControlGains, compute_errors, proportional_control, saturate, turn_control
from .fuzzy import RuleBase, default_rule_base, load_rule_base
from .geometry import Point2, bearing, distance, normalize_angle
from .shoot import GoalkeeperView, Phase, ShootConfig, ShootState, shoot_step
from .tracker import AS_PRINTED, STANDARD, BallTracker, FilterParams
from .vision import (BallObservation, BallVision, CalibrationMap, NoiseSpec, default_camera_map,
                     fit_calibration, grid_correspondences, pixel_scale_bounds, render_frame)
from .world import (STOP, BallState, FieldSpec, PhysicsConfig, Pose, RobotBody, WheelCommand,
                    WorldState, step_world)

log = logging.getLogger(__name__)

LOG_VERSION = "mirosim-log v1"
CONTROLLERS = ("proposed", "baseline")
TEAMS = ("home", "away")


class ConfigError(ValueError):
    """Scenario configuration is invalid; ``problems`` lists every violation."""

    def __init__(self, problems: list[str]):
        super().__init__("invalid scenario config:\n  " + "\n  ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class RobotSpec:
    role: str
    pose: tuple[float, float, float]


def _default_roster(team: str) -> tuple[RobotSpec, ...]:
    s = 1 if team == "home" else -1
    return (
        RobotSpec("keeper", (-1050.0 * s, 0.0, 90.0 * s)),
        RobotSpec("field", (-400.0 * s, 300.0 * s, 0.0 if s > 0 else 180.0)),
        RobotSpec("field", (-400.0 * s, -300.0 * s, 0.0 if s > 0 else 180.0)),
    )


@dataclass(frozen=True)
class TeamConfig:
    controller: str = "proposed"
    robots: tuple[RobotSpec, ...] = ()


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    duration: float = 300.0
    tick: float = 0.035
    field: FieldSpec = dc_field(default_factory=FieldSpec)
    physics: PhysicsConfig = dc_field(default_factory=PhysicsConfig)
    home: TeamConfig = dc_field(default_factory=lambda: TeamConfig("proposed", _default_roster("home")))
    away: TeamConfig = dc_field(default_factory=lambda: TeamConfig("baseline", _default_roster("away")))
    filter: FilterParams = dc_field(default_factory=FilterParams)
    fuzzy_table: Optional[str] = None
    noise: NoiseSpec = dc_field(default_factory=lambda: NoiseSpec(salt=0.0005, pepper=0.02))
    shoot: ShootConfig = dc_field(default_factory=ShootConfig)
    gains: ControlGains = dc_field(default_factory=ControlGains)
    start_jitter: float = 20.0      # mm and degrees applied to start poses
    stall_time: float = 10.0        # s without ball progress before a free ball
    kickoff_reset: bool = True      # return robots to start poses after a goal

    @property
    def ticks(self) -> int:
        return int(round(self.duration / self.tick))

    def team(self, name: str) -> TeamConfig:
        return self.home if name == "home" else self.away


_SECTIONS = {
    "field": FieldSpec,
    "physics": PhysicsConfig,
    "filter": FilterParams,
    "noise": NoiseSpec,
    "shoot": ShootConfig,
    "gains": ControlGains,
}
_SCALARS = {"seed", "duration", "tick", "fuzzy_table", "start_jitter", "stall_time", "kickoff_reset"}


def config_from_dict(doc: Mapping[str, Any]) -> ScenarioConfig:
    """Build and validate a config; every problem found is reported at once."""
    problems: list[str] = []
    doc = dict(doc or {})
    known = _SCALARS | set(_SECTIONS) | set(TEAMS)
    for key in sorted(set(doc) - known):
        problems.append(f"unknown key {key!r}")
    if "seed" not in doc:
        problems.append("seed: required")
    elif not isinstance(doc["seed"], int) or isinstance(doc["seed"], bool) or doc["seed"] < 0:
        problems.append(f"seed: must be a non-negative integer, got {doc['seed']!r}")

    kwargs: dict[str, Any] = {}
    for key in ("duration", "tick", "start_jitter", "stall_time"):
        if key in doc:
            v = doc[key]
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                problems.append(f"{key}: must be a number, got {v!r}")
            else:
                kwargs[key] = float(v)
    for key in ("duration", "tick"):
        if key in kwargs and kwargs[key] <= 0:
            problems.append(f"{key}: must be > 0, got {kwargs[key]}")
    for key in ("start_jitter", "stall_time"):
        if key in kwargs and kwargs[key] < 0:
            problems.append(f"{key}: must be >= 0, got {kwargs[key]}")
    if "kickoff_reset" in doc:
        kwargs["kickoff_reset"] = bool(doc["kickoff_reset"])
    if doc.get("fuzzy_table") is not None:
        path = str(doc["fuzzy_table"])
        if not Path(path).is_file():
            problems.append(f"fuzzy_table: no such file {path!r}")
        kwargs["fuzzy_table"] = path

    for key, cls in _SECTIONS.items():
        if key not in doc:
            continue
        sub = doc[key]
        if not isinstance(sub, Mapping):
            problems.append(f"{key}: must be a mapping")
            continue
        names = {f.name for f in fields(cls)}
        bad = sorted(set(sub) - names)
        for b in bad:
            problems.append(f"{key}.{b}: unknown key")
        try:
            kwargs[key] = cls(**{k: v for k, v in sub.items() if k in names})
        except (TypeError, ValueError) as exc:
            problems.append(f"{key}: {exc}")

    for team in TEAMS:
        if team not in doc:
            continue
        sub = doc[team]
        if not isinstance(sub, Mapping):
            problems.append(f"{team}: must be a mapping")
            continue
        for b in sorted(set(sub) - {"controller", "robots"}):
            problems.append(f"{team}.{b}: unknown key")
        controller = sub.get("controller", "proposed")
        if controller not in CONTROLLERS:
            problems.append(f"{team}.controller: must be one of {CONTROLLERS}, got {controller!r}")
        robots = []
        raw = sub.get("robots")
        if raw is None:
            robots = list(_default_roster(team))
        else:
            for i, r in enumerate(raw):
                role = r.get("role", "field")
                pose = r.get("pose")
                if role not in ("keeper", "field"):
                    problems.append(f"{team}.robots[{i}].role: must be keeper or field, got {role!r}")
                if not (isinstance(pose, (list, tuple)) and len(pose) == 3):
                    problems.append(f"{team}.robots[{i}].pose: must be [x, y, theta]")
                    continue
                robots.append(RobotSpec(role, tuple(float(p) for p in pose)))
            if sum(1 for r in robots if r.role == "keeper") > 1:
                problems.append(f"{team}.robots: at most one keeper")
        kwargs[team] = TeamConfig(controller, tuple(robots))

    if problems:
        raise ConfigError(problems)
    cfg = ScenarioConfig(seed=doc["seed"], **kwargs)
    fld = cfg.field
    for team in TEAMS:
        for i, r in enumerate(cfg.team(team).robots):
            if not fld.contains(r.pose[:2]):
                problems.append(f"{team}.robots[{i}].pose: outside the field")
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: not valid YAML ({exc})"]) from exc
    if not isinstance(doc, Mapping):
        raise ConfigError([f"{path}: top level must be a mapping"])
    return config_from_dict(doc)


def config_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    out: dict[str, Any] = {k: getattr(cfg, k) for k in sorted(_SCALARS)}
    for key in _SECTIONS:
        out[key] = asdict(getattr(cfg, key))
    for team in TEAMS:
        tc = cfg.team(team)
        out[team] = {"controller": tc.controller,
                     "robots": [{"role": r.role, "pose": list(r.pose)} for r in tc.robots]}
    return out


# --------------------------------------------------------------------------
# policies


@dataclass
class TeamView:
    """What a policy may look at: true robot poses, the ball as seen, the track."""

    world: WorldState
    index: int
    observation: BallObservation
    tracker: BallTracker

    @property
    def robot(self) -> RobotBody:
        return self.world.robots[self.index]

    def ball_guess(self) -> Optional[Point2]:
        if self.observation.valid:
            return self.observation.world_position
        if self.tracker.initialized:
            return Point2(*self.tracker.position())
        return None


class KeeperPolicy:
    """Slide along the own goal line, mirroring the ball's y within the mouth."""

    def __init__(self, gain: float = 6.0, line_offset: float = 60.0):
        self.gain = gain
        self.line_offset = line_offset

    def target_y(self, ball_y: float, fld: FieldSpec, half_size: float) -> float:
        edge = 0.5 * fld.goal_width
        return min(max(ball_y, -edge), edge)

    def command(self, view: TeamView, gains: ControlGains, v_max: float) -> WheelCommand:
        robot = view.robot
        fld = view.world.field
        ball = view.ball_guess()
        line_x = -FieldSpec.attack_sign(robot.team) * (fld.half_length - self.line_offset)
        ty = 0.0 if ball is None else self.target_y(ball[1], fld, robot.half_size)
        # face +Y or -Y, whichever is closer, and drive along the line
        axis = 90.0 if abs(normalize_angle(90.0 - robot.pose.theta)) <= 90.0 else -90.0
        direction = 1.0 if axis > 0 else -1.0
        v = self.gain * (ty - robot.pose.y) * direction
        heading_err = normalize_angle(axis - robot.pose.theta)
        # steer back onto the line: lateral error in the keeper's frame
        lateral = (line_x - robot.pose.x) * (-direction)
        turn = gains.k_a_turn * heading_err + 0.02 * gains.k_a_turn * lateral * math.copysign(1.0, v or 1.0)
        if abs(heading_err) > 30.0:
            v = 0.0
        return saturate(v - turn, v + turn, v_max)


class BaselinePolicy:
    """Proportional pursuit of the ball as currently seen, then turn to face the goal."""

    def __init__(self, at_ball: float = 90.0, turn_tol: float = 15.0):
        self.at_ball = at_ball
        self.turn_tol = turn_tol

    def command(self, view: TeamView, gains: ControlGains, v_max: float) -> WheelCommand:
        robot = view.robot
        ball = view.observation.world_position if view.observation.valid else view.ball_guess()
        if ball is None:
            return STOP
        e = compute_errors(robot.pose, ball)
        if e.d < self.at_ball:
            goal_dir = bearing(robot.pose.position, view.world.field.goal_center(robot.team))
            if abs(normalize_angle(goal_dir - robot.pose.theta)) > self.turn_tol:
                return turn_control(robot.pose.theta, goal_dir, gains, v_max)
        return proportional_control(e, gains, v_max)


class ProposedPolicy:
    """Predict, approach the kick point, align, dash."""

    def __init__(self, config: ShootConfig, rules: RuleBase):
        self.config = config
        self.rules = rules
        self.state = ShootState()

    def reset(self) -> None:
        self.state = ShootState()

    def command(self, view: TeamView, gains: ControlGains, v_max: float) -> WheelCommand:
        if not view.tracker.initialized:
            return STOP
        robot = view.robot
        world = view.world
        opp = "away" if robot.team == "home" else "home"
        keeper = next((r for r in world.team_robots(opp) if r.role == "keeper"), None)
        goal = world.field.goal_center(robot.team)
        half = 0.5 * world.field.goal_width
        mouth = (Point2(goal.x, -half), Point2(goal.x, half))
        keeper_pos = keeper.pose.position if keeper is not None else Point2(goal.x + 1e4, 0.0)
        cmd, self.state = shoot_step(robot.pose, view.tracker, GoalkeeperView(keeper_pos, mouth),
                                     self.state, self.config, world.field, self.rules, gains)
        return cmd


# --------------------------------------------------------------------------
# trajectory log


def log_columns(robots: list[RobotBody]) -> list[str]:
    cols = ["tick", "clock_s"]
    for i, r in enumerate(robots):
        tag = robot_tag(robots, i)
        cols += [f"{tag}_x_mm", f"{tag}_y_mm", f"{tag}_theta_deg"]
    cols += ["ball_x", "ball_y", "ball_vx", "ball_vy",
             "obs_valid", "est_x", "est_y", "est_vx", "est_vy", "pred_x", "pred_y",
             "score_home", "score_away", "events"]
    return cols


def robot_tag(robots: list[RobotBody], index: int) -> str:
    team = robots[index].team
    n = sum(1 for r in robots[:index] if r.team == team)
    return f"{team}{n}"


def _f(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.4f}"


@dataclass
class MatchResult:
    goals: dict[str, int]
    goal_events: list[tuple[int, str]]
    shots: dict[str, int]
    kicks: dict[str, int]
    ticks: int
    runtime_s: float
    log_path: Optional[str] = None
    controllers: dict[str, str] = dc_field(default_factory=dict)
    seed: int = 0

    @property
    def mean_tick_ms(self) -> float:
        return 1000.0 * self.runtime_s / max(self.ticks, 1)


def pixel_geometry(cal: CalibrationMap, physics: PhysicsConfig) -> tuple[float, float]:
    """Ball radius and top speed expressed in pixels for this camera."""
    lo, hi = pixel_scale_bounds(cal)
    return physics.ball_radius / math.sqrt(lo * hi), physics.ball_v_max / lo


class Match:
    """One match in progress; ``tick()`` advances it by one sample period."""

    def __init__(self, cfg: ScenarioConfig, log_stream: Optional[io.TextIOBase] = None):
        self.cfg = cfg
        seeds = np.random.SeedSequence(cfg.seed).spawn(2)
        self.noise_rng = np.random.default_rng(seeds[0])
        jitter_rng = np.random.default_rng(seeds[1])

        self.rules = load_rule_base(cfg.fuzzy_table) if cfg.fuzzy_table else default_rule_base()
        shoot_cfg = replace(cfg.shoot, T=cfg.tick, v_max=cfg.physics.v_max,
                            ball_radius=cfg.physics.ball_radius)
        self.start_poses: list[Pose] = []
        robots: list[RobotBody] = []
        self.policies: list[Any] = []
        for team in TEAMS:
            tc = cfg.team(team)
            for spec in tc.robots:
                j = cfg.start_jitter
                x, y, th = spec.pose
                if j > 0:
                    dx, dy, dth = jitter_rng.uniform(-j, j, size=3)
                    x, y, th = x + dx, y + dy, normalize_angle(th + dth)
                p = cfg.field.clamp((x, y), 37.5)
                pose = Pose(p.x, p.y, th)
                self.start_poses.append(pose)
                robots.append(RobotBody(pose, team=team, role=spec.role))
                if spec.role == "keeper":
                    self.policies.append(KeeperPolicy())
                elif tc.controller == "proposed":
                    self.policies.append(ProposedPolicy(shoot_cfg, self.rules))
                else:
                    self.policies.append(BaselinePolicy())
        self.world = WorldState(robots, BallState(Point2(0.0, 0.0)), cfg.field, cfg.physics)

        self.true_cal = default_camera_map()
        self.cal = fit_calibration(grid_correspondences(self.true_cal))
        self.r_ball_px, self.v_max_px = pixel_geometry(self.true_cal, cfg.physics)
        self.vision = BallVision(self.cal, self.r_ball_px, self.v_max_px, cfg.tick)
        self.tracker = BallTracker(cfg.filter)

        self.tick_index = 0
        self.goal_events: list[tuple[int, str]] = []
        self.shots = {t: 0 for t in TEAMS}
        self.kicks = {t: 0 for t in TEAMS}
        self._stall_ref = (Point2(0.0, 0.0), 0.0)
        self._writer = None
        if log_stream is not None:
            log_stream.write(f"# {LOG_VERSION}\n")
            self._writer = csv.writer(log_stream, lineterminator="\n")
            self._writer.writerow(log_columns(robots))

    def _restart(self, ball: BallState, robots_home: bool) -> None:
        self.world.ball = ball
        if robots_home:
            for robot, pose in zip(self.world.robots, self.start_poses):
                robot.pose = pose
                robot.last_cmd = STOP
        self.vision.reset()
        self.tracker.reset()
        for p in self.policies:
            if isinstance(p, ProposedPolicy):
                p.reset()
        self._stall_ref = (ball.position, self.world.clock)

    def _free_ball_if_stalled(self) -> bool:
        ref, since = self._stall_ref
        pos = self.world.ball.position
        if distance(pos, ref) > 100.0:
            self._stall_ref = (pos, self.world.clock)
            return False
        if self.world.clock - since < self.cfg.stall_time:
            return False
        fld = self.world.field
        spot = Point2(math.copysign(0.25 * fld.length, pos.x or 1.0),
                      math.copysign(0.25 * fld.width, pos.y or 1.0))
        self._restart(BallState(spot), robots_home=False)
        return True

    def tick(self) -> list[str]:
        cfg = self.cfg
        world = self.world
        frame = render_frame(world, self.true_cal, cfg.noise, self.noise_rng, self.r_ball_px)
        obs = self.vision.observe(frame)
        self.tracker.update(tuple(obs.world_position) if obs.valid else None)

        commands = []
        events: list[str] = []
        for i, policy in enumerate(self.policies):
            view = TeamView(world, i, obs, self.tracker)
            before = getattr(policy, "state", None)
            cmd = policy.command(view, cfg.gains, cfg.physics.v_max)
            commands.append(cmd)
            if isinstance(policy, ProposedPolicy):
                for ph in policy.state.transitions:
                    events.append(f"phase:{robot_tag(world.robots, i)}:{ph.value}")
                    if ph is Phase.DASH:
                        self.shots[world.robots[i].team] += 1

        for kind, payload in step_world(world, commands, cfg.tick):
            if kind == "kick":
                self.kicks[world.robots[payload].team] += 1
                events.append(f"kick:{robot_tag(world.robots, payload)}")
            elif kind == "goal":
                self.goal_events.append((self.tick_index, payload))
                events.append(f"goal:{payload}")
                self._restart(world.ball, robots_home=cfg.kickoff_reset)
        if self._free_ball_if_stalled():
            events.append("free_ball")

        if self._writer is not None:
            self._write_row(obs, events)
        self.tick_index += 1
        return events

    def _write_row(self, obs: BallObservation, events: list[str]) -> None:
        w = self.world
        row = [self.tick_index, f"{w.clock:.3f}"]
        for r in w.robots:
            row += [_f(r.pose.x), _f(r.pose.y), _f(r.pose.theta)]
        b = w.ball
        row += [_f(b.position.x), _f(b.position.y), _f(b.velocity.x), _f(b.velocity.y)]
        row.append(int(obs.valid))
        t = self.tracker
        if t.initialized:
            row += [_f(t.x.x_hat), _f(t.y.x_hat), _f(t.x.v_hat), _f(t.y.v_hat),
                    _f(t.x.x_pred), _f(t.y.x_pred)]
        else:
            row += [""] * 6
        row += [w.score["home"], w.score["away"], ";".join(events)]
        self._writer.writerow(row)

    def result(self, runtime: float, log_path: Optional[str] = None) -> MatchResult:
        return MatchResult(dict(self.world.score), list(self.goal_events), dict(self.shots),
                           dict(self.kicks), self.tick_index, runtime, log_path,
                           {t: self.cfg.team(t).controller for t in TEAMS}, self.cfg.seed)


def run_match(cfg: ScenarioConfig, log_path: str | Path | None = None) -> MatchResult:
    """Play a full match; the trajectory log goes to ``log_path`` when given."""
    stream = open(log_path, "w", newline="") if log_path is not None else None
    try:
        match = Match(cfg, stream)
        t0 = time.perf_counter()
        for _ in range(cfg.ticks):
            match.tick()
        runtime = time.perf_counter() - t0
    finally:
        if stream is not None:
            stream.close()
    result = match.result(runtime, str(log_path) if log_path is not None else None)
    log.info("match seed=%d %s", cfg.seed, result.goals)
    return result


# --------------------------------------------------------------------------
# tournaments


def round_seed(base: int, round_index: int, pairing: int = 0) -> int:
    return int(np.random.SeedSequence([base, pairing, round_index]).generate_state(1)[0])


@dataclass
class TournamentReport:
    rounds: int
    results: list[list[MatchResult]]   # [pairing][round]
    configs: list[ScenarioConfig]

    def totals(self, pairing: int = 0) -> dict[str, int]:
        out = {t: 0 for t in TEAMS}
        for r in self.results[pairing]:
            for t in TEAMS:
                out[t] += r.goals[t]
        return out

    def table(self) -> str:
        lines = []
        for p, cfg in enumerate(self.configs):
            res = self.results[p]
            head = ["Round".ljust(20)] + [f"{i + 1:>5}" for i in range(self.rounds)] + [f"{'Total':>7}", f"{'Shots':>7}"]
            lines.append("".join(head))
            for t in TEAMS:
                label = f"{t} ({cfg.team(t).controller})".ljust(20)
                cells = [f"{r.goals[t]:>5}" for r in res]
                lines.append(label + "".join(cells) + f"{self.totals(p)[t]:>7}"
                             + f"{sum(r.shots[t] for r in res):>7}")
            lines.append("")
        return "\n".join(lines).rstrip() + "\n"


def _play(args: tuple[ScenarioConfig, Optional[str]]) -> MatchResult:
    cfg, path = args
    return run_match(cfg, path)


def run_round_robin(configs: list[ScenarioConfig], rounds: int, out_dir: str | Path | None = None,
                    workers: int = 1) -> TournamentReport:
    """Play every pairing ``rounds`` times with per-round derived seeds."""
    if rounds < 1:
        raise ConfigError([f"rounds: must be >= 1, got {rounds}"])
    jobs = []
    for p, cfg in enumerate(configs):
        for r in range(rounds):
            rc = replace(cfg, seed=round_seed(cfg.seed, r, p))
            path = None
            if out_dir is not None:
                path = str(Path(out_dir) / f"pairing{p}_round{r + 1}.csv")
            jobs.append(((p, r), (rc, path)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_play, [j[1] for j in jobs]))
    else:
        outcomes = [_play(j[1]) for j in jobs]
    results: list[list[MatchResult]] = [[None] * rounds for _ in configs]  # type: ignore[list-item]
    for ((p, r), _), res in zip(jobs, outcomes):
        results[p][r] = res
    return TournamentReport(rounds, results, list(configs))

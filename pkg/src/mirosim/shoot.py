"""Shooting behaviour: get behind the predicted ball, aim past the keeper, dash.

Phases run Approach -> Align -> Dash -> Done. Several transitions may
happen within one decision tick when their thresholds are already met.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

from .control import V_MAX, ControlGains, turn_control
from .fuzzy import RuleBase, fuzzy_control
from .geometry import Point2, bearing, distance, normalize_angle, unit
from .tracker import BallTracker, TrackNotReady
from .world import FieldSpec, Pose, WheelCommand


class Phase(enum.Enum):
    APPROACH = "approach"
    ALIGN = "align"
    DASH = "dash"
    DONE = "done"


@dataclass(frozen=True)
class GoalkeeperView:
    keeper_position: Point2
    goal_mouth: tuple[Point2, Point2]


@dataclass(frozen=True)
class ShootConfig:
    near_threshold: float = 120.0   # mm, "ball is very near"
    align_tol: float = 5.0          # deg
    dash_steps: int = 12            # ~0.42 s at 35 ms
    escape_radius: float = 400.0    # mm from the ball estimate at phase entry
    clearance: float = 130.0        # mm, lateral berth when going round the ball
    lateral_tol: float = 25.0       # mm off the shooting line still counted as behind
    standoff: Optional[float] = None
    k_lead: Optional[int] = None    # fixed prediction horizon; None = adaptive
    k_lead_max: int = 60
    lag_time: Optional[float] = None  # s added to the horizon; None = 1/k_d, 0 = off
    ball_radius: float = 21.3
    robot_half_size: float = 37.5
    v_max: float = V_MAX
    T: float = 0.035

    def __post_init__(self):
        if self.dash_steps < 1:
            raise ValueError("dash_steps must be >= 1")
        if self.standoff is not None and self.standoff <= 0:
            raise ValueError("standoff must be positive")
        if self.k_lead is not None and self.k_lead < 1:
            raise ValueError("k_lead must be >= 1")
        if self.k_lead_max < 1:
            raise ValueError("k_lead_max must be >= 1")
        if self.lag_time is not None and self.lag_time < 0:
            raise ValueError("lag_time must be >= 0")

    @property
    def kick_standoff(self) -> float:
        if self.standoff is not None:
            return self.standoff
        return self.robot_half_size + self.ball_radius + 20.0


@dataclass(frozen=True)
class ShootState:
    phase: Phase = Phase.APPROACH
    shoot_direction: float = 0.0
    kick_point: Point2 = Point2(0.0, 0.0)
    dash_steps_left: int = 0
    anchor: Optional[Point2] = None
    transitions: tuple[Phase, ...] = field(default=())
    lead: Point2 = Point2(0.0, 0.0)
    k_lead: int = 1


class KickPoint(NamedTuple):
    point: Point2
    projected: bool


def choose_shoot_direction(ball, keeper: GoalkeeperView, ball_radius: float = 21.3) -> float:
    """Bearing from the ball to the inset goal-mouth point farthest from the keeper.

    Distance to a fixed point is convex along a segment, so the farthest
    point is one of the two inset ends. Ties go to the +Y end.
    """
    p1, p2 = keeper.goal_mouth
    length = distance(p1, p2)
    if length <= 2 * ball_radius:
        aim = Point2(0.5 * (p1[0] + p2[0]), 0.5 * (p1[1] + p2[1]))
        return bearing(ball, aim)
    ux, uy = (p2[0] - p1[0]) / length, (p2[1] - p1[1]) / length
    a = Point2(p1[0] + ux * ball_radius, p1[1] + uy * ball_radius)
    b = Point2(p2[0] - ux * ball_radius, p2[1] - uy * ball_radius)
    da = distance(a, keeper.keeper_position)
    db = distance(b, keeper.keeper_position)
    if abs(da - db) <= 1e-9:
        aim = a if a[1] >= b[1] else b
    else:
        aim = a if da > db else b
    return bearing(ball, aim)


def kick_point_for(ball_pred, shoot_dir: float, standoff: float, fld: FieldSpec | None = None,
                   margin: float = 37.5) -> KickPoint:
    """Point ``standoff`` behind the ball on the shooting line, kept inside the field."""
    if standoff <= 0:
        raise ValueError("standoff must be positive")
    u = unit(shoot_dir)
    p = Point2(ball_pred[0] - u.x * standoff, ball_pred[1] - u.y * standoff)
    if fld is None:
        return KickPoint(p, False)
    q = fld.clamp(p, margin)
    return KickPoint(q, q != p)


def lead_steps(robot: Pose, ball, config: ShootConfig, gains: ControlGains = ControlGains()) -> int:
    """Prediction horizon in ticks for the approach target.

    Travel time at top speed, plus the time a proportional law trails a
    constant-velocity target by (1/k_d), so that a robot chasing the lead
    point settles on the ball rather than behind it.
    """
    if config.k_lead is not None:
        return config.k_lead
    lag = 1.0 / gains.k_d if config.lag_time is None else config.lag_time
    k = math.ceil(distance(robot.position, ball) / (config.v_max * config.T) + lag / config.T - 1e-9)
    return min(max(k, 1), config.k_lead_max)


def _line_coords(p, origin, direction_deg: float) -> tuple[float, float]:
    """Coordinates of ``p`` along and across the line through ``origin``."""
    u = unit(direction_deg)
    dx, dy = p[0] - origin[0], p[1] - origin[1]
    return dx * u.x + dy * u.y, -dx * u.y + dy * u.x


def approach_target(robot: Pose, ball, shoot_dir: float, kick: Point2, config: ShootConfig,
                    fld: FieldSpec | None = None) -> Point2:
    """Kick point if the robot is already behind the ball, else a waypoint round it."""
    s, l = _line_coords(robot.position, ball, shoot_dir)
    standoff = config.kick_standoff
    if s < -0.5 * standoff:
        return kick
    u = unit(shoot_dir)
    n = Point2(-u.y, u.x)
    side = 1.0 if l >= 0 else -1.0
    if abs(l) < config.clearance:
        # on the wrong side and too close to the line: sidestep while backing off
        off_l, off_s = 1.3 * config.clearance, s - config.clearance
    else:
        off_l, off_s = config.clearance, -1.5 * standoff
    p = Point2(ball[0] + n.x * side * off_l + u.x * off_s,
               ball[1] + n.y * side * off_l + u.y * off_s)
    if fld is not None:
        p = fld.clamp(p, config.robot_half_size)
    return p


def _behind_ball(robot: Pose, ball, shoot_dir: float, config: ShootConfig, slack: float = 1.0) -> bool:
    s, l = _line_coords(robot.position, ball, shoot_dir)
    return (distance(robot.position, ball) < slack * config.near_threshold
            and s < 0.0 and abs(l) <= slack * config.lateral_tol)


def shoot_step(robot: Pose, tracker: BallTracker, keeper: GoalkeeperView, state: ShootState,
               config: ShootConfig = ShootConfig(), fld: FieldSpec | None = None,
               rules: RuleBase | None = None,
               gains: ControlGains = ControlGains()) -> tuple[WheelCommand, ShootState]:
    """One decision tick of the shooting behaviour.

    Raises ``TrackNotReady`` if the tracker has not seen the ball yet.
    """
    if not tracker.initialized:
        raise TrackNotReady("shoot_step needs an initialised ball tracker; warm up the filter first")
    ball = Point2(*tracker.position())
    k = lead_steps(robot, ball, config, gains)
    lead = Point2(*tracker.predict_ahead(k))
    path: list[Phase] = []

    if state.phase is Phase.DONE:
        state = ShootState(anchor=ball)
        path.append(Phase.APPROACH)
    elif (state.phase is not Phase.APPROACH and state.anchor is not None
          and distance(ball, state.anchor) > config.escape_radius):
        # the plan was made for a ball that is no longer there
        state = ShootState(anchor=ball)
        path.append(Phase.APPROACH)

    for _ in range(4):
        if state.phase is Phase.APPROACH:
            shoot_dir = choose_shoot_direction(lead, keeper, config.ball_radius)
            kp = kick_point_for(lead, shoot_dir, config.kick_standoff, fld, config.robot_half_size)
            state = replace(state, shoot_direction=shoot_dir, kick_point=kp.point)
            if _behind_ball(robot, ball, shoot_dir, config):
                state = replace(state, phase=Phase.ALIGN, anchor=ball)
                path.append(Phase.ALIGN)
                continue
            target = approach_target(robot, lead, shoot_dir, kp.point, config, fld)
            cmd = fuzzy_control(robot, target, shoot_dir, rules, gains, config.v_max)
            break
        if state.phase is Phase.ALIGN:
            if not _behind_ball(robot, ball, state.shoot_direction, config, slack=2.0):
                # the ball slipped away while turning: plan again
                state = replace(state, phase=Phase.APPROACH, anchor=ball)
                path.append(Phase.APPROACH)
                shoot_dir = choose_shoot_direction(lead, keeper, config.ball_radius)
                kp = kick_point_for(lead, shoot_dir, config.kick_standoff, fld, config.robot_half_size)
                state = replace(state, shoot_direction=shoot_dir, kick_point=kp.point)
                target = approach_target(robot, lead, shoot_dir, kp.point, config, fld)
                cmd = fuzzy_control(robot, target, shoot_dir, rules, gains, config.v_max)
                break
            if abs(normalize_angle(state.shoot_direction - robot.theta)) < config.align_tol:
                state = replace(state, phase=Phase.DASH, dash_steps_left=config.dash_steps, anchor=ball)
                path.append(Phase.DASH)
                continue
            cmd = turn_control(robot.theta, state.shoot_direction, gains, config.v_max)
            break
        if state.phase is Phase.DASH:
            if state.dash_steps_left <= 0:
                state = replace(state, phase=Phase.DONE)
                path.append(Phase.DONE)
                continue
            state = replace(state, dash_steps_left=state.dash_steps_left - 1)
            cmd = WheelCommand(config.v_max, config.v_max)
            break
        cmd = WheelCommand(0.0, 0.0)
        break
    return cmd, replace(state, transitions=tuple(path), lead=lead, k_lead=k)

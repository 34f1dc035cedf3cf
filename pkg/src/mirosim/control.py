"""Crisp motion controllers for a differential-drive robot.

Every controller maps position/heading errors to a left/right wheel speed
pair. Distances are mm, angles degrees, wheel speeds mm/s.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import bearing, distance, normalize_angle
from .world import Pose, WheelCommand

V_MAX = 1000.0


@dataclass(frozen=True)
class ControlGains:
    """Controller gains.

    The published gains (0.85, 0.12, 0.2) express wheel speed in cm/s, so
    the angular gains are ten times larger once speeds are in mm/s; the
    distance gain is unit-free (1/s). ``as_printed()`` returns the raw
    numbers for direct evaluation.
    """

    k_d: float = 0.85       # (mm/s) per mm
    k_a: float = 1.2        # (mm/s) per degree
    k_a_turn: float = 2.0   # (mm/s) per degree

    def __post_init__(self):
        if min(self.k_d, self.k_a, self.k_a_turn) <= 0:
            raise ValueError("all gains must be positive")

    @classmethod
    def as_printed(cls) -> "ControlGains":
        return cls(0.85, 0.12, 0.2)


@dataclass(frozen=True)
class ControlErrors:
    d: float
    theta_T: float
    theta_e: float


def saturate(v_left: float, v_right: float, v_max: float = V_MAX) -> WheelCommand:
    """Scale both wheels down together so the faster one sits at ``v_max``.

    Scaling, unlike per-wheel clamping, keeps the turn-to-speed ratio, so
    a far target still gets steered toward.
    """
    m = max(abs(v_left), abs(v_right))
    if m > v_max:
        k = v_max / m
        return WheelCommand(v_left * k, v_right * k)
    return WheelCommand(v_left, v_right)


def compute_errors(robot: Pose, target) -> ControlErrors:
    d = distance(robot.position, target)
    theta_T = bearing(robot.position, target) if d > 0.0 else robot.theta
    return ControlErrors(d, theta_T, normalize_angle(theta_T - robot.theta))


def proportional_control(e: ControlErrors, gains: ControlGains = ControlGains(),
                         v_max: float = V_MAX) -> WheelCommand:
    return saturate(gains.k_d * e.d - gains.k_a * e.theta_e,
                    gains.k_d * e.d + gains.k_a * e.theta_e, v_max)


def forward_control(e: ControlErrors, gains: ControlGains = ControlGains(),
                    v_max: float = V_MAX) -> WheelCommand:
    """Drive nose-first toward the target; same law as the proportional one."""
    return proportional_control(e, gains, v_max)


def backward_control(e: ControlErrors, gains: ControlGains = ControlGains(),
                     v_max: float = V_MAX) -> WheelCommand:
    """Reverse toward a target behind the robot.

    The angle error is measured from the robot's tail, so a target dead
    astern gives zero error and a straight reverse.
    """
    theta_back = normalize_angle(e.theta_e - 180.0)
    v_l = gains.k_d * e.d + gains.k_a * theta_back
    v_r = gains.k_d * e.d - gains.k_a * theta_back
    return saturate(-v_l, -v_r, v_max)


def turn_control(theta_R: float, theta_d: float, gains: ControlGains = ControlGains(),
                 v_max: float = V_MAX) -> WheelCommand:
    """Spin in place toward ``theta_d`` the short way round."""
    err = normalize_angle(theta_d - theta_R)
    return saturate(-gains.k_a_turn * err, gains.k_a_turn * err, v_max)

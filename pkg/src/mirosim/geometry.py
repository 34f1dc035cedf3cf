"""Planar geometry shared by the simulator and the control stack.

Angles are degrees in the half-open interval (-180, 180]; positions are mm.
"""

from __future__ import annotations

import math
from typing import NamedTuple


class DomainError(ValueError):
    """Raised for non-finite geometric input."""


class DegenerateBearingError(ValueError):
    """Raised when a bearing is requested between coincident points."""


class Point2(NamedTuple):
    x: float
    y: float

    def __add__(self, other):  # type: ignore[override]
        return Point2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Point2(self.x - other[0], self.y - other[1])

    def scaled(self, s: float) -> "Point2":
        return Point2(self.x * s, self.y * s)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise DomainError(f"non-finite value: {v!r}")


def normalize_angle(a: float) -> float:
    """Wrap ``a`` (degrees) into (-180, 180]; +180 represents the cut."""
    _check_finite(a)
    r = math.fmod(a, 360.0)
    if r <= -180.0:
        r += 360.0
    elif r > 180.0:
        r -= 360.0
    return r


def bearing(frm, to) -> float:
    """Direction of the vector ``frm -> to`` in degrees from the +X axis."""
    dx = to[0] - frm[0]
    dy = to[1] - frm[1]
    _check_finite(dx, dy)
    if dx == 0.0 and dy == 0.0:
        raise DegenerateBearingError(f"bearing undefined between coincident points {tuple(frm)}")
    return normalize_angle(math.degrees(math.atan2(dy, dx)))


def distance(a, b) -> float:
    """Euclidean distance in mm."""
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    _check_finite(dx, dy)
    return math.hypot(dx, dy)


def unit(angle_deg: float) -> Point2:
    """Unit vector pointing along ``angle_deg``."""
    rad = math.radians(angle_deg)
    return Point2(math.cos(rad), math.sin(rad))


def angle_diff(a: float, b: float) -> float:
    """Signed shortest rotation from ``b`` to ``a``."""
    return normalize_angle(a - b)

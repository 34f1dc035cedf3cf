"""Fixed-gain g-h (alpha-beta) ball tracker.

Each axis runs an independent scalar filter. Two update rules are offered:

``standard``
    residual against the prediction, correct, then propagate one period
    with the corrected velocity.
``as_printed``
    the literal two-line recurrence where the next prediction is the
    previous estimate nudged toward the measurement, with no velocity
    propagation. Kept for comparison; its "prediction" never leads a
    moving target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

STANDARD = "standard"
AS_PRINTED = "as_printed"


@dataclass(frozen=True)
class FilterParams:
    g: float = 0.5
    h: float = 0.3
    T: float = 0.035
    mode: str = STANDARD

    def __post_init__(self):
        errors = []
        if not (0.0 < self.g <= 1.0):
            errors.append(f"g={self.g} outside (0, 1]")
        if not (0.0 <= self.h <= 2.0):
            errors.append(f"h={self.h} outside [0, 2]")
        if not self.h < 4.0 - 2.0 * self.g:
            errors.append(f"h={self.h} violates stability bound h < 4 - 2g")
        if not self.T > 0.0:
            errors.append(f"T={self.T} must be positive")
        if self.mode not in (STANDARD, AS_PRINTED):
            errors.append(f"unknown mode {self.mode!r}")
        if errors:
            raise ValueError("; ".join(errors))


@dataclass(frozen=True)
class TrackEstimate:
    x_hat: float
    v_hat: float
    x_pred: float
    v_pred: float


def init_track(z0: float) -> TrackEstimate:
    if not math.isfinite(z0):
        raise ValueError(f"non-finite initial measurement {z0!r}")
    return TrackEstimate(z0, 0.0, z0, 0.0)


def coast(state: TrackEstimate, p: FilterParams) -> TrackEstimate:
    """Propagate the prediction one period without a measurement."""
    return replace(state, x_pred=state.x_pred + p.T * state.v_pred)


def update_and_predict(state: TrackEstimate, z: float, p: FilterParams) -> TrackEstimate:
    if not math.isfinite(z):
        return coast(state, p)
    if p.mode == STANDARD:
        r = z - state.x_pred
        x_hat = state.x_pred + p.g * r
        v_hat = state.v_pred + p.h * r / p.T
        return TrackEstimate(x_hat, v_hat, x_hat + p.T * v_hat, v_hat)
    # literal recurrence: both predictions built from the previous smoothed values
    r = z - state.x_hat
    v_pred = state.v_hat + p.h * r / p.T
    x_pred = state.x_hat + p.g * r
    return TrackEstimate(x_pred, v_pred, x_pred, v_pred)


def predict_ahead(state: TrackEstimate, k: int, p: FilterParams) -> float:
    """Constant-velocity extrapolation ``k`` periods past the smoothed estimate."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return state.x_hat + k * p.T * state.v_hat


class TrackNotReady(RuntimeError):
    """The tracker has no estimate yet."""


class BallTracker:
    """Two-axis tracker that coasts through missed sightings.

    After ``max_coast`` consecutive misses the track is dropped and the
    next valid sighting starts it afresh. A sighting farther than ``gate``
    mm from the prediction (a ball placed by the referee, say) also
    restarts the track instead of being filtered.
    """

    def __init__(self, params: FilterParams | None = None, max_coast: int = 15,
                 gate: float | None = 300.0):
        self.params = params or FilterParams()
        self.max_coast = max_coast
        self.gate = gate
        self.x: Optional[TrackEstimate] = None
        self.y: Optional[TrackEstimate] = None
        self.coasted = 0

    @property
    def initialized(self) -> bool:
        return self.x is not None

    def reset(self) -> None:
        self.x = self.y = None
        self.coasted = 0

    def update(self, z: Optional[tuple[float, float]]) -> None:
        if z is None:
            if self.x is None:
                return
            self.coasted += 1
            if self.coasted > self.max_coast:
                self.reset()
                return
            self.x = coast(self.x, self.params)
            self.y = coast(self.y, self.params)
            return
        self.coasted = 0
        if self.x is not None and self.gate is not None:
            if math.hypot(z[0] - self.x.x_pred, z[1] - self.y.x_pred) > self.gate:
                self.x = None
        if self.x is None:
            self.x, self.y = init_track(z[0]), init_track(z[1])
        else:
            self.x = update_and_predict(self.x, z[0], self.params)
            self.y = update_and_predict(self.y, z[1], self.params)

    def _need(self) -> None:
        if self.x is None:
            raise TrackNotReady("ball tracker not initialised; feed it observations first")

    def position(self) -> tuple[float, float]:
        self._need()
        return (self.x.x_hat, self.y.x_hat)

    def velocity(self) -> tuple[float, float]:
        self._need()
        return (self.x.v_hat, self.y.v_hat)

    def predicted(self) -> tuple[float, float]:
        self._need()
        return (self.x.x_pred, self.y.x_pred)

    def predict_ahead(self, k: int) -> tuple[float, float]:
        self._need()
        return (predict_ahead(self.x, k, self.params), predict_ahead(self.y, k, self.params))

"""Synthetic overhead camera and dynamic-window ball extraction.

The camera produces a boolean "ball-coloured" mask. Extraction searches a
square window around the last sighting, seeds a 4-connected region grow
from block centres, keeps the best region and maps its centroid to the
field through a bilinear pixel-to-world fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .geometry import Point2
from .world import WorldState

FRAME_WIDTH = 620
FRAME_HEIGHT = 480


class CalibrationError(ValueError):
    """The correspondences cannot determine the bilinear map."""


@dataclass(frozen=True)
class CalibrationMap:
    """``x = a0 + a1*u + a2*v + a3*u*v`` and likewise ``y`` with ``b``."""

    a: tuple[float, float, float, float]
    b: tuple[float, float, float, float]
    rms: float = 0.0

    def jacobian(self, u: float, v: float) -> np.ndarray:
        a, b = self.a, self.b
        return np.array([[a[1] + a[3] * v, a[2] + a[3] * u],
                         [b[1] + b[3] * v, b[2] + b[3] * u]])


def pixel_to_world(cal: CalibrationMap, uv) -> Point2:
    u, v = float(uv[0]), float(uv[1])
    a, b = cal.a, cal.b
    return Point2(a[0] + a[1] * u + a[2] * v + a[3] * u * v,
                  b[0] + b[1] * u + b[2] * v + b[3] * u * v)


def world_to_pixel(cal: CalibrationMap, p, tol: float = 1e-10, max_iter: int = 50) -> Point2:
    """Invert the bilinear map with Newton's method."""
    a, b = cal.a, cal.b
    # start from the map with the cross terms dropped
    m = np.array([[a[1], a[2]], [b[1], b[2]]])
    uv = np.linalg.solve(m, [p[0] - a[0], p[1] - b[0]])
    for _ in range(max_iter):
        w = pixel_to_world(cal, uv)
        r = np.array([p[0] - w.x, p[1] - w.y])
        if abs(r[0]) < tol and abs(r[1]) < tol:
            break
        uv = uv + np.linalg.solve(cal.jacobian(*uv), r)
    else:
        raise CalibrationError(f"pixel inverse did not converge for {tuple(p)}")
    return Point2(float(uv[0]), float(uv[1]))


def fit_calibration(correspondences: Iterable[tuple[Sequence[float], Sequence[float]]]) -> CalibrationMap:
    """Least-squares fit of the bilinear pixel-to-world map.

    Parameters
    ----------
    correspondences : iterable of ((u, v), (x, y))
        Pixel coordinates and the matching field coordinates in mm.
    """
    pairs = [(tuple(map(float, uv)), tuple(map(float, xy))) for uv, xy in correspondences]
    if len(pairs) < 4:
        raise CalibrationError(f"need at least 4 correspondences, got {len(pairs)}")
    uv = np.array([p[0] for p in pairs])
    xy = np.array([p[1] for p in pairs])
    # fit in centred, unit-scaled pixel coordinates: the raw [1, u, v, uv]
    # columns differ by five orders of magnitude and cost digits in the solve
    cu, cv = uv.mean(axis=0)
    su = float(np.ptp(uv[:, 0])) or 1.0
    sv = float(np.ptp(uv[:, 1])) or 1.0
    p, q = (uv[:, 0] - cu) / su, (uv[:, 1] - cv) / sv
    design = np.column_stack([np.ones_like(p), p, q, p * q])
    rank = np.linalg.matrix_rank(design)
    if rank < 4:
        _, s, vt = np.linalg.svd(design)
        null = vt[rank:]
        labels = ["1", "u", "v", "u*v"]
        combos = ["+".join(f"{c:.3g}*{lab}" for c, lab in zip(row, labels) if abs(c) > 1e-9) for row in null]
        raise CalibrationError(
            f"design matrix [1, u, v, u*v] has rank {rank} < 4; "
            f"undetermined directions: {combos}")
    coef, *_ = np.linalg.lstsq(design, xy, rcond=None)
    resid = xy - design @ coef
    rms = float(np.sqrt(np.mean(np.sum(resid ** 2, axis=1))))

    def expand(c):
        # substitute p = (u - cu)/su, q = (v - cv)/sv back into c0 + c1 p + c2 q + c3 p q
        k = c[3] / (su * sv)
        return (float(c[0] - c[1] * cu / su - c[2] * cv / sv + k * cu * cv),
                float(c[1] / su - k * cv),
                float(c[2] / sv - k * cu),
                float(k))

    return CalibrationMap(expand(coef[:, 0]), expand(coef[:, 1]), rms)


def load_correspondences(path: str | Path) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Read ``u v x y`` lines; blank lines and ``#`` comments are skipped."""
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 4 numbers, got {len(parts)}")
        u, v, x, y = map(float, parts)
        out.append(((u, v), (x, y)))
    return out


def default_camera_map(width: int = FRAME_WIDTH, height: int = FRAME_HEIGHT,
                       mm_per_px: float = 3.95, skew: float = 0.01,
                       bilinear: float = 5e-5) -> CalibrationMap:
    """Ground-truth camera for the simulator: field centre at the image centre.

    Image ``v`` grows downward while field ``y`` grows upward. A small skew
    and cross term stand in for lens and mounting imperfection.
    """
    cu, cv = (width - 1) / 2.0, (height - 1) / 2.0
    # x = s*(u-cu) + skew*(v-cv) + k*(u-cu)*(v-cv), expanded in monomials
    ax = (-mm_per_px * cu - skew * cv + bilinear * cu * cv,
          mm_per_px - bilinear * cv,
          skew - bilinear * cu,
          bilinear)
    # y = -s*(v-cv) + skew*(u-cu) - k*(u-cu)*(v-cv)
    by = (mm_per_px * cv - skew * cu - bilinear * cu * cv,
          skew + bilinear * cv,
          -mm_per_px + bilinear * cu,
          -bilinear)
    return CalibrationMap(ax, by)


def grid_correspondences(cal: CalibrationMap, width: int = FRAME_WIDTH, height: int = FRAME_HEIGHT,
                         n_u: int = 9, n_v: int = 7) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Calibration targets on a regular pixel grid, as a survey would provide."""
    out = []
    for u in np.linspace(10, width - 11, n_u):
        for v in np.linspace(10, height - 11, n_v):
            out.append(((float(u), float(v)), tuple(pixel_to_world(cal, (u, v)))))
    return out


def pixel_scale_bounds(cal: CalibrationMap, width: int = FRAME_WIDTH,
                       height: int = FRAME_HEIGHT) -> tuple[float, float]:
    """Smallest and largest mm-per-pixel stretch of the map over the frame."""
    lo, hi = math.inf, 0.0
    for u in np.linspace(0, width - 1, 7):
        for v in np.linspace(0, height - 1, 7):
            s = np.linalg.svd(cal.jacobian(u, v), compute_uv=False)
            lo = min(lo, float(s[-1]))
            hi = max(hi, float(s[0]))
    return lo, hi


@dataclass(frozen=True)
class NoiseSpec:
    """Salt-and-pepper noise on the colour mask."""

    salt: float = 0.0     # probability a background pixel reads as ball
    pepper: float = 0.0   # probability a ball pixel drops out


@dataclass
class PixelFrame:
    mask: np.ndarray

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]


def draw_disc(mask: np.ndarray, center, radius: float) -> None:
    """Set every pixel whose centre lies within ``radius`` of ``center``."""
    h, w = mask.shape
    cu, cv = center
    u0 = max(0, int(math.floor(cu - radius)))
    u1 = min(w - 1, int(math.ceil(cu + radius)))
    v0 = max(0, int(math.floor(cv - radius)))
    v1 = min(h - 1, int(math.ceil(cv + radius)))
    if u0 > u1 or v0 > v1:
        return
    uu = np.arange(u0, u1 + 1)[None, :]
    vv = np.arange(v0, v1 + 1)[:, None]
    inside = (uu - cu) ** 2 + (vv - cv) ** 2 <= radius * radius
    mask[v0:v1 + 1, u0:u1 + 1] |= inside


def render_frame(world: WorldState, cal: CalibrationMap, noise: NoiseSpec | None = None,
                 rng: np.random.Generator | None = None, r_ball_px: float | None = None,
                 width: int = FRAME_WIDTH, height: int = FRAME_HEIGHT) -> PixelFrame:
    """Render the ball as a filled disc; robots and field are background."""
    mask = np.zeros((height, width), dtype=bool)
    if r_ball_px is None:
        lo, hi = pixel_scale_bounds(cal, width, height)
        r_ball_px = world.physics.ball_radius / math.sqrt(lo * hi)
    centre = world_to_pixel(cal, world.ball.position)
    draw_disc(mask, centre, r_ball_px)
    if noise is not None and (noise.salt > 0 or noise.pepper > 0):
        if rng is None:
            raise ValueError("noise requires an rng")
        flat = mask.reshape(-1)
        n = flat.size
        if noise.salt > 0:
            k = rng.binomial(n, noise.salt)
            flat[rng.integers(0, n, size=k)] = True
        if noise.pepper > 0:
            on = np.flatnonzero(flat)
            drop = on[rng.random(on.size) < noise.pepper]
            flat[drop] = False
    return PixelFrame(mask)


@dataclass(frozen=True)
class DynamicWindow:
    """Square search window; bounds are inclusive pixel indices after clipping."""

    center: tuple[int, int]
    side: int
    u0: int
    u1: int
    v0: int
    v1: int

    def contains(self, uv) -> bool:
        return (self.u0 - 0.5 <= uv[0] < self.u1 + 0.5
                and self.v0 - 0.5 <= uv[1] < self.v1 + 0.5)

    def on_border(self, u: int, v: int) -> bool:
        return u == self.u0 or u == self.u1 or v == self.v0 or v == self.v1


def window_side(r_ball_px: float, v_max_px: float, T: float) -> int:
    """Window side from ball size and the farthest the ball can move in one period."""
    if T <= 0:
        raise ValueError("sample time must be positive")
    raw = 2.0 * r_ball_px + 2.0 * math.ceil(v_max_px * T - 1e-12)
    side = int(math.ceil(raw - 1e-9))
    if side % 2 == 0:
        side += 1
    return max(side, 1)


def window_for(last_pixel, r_ball_px: float, v_max_px: float, T: float,
               frame: tuple[int, int] = (FRAME_WIDTH, FRAME_HEIGHT), scale: int = 1) -> DynamicWindow:
    """Window centred on the last sighting; ``scale`` enlarges it after misses.

    ``frame`` is ``(width, height)``.
    """
    w, h = frame
    side = window_side(r_ball_px, v_max_px, T) * scale
    if side % 2 == 0:
        side += 1
    cu, cv = int(round(last_pixel[0])), int(round(last_pixel[1]))
    half = side // 2
    return DynamicWindow((cu, cv), side,
                         max(0, cu - half), min(w - 1, cu + half),
                         max(0, cv - half), min(h - 1, cv + half))


def full_window(frame: tuple[int, int] = (FRAME_WIDTH, FRAME_HEIGHT)) -> DynamicWindow:
    w, h = frame
    return DynamicWindow((w // 2, h // 2), max(w, h), 0, w - 1, 0, h - 1)


@dataclass(frozen=True)
class BallObservation:
    pixel_centroid: Optional[tuple[float, float]]
    world_position: Optional[Point2]
    valid: bool
    area: int = 0


NO_BALL = BallObservation(None, None, False)


def extract_ball(frame: PixelFrame, window: DynamicWindow, r_ball_px: float,
                 min_fraction: float = 0.1) -> BallObservation:
    """Region-grow the ball inside ``window`` and return its pixel centroid."""
    sub = frame.mask[window.v0:window.v1 + 1, window.u0:window.u1 + 1]
    rows, cols = np.nonzero(sub)
    if rows.size == 0:
        return NO_BALL
    on = set(zip((rows + window.v0).tolist(), (cols + window.u0).tolist()))

    block = max(1, int(r_ball_px // 4))
    off = block // 2
    visited: set[tuple[int, int]] = set()
    regions: list[tuple[list[tuple[int, int]], bool]] = []
    for sv in range(window.v0 + off, window.v1 + 1, block):
        for su in range(window.u0 + off, window.u1 + 1, block):
            seed = (sv, su)
            if seed not in on or seed in visited:
                continue
            visited.add(seed)
            stack = [seed]
            pixels = []
            border = False
            while stack:
                v, u = stack.pop()
                pixels.append((v, u))
                if not border and window.on_border(u, v):
                    border = True
                for nb in ((v - 1, u), (v + 1, u), (v, u - 1), (v, u + 1)):
                    if nb in on and nb not in visited:
                        visited.add(nb)
                        stack.append(nb)
            regions.append((pixels, border))

    min_area = min_fraction * math.pi * r_ball_px ** 2
    candidates = [r for r in regions if len(r[0]) >= min_area]
    if not candidates:
        return NO_BALL
    interior = [r for r in candidates if not r[1]]
    pool = interior or candidates
    best = max(pool, key=lambda r: len(r[0]))[0]
    n = len(best)
    cv = sum(p[0] for p in best) / n
    cu = sum(p[1] for p in best) / n
    return BallObservation((cu, cv), None, True, n)


class BallVision:
    """Stateful ball finder: remembers the last sighting and widens on misses."""

    def __init__(self, cal: CalibrationMap, r_ball_px: float, v_max_px: float, T: float,
                 frame: tuple[int, int] = (FRAME_WIDTH, FRAME_HEIGHT)):
        self.cal = cal
        self.r_ball_px = r_ball_px
        self.v_max_px = v_max_px
        self.T = T
        self.frame = frame
        self.last_pixel: Optional[tuple[float, float]] = None
        self.misses = 0

    def reset(self) -> None:
        self.last_pixel = None
        self.misses = 0

    def current_window(self) -> DynamicWindow:
        if self.last_pixel is None:
            return full_window(self.frame)
        win = window_for(self.last_pixel, self.r_ball_px, self.v_max_px, self.T,
                         self.frame, scale=2 ** self.misses)
        if win.side >= max(self.frame):
            return full_window(self.frame)
        return win

    def observe(self, frame: PixelFrame) -> BallObservation:
        win = self.current_window()
        obs = extract_ball(frame, win, self.r_ball_px)
        if not obs.valid:
            if self.last_pixel is not None:
                self.misses = min(self.misses + 1, 16)
            return obs
        self.last_pixel = obs.pixel_centroid
        self.misses = 0
        return BallObservation(obs.pixel_centroid, pixel_to_world(self.cal, obs.pixel_centroid),
                               True, obs.area)

"""Reference computations written independently of the package code.

Each oracle recomputes a quantity from first principles with plain Python
so the tests compare two separate derivations rather than one code path
against itself.
"""

import math


def gh_recurrence(measurements, g, h, T, x0, v0=0.0):
    """Standard g-h filter as a hand-written loop.

    Returns a list of (smoothed position, smoothed velocity, next prediction)
    after each measurement, starting from prediction ``x0`` with velocity ``v0``.
    """
    out = []
    pred_x, pred_v = x0, v0
    for z in measurements:
        innovation = z - pred_x
        est_x = pred_x + g * innovation
        est_v = pred_v + (h / T) * innovation
        pred_x = est_x + T * est_v
        pred_v = est_v
        out.append((est_x, est_v, pred_x))
    return out


def disc_pixels(cu, cv, r, width, height):
    """Pixels whose centres fall inside the circle, by exhaustive loop."""
    pts = []
    for v in range(max(0, int(cv - r) - 1), min(height, int(cv + r) + 2)):
        for u in range(max(0, int(cu - r) - 1), min(width, int(cu + r) + 2)):
            if (u - cu) ** 2 + (v - cv) ** 2 <= r * r:
                pts.append((u, v))
    return pts


def centroid(pts):
    n = len(pts)
    return (sum(p[0] for p in pts) / n, sum(p[1] for p in pts) / n)


def brute_force_aim(post_a, post_b, keeper, inset, samples=101):
    """Goal-mouth point (inset from both posts) farthest from the keeper, by scan."""
    length = math.hypot(post_b[0] - post_a[0], post_b[1] - post_a[1])
    ux, uy = (post_b[0] - post_a[0]) / length, (post_b[1] - post_a[1]) / length
    best, best_d = None, -1.0
    for i in range(samples):
        s = inset + (length - 2 * inset) * i / (samples - 1)
        p = (post_a[0] + ux * s, post_a[1] + uy * s)
        d = math.hypot(p[0] - keeper[0], p[1] - keeper[1])
        if d > best_d + 1e-12:
            best, best_d = p, d
    return best, best_d


def solve_linear(a, b):
    """Gaussian elimination with partial pivoting on small dense systems."""
    n = len(a)
    m = [list(map(float, row)) + [float(bi)] for row, bi in zip(a, b)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        m[col], m[piv] = m[piv], m[col]
        for r in range(col + 1, n):
            f = m[r][col] / m[col][col]
            for c in range(col, n + 1):
                m[r][c] -= f * m[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        x[r] = (m[r][n] - sum(m[r][c] * x[c] for c in range(r + 1, n))) / m[r][r]
    return x


def bilinear_normal_equations(pixels, values):
    """Least-squares coefficients of v = c0 + c1 u + c2 v + c3 u v via normal equations."""
    rows = [(1.0, u, v, u * v) for u, v in pixels]
    ata = [[sum(r[i] * r[j] for r in rows) for j in range(4)] for i in range(4)]
    atb = [sum(r[i] * y for r, y in zip(rows, values)) for i in range(4)]
    return solve_linear(ata, atb)


def reflect_once(x, vx, wall, e):
    """Ball crossing a wall at ``wall`` during one step mirrors back with restitution."""
    if x > wall:
        return 2 * wall - x, -e * vx
    return x, vx

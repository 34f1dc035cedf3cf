import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mirosim.geometry import Point2
from mirosim.vision import (CalibrationError, CalibrationMap, DynamicWindow, PixelFrame, default_camera_map, draw_disc,
                            extract_ball, fit_calibration, full_window, load_correspondences, pixel_to_world,
                            render_frame, window_for, window_side, world_to_pixel, NoiseSpec)
from mirosim.world import BallState, WorldState
from oracles import bilinear_normal_equations, centroid, disc_pixels

W, H = 620, 480


def test_window_side_example():
    assert window_side(10, 200, 0.035) == 35


def test_window_side_stationary_floor():
    assert window_side(10, 0, 0.035) == 21
    assert window_side(4.5, 0, 0.035) == 9


def test_window_side_requires_positive_period():
    with pytest.raises(ValueError):
        window_side(10, 200, 0)


def test_window_is_centred_and_odd():
    win = window_for((300, 200), 10, 200, 0.035)
    assert win.side == 35
    assert (win.u0, win.u1, win.v0, win.v1) == (283, 317, 183, 217)


@given(st.integers(0, W - 1), st.integers(0, H - 1), st.floats(1, 20), st.floats(0, 3000))
def test_window_clipped_to_frame(u, v, r, vmax):
    win = window_for((u, v), r, vmax, 0.035)
    assert 0 <= win.u0 <= win.u1 <= W - 1
    assert 0 <= win.v0 <= win.v1 <= H - 1
    assert win.side % 2 == 1


def test_window_near_edge_is_clipped():
    win = window_for((5, 5), 10, 200, 0.035)
    assert (win.u0, win.v0) == (0, 0)
    assert (win.u1, win.v1) == (22, 22)


def _disc_frame(cu, cv, r):
    mask = np.zeros((H, W), dtype=bool)
    draw_disc(mask, (cu, cv), r)
    return PixelFrame(mask)


@pytest.mark.parametrize("cu, cv, r", [(309.5, 239.5, 5.4), (100.3, 77.8, 8.0), (411.0, 300.25, 12.5)])
def test_draw_disc_matches_rasterization_oracle(cu, cv, r):
    frame = _disc_frame(cu, cv, r)
    expected = disc_pixels(cu, cv, r, W, H)
    got = list(zip(*np.nonzero(frame.mask)[::-1]))
    assert sorted(got) == sorted(expected)


def test_rendered_ball_at_centre_has_disc_area():
    cal = default_camera_map()
    w = WorldState([], BallState(Point2(0, 0)))
    frame = render_frame(w, cal, r_ball_px=5.4)
    n = int(frame.mask.sum())
    assert abs(n - math.pi * 5.4 ** 2) <= 0.05 * math.pi * 5.4 ** 2
    centre = world_to_pixel(cal, (0, 0))
    assert centroid([(u, v) for v, u in zip(*np.nonzero(frame.mask))]) == pytest.approx(tuple(centre), abs=0.5)


def test_rendered_ball_outside_frame_is_empty():
    cal = default_camera_map()
    w = WorldState([], BallState(Point2(5000, 5000)))
    assert not render_frame(w, cal, r_ball_px=5.4).mask.any()


def test_render_without_noise_is_deterministic():
    cal = default_camera_map()
    w = WorldState([], BallState(Point2(123, -45)))
    a = render_frame(w, cal, NoiseSpec(), r_ball_px=5.4)
    b = render_frame(w, cal, NoiseSpec(), r_ball_px=5.4)
    assert np.array_equal(a.mask, b.mask)


def test_render_noise_needs_rng():
    cal = default_camera_map()
    w = WorldState([], BallState(Point2(0, 0)))
    with pytest.raises(ValueError):
        render_frame(w, cal, NoiseSpec(salt=0.01), r_ball_px=5.4)


@given(st.floats(20, W - 21), st.floats(20, H - 21), st.floats(4, 12))
def test_extract_centroid_matches_oracle(cu, cv, r):
    frame = _disc_frame(cu, cv, r)
    obs = extract_ball(frame, full_window(), r)
    assert obs.valid
    oracle = centroid(disc_pixels(cu, cv, r, W, H))
    assert obs.pixel_centroid == pytest.approx(oracle, abs=1e-9)
    assert math.hypot(obs.pixel_centroid[0] - cu, obs.pixel_centroid[1] - cv) < 0.5


def test_extract_empty_window_is_invalid():
    obs = extract_ball(PixelFrame(np.zeros((H, W), dtype=bool)), full_window(), 5.0)
    assert not obs.valid and obs.pixel_centroid is None


def test_extract_prefers_interior_region_over_border_region():
    mask = np.zeros((H, W), dtype=bool)
    mask[200:220, 300:310] = True                    # 200 px interior blob
    mask[250:256, 340:345] = True                    # 30 px touching the window edge
    win = DynamicWindow((320, 230), 61, 290, 344, 195, 260)
    obs = extract_ball(PixelFrame(mask), win, r_ball_px=8.0)
    assert obs.valid and obs.area == 200
    assert obs.pixel_centroid == pytest.approx((304.5, 209.5))


def test_extract_keeps_border_region_when_nothing_else():
    mask = np.zeros((H, W), dtype=bool)
    mask[0:6, 0:10] = True
    obs = extract_ball(PixelFrame(mask), full_window(), r_ball_px=4.0)
    assert obs.valid and obs.area == 60


def test_extract_rejects_specks_below_min_area():
    mask = np.zeros((H, W), dtype=bool)
    mask[100:102, 100:102] = True
    assert not extract_ball(PixelFrame(mask), full_window(), r_ball_px=8.0).valid


def test_fit_exact_affine_example():
    pts = [((u, v), (2 + 0.5 * u, -1 + 0.5 * v)) for u, v in [(0, 0), (10, 0), (0, 10), (7, 13)]]
    cal = fit_calibration(pts)
    assert cal.a == pytest.approx((2, 0.5, 0, 0), abs=1e-9)
    assert cal.b == pytest.approx((-1, 0, 0.5, 0), abs=1e-9)
    assert cal.rms < 1e-9


def test_fit_exact_bilinear_term():
    pts = [((u, v), (u * v, 0.0)) for u, v in [(1, 2), (3, 1), (4, 5), (2, 7), (6, 3)]]
    cal = fit_calibration(pts)
    assert cal.a == pytest.approx((0, 0, 0, 1), abs=1e-9)


def test_fit_rank_deficient_raises():
    pts = [((u, 5.0), (u, 5.0)) for u in range(6)]
    with pytest.raises(CalibrationError, match="rank"):
        fit_calibration(pts)
    with pytest.raises(CalibrationError):
        fit_calibration(pts[:3])


def test_fit_matches_normal_equation_oracle_under_noise():
    rng = np.random.default_rng(11)
    truth = default_camera_map()
    uv = rng.uniform(0, [W - 1, H - 1], size=(30, 2))
    xy = np.array([tuple(pixel_to_world(truth, p)) for p in uv]) + rng.normal(0, 2.0, (30, 2))
    cal = fit_calibration([(tuple(p), tuple(q)) for p, q in zip(uv, xy)])
    pix = [tuple(p) for p in uv]
    assert cal.a == pytest.approx(bilinear_normal_equations(pix, xy[:, 0]), rel=1e-6, abs=1e-6)
    assert cal.b == pytest.approx(bilinear_normal_equations(pix, xy[:, 1]), rel=1e-6, abs=1e-6)


def test_fit_monte_carlo_pixel_noise_within_three_standard_errors():
    rng = np.random.default_rng(2024)
    truth = default_camera_map()
    uv = rng.uniform(0, [W - 1, H - 1], size=(100, 2))
    xy = np.array([tuple(pixel_to_world(truth, p)) for p in uv])
    coefs = []
    for _ in range(1000):
        noisy = uv + rng.normal(0, 0.5, uv.shape)
        cal = fit_calibration([(tuple(p), tuple(q)) for p, q in zip(noisy, xy)])
        coefs.append(cal.a + cal.b)
    coefs = np.array(coefs)
    se = coefs.std(axis=0) / math.sqrt(len(coefs))
    bias = np.abs(coefs.mean(axis=0) - np.array(truth.a + truth.b))
    # errors-in-variables bias is second order in sigma; allow it on top of sampling error
    scale = np.abs(np.array(truth.a + truth.b))
    assert np.all(bias <= 3 * se + 1e-3 * scale + 1e-12)


def test_load_correspondences(tmp_path):
    p = tmp_path / "pts.txt"
    p.write_text("# u v x y\n0 0 1 2\n\n10 0 3 4\n")
    assert load_correspondences(p) == [((0, 0), (1, 2)), ((10, 0), (3, 4))]
    p.write_text("1 2 3\n")
    with pytest.raises(ValueError):
        load_correspondences(p)


def test_pixel_to_world_identity_and_constant():
    assert pixel_to_world(CalibrationMap((0, 1, 0, 0), (0, 0, 1, 0)), (10, 20)) == (10, 20)
    assert pixel_to_world(CalibrationMap((5, 0, 0, 0), (7, 0, 0, 0)), (123, -4)) == (5, 7)


@given(st.floats(0, W - 1), st.floats(0, H - 1))
def test_world_to_pixel_inverts_camera(u, v):
    cal = default_camera_map()
    back = world_to_pixel(cal, pixel_to_world(cal, (u, v)))
    assert back == pytest.approx((u, v), abs=1e-7)

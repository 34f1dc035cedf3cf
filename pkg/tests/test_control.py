import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from mirosim.control import (ControlErrors, ControlGains, backward_control, compute_errors, forward_control,
                             proportional_control, saturate, turn_control)
from mirosim.world import Pose
from drive import forward_cases, forward_ticks, turn_ticks

PG = ControlGains.as_printed()


def cmd(c):
    return (c.v_left, c.v_right)


def test_gains_must_be_positive():
    with pytest.raises(ValueError):
        ControlGains(k_d=0)
    assert (PG.k_d, PG.k_a, PG.k_a_turn) == (0.85, 0.12, 0.2)


@pytest.mark.parametrize("pose, target, expected", [
    (Pose(0, 0, 0), (100, 0), (100, 0, 0)),
    (Pose(0, 0, 90), (100, 0), (100, 0, -90)),
    (Pose(0, 0, 170), (0, -10), (10, -90, 100)),
])
def test_compute_errors_examples(pose, target, expected):
    e = compute_errors(pose, target)
    assert (e.d, e.theta_T, e.theta_e) == pytest.approx(expected)


def test_compute_errors_on_target_uses_heading():
    e = compute_errors(Pose(5, 5, 33), (5, 5))
    assert (e.d, e.theta_T, e.theta_e) == (0, 33, 0)


@pytest.mark.parametrize("e, expected", [
    (ControlErrors(0, 0, 0), (0, 0)),
    (ControlErrors(100, 0, 0), (85, 85)),
    (ControlErrors(0, 0, 90), (-10.8, 10.8)),
])
def test_proportional_examples(e, expected):
    assert cmd(proportional_control(e, PG)) == pytest.approx(expected)


@pytest.mark.parametrize("e, expected", [
    (ControlErrors(100, 0, 0), (85, 85)),
    (ControlErrors(100, 30, 30), (81.4, 88.6)),
    (ControlErrors(0, 0, 0), (0, 0)),
])
def test_forward_examples(e, expected):
    assert cmd(forward_control(e, PG)) == pytest.approx(expected)


def test_backward_examples():
    e = compute_errors(Pose(0, 0, 0), (-100, 0))
    assert cmd(backward_control(e, PG)) == pytest.approx((-85, -85))
    # tail-referenced error of +30 deg
    assert cmd(backward_control(ControlErrors(100, 0, -150), PG)) == pytest.approx((-88.6, -81.4))
    assert cmd(backward_control(ControlErrors(0, 0, 180), PG)) == pytest.approx((0, 0))


@pytest.mark.parametrize("theta_R, theta_d, expected", [
    (0, 90, (-18, 18)),
    (45, 45, (0, 0)),
    (170, -170, (-4, 4)),
])
def test_turn_examples(theta_R, theta_d, expected):
    assert cmd(turn_control(theta_R, theta_d, PG)) == pytest.approx(expected)


def test_saturate_scales_both_wheels():
    c = saturate(2000, 1000, 1000)
    assert cmd(c) == (1000, 500)
    assert cmd(saturate(300, -200, 1000)) == (300, -200)


@given(st.floats(0, 5000), st.floats(-180, 180), st.floats(-180, 180))
def test_outputs_respect_speed_limit(d, tt, te):
    e = ControlErrors(d, tt, te)
    for c in (proportional_control(e), forward_control(e), backward_control(e), turn_control(tt, te)):
        assert max(abs(c.v_left), abs(c.v_right)) <= 1000 + 1e-9


xy = st.floats(-1000, 1000)


@given(xy, xy, st.floats(-179, 179), xy, xy)
def test_mirror_about_x_axis_swaps_wheels(x, y, th, tx, ty):
    assume(abs(tx - x) + abs(ty - y) > 1e-3)
    e = compute_errors(Pose(x, y, th), (tx, ty))
    m = compute_errors(Pose(x, -y, -th), (tx, -ty))
    assume(abs(abs(e.theta_e) - 180) > 1e-6 and abs(e.theta_e) > 1e-6)
    for law in (proportional_control, forward_control, backward_control):
        a, b = law(e), law(m)
        assert (a.v_left, a.v_right) == pytest.approx((b.v_right, b.v_left), abs=1e-6)
    a, b = turn_control(th, 30), turn_control(-th, -30)
    assert (a.v_left, a.v_right) == pytest.approx((b.v_right, b.v_left), abs=1e-9)


def test_forward_convergence_sweep():
    ticks = [forward_ticks(pose, target) for pose, target in forward_cases(seed=1)]
    assert all(t is not None for t in ticks)


def test_turn_convergence_from_any_heading():
    for theta in np.linspace(-179.5, 180, 72):
        for goal in (-135.0, 0.0, 90.0, 180.0):
            assert turn_ticks(theta, goal) is not None

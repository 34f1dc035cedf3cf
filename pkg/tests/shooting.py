"""Single-robot shot attempts for the shooting tests and the acceptance suite."""

import math

import numpy as np

from mirosim.geometry import Point2, normalize_angle
from mirosim.harness import pixel_geometry
from mirosim.shoot import GoalkeeperView, ShootConfig, ShootState, shoot_step
from mirosim.tracker import BallTracker, FilterParams
from mirosim.vision import BallVision, default_camera_map, fit_calibration, grid_correspondences, render_frame
from mirosim.world import STOP, BallState, FieldSpec, PhysicsConfig, Pose, RobotBody, WorldState, step_world

T = 0.035
CANONICAL = dict(pose=Pose(-800.0, 0.0, 0.0), ball=(-400.0, 0.0), velocity=(300.0, 0.0))


class GroundTruthTracker:
    """Tracker stand-in that reads the simulator's true ball state."""

    initialized = True

    def __init__(self, world):
        self.world = world

    def position(self):
        return tuple(self.world.ball.position)

    def velocity(self):
        return tuple(self.world.ball.velocity)

    def predict_ahead(self, k):
        b = self.world.ball
        return (b.position.x + k * T * b.velocity.x, b.position.y + k * T * b.velocity.y)


def attempt(pose, ball, velocity=(0.0, 0.0), truth=False, max_time=15.0, friction=0.2,
            config=ShootConfig()):
    """Run one shot attempt; returns (contact time s or None, heading error deg or None)."""
    phys = PhysicsConfig(friction=friction)
    fld = FieldSpec()
    world = WorldState([RobotBody(pose)], BallState(Point2(*ball), Point2(*velocity)), fld, phys)
    cam = default_camera_map()
    cal = fit_calibration(grid_correspondences(cam))
    r_px, v_px = pixel_geometry(cam, phys)
    vision = BallVision(cal, r_px, v_px, T)
    tracker = GroundTruthTracker(world) if truth else BallTracker(FilterParams())
    goal = fld.goal_center("home")
    keeper = GoalkeeperView(Point2(goal.x - 60, 0.0), (Point2(goal.x, -200.0), Point2(goal.x, 200.0)))
    state = ShootState()
    for n in range(int(round(max_time / T))):
        if not truth:
            obs = vision.observe(render_frame(world, cam, r_ball_px=r_px))
            tracker.update(tuple(obs.world_position) if obs.valid else None)
        cmd = STOP
        if tracker.initialized:
            cmd, state = shoot_step(world.robots[0].pose, tracker, keeper, state, config, fld)
        events = step_world(world, [cmd], T)
        if any(kind == "touch" for kind, _ in events):
            err = abs(normalize_angle(world.robots[0].pose.theta - state.shoot_direction))
            return (n + 1) * T, err
        if any(kind == "goal" for kind, _ in events):
            return None, None
    return None, None


def stationary_postures(seed=7, n=50):
    """Random legal start postures: robot and ball inside the field, not touching."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        bx, by = rng.uniform(-700, 700), rng.uniform(-600, 600)
        rx, ry = rng.uniform(-1000, 1000), rng.uniform(-800, 800)
        if math.hypot(rx - bx, ry - by) > 150:
            out.append((Pose(rx, ry, rng.uniform(-180, 180)), (bx, by)))
    return out

"""Ground-truth physics: unicycle robots, a rolling ball, walls, kicks and goals.

Coordinates are mm with the origin at the field centre; +X points at the
goal the ``home`` team attacks. Headings are degrees in (-180, 180].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Optional

from .geometry import Point2, normalize_angle


class ContactError(RuntimeError):
    """A kick was resolved without the ball touching the robot's front face."""


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float

    @property
    def position(self) -> Point2:
        return Point2(self.x, self.y)


@dataclass(frozen=True)
class WheelCommand:
    v_left: float
    v_right: float

    def clamped(self, v_max: float) -> "WheelCommand":
        return WheelCommand(
            min(max(self.v_left, -v_max), v_max),
            min(max(self.v_right, -v_max), v_max),
        )

    @property
    def forward_speed(self) -> float:
        return 0.5 * (self.v_left + self.v_right)


STOP = WheelCommand(0.0, 0.0)


@dataclass(frozen=True)
class PhysicsConfig:
    v_max: float = 1000.0          # wheel speed limit, mm/s
    ball_v_max: float = 2000.0     # mm/s
    ball_radius: float = 21.3      # golf ball
    friction: float = 0.2          # rolling decay rate, 1/s
    restitution: float = 0.8
    kick_gain: float = 1.5
    contact_slack: float = 2.0     # mm added to the kick contact distance
    substeps: int = 5


@dataclass(frozen=True)
class FieldSpec:
    length: float = 2200.0
    width: float = 1800.0
    goal_width: float = 400.0

    def __post_init__(self):
        if not (0.0 < self.goal_width < self.width):
            raise ValueError("goal_width must lie in (0, width)")
        if self.length <= 0:
            raise ValueError("length must be positive")

    @property
    def half_length(self) -> float:
        return 0.5 * self.length

    @property
    def half_width(self) -> float:
        return 0.5 * self.width

    @staticmethod
    def attack_sign(team: str) -> int:
        """+1 if ``team`` attacks the +X goal."""
        return 1 if team == "home" else -1

    def goal_center(self, team: str) -> Point2:
        """Centre of the goal that ``team`` attacks."""
        return Point2(self.attack_sign(team) * self.half_length, 0.0)

    def own_goal_center(self, team: str) -> Point2:
        return Point2(-self.attack_sign(team) * self.half_length, 0.0)

    def contains(self, p, margin: float = 0.0) -> bool:
        return (abs(p[0]) <= self.half_length - margin
                and abs(p[1]) <= self.half_width - margin)

    def clamp(self, p, margin: float = 0.0) -> Point2:
        hx = self.half_length - margin
        hy = self.half_width - margin
        return Point2(min(max(p[0], -hx), hx), min(max(p[1], -hy), hy))


@dataclass
class RobotBody:
    pose: Pose
    team: str = "home"
    role: str = "field"
    wheel_base: float = 70.0
    half_size: float = 37.5
    last_cmd: WheelCommand = STOP

    def __post_init__(self):
        if self.wheel_base <= 0 or self.half_size <= 0:
            raise ValueError("wheel_base and half_size must be positive")

    @property
    def forward_speed(self) -> float:
        return self.last_cmd.forward_speed

    def to_local(self, p) -> Point2:
        """Express world point ``p`` in the robot frame (x forward, y left)."""
        dx = p[0] - self.pose.x
        dy = p[1] - self.pose.y
        rad = math.radians(self.pose.theta)
        c, s = math.cos(rad), math.sin(rad)
        return Point2(c * dx + s * dy, -s * dx + c * dy)


@dataclass(frozen=True)
class BallState:
    position: Point2
    velocity: Point2 = Point2(0.0, 0.0)

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)


@dataclass
class WorldState:
    robots: list[RobotBody]
    ball: BallState
    field: FieldSpec = dc_field(default_factory=FieldSpec)
    physics: PhysicsConfig = dc_field(default_factory=PhysicsConfig)
    clock: float = 0.0
    score: dict[str, int] = dc_field(default_factory=lambda: {"home": 0, "away": 0})

    def team_robots(self, team: str) -> list[RobotBody]:
        return [r for r in self.robots if r.team == team]


def step_robot(pose: Pose, cmd: WheelCommand, dt: float, wheel_base: float = 70.0) -> Pose:
    """Explicit Euler step of the unicycle model driven by wheel speeds."""
    v = 0.5 * (cmd.v_left + cmd.v_right)
    omega = (cmd.v_right - cmd.v_left) / wheel_base
    rad = math.radians(pose.theta)
    return Pose(
        pose.x + v * math.cos(rad) * dt,
        pose.y + v * math.sin(rad) * dt,
        normalize_angle(pose.theta + math.degrees(omega * dt)),
    )


def _clamp_speed(vx: float, vy: float, limit: float) -> Point2:
    s = math.hypot(vx, vy)
    if s > limit:
        k = limit / s
        return Point2(vx * k, vy * k)
    return Point2(vx, vy)


def step_ball(ball: BallState, dt: float, fld: FieldSpec | None = None,
              physics: PhysicsConfig | None = None) -> BallState:
    """Advance the ball, decay its speed and bounce it off the walls.

    The end lines are open inside the goal mouth so that a ball can cross
    into the goal; ``detect_goal`` handles what happens next.
    """
    fld = fld or FieldSpec()
    physics = physics or PhysicsConfig()
    (x, y), (vx, vy) = ball.position, ball.velocity
    if vx == 0.0 and vy == 0.0:
        return ball
    x += vx * dt
    y += vy * dt
    decay = math.exp(-physics.friction * dt)
    vx *= decay
    vy *= decay

    r = physics.ball_radius
    e = physics.restitution
    hx = fld.half_length - r
    hy = fld.half_width - r
    if abs(y) >= 0.5 * fld.goal_width:
        if x > hx:
            x = 2 * hx - x
            vx = -e * vx
        elif x < -hx:
            x = -2 * hx - x
            vx = -e * vx
    if y > hy:
        y = 2 * hy - y
        vy = -e * vy
    elif y < -hy:
        y = -2 * hy - y
        vy = -e * vy
    return BallState(Point2(x, y), Point2(vx, vy))


def in_kick_contact(robot: RobotBody, ball: BallState, physics: PhysicsConfig) -> bool:
    """Ball centre lies just in front of the robot's front face."""
    local = robot.to_local(ball.position)
    reach = robot.half_size + physics.ball_radius + physics.contact_slack
    return 0.0 < local.x <= reach and abs(local.y) <= robot.half_size


def resolve_kick(robot: RobotBody, ball: BallState, physics: PhysicsConfig | None = None) -> BallState:
    """Launch the ball along the robot heading at ``kick_gain`` times its speed."""
    physics = physics or PhysicsConfig()
    if not in_kick_contact(robot, ball, physics):
        raise ContactError("resolve_kick called without front-face contact")
    rad = math.radians(robot.pose.theta)
    speed = physics.kick_gain * robot.forward_speed
    v = _clamp_speed(speed * math.cos(rad), speed * math.sin(rad), physics.ball_v_max)
    return replace(ball, velocity=v)


def detect_goal(world: WorldState) -> Optional[str]:
    """Return the scoring team if the ball centre is past a goal line in the mouth.

    On a goal the score is incremented and the ball is placed at rest on
    the centre spot.
    """
    fld = world.field
    x, y = world.ball.position
    if abs(y) >= 0.5 * fld.goal_width or abs(x) <= fld.half_length:
        return None
    scorer = "home" if x > 0 else "away"
    world.score[scorer] += 1
    world.ball = BallState(Point2(0.0, 0.0))
    return scorer


def _separate_robots(a: RobotBody, b: RobotBody) -> None:
    dx = b.pose.x - a.pose.x
    dy = b.pose.y - a.pose.y
    dist = math.hypot(dx, dy)
    min_d = a.half_size + b.half_size
    if dist >= min_d:
        return
    if dist == 0.0:
        nx, ny = 1.0, 0.0
    else:
        nx, ny = dx / dist, dy / dist
    push = 0.5 * (min_d - dist)
    a.pose = replace(a.pose, x=a.pose.x - nx * push, y=a.pose.y - ny * push)
    b.pose = replace(b.pose, x=b.pose.x + nx * push, y=b.pose.y + ny * push)


def _robot_ball_contact(robot: RobotBody, ball: BallState,
                        physics: PhysicsConfig) -> tuple[BallState, bool, bool]:
    """Kick if the robot drives into the ball, then push the ball out of the body.

    Returns the new ball state, whether a kick happened and whether the
    bodies touched at all.
    """
    kicked = False
    if robot.forward_speed > 0.0 and in_kick_contact(robot, ball, physics):
        rad = math.radians(robot.pose.theta)
        along = ball.velocity[0] * math.cos(rad) + ball.velocity[1] * math.sin(rad)
        if along < physics.kick_gain * robot.forward_speed:
            ball = resolve_kick(robot, ball, physics)
            kicked = True

    local = robot.to_local(ball.position)
    h = robot.half_size
    r = physics.ball_radius
    cx = min(max(local.x, -h), h)
    cy = min(max(local.y, -h), h)
    ox, oy = local.x - cx, local.y - cy
    gap = math.hypot(ox, oy)
    if gap >= r:
        return ball, kicked, kicked
    if gap == 0.0:
        # ball centre inside the body: leave through the nearest face
        if h - abs(local.x) < h - abs(local.y):
            nlx, nly, depth = math.copysign(1.0, local.x), 0.0, h - abs(local.x) + r
        else:
            nlx, nly, depth = 0.0, math.copysign(1.0, local.y), h - abs(local.y) + r
    else:
        nlx, nly, depth = ox / gap, oy / gap, r - gap
    rad = math.radians(robot.pose.theta)
    c, s = math.cos(rad), math.sin(rad)
    nx, ny = c * nlx - s * nly, s * nlx + c * nly
    px = ball.position[0] + nx * depth
    py = ball.position[1] + ny * depth
    vx, vy = ball.velocity
    vn = vx * nx + vy * ny
    if vn < 0.0:
        vx -= (1.0 + physics.restitution) * vn * nx
        vy -= (1.0 + physics.restitution) * vn * ny
    return BallState(Point2(px, py), _clamp_speed(vx, vy, physics.ball_v_max)), kicked, True


def step_world(world: WorldState, commands: list[WheelCommand], dt: float) -> list[tuple[str, object]]:
    """Advance the whole world by ``dt`` with the given per-robot commands.

    Returns the events raised during the step as ``(kind, payload)`` pairs:
    ``("touch", robot_index)`` for any robot-ball contact, ``("kick",
    robot_index)`` when the contact was a kick, and ``("goal", team)``.
    """
    if len(commands) != len(world.robots):
        raise ValueError("one command per robot required")
    physics = world.physics
    fld = world.field
    events: list[tuple[str, object]] = []
    for robot, cmd in zip(world.robots, commands):
        robot.last_cmd = cmd.clamped(physics.v_max)

    n = max(1, physics.substeps)
    h = dt / n
    kicked_by: set[int] = set()
    touched_by: set[int] = set()
    for _ in range(n):
        for robot in world.robots:
            robot.pose = step_robot(robot.pose, robot.last_cmd, h, robot.wheel_base)
        for i in range(len(world.robots)):
            for j in range(i + 1, len(world.robots)):
                _separate_robots(world.robots[i], world.robots[j])
        for robot in world.robots:
            p = fld.clamp(robot.pose.position, robot.half_size)
            if p != robot.pose.position:
                robot.pose = replace(robot.pose, x=p.x, y=p.y)

        ball = step_ball(world.ball, h, fld, physics)
        for idx, robot in enumerate(world.robots):
            ball, kicked, touched = _robot_ball_contact(robot, ball, physics)
            if kicked:
                kicked_by.add(idx)
            if touched:
                touched_by.add(idx)
        if abs(ball.position[1]) >= 0.5 * fld.goal_width:
            # a robot may have shoved the ball through a wall
            p = fld.clamp(ball.position, physics.ball_radius)
            if p != ball.position:
                ball = replace(ball, position=p)
        else:
            hy = fld.half_width - physics.ball_radius
            if abs(ball.position[1]) > hy:
                ball = replace(ball, position=Point2(ball.position[0], math.copysign(hy, ball.position[1])))
        world.ball = ball
        scorer = detect_goal(world)
        if scorer is not None:
            events.append(("goal", scorer))
    world.clock += dt
    events[:0] = ([("touch", i) for i in sorted(touched_by)]
                  + [("kick", i) for i in sorted(kicked_by)])
    return events

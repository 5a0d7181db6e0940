"""Random-waypoint node kinematics and link expiration time prediction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from random import Random

from .model import Vec2


class LetMode(Enum):
    PAPER = "PAPER"
    STRICT = "STRICT"


@dataclass(frozen=True)
class Kinematics:
    """A node's position and velocity at one instant."""

    pos: Vec2
    vel: Vec2


@dataclass(frozen=True)
class WaypointState:
    """One leg of random-waypoint motion: travel current -> target, then pause.

    ``pause_until`` marks the earliest time a new leg may start (arrival time
    plus the pause); ``math.inf`` parks the node forever.  Scripted nodes are
    never re-targeted by the mobility driver.
    """

    current: Vec2
    target: Vec2
    speed: float
    pause_until: float
    leg_start_time: float
    scripted: bool = False

    def arrival_time(self) -> float:
        dist = (self.target - self.current).norm()
        if self.speed <= 0.0 or dist == 0.0:
            return self.leg_start_time
        return self.leg_start_time + dist / self.speed


def initial_waypoint(pos: Vec2, t0: float, pause: float) -> WaypointState:
    """A node resting at ``pos``; its first travel leg starts after ``pause``."""
    return WaypointState(current=pos, target=pos, speed=0.0,
                         pause_until=t0 + pause, leg_start_time=t0)


def parked_waypoint(pos: Vec2) -> WaypointState:
    """A node that stays at ``pos`` forever."""
    return WaypointState(current=pos, target=pos, speed=0.0,
                         pause_until=math.inf, leg_start_time=0.0, scripted=True)


def scripted_waypoint(pos: Vec2, target: Vec2 | None, speed: float) -> WaypointState:
    """A single scripted leg (or a parked node when no target/speed is given)."""
    if target is None or speed <= 0.0:
        return parked_waypoint(pos)
    return WaypointState(current=pos, target=target, speed=speed,
                         pause_until=math.inf, leg_start_time=0.0, scripted=True)


def kinematics_at(state: WaypointState, t: float) -> Kinematics:
    """Position and velocity at time t >= leg_start_time.

    Position interpolates linearly along the leg and clamps at the target;
    velocity is the leg's constant vector, zero once arrived or while paused.
    """
    delta = state.target - state.current
    dist = delta.norm()
    if state.speed <= 0.0 or dist == 0.0:
        return Kinematics(pos=state.current, vel=Vec2(0.0, 0.0))
    travel = dist / state.speed
    elapsed = t - state.leg_start_time
    if elapsed >= travel:
        return Kinematics(pos=state.target, vel=Vec2(0.0, 0.0))
    direction = delta.scaled(1.0 / dist)
    return Kinematics(pos=state.current + direction.scaled(state.speed * elapsed),
                      vel=direction.scaled(state.speed))


def due_for_advance(state: WaypointState, t: float) -> bool:
    return not state.scripted and t >= state.pause_until


def advance_waypoint(state: WaypointState, rng: Random, t: float,
                     area_x: float, area_y: float,
                     speed_min: float, speed_max: float, pause: float) -> WaypointState:
    """Start the next leg from the current resting point.

    Consumes exactly three draws, in order: target.x, target.y, speed.
    A zero speed parks the node for good (no further draws).
    """
    tx = rng.uniform(0.0, area_x)
    ty = rng.uniform(0.0, area_y)
    speed = rng.uniform(speed_min, speed_max)
    here = state.target  # the node rests at the end of the previous leg
    if speed <= 0.0:
        return parked_waypoint(here)
    target = Vec2(tx, ty)
    travel = (target - here).norm() / speed
    return WaypointState(current=here, target=target, speed=speed,
                         pause_until=t + travel + pause, leg_start_time=t)


def link_expiration_time(sender: Kinematics, receiver: Kinematics, r: float,
                         mode: LetMode = LetMode.STRICT) -> float:
    """Predict how long sender and receiver stay within range ``r``.

    With relative velocity (a, c) and relative displacement (b, d), the link
    expires at the larger root of |(b, d) + (a, c)*t| = r:

        LET = (-(a*b + c*d) + sqrt(P)) / (a^2 + c^2),
        P   = (a^2 + c^2) * r^2 - (a*d - b*c)^2

    Zero relative velocity yields math.inf.  The discriminant P is negative
    exactly when the relative track never intersects the range disk.  PAPER
    mode substitutes Q = sqrt(|P|) in that case and returns the raw quotient,
    negative values included.  STRICT mode returns 0.0 for P < 0, clamps
    negative roots to 0.0, and refines the zero-relative-velocity case:
    co-moving nodes already out of range get 0.0 rather than infinity.
    """
    if r <= 0.0:
        raise ValueError(f"range must be positive, got {r}")
    a = receiver.vel.x - sender.vel.x
    b = receiver.pos.x - sender.pos.x
    c = receiver.vel.y - sender.vel.y
    d = receiver.pos.y - sender.pos.y
    denom = a * a + c * c
    if denom == 0.0:
        if mode is LetMode.STRICT and b * b + d * d > r * r:
            return 0.0
        return math.inf
    p = denom * r * r - (a * d - b * c) ** 2
    if mode is LetMode.PAPER:
        q = math.sqrt(abs(p))
        return (-(a * b + c * d) + q) / denom
    if p < 0.0:
        return 0.0
    let = (-(a * b + c * d) + math.sqrt(p)) / denom
    return max(let, 0.0)

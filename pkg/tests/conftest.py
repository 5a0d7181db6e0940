import math
import random
from pathlib import Path

import numpy as np
from hypothesis import settings

from manetsim import Kinematics, Vec2, validate_config

settings.register_profile("suite", deadline=None)
settings.load_profile("suite")

DATA_DIR = Path(__file__).parent / "data"
CONFIG_DIR = Path(__file__).parents[1] / "configs"


def kin(px, py, vx=0.0, vy=0.0):
    return Kinematics(pos=Vec2(px, py), vel=Vec2(vx, vy))


def stepping_let(sender, receiver, r, dt=1e-3):
    """Brute-force link lifetime oracle, independent of the closed form.

    Advances the relative motion on a dt grid and returns the first grid
    instant at which the distance exceeds r.
    """
    bx = receiver.pos.x - sender.pos.x
    by = receiver.pos.y - sender.pos.y
    ax = receiver.vel.x - sender.vel.x
    ay = receiver.vel.y - sender.vel.y
    if bx * bx + by * by > r * r:
        return 0.0
    speed = math.hypot(ax, ay)
    if speed == 0.0:
        return math.inf
    # Past this horizon the pair is guaranteed to be separated:
    # |relative position| >= speed*t - |b| > r.
    horizon = 2.0 * (r + math.hypot(bx, by)) / speed + 1.0
    t = np.arange(int(horizon / dt) + 2) * dt
    outside = (bx + ax * t) ** 2 + (by + ay * t) ** 2 > r * r
    if not outside.any():
        return math.inf
    return float(t[int(np.argmax(outside))])


def bfs_hops(points, r, src):
    """Hop distances from src on the disk graph over (x, y) points."""
    n = len(points)

    def adjacent(i, j):
        dx = points[i][0] - points[j][0]
        dy = points[i][1] - points[j][1]
        return dx * dx + dy * dy <= r * r

    hops = {src: 0}
    frontier = [src]
    while frontier:
        nxt = []
        for u in frontier:
            for v in range(n):
                if v not in hops and v != u and adjacent(u, v):
                    hops[v] = hops[u] + 1
                    nxt.append(v)
        frontier = nxt
    return hops


def random_connected_topology(rng, max_nodes=10, area=60.0, r=25.0):
    """Random static node placement whose disk graph is connected."""
    while True:
        n = rng.randint(4, max_nodes)
        points = [(rng.uniform(0.0, area), rng.uniform(0.0, area)) for _ in range(n)]
        if len(bfs_hops(points, r, 0)) == n:
            return n, points


def static_topology_config(points, r, area, flow, stop=3.0, seed=1, **extra):
    """Scenario with every node parked at the given coordinates."""
    n = len(points)
    raw = {
        "nn": n, "x": area, "y": area, "stop": stop, "rp": "AODV",
        "seed": seed, "range_r": r,
        "nodes": "; ".join(f"{x},{y}" for x, y in points),
        "flows": flow,
    }
    raw.update(extra)
    return validate_config(raw)

"""Crowd simulator: agents with fixed random headings and speeds that
respawn on the boundary when they leave the arena."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np

from ..collision import Obstacle


@dataclass(frozen=True)
class SimAgentSpec:
    bounds: tuple[float, float, float, float] = (0.0, 0.0, 10.0, 10.0)
    n_agents: int = 40
    speed_range: tuple[float, float] = (1.2, 2.0)
    speed_noise_sigma: float = 0.1
    agent_radius: float = 0.25
    rng_seed: int = 0
    respawn: bool = True
    # (x, y, radius): no agent starts inside this disc, nor enters it before keepout_time
    keepout: tuple[float, float, float] | None = None
    keepout_time: float = 0.0

    def __post_init__(self):
        lo, hi = self.speed_range
        if not 0 < lo <= hi:
            raise ValueError(f"speed_range must satisfy 0 < min <= max, got {self.speed_range}")
        if self.n_agents < 0:
            raise ValueError("n_agents must be non-negative")
        if self.speed_noise_sigma < 0 or self.agent_radius < 0:
            raise ValueError("noise and radius must be non-negative")
        x0, y0, x1, y1 = self.bounds
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate bounds {self.bounds}")


@dataclass
class World:
    spec: SimAgentSpec
    ids: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    t: float
    next_id: int
    rng: np.random.Generator

    def __len__(self) -> int:
        return len(self.ids)

    def step(self, dt: float) -> None:
        """Advance in place by ``dt`` seconds."""
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.pos += self.vel * dt
        self.t += dt
        if self.spec.respawn:
            for i in np.flatnonzero(_leaving(self.pos, self.vel, self.spec.bounds)).tolist():
                self.pos[i], self.vel[i] = _boundary_spawn(self.rng, self.spec)
                self.ids[i] = self.next_id
                self.next_id += 1
        else:
            keep = ~_outside(self.pos, self.spec.bounds)
            self.ids, self.pos, self.vel = self.ids[keep], self.pos[keep], self.vel[keep]


def _outside(pos: np.ndarray, bounds) -> np.ndarray:
    x0, y0, x1, y1 = bounds
    return (pos[:, 0] < x0) | (pos[:, 0] > x1) | (pos[:, 1] < y0) | (pos[:, 1] > y1)


def _leaving(pos: np.ndarray, vel: np.ndarray, bounds) -> np.ndarray:
    x0, y0, x1, y1 = bounds
    x, y, vx, vy = pos[:, 0], pos[:, 1], vel[:, 0], vel[:, 1]
    on_edge_out = ((x <= x0) & (vx < 0)) | ((x >= x1) & (vx > 0)) | ((y <= y0) & (vy < 0)) | ((y >= y1) & (vy > 0))
    return _outside(pos, bounds) | on_edge_out


def _random_velocity(rng: np.random.Generator, spec: SimAgentSpec, heading: float) -> np.ndarray:
    speed = rng.uniform(*spec.speed_range)
    return np.array([speed * math.cos(heading), speed * math.sin(heading)])


def _boundary_spawn(rng: np.random.Generator, spec: SimAgentSpec) -> tuple[np.ndarray, np.ndarray]:
    x0, y0, x1, y1 = spec.bounds
    w, h = x1 - x0, y1 - y0
    u = rng.uniform(0.0, 2 * (w + h))
    # walk the perimeter: bottom, right, top, left; inward normal angle per side
    if u < w:
        pos, normal = (x0 + u, y0), math.pi / 2
    elif u < w + h:
        pos, normal = (x1, y0 + u - w), math.pi
    elif u < 2 * w + h:
        pos, normal = (x1 - (u - w - h), y1), -math.pi / 2
    else:
        pos, normal = (x0, y1 - (u - 2 * w - h)), 0.0
    heading = normal + rng.uniform(-math.pi / 2, math.pi / 2)
    return np.array(pos, dtype=float), _random_velocity(rng, spec, heading)


def _violates_keepout(spec: SimAgentSpec, p: np.ndarray, v: np.ndarray) -> bool:
    if spec.keepout is None:
        return False
    cx, cy, r = spec.keepout
    d = p - np.array([cx, cy])
    # closest approach over [0, keepout_time]
    vv = float(v @ v)
    s = 0.0 if vv == 0 else min(max(-float(d @ v) / vv, 0.0), spec.keepout_time)
    return float(np.hypot(*(d + v * s))) < r


def spawn_world(spec: SimAgentSpec) -> World:
    rng = np.random.default_rng(spec.rng_seed)
    x0, y0, x1, y1 = spec.bounds
    pos = np.zeros((spec.n_agents, 2))
    vel = np.zeros((spec.n_agents, 2))
    for i in range(spec.n_agents):
        for _ in range(10_000):
            p = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
            v = _random_velocity(rng, spec, rng.uniform(-math.pi, math.pi))
            if not _violates_keepout(spec, p, v):
                break
        else:
            raise RuntimeError("could not place agent outside the keep-out zone")
        pos[i], vel[i] = p, v
    return World(spec, np.arange(spec.n_agents), pos, vel, 0.0, spec.n_agents, rng)


def step_world(world: World, dt: float) -> World:
    """Return a copy of ``world`` advanced by ``dt``; the input is left untouched."""
    nxt = copy.deepcopy(world)
    nxt.step(dt)
    return nxt


def observe(world: World, t: float, sigma: float, rng: np.random.Generator | None = None) -> list[Obstacle]:
    """Obstacle snapshot with Gaussian noise (std ``sigma``) on each agent's speed.

    Headings are exact; perturbed speeds are clamped at zero.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    speed = np.hypot(world.vel[:, 0], world.vel[:, 1])
    if sigma > 0:
        if rng is None:
            raise ValueError("a random generator is required when sigma > 0")
        noisy = np.maximum(speed + rng.normal(0.0, sigma, size=len(speed)), 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(speed > 0, noisy / speed, 0.0)
        vel = world.vel * scale[:, None]
    else:
        vel = world.vel
    r = world.spec.agent_radius
    return [Obstacle(int(i), (float(p[0]), float(p[1])), (float(v[0]), float(v[1])), r, t)
            for i, p, v in zip(world.ids, world.pos, vel)]

"""Time-dependent collision checking against constant-velocity discs.

Each obstacle's trajectory is expressed relative to the robot's primitive
and sampled at a few waypoints.  Since obstacle motion is affine in time,
the gap between the true relative curve and the polyline through the
waypoints is exactly the robot's own deviation from its time-linear chord,
which is bounded per segment by ``deviation_bound``.  A primitive is
accepted only when the origin-to-polyline distance minus that bound exceeds
the required clearance, so the check never admits a colliding primitive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .kinematics import (
    ControlInput,
    MotionPrimitive,
    RobotState,
    VehicleParams,
    batch_arc_lengths,
    batch_poses,
    integrate_primitive,
    primitive_arc_lengths,
    primitive_positions,
)


@dataclass(frozen=True)
class Obstacle:
    id: int
    p0: tuple[float, float]
    vel: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError(f"obstacle radius must be non-negative, got {self.radius}")


@dataclass(frozen=True)
class SafetyConfig:
    margin: float = 0.3
    n_segments: int = 4
    ics_horizon: float = 2.0

    def __post_init__(self):
        if self.margin < 0:
            raise ValueError("margin must be non-negative")
        if self.n_segments < 1:
            raise ValueError("n_segments must be at least 1")
        if not self.ics_horizon > 0:
            raise ValueError("ics_horizon must be positive")


Disc = tuple[float, float, float]  # static obstacle: (x, y, radius)


def predict_obstacle(obs: Obstacle, t: float) -> tuple[float, float]:
    dt = t - obs.t0
    if dt < 0:
        raise ValueError(f"cannot predict obstacle {obs.id} at t={t} before its observation t0={obs.t0}")
    return obs.p0[0] + obs.vel[0] * dt, obs.p0[1] + obs.vel[1] * dt


class ObstacleArrays:
    """Obstacles packed into arrays for vectorized checks.

    Static discs are stored as zero-velocity obstacles.
    """

    __slots__ = ("p0", "vel", "radius", "t0")

    def __init__(self, p0: np.ndarray, vel: np.ndarray, radius: np.ndarray, t0: np.ndarray):
        self.p0, self.vel, self.radius, self.t0 = p0, vel, radius, t0

    @classmethod
    def build(cls, obstacles: Iterable[Obstacle] = (), statics: Iterable[Disc] = ()) -> "ObstacleArrays":
        rows = [(o.p0[0], o.p0[1], o.vel[0], o.vel[1], o.radius, o.t0) for o in obstacles]
        rows += [(x, y, 0.0, 0.0, r, -math.inf) for x, y, r in statics]
        if not rows:
            return cls(np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0), np.zeros(0))
        arr = np.asarray(rows, dtype=float)
        return cls(arr[:, 0:2].copy(), arr[:, 2:4].copy(), arr[:, 4].copy(), arr[:, 5].copy())

    def __len__(self) -> int:
        return len(self.radius)

    def subset(self, mask: np.ndarray) -> "ObstacleArrays":
        return ObstacleArrays(self.p0[mask], self.vel[mask], self.radius[mask], self.t0[mask])

    def positions(self, times: np.ndarray) -> np.ndarray:
        """Predicted positions, shape ``times.shape[:-1] + (M, T, 2)`` for ``times`` (..., T)."""
        dt = times[..., None, :] - np.where(np.isfinite(self.t0), self.t0, 0.0)[:, None]
        return self.p0[:, None, :] + self.vel[:, None, :] * dt[..., None]

    def near(self, center: tuple[float, float], t: float, reach: float, horizon: float) -> "ObstacleArrays":
        """Drop obstacles that cannot come within ``reach`` of ``center`` during [t, t+horizon]."""
        if len(self) == 0:
            return self
        dt = t - np.where(np.isfinite(self.t0), self.t0, t)
        pos = self.p0 + self.vel * dt[:, None]
        gap = np.hypot(pos[:, 0] - center[0], pos[:, 1] - center[1])
        speed = np.hypot(self.vel[:, 0], self.vel[:, 1])
        return self.subset(gap <= reach + self.radius + speed * horizon)


def clearance_ok(robot_pts: np.ndarray, times: np.ndarray, bounds: np.ndarray,
                 obstacles: ObstacleArrays, margin: float) -> np.ndarray:
    """Core linearized check for K polylines at once.

    robot_pts: (K, n+1, 2) robot waypoints; times: (K, n+1) or (n+1,) absolute
    times; bounds: (K, n) deviation bound per segment.  Returns a bool array
    of shape (K,), True where every obstacle keeps its clearance.
    """
    k = robot_pts.shape[0]
    if len(obstacles) == 0:
        return np.ones(k, dtype=bool)
    obs_pts = obstacles.positions(times)  # (M, n+1, 2) or (K, M, n+1, 2)
    if obs_pts.ndim == 3:
        obs_pts = obs_pts[None]
    rel = obs_pts - robot_pts[:, None, :, :]
    a = rel[:, :, :-1, :]
    ab = rel[:, :, 1:, :] - a
    denom = np.einsum("...i,...i->...", ab, ab)
    num = -np.einsum("...i,...i->...", a, ab)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(denom > 0.0, num / denom, 0.0)
    np.clip(lam, 0.0, 1.0, out=lam)
    closest = a + lam[..., None] * ab
    dist = np.sqrt(np.einsum("...i,...i->...", closest, closest))
    need = margin + obstacles.radius[None, :, None]
    return np.all(dist - bounds[:, None, :] > need, axis=(1, 2))


def _sagitta(kappa: np.ndarray, seg_len: np.ndarray) -> np.ndarray:
    # |r| (1 - cos(dtheta/2)) written as 2 sin^2(dtheta/4) / |kappa|; zero for straight motion
    kappa = np.broadcast_to(kappa, seg_len.shape)
    out = np.zeros_like(seg_len)
    curved = kappa != 0.0
    if np.any(curved):
        kc = kappa[curved]
        out[curved] = 2.0 * np.sin(0.25 * kc * seg_len[curved]) ** 2 / np.abs(kc)
    return out


def segment_bounds(kappa: np.ndarray, accel: np.ndarray, sat_time: np.ndarray,
                   dist: np.ndarray, local_times: np.ndarray) -> np.ndarray:
    """Per-segment deviation bounds for K primitives sampled at T local times.

    Two terms: the sagitta of the sub-arc (time-uniform chord vs. the
    constant-speed arc peaks at the midpoint), plus ``|a| h^2 / 8`` on segments
    that contain accelerating motion, which bounds the lag between the true
    arc length and its linear-in-time interpolation.
    """
    seg_len = np.diff(dist, axis=-1)
    bound = _sagitta(np.asarray(kappa, dtype=float)[:, None], seg_len)
    h = np.diff(local_times)
    accel = np.asarray(accel, dtype=float)
    accelerating = (local_times[:-1][None, :] < np.asarray(sat_time)[:, None]) & (accel[:, None] != 0.0)
    return bound + np.where(accelerating, np.abs(accel)[:, None] * h[None, :] ** 2 / 8.0, 0.0)


def _local_grid(tau: float, n_segments: int) -> np.ndarray:
    return np.linspace(0.0, tau, n_segments + 1)


def _primitive_bounds(prim: MotionPrimitive, local_times: np.ndarray) -> np.ndarray:
    dist = primitive_arc_lengths(prim, local_times)[None]
    return segment_bounds(np.array([prim.curvature]), np.array([prim.control.a]),
                          np.array([prim.saturation_time]), dist, local_times)[0]


def segment_deviation_bounds(prim: MotionPrimitive, n_segments: int) -> np.ndarray:
    return _primitive_bounds(prim, _local_grid(prim.tau, n_segments))


def deviation_bound(prim: MotionPrimitive, n_segments: int) -> float:
    """Largest per-segment bound on the distance between the relative trajectory
    and its waypoint polyline (0 for straight constant-speed primitives)."""
    return float(segment_deviation_bounds(prim, n_segments).max())


def sagitta_bound(prim: MotionPrimitive, n_segments: int) -> float:
    """Geometric part of the bound: largest sub-arc sagitta (0 for every straight primitive)."""
    dist = primitive_arc_lengths(prim, _local_grid(prim.tau, n_segments))
    return float(_sagitta(np.array(prim.curvature), np.diff(dist)).max())


def relative_polyline(prim: MotionPrimitive, obs: Obstacle, n_segments: int) -> np.ndarray:
    """Obstacle-minus-robot positions at ``n_segments + 1`` uniform times."""
    if obs.t0 > prim.start.t:
        raise ValueError("obstacle observed after the primitive starts")
    local = _local_grid(prim.tau, n_segments)
    robot = primitive_positions(prim, local)
    dt = (prim.start.t + local - obs.t0)[:, None]
    return np.asarray(obs.p0) + np.asarray(obs.vel) * dt - robot


def primitive_collision_free(prim: MotionPrimitive, obstacles: Sequence[Obstacle] | ObstacleArrays,
                             statics: Sequence[Disc] = (), cfg: SafetyConfig = SafetyConfig()) -> bool:
    if isinstance(obstacles, ObstacleArrays):
        arrays = obstacles
        if statics:
            raise ValueError("pass statics to ObstacleArrays.build instead")
    else:
        arrays = ObstacleArrays.build(obstacles, statics)
    if len(arrays) and np.any(arrays.t0 > prim.start.t):
        raise ValueError("obstacle observed after the primitive starts")
    local = _local_grid(prim.tau, cfg.n_segments)
    robot = primitive_positions(prim, local)[None]
    bounds = _primitive_bounds(prim, local)[None]
    return bool(clearance_ok(robot, prim.start.t + local, bounds, arrays, cfg.margin)[0])


def braking_maneuver(state: RobotState, psi: float, params: VehicleParams, tau: float,
                     horizon: float) -> list[MotionPrimitive]:
    """Full braking with fixed steering, chunked into tau-long primitives covering ``horizon``."""
    n_chunks = max(1, math.ceil(horizon / tau - 1e-9))
    u = ControlInput(psi, params.a_min)
    chunks = []
    for _ in range(n_chunks):
        prim = integrate_primitive(state, u, tau, params)
        chunks.append(prim)
        state = prim.end
    return chunks


def default_steering(params: VehicleParams, n_steer: int = 3) -> np.ndarray:
    if n_steer == 1:
        return np.zeros(1)
    steer = np.linspace(-params.psi_max, params.psi_max, n_steer)
    steer[n_steer // 2] = 0.0
    return steer


def braking_check(state: RobotState, steering: np.ndarray, params: VehicleParams,
                  cfg: SafetyConfig, tau: float, obstacles: ObstacleArrays) -> np.ndarray:
    """Which braking maneuvers (one per steering angle) stay collision-free.

    The maneuver spans ``ceil(ics_horizon / tau)`` tau-chunks, each linearized
    with ``cfg.n_segments`` segments; the chunks are evaluated as one polyline
    sharing their waypoints.
    """
    n_chunks = max(1, math.ceil(cfg.ics_horizon / tau - 1e-9))
    local = np.linspace(0.0, n_chunks * tau, n_chunks * cfg.n_segments + 1)
    kappa = np.where(np.abs(steering) <= 1e-6, 0.0, np.tan(steering) / params.wheelbase)
    accel = np.full(len(steering), params.a_min)
    dist, ts, _ = batch_arc_lengths(state.v, accel, local, params.v_max)
    xs, ys, _ = batch_poses(state.x, state.y, state.phi, kappa, dist)
    bounds = segment_bounds(kappa, accel, ts, dist, local)
    return clearance_ok(np.stack([xs, ys], axis=-1), state.t + local, bounds, obstacles, cfg.margin)


def is_ics_free(state: RobotState, obstacles: Sequence[Obstacle] | ObstacleArrays,
                params: VehicleParams, cfg: SafetyConfig = SafetyConfig(),
                steering: Sequence[float] | None = None, tau: float = 0.5,
                statics: Sequence[Disc] = ()) -> bool:
    """True if some full-braking maneuver from ``state`` is collision-free over
    the ICS horizon (brake at a_min to a stop, then hold the stopped pose)."""
    if state.v < 0:
        raise ValueError("negative speed")
    arrays = obstacles if isinstance(obstacles, ObstacleArrays) else ObstacleArrays.build(obstacles, statics)
    steer = default_steering(params) if steering is None else np.asarray(steering, dtype=float)
    return bool(np.any(braking_check(state, steer, params, cfg, tau, arrays)))

"""Car kinematics and closed-form motion primitives.

A primitive applies one constant control ``(psi, a)`` for ``tau`` seconds.
Speed follows ``v0 + a*t`` until it clamps at ``v_max`` (or at 0 when
braking); after that the car keeps rolling along the same circle at the
clamped speed.  Because the curvature ``tan(psi)/wheelbase`` is fixed over a
primitive, heading is an affine function of the travelled arc length and
the pose has an exact closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

PSI_EPS = 1e-6  # below this steering magnitude the straight-line branch is used
TWO_PI = 2.0 * math.pi


def wrap_angle(phi: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    phi = math.remainder(phi, TWO_PI)
    if phi <= -math.pi:
        phi += TWO_PI
    return phi


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 0.4
    psi_max: float = 0.6
    v_max: float = 1.8
    a_min: float = -2.0
    a_max: float = 1.0

    def __post_init__(self):
        if not self.wheelbase > 0:
            raise ValueError(f"wheelbase must be positive, got {self.wheelbase}")
        if not 0 < self.psi_max < math.pi / 2:
            raise ValueError(f"psi_max must lie in (0, pi/2), got {self.psi_max}")
        if not self.a_min < 0 < self.a_max:
            raise ValueError(f"need a_min < 0 < a_max, got {self.a_min}, {self.a_max}")
        if not self.v_max > 0:
            raise ValueError(f"v_max must be positive, got {self.v_max}")

    @property
    def min_turn_radius(self) -> float:
        return self.wheelbase / math.tan(self.psi_max)

    def curvature(self, psi: float) -> float:
        if abs(psi) <= PSI_EPS:
            return 0.0
        return math.tan(psi) / self.wheelbase


class RobotState(NamedTuple):
    x: float
    y: float
    phi: float
    v: float = 0.0
    t: float = 0.0


class ControlInput(NamedTuple):
    psi: float
    a: float


class MotionPrimitive(NamedTuple):
    start: RobotState
    control: ControlInput
    tau: float
    saturation_time: float
    end: RobotState
    turn_radius: float  # signed; math.inf for straight primitives

    @property
    def curvature(self) -> float:
        return 0.0 if math.isinf(self.turn_radius) else 1.0 / self.turn_radius

    @property
    def is_straight(self) -> bool:
        return math.isinf(self.turn_radius)


@dataclass(frozen=True)
class CostWeights:
    p1: float = 2.0
    p2: float = 2.0
    beta: float = 2.0

    def __post_init__(self):
        if min(self.p1, self.p2, self.beta) <= 0:
            raise ValueError("cost weights must be positive")


def transform_control(u: ControlInput, v0: float, params: VehicleParams,
                      t: float = 0.0) -> tuple[float, float]:
    """Map a steering/acceleration command to (forward speed, turn rate) at time ``t``."""
    v = min(max(v0 + u.a * t, 0.0), params.v_max)
    return v, math.tan(u.psi) / params.wheelbase * v


def sample_control_set(params: VehicleParams, n_steer: int = 3,
                       accel_levels: Sequence[float] | None = None,
                       v0: float = 1.0) -> list[ControlInput]:
    """Discretize the control set into ``n_steer`` steering angles times the
    acceleration levels.

    Controls that would leave a stationary car stationary for the whole
    primitive are dropped, so the result is empty when ``v0 == 0`` and no
    level is positive.
    """
    if n_steer < 1 or n_steer % 2 == 0:
        raise ValueError(f"n_steer must be a positive odd number, got {n_steer}")
    if accel_levels is None:
        accel_levels = (params.a_min, 0.0, params.a_max)
    if len(accel_levels) == 0:
        raise ValueError("accel_levels must not be empty")
    for a in accel_levels:
        if not params.a_min <= a <= params.a_max:
            raise ValueError(f"acceleration {a} outside [{params.a_min}, {params.a_max}]")
    if n_steer == 1:
        steers = [0.0]
    else:
        steers = [float(s) for s in np.linspace(-params.psi_max, params.psi_max, n_steer)]
        steers[n_steer // 2] = 0.0
    stalled = v0 <= 0.0
    return [ControlInput(psi, float(a)) for psi in steers for a in accel_levels
            if not (stalled and a <= 0.0)]


def primitive_cost(u: ControlInput, tau: float, weights: CostWeights) -> float:
    """Control effort plus time cost of one primitive: (p1 a^2 + p2 psi^2 + beta) tau."""
    return (weights.p1 * u.a * u.a + weights.p2 * u.psi * u.psi + weights.beta) * tau


def speed_profile(v0: float, a: float, tau: float, v_max: float) -> tuple[float, float]:
    """Return ``(saturation_time, clamped_speed)`` for a constant-acceleration command.

    ``saturation_time == tau`` means the speed never clamps inside the primitive.
    """
    if a > 0.0:
        ts, v_sat = (v_max - v0) / a, v_max
    elif a < 0.0:
        ts, v_sat = v0 / -a, 0.0
    else:
        return tau, v0
    if ts >= tau:
        return tau, v0 + a * tau
    return max(ts, 0.0), v_sat


def _arc_length(v0: float, a: float, ts: float, v_sat: float, s: float) -> float:
    if s <= ts:
        return v0 * s + 0.5 * a * s * s
    return v0 * ts + 0.5 * a * ts * ts + v_sat * (s - ts)


def _pose_along(x0: float, y0: float, phi0: float, kappa: float, dist: float):
    if kappa == 0.0:
        return x0 + dist * math.cos(phi0), y0 + dist * math.sin(phi0), phi0
    half = 0.5 * kappa * dist
    chord = 2.0 * math.sin(half) / kappa
    mid = phi0 + half
    return x0 + chord * math.cos(mid), y0 + chord * math.sin(mid), phi0 + 2.0 * half


def integrate_primitive(start: RobotState, u: ControlInput, tau: float,
                        params: VehicleParams) -> MotionPrimitive:
    """Closed-form endpoint of applying ``u`` from ``start`` for ``tau`` seconds."""
    kappa = params.curvature(u.psi)
    ts, v_sat = speed_profile(start.v, u.a, tau, params.v_max)
    dist = _arc_length(start.v, u.a, ts, v_sat, tau)
    x, y, phi = _pose_along(start.x, start.y, start.phi, kappa, dist)
    end = RobotState(x, y, wrap_angle(phi), v_sat, start.t + tau)
    radius = math.inf if kappa == 0.0 else 1.0 / kappa
    return MotionPrimitive(start, u, tau, ts, end, radius)


def _speed_at(prim: MotionPrimitive, s: float) -> float:
    if s <= prim.saturation_time:
        return prim.start.v + prim.control.a * s
    return prim.end.v


def eval_primitive(prim: MotionPrimitive, s: float) -> RobotState:
    """State at local time ``s`` in [0, tau]."""
    if not 0.0 <= s <= prim.tau:
        raise ValueError(f"local time {s} outside [0, {prim.tau}]")
    if s == 0.0:
        return prim.start
    if s == prim.tau:
        return prim.end
    st = prim.start
    v_sat = prim.end.v
    dist = _arc_length(st.v, prim.control.a, prim.saturation_time, v_sat, s)
    x, y, phi = _pose_along(st.x, st.y, st.phi, prim.curvature, dist)
    return RobotState(x, y, wrap_angle(phi), _speed_at(prim, s), st.t + s)


def primitive_arc_lengths(prim: MotionPrimitive, local_times: np.ndarray) -> np.ndarray:
    st = prim.start
    a, ts, v_sat = prim.control.a, prim.saturation_time, prim.end.v
    t = np.asarray(local_times, dtype=float)
    t_acc = np.minimum(t, ts)
    return st.v * t_acc + 0.5 * a * t_acc * t_acc + v_sat * np.maximum(t - ts, 0.0)


def primitive_positions(prim: MotionPrimitive, local_times: np.ndarray) -> np.ndarray:
    """Vectorized (x, y) positions at the given local times; shape ``(len(t), 2)``."""
    dist = primitive_arc_lengths(prim, local_times)
    st = prim.start
    kappa = prim.curvature
    if kappa == 0.0:
        return np.stack([st.x + dist * math.cos(st.phi), st.y + dist * math.sin(st.phi)], axis=-1)
    half = 0.5 * kappa * dist
    chord = 2.0 * np.sin(half) / kappa
    mid = st.phi + half
    return np.stack([st.x + chord * np.cos(mid), st.y + chord * np.sin(mid)], axis=-1)


def batch_arc_lengths(v0: float, accel: np.ndarray, local_times: np.ndarray,
                      v_max: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Arc lengths for K accelerations at T local times, shape (K, T).

    Also returns per-control saturation times and clamped speeds.
    """
    accel = np.asarray(accel, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ts = np.where(accel > 0, (v_max - v0) / accel,
                      np.where(accel < 0, v0 / -accel, np.inf))
    ts = np.maximum(ts, 0.0)
    v_sat = np.where(accel > 0, v_max, np.where(accel < 0, 0.0, v0))
    t = np.asarray(local_times, dtype=float)[None, :]
    t_acc = np.minimum(t, ts[:, None])
    dist = v0 * t_acc + 0.5 * accel[:, None] * t_acc * t_acc \
        + v_sat[:, None] * np.maximum(t - ts[:, None], 0.0)
    return dist, ts, v_sat


def batch_poses(x0: float, y0: float, phi0: float, kappa: np.ndarray,
                dist: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Poses along K primitives of curvature ``kappa`` at arc lengths ``dist`` (K, T)."""
    kappa = np.asarray(kappa, dtype=float)[:, None]
    half = 0.5 * kappa * dist
    straight = kappa == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        chord = np.where(straight, dist, 2.0 * np.sin(half) / np.where(straight, 1.0, kappa))
    mid = phi0 + half
    return x0 + chord * np.cos(mid), y0 + chord * np.sin(mid), phi0 + 2.0 * half

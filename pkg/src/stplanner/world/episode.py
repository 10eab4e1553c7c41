"""Plan-execute-replan loop against a simulated or replayed crowd."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from ..collision import Disc, Obstacle
from ..kinematics import ControlInput, MotionPrimitive, RobotState, eval_primitive, integrate_primitive, \
    primitive_arc_lengths
from ..search import GoalRegion, PlanningFailure, Trajectory
from .sim import SimAgentSpec, World, observe, spawn_world
from .tracks import TICK, GridTrack, positions_at, replay_observe, tick_of

WORLD_DT = TICK


class Environment(Protocol):
    agent_radius: float

    @property
    def time(self) -> float: ...

    def observe(self) -> list[Obstacle]: ...

    def snapshot(self) -> tuple[np.ndarray, np.ndarray]: ...

    def advance(self) -> None: ...


class SimEnvironment:
    """Simulated crowd stepped at ``WORLD_DT``; observations carry speed noise."""

    def __init__(self, spec: SimAgentSpec, sigma: float | None = None):
        self.world: World = spawn_world(spec)
        self.sigma = spec.speed_noise_sigma if sigma is None else sigma
        self.agent_radius = spec.agent_radius
        self._obs_rng = np.random.default_rng([spec.rng_seed, 1])
        self._steps = 0

    @property
    def time(self) -> float:
        return self._steps * WORLD_DT

    def observe(self) -> list[Obstacle]:
        return observe(self.world, self.time, self.sigma, self._obs_rng)

    def snapshot(self) -> tuple[np.ndarray, np.ndarray]:
        return self.world.ids.copy(), self.world.pos.copy()

    def advance(self) -> None:
        self.world.step(WORLD_DT)
        self._steps += 1


class ReplayEnvironment:
    """Recorded tracks played back on the 10 Hz grid, starting at ``start_tick``."""

    def __init__(self, tracks: Sequence[GridTrack], start_tick: int = 0, agent_radius: float = 0.25):
        self.tracks = list(tracks)
        self.agent_radius = agent_radius
        self._tick = start_tick

    @property
    def time(self) -> float:
        return self._tick * WORLD_DT

    def observe(self) -> list[Obstacle]:
        return replay_observe(self.tracks, self.time, self.agent_radius)

    def snapshot(self) -> tuple[np.ndarray, np.ndarray]:
        return positions_at(self.tracks, tick_of(self.time))

    def advance(self) -> None:
        self._tick += 1


@dataclass(frozen=True)
class EpisodeConfig:
    start: RobotState = RobotState(0.0, 5.0, 0.0)
    goal: GoalRegion = GoalRegion((10.0, 5.0))
    replan_period: float = 0.1
    timeout: float = 30.0
    collision_distance: float | None = None  # None -> the environment's agent radius
    check_substeps: int = 5  # collision samples per world step
    statics: tuple[Disc, ...] = ()

    def __post_init__(self):
        k = self.replan_period / WORLD_DT
        if self.replan_period <= 0 or abs(k - round(k)) > 1e-9:
            raise ValueError(f"replan_period must be a positive multiple of {WORLD_DT} s")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.check_substeps < 1:
            raise ValueError("check_substeps must be >= 1")


@dataclass
class RunMetrics:
    success: bool
    failure_kind: str | None  # None, "collision", "timeout" or "plan_failure"
    time_to_goal: float | None
    plan_latencies: list[float] = field(default_factory=list)
    path_length: float = 0.0
    n_plan_failures: int = 0
    min_distance: float = math.inf
    elapsed: float = 0.0
    plans: list[dict] | None = None  # per-cycle trace, only when requested


class _Committed:
    """The primitives the robot is currently executing, indexed by absolute time."""

    def __init__(self, prims: Sequence[MotionPrimitive], params):
        self.prims = list(prims)
        self.params = params

    def _extend(self, t: float) -> None:
        # past the end: brake straight from the last state (a held stop once v == 0)
        while self.prims[-1].end.t < t - 1e-12:
            last = self.prims[-1]
            self.prims.append(integrate_primitive(last.end, ControlInput(0.0, self.params.a_min),
                                                  last.tau, self.params))

    def locate(self, t: float) -> tuple[MotionPrimitive, float]:
        self._extend(t)
        for p in self.prims:
            if t <= p.end.t + 1e-12:
                return p, min(max(t - p.start.t, 0.0), p.tau)
        raise AssertionError("unreachable")

    def state_at(self, t: float) -> RobotState:
        p, s = self.locate(t)
        return eval_primitive(p, s)

    def distance_between(self, ta: float, tb: float) -> float:
        """Exact arc length driven over [ta, tb]."""
        self._extend(tb)
        total = 0.0
        for p in self.prims:
            lo, hi = max(ta, p.start.t), min(tb, p.end.t)
            if hi > lo:
                s = primitive_arc_lengths(p, np.array([lo - p.start.t, hi - p.start.t]))
                total += float(s[1] - s[0])
        return total


def _hold(state: RobotState, params, tau: float) -> list[MotionPrimitive]:
    return [integrate_primitive(state, ControlInput(0.0, params.a_min), tau, params)]


def _trace(traj: Trajectory | None, state: RobotState, latency: float, error: str | None) -> dict:
    rec = {"t": state.t, "state": list(state), "latency": latency, "error": error}
    if traj is not None:
        rec["reached_goal"] = traj.reached_goal
        rec["cost"] = traj.total_cost
        rec["primitives"] = [{"start": list(p.start), "control": list(p.control), "tau": p.tau,
                              "end": list(p.end)} for p in traj.primitives]
        rec["fallback"] = [{"start": list(p.start), "control": list(p.control), "tau": p.tau,
                            "end": list(p.end)} for p in traj.fallback]
        rec["expansions"] = traj.stats.expansions
    return rec


def _min_distance(pt: tuple[float, float], pos: np.ndarray) -> float:
    if len(pos) == 0:
        return math.inf
    return float(np.min(np.hypot(pos[:, 0] - pt[0], pos[:, 1] - pt[1])))


def _interpolate(before: tuple[np.ndarray, np.ndarray], after: tuple[np.ndarray, np.ndarray],
                 frac: float) -> np.ndarray:
    """Agent positions a fraction of the way through a world step (agents present at both ends)."""
    ids_a, pos_a = before
    ids_b, pos_b = after
    if len(ids_a) == 0 or len(ids_b) == 0:
        return np.zeros((0, 2))
    common, ia, ib = np.intersect1d(ids_a, ids_b, assume_unique=True, return_indices=True)
    return pos_a[ia] + frac * (pos_b[ib] - pos_a[ia])


def run_episode(planner, env: Environment, cfg: EpisodeConfig, record_plans: bool = False) -> RunMetrics:
    """Replan every ``replan_period`` seconds and execute the plan open-loop in between.

    When planning fails the robot keeps executing the last plan and then
    its certified braking maneuver.
    """
    params = planner.params
    tau = planner.cfg.tau if hasattr(planner, "cfg") else planner.tau
    if cfg.replan_period > tau + 1e-12:
        raise ValueError("replan_period must not exceed the primitive duration")
    coll_dist = env.agent_radius if cfg.collision_distance is None else cfg.collision_distance
    statics = np.array([[d[0], d[1]] for d in cfg.statics]).reshape(-1, 2)
    static_r = np.array([d[2] for d in cfg.statics])

    t_begin = env.time
    state = cfg.start._replace(t=t_begin)
    m = RunMetrics(False, None, None, plans=[] if record_plans else None)

    def collides(pt, agents: np.ndarray) -> bool:
        d = _min_distance(pt, agents)
        m.min_distance = min(m.min_distance, d)
        if d < coll_dist:
            return True
        if len(statics):
            gaps = np.hypot(statics[:, 0] - pt[0], statics[:, 1] - pt[1]) - static_r
            return bool(np.any(gaps < coll_dist))
        return False

    snap = env.snapshot()
    if collides((state.x, state.y), snap[1]):
        m.failure_kind = "collision"
        return m
    committed = _Committed(_hold(state, params, tau), params)
    steps_per_cycle = int(round(cfg.replan_period / WORLD_DT))
    n_cycles = int(math.ceil(cfg.timeout / cfg.replan_period - 1e-9))

    for _ in range(n_cycles):
        if cfg.goal.contains(state):
            m.success, m.time_to_goal = True, state.t - t_begin
            break
        obstacles = env.observe()
        traj, err = None, None
        t0 = time.perf_counter()
        try:
            traj = planner.plan(state, cfg.goal, obstacles, cfg.statics)
        except PlanningFailure as exc:
            err = exc.kind
        latency = time.perf_counter() - t0
        m.plan_latencies.append(latency)
        if traj is not None and traj.primitives:
            committed = _Committed(list(traj.primitives) + list(traj.fallback), params)
        elif traj is None:
            m.n_plan_failures += 1
        if m.plans is not None:
            m.plans.append(_trace(traj, state, latency, err))

        done = False
        for _ in range(steps_per_cycle):
            t_a = env.time
            before = env.snapshot()
            env.advance()
            after = env.snapshot()
            prev_t = t_a
            for j in range(1, cfg.check_substeps + 1):
                frac = j / cfg.check_substeps
                t_j = t_a + frac * WORLD_DT if j < cfg.check_substeps else env.time
                s = committed.state_at(t_j)
                m.path_length += committed.distance_between(prev_t, t_j)
                prev_t = t_j
                agents = after[1] if j == cfg.check_substeps else _interpolate(before, after, frac)
                if collides((s.x, s.y), agents):
                    m.failure_kind = "collision"
                    m.elapsed = t_j - t_begin
                    return m
                if cfg.goal.contains(s):
                    m.success, m.time_to_goal = True, t_j - t_begin
                    done = True
                    break
            state = s._replace(t=prev_t)
            if done:
                break
        if done:
            break
    m.elapsed = state.t - t_begin
    if not m.success and m.failure_kind is None:
        m.failure_kind = "timeout"
    if m.success:
        m.elapsed = m.time_to_goal
    return m

"""Primitive-aggregating state-time A* search.

Nodes live in a hash map keyed by (x cell, y cell, heading cell, depth).
A cell may hold several representatives; when a new successor lands in
an occupied cell it is compared against the most recently admitted one:

* same spatial cell as its parent, or same parent as the representative:
  admitted as an extra representative if it is closer to the goal;
* otherwise it replaces the representative if that one is still open and
  the newcomer is cheaper to reach.

The search stops at the first popped node that is inside the goal region
or, at the horizon depth, whose state passes the ICS test.
"""
from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .collision import (
    Disc,
    Obstacle,
    ObstacleArrays,
    SafetyConfig,
    braking_check,
    braking_maneuver,
    clearance_ok,
    default_steering,
    segment_bounds,
)
from .kinematics import (
    TWO_PI,
    ControlInput,
    CostWeights,
    MotionPrimitive,
    RobotState,
    VehicleParams,
    batch_arc_lengths,
    batch_poses,
    primitive_cost,
    sample_control_set,
    wrap_angle,
)
from .reeds_shepp import reeds_shepp_length


@dataclass(frozen=True)
class PlannerConfig:
    res_xy: float = 0.2
    res_phi: float = math.pi / 18
    tau: float = 0.5
    horizon_T: float = 2.0
    alpha: float = 1.3
    weights: CostWeights = field(default_factory=CostWeights)
    n_steer: int = 3
    accel_levels: tuple[float, ...] | None = None  # None -> (a_min, 0, a_max)
    max_expansions: int = 50_000
    aggregate: bool = True
    bounds: tuple[float, float, float, float] | None = None  # xmin, ymin, xmax, ymax

    def __post_init__(self):
        if self.res_xy <= 0 or self.res_phi <= 0:
            raise ValueError("grid resolution must be positive")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        k = self.horizon_T / self.tau
        if self.horizon_T <= 0 or abs(k - round(k)) > 1e-9:
            raise ValueError("horizon_T must be a positive multiple of tau")
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if self.max_expansions <= 0:
            raise ValueError("max_expansions must be positive")

    @property
    def horizon_depth(self) -> int:
        return int(round(self.horizon_T / self.tau))


@dataclass(frozen=True)
class GoalRegion:
    center: tuple[float, float]
    radius: float = 0.5
    # heading of the Reeds-Shepp target pose; None means "facing away from the
    # planning start", i.e. the straight-line approach direction
    heading: float | None = None
    heading_tol: float | None = None

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("goal radius must be non-negative")
        if self.heading_tol is not None and self.heading is None:
            raise ValueError("heading_tol needs an explicit heading")

    def anchored(self, state: RobotState) -> "GoalRegion":
        """Copy with the target heading fixed, taken from ``state`` when unset."""
        if self.heading is not None:
            return self
        bearing = math.atan2(self.center[1] - state.y, self.center[0] - state.x)
        return GoalRegion(self.center, self.radius, bearing, self.heading_tol)

    def contains(self, state: RobotState) -> bool:
        dx, dy = state.x - self.center[0], state.y - self.center[1]
        if dx * dx + dy * dy > self.radius * self.radius:
            return False
        return self.heading_tol is None or abs(wrap_angle(state.phi - self.heading)) <= self.heading_tol

    def pose(self, state: RobotState) -> tuple[float, float, float]:
        return self.center[0], self.center[1], self.anchored(state).heading


class GridKey(NamedTuple):
    ix: int
    iy: int
    iphi: int
    depth: int


def gen_key(state: RobotState, depth: int, res_xy: float, res_phi: float) -> GridKey:
    n_phi = math.ceil(TWO_PI / res_phi)
    iphi = int(math.floor((state.phi % TWO_PI) / res_phi)) % n_phi
    return GridKey(int(math.floor(state.x / res_xy)), int(math.floor(state.y / res_xy)), iphi, depth)


class SearchNode:
    __slots__ = ("key", "idx", "state", "g", "h", "f", "parent", "incoming", "closed", "alive")

    def __init__(self, key: GridKey, state: RobotState, g: float, h: float,
                 parent: "SearchNode | None" = None, incoming: MotionPrimitive | None = None):
        self.key = key
        self.idx = 0
        self.state = state
        self.g = g
        self.h = h
        self.f = g + h
        self.parent = parent
        self.incoming = incoming
        self.closed = False
        self.alive = True

    @property
    def depth(self) -> int:
        return self.key.depth

    def __repr__(self):
        return f"SearchNode(key={tuple(self.key)}, idx={self.idx}, g={self.g:.3f}, h={self.h:.3f})"


@dataclass
class PlanStats:
    expansions: int = 0
    generated: int = 0
    open_peak: int = 0
    max_cell_size: int = 0
    wall_time: float = 0.0
    pop_f: list[float] | None = None  # filled only when recording is requested


@dataclass
class Trajectory:
    primitives: tuple[MotionPrimitive, ...]
    total_cost: float
    reached_goal: bool
    fallback: tuple[MotionPrimitive, ...] = ()  # braking maneuver certifying the terminal state
    stats: PlanStats = field(default_factory=PlanStats)

    @property
    def duration(self) -> float:
        return sum(p.tau for p in self.primitives)

    @property
    def final_state(self) -> RobotState | None:
        return self.primitives[-1].end if self.primitives else None


class PlanningFailure(Exception):
    """No plan: ``kind`` is ``"open_exhausted"`` or ``"budget_exceeded"``."""

    def __init__(self, kind: str, stats: PlanStats):
        super().__init__(kind)
        self.kind = kind
        self.stats = stats


def heuristic(state: RobotState, goal: GoalRegion, cfg: PlannerConfig, params: VehicleParams) -> float:
    """Scaled time-to-go estimate: alpha * beta * (RS length - goal radius) / v_max."""
    if goal.contains(state):
        return 0.0
    dist = reeds_shepp_length((state.x, state.y, state.phi), goal.pose(state), params.min_turn_radius)
    return cfg.alpha * cfg.weights.beta * max(0.0, dist - goal.radius) / params.v_max


def backtrack(node: SearchNode, reached_goal: bool = False) -> Trajectory:
    prims = []
    cur = node
    while cur.parent is not None:
        prims.append(cur.incoming)
        cur = cur.parent
    prims.reverse()
    return Trajectory(tuple(prims), node.g, reached_goal)


class _ControlTable:
    """Precomputed per-control arrays for one speed regime (moving or stopped)."""

    def __init__(self, controls: list[ControlInput], params: VehicleParams, cfg: PlannerConfig):
        self.controls = controls
        self.psi = np.array([u.psi for u in controls])
        self.accel = np.array([u.a for u in controls])
        self.kappa = np.array([params.curvature(u.psi) for u in controls])
        self.radius = [math.inf if k == 0.0 else 1.0 / k for k in self.kappa]
        self.cost = [primitive_cost(u, cfg.tau, cfg.weights) for u in controls]


class Planner:
    """Online partial motion planner over motion primitives."""

    def __init__(self, params: VehicleParams = VehicleParams(), cfg: PlannerConfig = PlannerConfig(),
                 safety: SafetyConfig = SafetyConfig()):
        self.params = params
        self.cfg = cfg
        self.safety = safety
        self._moving = _ControlTable(sample_control_set(params, cfg.n_steer, cfg.accel_levels, 1.0), params, cfg)
        self._stopped = _ControlTable(sample_control_set(params, cfg.n_steer, cfg.accel_levels, 0.0), params, cfg)
        self._local = np.linspace(0.0, cfg.tau, safety.n_segments + 1)
        self._steering = default_steering(params, cfg.n_steer)
        self._r_min = params.min_turn_radius

    # -- pieces of the search, public so they can be tested on their own ----

    def heuristic(self, state: RobotState, goal: GoalRegion) -> float:
        return heuristic(state, goal, self.cfg, self.params)

    def is_valid(self, state: RobotState) -> bool:
        if not 0.0 <= state.v <= self.params.v_max:
            return False
        b = self.cfg.bounds
        return b is None or (b[0] <= state.x <= b[2] and b[1] <= state.y <= b[3])

    def generate_primitives(self, node: SearchNode, goal: GoalRegion,
                            obstacles: ObstacleArrays) -> list[SearchNode]:
        """Successors of ``node`` whose primitives are valid and collision-free."""
        st = node.state
        table = self._stopped if st.v <= 0.0 else self._moving
        if not table.controls:
            return []
        local = self._local
        dist, ts, v_sat = batch_arc_lengths(st.v, table.accel, local, self.params.v_max)
        tau = self.cfg.tau
        # same end-speed rule as speed_profile: the clamp only applies if reached within tau
        v_end = np.where(ts >= tau, st.v + table.accel * tau, v_sat)
        xs, ys, phis = batch_poses(st.x, st.y, st.phi, table.kappa, dist)
        ok = np.ones(len(table.controls), dtype=bool)
        if len(obstacles):
            bounds = segment_bounds(table.kappa, table.accel, ts, dist, local)
            ok = clearance_ok(np.stack([xs, ys], axis=-1), st.t + local, bounds, obstacles, self.safety.margin)
        t_end = st.t + tau
        depth = node.key.depth + 1
        res_xy, res_phi = self.cfg.res_xy, self.cfg.res_phi
        succ = []
        for i in np.flatnonzero(ok).tolist():
            end = RobotState(float(xs[i, -1]), float(ys[i, -1]), wrap_angle(float(phis[i, -1])),
                             float(v_end[i]), t_end)
            if not self.is_valid(end):
                continue
            prim = MotionPrimitive(st, table.controls[i], tau, min(float(ts[i]), tau), end, table.radius[i])
            h = self.heuristic(end, goal)
            succ.append(SearchNode(gen_key(end, depth, res_xy, res_phi), end, node.g + table.cost[i], h,
                                   node, prim))
        return succ

    def terminal_fallback(self, state: RobotState, obstacles: ObstacleArrays) -> tuple[MotionPrimitive, ...] | None:
        """First collision-free braking maneuver from ``state``, or None if it is an ICS."""
        free = braking_check(state, self._steering, self.params, self.safety, self.cfg.tau, obstacles)
        hits = np.flatnonzero(free)
        if len(hits) == 0:
            return None
        # prefer straight braking when it is free
        order = sorted(hits.tolist(), key=lambda i: abs(self._steering[i]))
        psi = float(self._steering[order[0]])
        return tuple(braking_maneuver(state, psi, self.params, self.cfg.tau, self.safety.ics_horizon))

    # -- the search ----------------------------------------------------------

    def plan(self, start: RobotState, goal: GoalRegion, obstacles: Sequence[Obstacle] = (),
             statics: Sequence[Disc] = (), record_pops: bool = False) -> Trajectory:
        t_wall = time.perf_counter()
        cfg = self.cfg
        goal = goal.anchored(start)  # one target pose for the whole search keeps h consistent
        stats = PlanStats(pop_f=[] if record_pops else None)
        arrays = ObstacleArrays.build(obstacles, statics)
        if len(arrays):
            lookahead = cfg.horizon_T + self.safety.ics_horizon + cfg.tau
            arrays = arrays.near((start.x, start.y), start.t, self.safety.margin + self.params.v_max * lookahead,
                                 lookahead)
        horizon = cfg.horizon_depth
        counter = itertools.count()
        root = SearchNode(gen_key(start, 0, cfg.res_xy, cfg.res_phi), start, 0.0, self.heuristic(start, goal))
        hmap: dict[GridKey, list[SearchNode]] = {root.key: [root]}
        open_heap = [(root.f, -root.g, next(counter), root)]
        stats.open_peak = 1
        stats.max_cell_size = 1

        def finish(traj: Trajectory) -> Trajectory:
            stats.wall_time = time.perf_counter() - t_wall
            traj.stats = stats
            return traj

        while open_heap:
            _, _, _, node = heapq.heappop(open_heap)
            if not node.alive:
                continue
            node.closed = True
            if stats.pop_f is not None:
                stats.pop_f.append(node.f)
            if goal.contains(node.state):
                return finish(backtrack(node, reached_goal=True))
            if node.key.depth >= horizon:
                fallback = self.terminal_fallback(node.state, arrays)
                if fallback is not None:
                    traj = backtrack(node)
                    traj.fallback = fallback
                    return finish(traj)
                continue
            if stats.expansions >= cfg.max_expansions:
                stats.wall_time = time.perf_counter() - t_wall
                raise PlanningFailure("budget_exceeded", stats)
            stats.expansions += 1
            for child in self.generate_primitives(node, goal, arrays):
                stats.generated += 1
                if self._admit(child, node, hmap, stats):
                    heapq.heappush(open_heap, (child.f, -child.g, next(counter), child))
            if len(open_heap) > stats.open_peak:
                stats.open_peak = len(open_heap)

        stats.wall_time = time.perf_counter() - t_wall
        raise PlanningFailure("open_exhausted", stats)

    def _admit(self, child: SearchNode, parent: SearchNode, hmap: dict, stats: PlanStats) -> bool:
        """Apply the cell-aggregation rule; True when ``child`` enters OPEN."""
        if not self.cfg.aggregate:
            return True
        elements = hmap.get(child.key)
        if not elements:
            hmap[child.key] = [child]
            return True
        n = len(elements)
        best = elements[n - 1]
        same_cell = parent.key[:3] == child.key[:3]
        siblings = best.parent is child.parent
        if same_cell or siblings:
            if child.h < best.h:
                child.idx = n
                elements.append(child)
                stats.max_cell_size = max(stats.max_cell_size, n + 1)
                return True
            return False
        if not best.closed and child.g < best.g:
            child.idx = best.idx
            elements[best.idx] = child
            best.alive = False
            return True
        return False


def plan(start: RobotState, goal: GoalRegion, obstacles: Sequence[Obstacle] = (),
         cfg: PlannerConfig = PlannerConfig(), params: VehicleParams = VehicleParams(),
         safety: SafetyConfig = SafetyConfig(), statics: Sequence[Disc] = ()) -> Trajectory:
    """One-shot convenience wrapper around :class:`Planner`."""
    return Planner(params, cfg, safety).plan(start, goal, obstacles, statics)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stplanner.collision import Obstacle, ObstacleArrays, is_ics_free, primitive_collision_free
from stplanner.kinematics import ControlInput, CostWeights, RobotState, VehicleParams, integrate_primitive, primitive_cost
from stplanner.search import (
    GoalRegion,
    GridKey,
    Planner,
    PlannerConfig,
    PlanningFailure,
    SearchNode,
    backtrack,
    gen_key,
    heuristic,
    plan,
)

from oracles import enumerate_best

P = VehicleParams()


def chained(traj):
    return all(a.end == b.start for a, b in zip(traj.primitives, traj.primitives[1:]))


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(res_xy=0), dict(tau=0), dict(horizon_T=1.2), dict(alpha=0.9),
                                    dict(max_expansions=0)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            PlannerConfig(**kw)

    def test_horizon_depth(self):
        assert PlannerConfig().horizon_depth == 4
        assert PlannerConfig(horizon_T=1.5).horizon_depth == 3


class TestGenKey:
    @pytest.mark.parametrize("x,y,phi,key", [
        (0.25, -0.05, 0.1, (1, -1, 0, 2)),
        (0.0, 0.0, -0.01, (0, 0, 35, 2)),
        (-0.2, 0.39, math.pi, (-1, 1, 18, 2)),
        (1.0, 1.0, math.pi / 18 * 3 + 1e-9, (5, 5, 3, 2)),
    ])
    def test_examples(self, x, y, phi, key):
        assert gen_key(RobotState(x, y, phi, 1.0, 0.0), 2, 0.2, math.pi / 18) == GridKey(*key)

    def test_speed_and_time_not_in_key(self):
        a = gen_key(RobotState(1.0, 1.0, 0.2, 0.3, 1.0), 1, 0.2, 0.1)
        b = gen_key(RobotState(1.0, 1.0, 0.2, 1.7, 5.0), 1, 0.2, 0.1)
        assert a == b

    @given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-10, 10), st.integers(0, 10))
    def test_heading_cell_in_range(self, x, y, phi, d):
        k = gen_key(RobotState(x, y, phi, 0.0, 0.0), d, 0.2, math.pi / 18)
        assert 0 <= k.iphi < 36 and k.depth == d


class TestHeuristic:
    def test_inside_goal(self):
        assert heuristic(RobotState(5.2, 5, 2.0, 0, 0), GoalRegion((5, 5)), PlannerConfig(), P) == 0.0

    def test_aligned(self):
        cfg = PlannerConfig(alpha=1.0)
        h = heuristic(RobotState(0, 0, 0, 1, 0), GoalRegion((10, 0)), cfg, P)
        assert h == pytest.approx(2.0 * (10 - 0.5) / 1.8)
        assert heuristic(RobotState(0, 0, 0, 1, 0), GoalRegion((10, 0)), PlannerConfig(alpha=1.3), P) == \
            pytest.approx(1.3 * h)

    def test_unset_heading_faces_away_from_state(self):
        goal = GoalRegion((3.0, 4.0))
        s = RobotState(0, 0, 1.0, 1, 0)
        assert goal.anchored(s).heading == pytest.approx(math.atan2(4, 3))
        assert goal.anchored(s).anchored(RobotState(9, 9, 0, 0, 0)).heading == goal.anchored(s).heading
        cfg = PlannerConfig(alpha=1.0)
        explicit = GoalRegion((3.0, 4.0), heading=math.atan2(4, 3))
        assert heuristic(s, goal, cfg, P) == heuristic(s, explicit, cfg, P)

    def test_goal_validation(self):
        with pytest.raises(ValueError):
            GoalRegion((0, 0), heading_tol=0.1)
        with pytest.raises(ValueError):
            GoalRegion((0, 0), radius=-1)
        assert not GoalRegion((0, 0), heading=0.0, heading_tol=0.1).contains(RobotState(0, 0, 0.5, 0, 0))

    @given(st.floats(-8, 8), st.floats(-8, 8), st.floats(-math.pi, math.pi))
    def test_non_negative(self, x, y, phi):
        assert heuristic(RobotState(x, y, phi, 1, 0), GoalRegion((1, 2), heading=0.5), PlannerConfig(), P) >= 0


class TestGeneratePrimitives:
    planner = Planner(P, PlannerConfig())
    goal = GoalRegion((10, 0))

    def node(self, v):
        s = RobotState(0, 0, 0, v, 0)
        return SearchNode(gen_key(s, 0, 0.2, math.pi / 18), s, 0.0, 0.0)

    def test_nine_successors(self):
        succ = self.planner.generate_primitives(self.node(1.0), self.goal, ObstacleArrays.build())
        assert len(succ) == 9
        assert all(c.depth == 1 and c.parent is not None for c in succ)

    def test_matches_integrate(self):
        n = self.node(1.0)
        for c in self.planner.generate_primitives(n, self.goal, ObstacleArrays.build()):
            ref = integrate_primitive(n.state, c.incoming.control, 0.5, P)
            assert tuple(c.state) == pytest.approx(tuple(ref.end), abs=1e-12)
            assert c.g == primitive_cost(c.incoming.control, 0.5, CostWeights())

    def test_at_rest_drops_braking_and_holding(self):
        succ = self.planner.generate_primitives(self.node(0.0), self.goal, ObstacleArrays.build())
        assert len(succ) == 3 and all(c.incoming.control.a > 0 for c in succ)

    def test_ring_blocks_everything(self):
        ring = [Obstacle(i, (0.6 * math.cos(a), 0.6 * math.sin(a)), radius=0.2)
                for i, a in enumerate(np.linspace(0, 2 * math.pi, 24, endpoint=False))]
        assert self.planner.generate_primitives(self.node(1.0), self.goal, ObstacleArrays.build(ring)) == []

    def test_bounds_filter(self):
        planner = Planner(P, PlannerConfig(bounds=(-1, -0.05, 5, 0.05)))
        succ = planner.generate_primitives(self.node(1.0), self.goal, ObstacleArrays.build())
        assert {c.incoming.control.psi for c in succ} == {0.0}


class TestBacktrack:
    def test_root(self):
        s = RobotState(0, 0, 0, 1, 0)
        traj = backtrack(SearchNode(gen_key(s, 0, 0.2, 0.1), s, 0.0, 1.0))
        assert traj.primitives == () and traj.total_cost == 0.0

    def test_depth_three(self):
        planner = Planner(P, PlannerConfig())
        s = RobotState(0, 0, 0, 1, 0)
        node = SearchNode(gen_key(s, 0, 0.2, 0.1), s, 0.0, 0.0)
        controls = []
        for _ in range(3):
            node = planner.generate_primitives(node, GoalRegion((9, 9)), ObstacleArrays.build())[4]
            controls.append(node.incoming.control)
        traj = backtrack(node)
        assert len(traj.primitives) == 3 and chained(traj)
        assert traj.total_cost == pytest.approx(sum(primitive_cost(u, 0.5, CostWeights()) for u in controls))


class TestPlan:
    def test_start_in_goal(self):
        traj = plan(RobotState(1, 1, 0, 0.5, 0), GoalRegion((1.2, 1.0)))
        assert traj.primitives == () and traj.total_cost == 0.0 and traj.reached_goal

    def test_straight_corridor_at_full_speed(self):
        cfg = PlannerConfig(alpha=1.0)
        traj = plan(RobotState(0, 0, 0, P.v_max, 0), GoalRegion((2.7, 0.0)), cfg=cfg)
        assert traj.reached_goal
        assert all(p.control == ControlInput(0.0, 0.0) for p in traj.primitives)
        best = enumerate_best(Planner(P, cfg), RobotState(0, 0, 0, P.v_max, 0), GoalRegion((2.7, 0.0)))
        assert traj.total_cost == best[1]

    def test_horizon_contract(self):
        traj = plan(RobotState(0, 0, 0, 1.0, 0), GoalRegion((20, 0)))
        assert not traj.reached_goal
        assert len(traj.primitives) == 4 and traj.duration == pytest.approx(2.0)
        assert chained(traj)
        assert traj.fallback and traj.fallback[0].start == traj.final_state
        assert all(p.control.a == P.a_min for p in traj.fallback)

    def test_budget_exceeded(self):
        with pytest.raises(PlanningFailure) as e:
            plan(RobotState(0, 0, 0, 1.0, 0), GoalRegion((20, 0)), cfg=PlannerConfig(max_expansions=2))
        assert e.value.kind == "budget_exceeded"
        assert e.value.stats.expansions == 2

    def test_open_exhausted(self):
        ring = [Obstacle(i, (0.6 * math.cos(a), 0.6 * math.sin(a)), radius=0.2)
                for i, a in enumerate(np.linspace(0, 2 * math.pi, 24, endpoint=False))]
        with pytest.raises(PlanningFailure) as e:
            plan(RobotState(0, 0, 0, 1.0, 0), GoalRegion((20, 0)), ring)
        assert e.value.kind == "open_exhausted"

    def test_avoids_crossing_agent(self):
        agent = Obstacle(0, (2.0, -2.0), (0.0, 1.5), 0.25, 0.0)
        traj = plan(RobotState(0, 0, 0, 1.0, 0), GoalRegion((10, 0)), [agent])
        for p in traj.primitives + traj.fallback:
            assert primitive_collision_free(p, [agent])

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        obs = [Obstacle(i, tuple(rng.uniform(1, 8, 2)), tuple(rng.uniform(-1, 1, 2)), 0.25, 0.0) for i in range(20)]
        a = plan(RobotState(0, 5, 0, 1.0, 0), GoalRegion((10, 5)), obs)
        b = plan(RobotState(0, 5, 0, 1.0, 0), GoalRegion((10, 5)), obs)
        assert a.primitives == b.primitives and a.total_cost == b.total_cost and a.fallback == b.fallback

    def test_record_pops(self):
        traj = Planner(P, PlannerConfig()).plan(RobotState(0, 0, 0, 1, 0), GoalRegion((5, 0)), record_pops=True)
        assert len(traj.stats.pop_f) >= traj.stats.expansions


scenes = st.tuples(
    st.floats(0, P.v_max), st.floats(-math.pi, math.pi),
    st.floats(-6, 6), st.floats(-6, 6),
)


@given(scenes)
def test_pops_monotone_when_consistent(scene):
    v, phi, gx, gy = scene
    cfg = PlannerConfig(alpha=1.0)
    goal = GoalRegion((gx, gy))
    try:
        traj = Planner(P, cfg).plan(RobotState(0, 0, phi, v, 0), goal, record_pops=True)
    except PlanningFailure:
        return
    f = traj.stats.pop_f
    # the final pop may be a goal node whose h is zeroed by membership
    assert all(b >= a - 1e-9 for a, b in zip(f[:-2], f[1:-1]))


@st.composite
def crowded(draw):
    n = draw(st.integers(0, 15))
    seed = draw(st.integers(0, 2 ** 16))
    rng = np.random.default_rng(seed)
    obs = []
    for i in range(n):
        p = rng.uniform([-1, -4], [8, 4])
        if math.hypot(*p) < 1.0:
            continue
        obs.append(Obstacle(i, tuple(p), tuple(rng.uniform(-1.5, 1.5, 2)), 0.25, 0.0))
    return RobotState(0, 0, 0, draw(st.floats(0, P.v_max)), 0), obs, draw(st.booleans())


@settings(max_examples=60)
@given(crowded())
def test_returned_plans_feasible(case):
    start, obs, aggregate = case
    planner = Planner(P, PlannerConfig(aggregate=aggregate))
    try:
        traj = planner.plan(start, GoalRegion((8, 0)), obs)
    except PlanningFailure:
        return
    assert chained(traj)
    assert traj.duration <= planner.cfg.horizon_T + 1e-9
    if traj.primitives:
        assert traj.primitives[0].start == start
    for p in traj.primitives + traj.fallback:
        assert primitive_collision_free(p, obs, cfg=planner.safety)
    if not traj.reached_goal:
        assert len(traj.primitives) == planner.cfg.horizon_depth
        assert is_ics_free(traj.final_state, obs, P, planner.safety)


def test_aggregation_reduces_expansions_obstacle_free():
    start, goal = RobotState(0, 0, 0, 0.5, 0), GoalRegion((0, 6), heading=math.pi / 2)
    for depth in (3, 4):
        cfg = dict(horizon_T=depth * 0.5, alpha=1.0)
        on = Planner(P, PlannerConfig(**cfg)).plan(start, goal)
        off = Planner(P, PlannerConfig(aggregate=False, **cfg)).plan(start, goal)
        assert on.stats.expansions < off.stats.expansions


def test_small_optimality_example():
    cfg = PlannerConfig(alpha=1.0, horizon_T=1.0, n_steer=3, accel_levels=(0.0,), res_xy=0.5, aggregate=False)
    planner = Planner(P, cfg)
    start, goal = RobotState(0, 0, 0, 1.2, 0), GoalRegion((3, 2))
    f, g, _ = enumerate_best(planner, start, goal)
    assert planner.plan(start, goal).total_cost == g

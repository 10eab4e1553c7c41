import math

import pytest

from stplanner.collision import Obstacle
from stplanner.kinematics import RobotState, VehicleParams
from stplanner.search import GoalRegion, Planner
from stplanner.world.baseline import WaitAndGoPlanner, wait_and_go_planner
from stplanner.world.episode import EpisodeConfig, SimEnvironment, run_episode
from stplanner.world.sim import SimAgentSpec

P = VehicleParams()


def test_empty_world_goes_straight_at_full_speed():
    traj = wait_and_go_planner(RobotState(0, 5, 0, P.v_max, 0), GoalRegion((10, 5)))
    (p,) = traj.primitives
    assert p.control.psi == 0.0 and p.control.a == P.a_max
    assert p.end.v == P.v_max and p.end.y == 5.0 and p.end.x == pytest.approx(0.9)


def test_blocked_chunk_brakes():
    agent = Obstacle(0, (0.8, 4.0), (0.0, 2.0), 0.25, 0.0)
    traj = wait_and_go_planner(RobotState(0, 5, 0, 1.0, 0), GoalRegion((10, 5)), [agent])
    assert traj.primitives[0].control.a == P.a_min
    assert traj.primitives[0].end.v == 0.0


def test_steering_clipped_toward_goal():
    wg = WaitAndGoPlanner()
    assert wg.steering_toward(RobotState(0, 0, 0, 1, 0), GoalRegion((0, 5))) == P.psi_max
    assert wg.steering_toward(RobotState(0, 0, 0, 1, 0), GoalRegion((5, -0.1))) == pytest.approx(-math.atan2(0.1, 5))


def test_reports_goal_reached():
    traj = wait_and_go_planner(RobotState(9, 5, 0, 1.0, 0), GoalRegion((10, 5)))
    assert traj.reached_goal


def test_not_slower_than_search_in_empty_world():
    cfg = EpisodeConfig()
    wg = run_episode(WaitAndGoPlanner(), SimEnvironment(SimAgentSpec(n_agents=0)), cfg)
    search = run_episode(Planner(), SimEnvironment(SimAgentSpec(n_agents=0)), cfg)
    assert wg.success and search.success
    assert wg.time_to_goal <= search.time_to_goal + 0.5
    assert wg.time_to_goal >= (10 - 0.5) / P.v_max

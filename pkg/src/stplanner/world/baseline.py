"""Wait-and-go: drive the straight line to the goal at full acceleration
and brake whenever the next chunk is blocked."""
from __future__ import annotations

import math
from typing import Sequence

from ..collision import Disc, Obstacle, SafetyConfig, primitive_collision_free
from ..kinematics import ControlInput, CostWeights, RobotState, VehicleParams, integrate_primitive, primitive_cost
from ..search import GoalRegion, PlanStats, Trajectory


class WaitAndGoPlanner:
    def __init__(self, params: VehicleParams = VehicleParams(), safety: SafetyConfig = SafetyConfig(),
                 tau: float = 0.5, weights: CostWeights = CostWeights()):
        self.params = params
        self.safety = safety
        self.tau = tau
        self.weights = weights

    def steering_toward(self, state: RobotState, goal: GoalRegion) -> float:
        bearing = math.atan2(goal.center[1] - state.y, goal.center[0] - state.x)
        err = math.remainder(bearing - state.phi, 2 * math.pi)
        return max(-self.params.psi_max, min(self.params.psi_max, err))

    def plan(self, start: RobotState, goal: GoalRegion, obstacles: Sequence[Obstacle] = (),
             statics: Sequence[Disc] = ()) -> Trajectory:
        psi = self.steering_toward(start, goal)
        go = integrate_primitive(start, ControlInput(psi, self.params.a_max), self.tau, self.params)
        if primitive_collision_free(go, obstacles, statics, self.safety):
            chunk = go
        else:
            chunk = integrate_primitive(start, ControlInput(psi, self.params.a_min), self.tau, self.params)
        cost = primitive_cost(chunk.control, self.tau, self.weights)
        return Trajectory((chunk,), cost, goal.contains(chunk.end), stats=PlanStats(expansions=1))


def wait_and_go_planner(start: RobotState, goal: GoalRegion, obstacles: Sequence[Obstacle] = (),
                        params: VehicleParams = VehicleParams(), safety: SafetyConfig = SafetyConfig(),
                        tau: float = 0.5) -> Trajectory:
    return WaitAndGoPlanner(params, safety, tau).plan(start, goal, obstacles)

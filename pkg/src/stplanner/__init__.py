"""Online partial motion planning for a car-like robot among moving obstacles."""
from .collision import Obstacle, SafetyConfig, is_ics_free, primitive_collision_free
from .kinematics import ControlInput, CostWeights, MotionPrimitive, RobotState, VehicleParams, \
    eval_primitive, integrate_primitive
from .search import GoalRegion, Planner, PlannerConfig, PlanningFailure, Trajectory, plan

__all__ = [
    "ControlInput", "CostWeights", "GoalRegion", "MotionPrimitive", "Obstacle", "Planner",
    "PlannerConfig", "PlanningFailure", "RobotState", "SafetyConfig", "Trajectory", "VehicleParams",
    "eval_primitive", "integrate_primitive", "is_ics_free", "plan", "primitive_collision_free",
]

from .baseline import WaitAndGoPlanner, wait_and_go_planner
from .episode import EpisodeConfig, ReplayEnvironment, RunMetrics, SimEnvironment, run_episode
from .sim import SimAgentSpec, World, observe, spawn_world, step_world
from .tracks import (
    CrowdSpec,
    GridTrack,
    TimedTrack,
    TrackFormatError,
    convert_tracks,
    load_tracks,
    replay_observe,
    resample,
    synthetic_crowd,
    write_tracks,
)

__all__ = [
    "CrowdSpec", "EpisodeConfig", "GridTrack", "ReplayEnvironment", "RunMetrics", "SimAgentSpec",
    "SimEnvironment", "TimedTrack", "TrackFormatError", "WaitAndGoPlanner", "World", "convert_tracks",
    "load_tracks", "observe", "replay_observe", "resample", "run_episode", "spawn_world", "step_world",
    "synthetic_crowd", "wait_and_go_planner", "write_tracks",
]

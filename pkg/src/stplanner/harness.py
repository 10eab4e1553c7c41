"""Experiment specs, batch orchestration and result tables."""
from __future__ import annotations

import csv
import dataclasses
import io
import math
import os
import statistics
import types
import typing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
import yaml

from .collision import SafetyConfig
from .kinematics import RobotState, VehicleParams
from .search import GoalRegion, Planner, PlannerConfig
from .world.baseline import WaitAndGoPlanner
from .world.episode import EpisodeConfig, ReplayEnvironment, RunMetrics, SimEnvironment, run_episode
from .world.sim import SimAgentSpec
from .world.tracks import TICK, GridTrack, load_tracks, positions_at, scene_span

PLANNERS = ("search", "wait_and_go")
SCENARIOS = ("sim", "replay")


class SpecError(ValueError):
    """An experiment spec that cannot be run."""


@dataclass(frozen=True)
class ReplayScenario:
    path: str = ""
    agent_radius: float = 0.25
    first_start: float = 0.0  # seconds after the first recorded tick
    start_stride: float = 5.0  # trial i starts first_start + i * start_stride later


@dataclass(frozen=True)
class Sweep:
    param: str
    values: tuple = ()


@dataclass(frozen=True)
class ExperimentSpec:
    name: str = "experiment"
    scenario: str = "sim"
    sim: SimAgentSpec = field(default_factory=SimAgentSpec)
    replay: ReplayScenario = field(default_factory=ReplayScenario)
    planner: str = "search"
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    planner_cfg: PlannerConfig = field(default_factory=PlannerConfig)
    safety: SafetyConfig = field(default_factory=SafetyConfig)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    trials: int = 30
    base_seed: int = 0
    sweep: Sweep | None = None
    workers: int = 1


def sim_defaults(**kw) -> ExperimentSpec:
    """40 agents in a 10 m square, margin 0.3 m, v_max 1.8 m/s, 30 trials.

    Agents are not placed within margin + radius of the start pose.
    """
    base = ExperimentSpec()
    start, clear = base.episode.start, base.safety.margin + base.sim.agent_radius
    sim = dataclasses.replace(base.sim, keepout=(start.x, start.y, clear))
    return dataclasses.replace(base, **{"name": "sim", "sim": sim, **kw})


def replay_defaults(path: str, **kw) -> ExperimentSpec:
    """Recorded-crowd protocol: v_max 1.5 m/s, margin 0.4 m, crossing a 12 m scene."""
    episode = EpisodeConfig(start=RobotState(0.0, 6.0, 0.0), goal=GoalRegion((12.0, 6.0)))
    fields = dict(name="replay", scenario="replay", replay=ReplayScenario(path=path),
                  vehicle=VehicleParams(v_max=1.5), safety=SafetyConfig(margin=0.4), episode=episode)
    return ExperimentSpec(**{**fields, **kw})


# --- plain-data conversion ----------------------------------------------

def to_plain(obj: Any) -> Any:
    """Dataclasses and named tuples to nested dicts/lists of scalars."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple) and hasattr(obj, "_fields"):
        return {k: to_plain(v) for k, v in obj._asdict().items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _is_namedtuple(tp) -> bool:
    return isinstance(tp, type) and issubclass(tp, tuple) and hasattr(tp, "_fields")


def _coerce(tp, value, path: str):
    """Convert plain data into an instance of annotation ``tp``; SpecError on mismatch."""
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if tp is typing.Any:
        return value
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        errors = []
        for a in args:
            if a is type(None):
                continue
            try:
                return _coerce(a, value, path)
            except SpecError as e:
                errors.append(str(e))
        raise SpecError(errors[0] if errors else f"{path}: cannot be null")
    if dataclasses.is_dataclass(tp):
        if isinstance(value, tp):
            return value
        if not isinstance(value, dict):
            raise SpecError(f"{path}: expected a mapping for {tp.__name__}, got {value!r}")
        hints = typing.get_type_hints(tp)
        names = {f.name for f in dataclasses.fields(tp)}
        unknown = set(value) - names
        if unknown:
            raise SpecError(f"{path}: unknown field(s) {sorted(unknown)} for {tp.__name__}")
        kwargs = {k: _coerce(hints[k], v, f"{path}.{k}" if path else k) for k, v in value.items()}
        try:
            return tp(**kwargs)
        except (TypeError, ValueError) as e:
            raise SpecError(f"{path or tp.__name__}: {e}") from None
    if _is_namedtuple(tp):
        if isinstance(value, tp):
            return value
        hints = typing.get_type_hints(tp)
        if isinstance(value, dict):
            unknown = set(value) - set(tp._fields)
            if unknown:
                raise SpecError(f"{path}: unknown field(s) {sorted(unknown)} for {tp.__name__}")
            items = value
        elif isinstance(value, (list, tuple)) and len(value) <= len(tp._fields):
            items = dict(zip(tp._fields, value))
        else:
            raise SpecError(f"{path}: expected a mapping for {tp.__name__}, got {value!r}")
        return tp(**{k: _coerce(hints[k], v, f"{path}.{k}") for k, v in items.items()})
    if tp is tuple:
        if not isinstance(value, (list, tuple)):
            raise SpecError(f"{path}: expected a list, got {value!r}")
        return tuple(value)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise SpecError(f"{path}: expected a list, got {value!r}")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(args[0], v, f"{path}[{i}]") for i, v in enumerate(value))
        if args and len(args) != len(value):
            raise SpecError(f"{path}: expected {len(args)} items, got {len(value)}")
        if not args:
            return tuple(value)
        return tuple(_coerce(a, v, f"{path}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    if tp is bool:
        if not isinstance(value, bool):
            raise SpecError(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SpecError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SpecError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise SpecError(f"{path}: expected a string, got {value!r}")
        return value
    raise SpecError(f"{path}: unsupported field type {tp!r}")


def field_type(path: str, root=ExperimentSpec):
    """Annotation of the field addressed by a dotted path such as ``sim.n_agents``."""
    tp = root
    for part in path.split("."):
        if typing.get_origin(tp) in (typing.Union, types.UnionType):
            tp = next(a for a in typing.get_args(tp) if a is not type(None))
        hints = typing.get_type_hints(tp) if (dataclasses.is_dataclass(tp) or _is_namedtuple(tp)) else {}
        if part not in hints:
            raise SpecError(f"unknown parameter {path!r}")
        tp = hints[part]
    return tp


def set_path(obj, path: str, value):
    """Copy of ``obj`` with the dotted field replaced by ``value`` (already typed)."""
    head, _, rest = path.partition(".")
    if rest:
        value = set_path(getattr(obj, head), rest, value)
    try:
        if _is_namedtuple(type(obj)):
            return obj._replace(**{head: value})
        return dataclasses.replace(obj, **{head: value})
    except (TypeError, ValueError) as e:
        raise SpecError(f"{path}: {e}") from None


def apply_override(spec: ExperimentSpec, path: str, raw) -> ExperimentSpec:
    """Set a dotted field from plain data (e.g. a YAML-parsed command-line value)."""
    value = _coerce(field_type(path), raw, path)
    return set_path(spec, path, value)


def parse_assignment(text: str) -> tuple[str, Any]:
    path, sep, raw = text.partition("=")
    if not sep:
        raise SpecError(f"override must look like path=value, got {text!r}")
    return path.strip(), yaml.safe_load(raw)


def spec_from_dict(data: dict) -> ExperimentSpec:
    spec = _coerce(ExperimentSpec, data or {}, "")
    validate(spec)
    return spec


def load_spec(path: str | os.PathLike, overrides: Sequence[str] = ()) -> ExperimentSpec:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as e:
        raise SpecError(f"{path}: {e}") from None
    if data is not None and not isinstance(data, dict):
        raise SpecError(f"{path}: top level must be a mapping")
    spec = _coerce(ExperimentSpec, data or {}, "")
    for text in overrides:
        spec = apply_override(spec, *parse_assignment(text))
    validate(spec)
    return spec


def dump_spec(spec: ExperimentSpec) -> str:
    """YAML text listing every field, defaults included."""
    return yaml.safe_dump(to_plain(spec), sort_keys=False)


def validate(spec: ExperimentSpec) -> None:
    if spec.scenario not in SCENARIOS:
        raise SpecError(f"scenario must be one of {SCENARIOS}, got {spec.scenario!r}")
    if spec.planner not in PLANNERS:
        raise SpecError(f"planner must be one of {PLANNERS}, got {spec.planner!r}")
    if spec.trials < 1:
        raise SpecError("trials must be >= 1")
    if spec.workers < 1:
        raise SpecError("workers must be >= 1")
    if spec.scenario == "replay" and spec.sweep is None and not spec.replay.path:
        raise SpecError("replay scenario needs replay.path")
    if spec.episode.replan_period > spec.planner_cfg.tau + 1e-12:
        raise SpecError("episode.replan_period must not exceed planner_cfg.tau")
    if spec.sweep is not None:
        if not spec.sweep.values:
            raise SpecError("sweep.values must not be empty")
        for v in spec.sweep.values:
            point = apply_override(spec, spec.sweep.param, v)
            validate(dataclasses.replace(point, sweep=None))


# --- running ------------------------------------------------------------

@dataclass
class EpisodeRecord:
    point: int  # sweep index
    value: Any  # swept value, None without a sweep
    trial: int
    seed: int
    success: bool
    failure_kind: str
    time_to_goal: float
    path_length: float
    n_plans: int
    n_plan_failures: int
    min_distance: float
    latencies: list[float] = field(default_factory=list, repr=False)
    error: str = ""


EPISODE_COLUMNS = ["point", "value", "trial", "seed", "success", "failure_kind", "time_to_goal",
                   "path_length", "n_plans", "n_plan_failures", "min_distance", "error"]


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: list[EpisodeRecord]

    def points(self) -> list[tuple[int, Any, list[EpisodeRecord]]]:
        groups: dict[int, list[EpisodeRecord]] = {}
        for r in self.records:
            groups.setdefault(r.point, []).append(r)
        return [(k, groups[k][0].value, sorted(groups[k], key=lambda r: r.trial)) for k in sorted(groups)]


def sweep_points(spec: ExperimentSpec) -> list[tuple[Any, ExperimentSpec]]:
    if spec.sweep is None:
        return [(None, spec)]
    return [(v, dataclasses.replace(apply_override(spec, spec.sweep.param, v), sweep=None))
            for v in spec.sweep.values]


def make_planner(spec: ExperimentSpec):
    if spec.planner == "search":
        return Planner(spec.vehicle, spec.planner_cfg, spec.safety)
    return WaitAndGoPlanner(spec.vehicle, spec.safety, spec.planner_cfg.tau, spec.planner_cfg.weights)


_TRACK_CACHE: dict[str, list[GridTrack]] = {}


def _tracks(path: str) -> list[GridTrack]:
    if path not in _TRACK_CACHE:
        _TRACK_CACHE[path] = load_tracks(path)
    return _TRACK_CACHE[path]


def make_environment(spec: ExperimentSpec, trial: int):
    """Environment and seed for one trial."""
    seed = spec.base_seed + trial
    if spec.scenario == "sim":
        return SimEnvironment(dataclasses.replace(spec.sim, rng_seed=seed)), seed
    tracks = _tracks(spec.replay.path)
    first, last = scene_span(tracks)
    usable = max(last - first - int(round(spec.episode.timeout / TICK)), 1)
    offset = int(round((spec.replay.first_start + trial * spec.replay.start_stride) / TICK))
    start = spec.episode.start
    clear = spec.replay.agent_radius + spec.safety.margin
    # move forward to the first tick at which nobody stands within the clearance of the start
    for k in range(usable):
        tick = first + (offset + k) % usable
        _, pos = positions_at(tracks, tick)
        if len(pos) == 0 or np.min(np.hypot(pos[:, 0] - start.x, pos[:, 1] - start.y)) > clear:
            break
    return ReplayEnvironment(tracks, tick, spec.replay.agent_radius), seed


def run_trial(spec: ExperimentSpec, trial: int, record_plans: bool = False) -> RunMetrics:
    env, _ = make_environment(spec, trial)
    return run_episode(make_planner(spec), env, spec.episode, record_plans=record_plans)


def _run_one(job: tuple[int, Any, ExperimentSpec, int]) -> EpisodeRecord:
    point, value, spec, trial = job
    seed = spec.base_seed + trial
    try:
        m = run_trial(spec, trial)
    except (SpecError, OSError):
        raise
    except Exception as exc:  # isolate planner/executive crashes as data
        return EpisodeRecord(point, value, trial, seed, False, "plan_failure", math.nan, math.nan, 0, 0,
                             math.nan, error=f"{type(exc).__name__}: {exc}")
    return EpisodeRecord(point, value, trial, seed, m.success, m.failure_kind or "",
                         m.time_to_goal if m.time_to_goal is not None else math.nan, m.path_length,
                         len(m.plan_latencies), m.n_plan_failures, m.min_distance, list(m.plan_latencies))


def run_experiment(spec: ExperimentSpec, workers: int | None = None,
                   progress: Callable[[EpisodeRecord], None] | None = None) -> ExperimentResult:
    """Run trials x sweep points; trial i uses seed base_seed + i."""
    validate(spec)
    points = sweep_points(spec)
    if spec.scenario == "replay":
        for _, s in points:
            _tracks(s.replay.path)  # surface file errors before any episode runs
    jobs = [(k, v, s, trial) for k, (v, s) in enumerate(points) for trial in range(spec.trials)]
    workers = spec.workers if workers is None else workers
    records = []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for rec in pool.map(_run_one, jobs, chunksize=1):
                records.append(rec)
                if progress:
                    progress(rec)
    else:
        for job in jobs:
            rec = _run_one(job)
            records.append(rec)
            if progress:
                progress(rec)
    records.sort(key=lambda r: (r.point, r.trial))
    return ExperimentResult(spec, records)


# --- tables ---------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def _mean_std(xs: list[float]) -> tuple[float, float]:
    if not xs:
        return math.nan, math.nan
    return statistics.fmean(xs), (statistics.pstdev(xs) if len(xs) > 1 else 0.0)


AGGREGATE_COLUMNS = ["point", "value", "trials", "successes", "success_rate", "collisions", "timeouts",
                     "plan_failures", "time_mean", "time_std", "path_mean"]


def aggregate_rows(result: ExperimentResult) -> list[dict]:
    """Per-sweep-point outcome statistics; wall-clock quantities are excluded so
    these rows are reproducible bit-for-bit."""
    rows = []
    for k, value, recs in result.points():
        times = [r.time_to_goal for r in recs if r.success]
        paths = [r.path_length for r in recs if r.success]
        t_mean, t_std = _mean_std(times)
        kinds = [r.failure_kind for r in recs]
        rows.append({
            "point": k, "value": value, "trials": len(recs),
            "successes": sum(r.success for r in recs),
            "success_rate": sum(r.success for r in recs) / len(recs),
            "collisions": kinds.count("collision"), "timeouts": kinds.count("timeout"),
            "plan_failures": kinds.count("plan_failure"),
            "time_mean": t_mean, "time_std": t_std, "path_mean": _mean_std(paths)[0],
        })
    return rows


LATENCY_COLUMNS = ["point", "value", "n_plans", "mean_ms", "std_ms", "p50_ms", "p99_ms", "max_ms"]


def latency_rows(result: ExperimentResult) -> list[dict]:
    rows = []
    for k, value, recs in result.points():
        lat = np.array([x for r in recs for x in r.latencies]) * 1e3
        if len(lat) == 0:
            stats = dict(mean_ms=math.nan, std_ms=math.nan, p50_ms=math.nan, p99_ms=math.nan, max_ms=math.nan)
        else:
            stats = dict(mean_ms=float(lat.mean()), std_ms=float(lat.std()),
                         p50_ms=float(np.percentile(lat, 50)), p99_ms=float(np.percentile(lat, 99)),
                         max_ms=float(lat.max()))
        rows.append({"point": k, "value": value, "n_plans": len(lat), **stats})
    return rows


def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def episodes_csv(result: ExperimentResult) -> str:
    return _csv([dataclasses.asdict(r) for r in result.records], EPISODE_COLUMNS)


def aggregates_csv(result: ExperimentResult) -> str:
    return _csv(aggregate_rows(result), AGGREGATE_COLUMNS)


def latency_csv(result: ExperimentResult) -> str:
    return _csv(latency_rows(result), LATENCY_COLUMNS)


def write_results(result: ExperimentResult, outdir: str | os.PathLike) -> list[str]:
    os.makedirs(outdir, exist_ok=True)
    files = {
        "spec.yaml": dump_spec(result.spec),
        "episodes.csv": episodes_csv(result),
        "aggregates.csv": aggregates_csv(result),
        "latency.csv": latency_csv(result),
    }
    written = []
    for name, text in files.items():
        path = os.path.join(outdir, name)
        with open(path, "w") as fh:
            fh.write(text)
        written.append(path)
    return written


PLOT_COLUMNS = ["x", "success_rate", "time_mean", "time_std", "latency_mean_ms", "latency_std_ms", "latency_p99_ms"]


def emit_plot_data(results: ExperimentResult, path: str | os.PathLike) -> str:
    """One row per sweep point (x = swept value) for external plotting tools."""
    if not results.records:
        raise ValueError("no results to emit")
    agg = aggregate_rows(results)
    lat = latency_rows(results)
    rows = []
    for a, l in zip(agg, lat):
        rows.append({"x": "default" if a["value"] is None else a["value"], "success_rate": a["success_rate"],
                     "time_mean": a["time_mean"], "time_std": a["time_std"], "latency_mean_ms": l["mean_ms"],
                     "latency_std_ms": l["std_ms"], "latency_p99_ms": l["p99_ms"]})
    path = os.fspath(path)
    if os.path.isdir(path):
        path = os.path.join(path, f"{results.spec.name}_plot.csv")
    with open(path, "w") as fh:
        fh.write(_csv(rows, PLOT_COLUMNS))
    return path

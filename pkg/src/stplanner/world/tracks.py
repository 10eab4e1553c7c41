"""Pedestrian track files: loading, resampling to a 10 Hz grid, export,
replay observations and converters from common public layouts.

File format (plain text)::

    # frame_dt=0.4
    frame_id agent_id x y
    ...

``frame_dt`` is the number of seconds per frame id.  Blank lines and
``#`` comments after the header are ignored.  Positions are meters.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from ..collision import Obstacle

TICK = 0.1  # replay grid spacing in seconds


class TrackFormatError(ValueError):
    def __init__(self, msg: str, line: int | None = None, source: str = "<tracks>"):
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + msg)
        self.line = line


@dataclass
class TimedTrack:
    """One agent's positions.  ``t`` must be strictly increasing."""

    agent_id: int
    t: np.ndarray
    pos: np.ndarray  # (n, 2)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.pos = np.asarray(self.pos, dtype=float).reshape(-1, 2)
        if len(self.t) != len(self.pos):
            raise ValueError("t and pos lengths differ")
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError(f"agent {self.agent_id}: times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])


@dataclass
class GridTrack:
    """A track resampled onto integer ticks of ``dt`` seconds."""

    agent_id: int
    tick0: int
    pos: np.ndarray  # (n, 2), sample k at time (tick0 + k) * dt
    dt: float = TICK

    @property
    def last_tick(self) -> int:
        return self.tick0 + len(self.pos) - 1

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.tick0, self.last_tick + 1) * self.dt

    def to_timed(self) -> TimedTrack:
        return TimedTrack(self.agent_id, self.t, self.pos.copy())


def resample(track: TimedTrack, dt: float = TICK) -> GridTrack | None:
    """Linear interpolation onto the ticks inside the track's span; None if no tick falls inside."""
    t0, t1 = track.span
    k0 = math.ceil(t0 / dt - 1e-9)
    k1 = math.floor(t1 / dt + 1e-9)
    if k1 < k0:
        return None
    grid = np.arange(k0, k1 + 1) * dt
    grid = np.clip(grid, t0, t1)  # ticks within 1e-9 of an end snap onto it
    pos = np.stack([np.interp(grid, track.t, track.pos[:, 0]),
                    np.interp(grid, track.t, track.pos[:, 1])], axis=-1)
    return GridTrack(track.agent_id, k0, pos, dt)


def _parse_header(line: str, lineno: int, source: str) -> float:
    body = line.lstrip("#").strip()
    key, sep, value = body.partition("=")
    if not sep or key.strip() != "frame_dt":
        raise TrackFormatError(f"unknown schema header {line.strip()!r}; expected '# frame_dt=<seconds>'",
                               lineno, source)
    try:
        frame_dt = float(value)
    except ValueError:
        raise TrackFormatError(f"frame_dt is not a number: {value.strip()!r}", lineno, source) from None
    if not (frame_dt > 0 and math.isfinite(frame_dt)):
        raise TrackFormatError(f"frame_dt must be positive, got {frame_dt}", lineno, source)
    return frame_dt


def read_raw_tracks(stream: TextIO, source: str = "<tracks>") -> list[TimedTrack]:
    """Parse a track stream without resampling."""
    frame_dt = None
    rows: dict[int, list[tuple[int, float, float, int]]] = {}
    for lineno, line in enumerate(stream, start=1):
        text = line.strip()
        if not text:
            continue
        if frame_dt is None:
            if not text.startswith("#"):
                raise TrackFormatError("missing '# frame_dt=<seconds>' header", lineno, source)
            frame_dt = _parse_header(text, lineno, source)
            continue
        if text.startswith("#"):
            continue
        fields = text.split()
        if len(fields) != 4:
            raise TrackFormatError(f"expected 4 fields 'frame_id agent_id x y', got {len(fields)}", lineno, source)
        try:
            frame, agent = int(fields[0]), int(fields[1])
            x, y = float(fields[2]), float(fields[3])
        except ValueError:
            raise TrackFormatError(f"malformed row {text!r}", lineno, source) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise TrackFormatError("non-finite position", lineno, source)
        samples = rows.setdefault(agent, [])
        if samples and frame <= samples[-1][0]:
            raise TrackFormatError(f"agent {agent}: frame {frame} does not increase "
                                   f"(previous {samples[-1][0]} on line {samples[-1][3]})", lineno, source)
        samples.append((frame, x, y, lineno))
    if frame_dt is None:
        return []
    tracks = []
    for agent in sorted(rows):
        s = rows[agent]
        tracks.append(TimedTrack(agent, np.array([r[0] for r in s]) * frame_dt,
                                 np.array([(r[1], r[2]) for r in s])))
    return tracks


def load_tracks(source: str | os.PathLike | TextIO, dt: float = TICK) -> list[GridTrack]:
    """Load a track file and resample every agent onto the ``dt`` grid."""
    if hasattr(source, "read"):
        raw = read_raw_tracks(source, getattr(source, "name", "<tracks>"))
    else:
        with open(source) as fh:
            raw = read_raw_tracks(fh, os.fspath(source))
    out = []
    for tr in raw:
        g = resample(tr, dt)
        if g is not None:
            out.append(g)
    return out


def write_tracks(tracks: Iterable[GridTrack | TimedTrack], dest: str | os.PathLike | TextIO,
                 frame_dt: float = TICK) -> None:
    """Export tracks; grid tracks use their tick as frame id, so reloading is exact."""
    lines = [f"# frame_dt={frame_dt!r}"]
    for tr in tracks:
        if isinstance(tr, GridTrack):
            frames = range(tr.tick0, tr.last_tick + 1)
        else:
            frames = [int(round(t / frame_dt)) for t in tr.t]
        for f, (x, y) in zip(frames, tr.pos):
            lines.append(f"{f} {tr.agent_id} {x:.17g} {y:.17g}")
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w") as fh:
            fh.write(text)


def tick_of(t: float, dt: float = TICK) -> int:
    k = round(t / dt)
    if abs(k * dt - t) > 1e-6:
        raise ValueError(f"time {t} is not on the {dt} s replay grid")
    return int(k)


def positions_at(tracks: Iterable[GridTrack], tick: int) -> tuple[np.ndarray, np.ndarray]:
    """Ids and positions of agents present at ``tick``."""
    ids, pos = [], []
    for tr in tracks:
        if tr.tick0 <= tick <= tr.last_tick:
            ids.append(tr.agent_id)
            pos.append(tr.pos[tick - tr.tick0])
    return np.array(ids, dtype=int), np.array(pos, dtype=float).reshape(-1, 2)


def replay_observe(tracks: Iterable[GridTrack], t: float, radius: float = 0.25) -> list[Obstacle]:
    """Constant-velocity obstacles from the grid samples at time ``t``.

    Velocity is the backward difference over the last tick; an agent's
    first sample has zero velocity.
    """
    obs = []
    for tr in tracks:
        k = tick_of(t, tr.dt)
        if not tr.tick0 <= k <= tr.last_tick:
            continue
        i = k - tr.tick0
        p = tr.pos[i]
        v = (p - tr.pos[i - 1]) / tr.dt if i > 0 else np.zeros(2)
        obs.append(Obstacle(tr.agent_id, (float(p[0]), float(p[1])), (float(v[0]), float(v[1])), radius, t))
    return obs


def scene_span(tracks: Iterable[GridTrack]) -> tuple[int, int]:
    tracks = list(tracks)
    if not tracks:
        return 0, 0
    return min(t.tick0 for t in tracks), max(t.last_tick for t in tracks)


# --- converters ---------------------------------------------------------

LAYOUTS = {
    # columns (frame, agent, x, y) in whitespace-separated rows
    "sgan": (0, 1, 2, 3),
    # ETH obsmat: frame ped x z y vx vz vy
    "obsmat": (0, 1, 2, 4),
}
DEFAULT_FRAME_DT = {"sgan": 0.04, "obsmat": 1.0 / 15.0}


def convert_tracks(src: str | os.PathLike, dest: str | os.PathLike, layout: str = "sgan",
                   frame_dt: float | None = None) -> int:
    """Convert a public pedestrian-data layout into the native track format.

    Returns the number of rows written.
    """
    if layout not in LAYOUTS:
        raise ValueError(f"unknown layout {layout!r}; choose from {sorted(LAYOUTS)}")
    cf, ca, cx, cy = LAYOUTS[layout]
    if frame_dt is None:
        frame_dt = DEFAULT_FRAME_DT[layout]
    need = max(cf, ca, cx, cy) + 1
    rows = []
    with open(src) as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields or fields[0].startswith("#"):
                continue
            if len(fields) < need:
                raise TrackFormatError(f"{layout} rows need at least {need} columns, got {len(fields)}",
                                       lineno, os.fspath(src))
            try:
                frame_f, agent_f = float(fields[cf]), float(fields[ca])
                x, y = float(fields[cx]), float(fields[cy])
            except ValueError:
                raise TrackFormatError(f"malformed row {line.strip()!r}", lineno, os.fspath(src)) from None
            if frame_f != int(frame_f) or agent_f != int(agent_f):
                raise TrackFormatError("frame and agent ids must be integral", lineno, os.fspath(src))
            rows.append((int(agent_f), int(frame_f), x, y))
    rows.sort()
    with open(dest, "w") as fh:
        fh.write(f"# frame_dt={frame_dt!r}\n")
        for agent, frame, x, y in rows:
            fh.write(f"{frame} {agent} {x:.17g} {y:.17g}\n")
    return len(rows)


# --- synthetic crowds -----------------------------------------------------

@dataclass(frozen=True)
class CrowdSpec:
    """Recorded-style pedestrian flow: walkers cross a rectangle between
    random boundary points with gently curving paths, sampled every
    ``sample_dt`` seconds."""

    bounds: tuple[float, float, float, float] = (0.0, 0.0, 12.0, 12.0)
    duration: float = 120.0
    mean_agents: float = 30.0
    speed_range: tuple[float, float] = (0.8, 1.6)
    sway_amplitude: float = 0.3
    sway_period: float = 4.0
    sample_dt: float = 0.4
    seed: int = 0


def synthetic_crowd(spec: CrowdSpec = CrowdSpec()) -> list[TimedTrack]:
    rng = np.random.default_rng(spec.seed)
    x0, y0, x1, y1 = spec.bounds
    w, h = x1 - x0, y1 - y0
    lo, hi = spec.speed_range
    mean_cross = math.hypot(w, h) * 0.75 / (0.5 * (lo + hi))
    rate = spec.mean_agents / mean_cross  # arrivals per second (Little's law)

    def boundary_point():
        u = rng.uniform(0.0, 2 * (w + h))
        if u < w:
            return np.array([x0 + u, y0])
        if u < w + h:
            return np.array([x1, y0 + u - w])
        if u < 2 * w + h:
            return np.array([x1 - (u - w - h), y1])
        return np.array([x0, y1 - (u - 2 * w - h)])

    # start already populated: walkers in progress at t=0 (negative arrival times)
    t = -mean_cross * 1.5
    tracks = []
    agent = 0
    while True:
        t += rng.exponential(1.0 / rate)
        if t >= spec.duration:
            break
        a = boundary_point()
        b = boundary_point()
        while np.hypot(*(b - a)) < 0.5 * min(w, h):
            b = boundary_point()
        speed = rng.uniform(lo, hi)
        length = float(np.hypot(*(b - a)))
        along = (b - a) / length
        normal = np.array([-along[1], along[0]])
        phase = rng.uniform(0.0, 2 * math.pi)
        t_end = t + length / speed
        k0 = math.ceil(max(t, 0.0) / spec.sample_dt)
        k1 = math.floor(min(t_end, spec.duration) / spec.sample_dt)
        if k1 - k0 >= 1:
            ts = np.arange(k0, k1 + 1) * spec.sample_dt
            s = (ts - t) * speed
            # sway vanishes at both ends so paths stay inside the rectangle
            env = np.sin(math.pi * s / length)
            sway = spec.sway_amplitude * env * np.sin(2 * math.pi * (ts - t) / spec.sway_period + phase)
            pos = a + s[:, None] * along + sway[:, None] * normal
            tracks.append(TimedTrack(agent, ts, pos))
        agent += 1
    return tracks

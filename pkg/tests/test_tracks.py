import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stplanner.world.tracks import (
    CrowdSpec,
    GridTrack,
    TimedTrack,
    TrackFormatError,
    convert_tracks,
    load_tracks,
    positions_at,
    read_raw_tracks,
    replay_observe,
    resample,
    scene_span,
    synthetic_crowd,
    tick_of,
    write_tracks,
)


def load(text):
    return load_tracks(io.StringIO(text))


def test_linear_interpolation():
    g = resample(TimedTrack(3, [0.0, 1.0], [(0.0, 0.0), (1.0, 0.0)]))
    assert g.tick0 == 0 and g.last_tick == 10
    assert g.pos[5] == pytest.approx((0.5, 0.0))


def test_offgrid_samples():
    g = resample(TimedTrack(0, [0.04, 0.44], [(0.0, 0.0), (4.0, 0.0)]))
    assert g.tick0 == 1 and g.last_tick == 4
    assert g.pos[:, 0] == pytest.approx([0.6, 1.6, 2.6, 3.6])


def test_too_short_for_a_tick():
    assert resample(TimedTrack(0, [0.01, 0.05], [(0, 0), (1, 1)])) is None


def test_empty_file():
    assert load("") == []
    assert load("# frame_dt=0.4\n") == []


def test_parses_and_scales_frames():
    tracks = load("# frame_dt=0.5\n0 1 0 0\n2 1 1 0\n")
    assert len(tracks) == 1 and tracks[0].agent_id == 1
    assert tracks[0].last_tick == 10
    assert tracks[0].pos[10] == pytest.approx((1.0, 0.0))


@pytest.mark.parametrize("text,line,fragment", [
    ("0 1 0 0\n", 1, "header"),
    ("# fps=25\n0 1 0 0\n", 1, "unknown schema"),
    ("# frame_dt=0.1\n0 1 0 0\n1 1 0\n", 3, "4 fields"),
    ("# frame_dt=0.1\n0 1 0 0\n1 1 0 zero\n", 3, "malformed"),
    ("# frame_dt=0.1\n\n0 1 0 0\n1 2 0 0\n0 1 1 1\n", 5, "does not increase"),
    ("# frame_dt=-1\n", 1, "positive"),
])
def test_errors_report_line(text, line, fragment):
    with pytest.raises(TrackFormatError) as e:
        load(text)
    assert e.value.line == line
    assert fragment in str(e.value)
    assert f":{line}:" in str(e.value)


def test_timed_track_rejects_non_increasing():
    with pytest.raises(ValueError):
        TimedTrack(0, [0.0, 0.0], [(0, 0), (1, 1)])


coords = st.floats(-50, 50, allow_nan=False)


@st.composite
def raw_tracks(draw):
    out = []
    for agent in range(draw(st.integers(0, 4))):
        n = draw(st.integers(2, 12))
        frames = np.cumsum(draw(st.lists(st.integers(1, 5), min_size=n, max_size=n))) + draw(st.integers(0, 30))
        pts = draw(st.lists(st.tuples(coords, coords), min_size=n, max_size=n))
        out.append(TimedTrack(agent, frames * 0.4, pts))
    return out


@given(raw_tracks())
def test_round_trip_is_idempotent(raw):
    buf = io.StringIO()
    write_tracks(raw, buf, frame_dt=0.4)
    first = load(buf.getvalue())
    again = io.StringIO()
    write_tracks(first, again)
    second = load(again.getvalue())
    assert len(first) == len(second)
    for a, b in zip(first, second):
        assert a.agent_id == b.agent_id and a.tick0 == b.tick0
        assert np.array_equal(a.pos, b.pos)
    third = io.StringIO()
    write_tracks(second, third)
    assert third.getvalue() == again.getvalue()


def test_file_round_trip(tmp_path):
    tracks = [GridTrack(7, 3, np.array([[0.1, 0.2], [1 / 3, 2 / 3]]))]
    write_tracks(tracks, tmp_path / "t.txt")
    back = load_tracks(tmp_path / "t.txt")
    assert back[0].tick0 == 3 and np.array_equal(back[0].pos, tracks[0].pos)


class TestReplayObserve:
    def test_uniform_motion(self):
        tr = GridTrack(1, 0, np.array([[0.1 * k, 2.0] for k in range(20)]))
        (o,) = replay_observe([tr], 1.0)
        assert o.id == 1
        assert o.vel == pytest.approx((1.0, 0.0))
        assert o.p0 == pytest.approx((1.0, 2.0)) and o.t0 == 1.0

    def test_first_sample_still(self):
        tr = GridTrack(1, 5, np.array([[0.0, 0.0], [0.1, 0.0]]))
        (o,) = replay_observe([tr], 0.5)
        assert o.vel == (0.0, 0.0)

    def test_absent_agents_skipped(self):
        tr = GridTrack(1, 5, np.array([[0.0, 0.0], [0.1, 0.0]]))
        assert replay_observe([tr], 0.2) == [] and replay_observe([tr], 0.7) == []

    def test_arc_uses_chord(self):
        th = np.arange(30) * 0.1
        tr = GridTrack(0, 0, np.stack([np.cos(th), np.sin(th)], axis=1))
        (o,) = replay_observe([tr], 1.2)
        chord = (np.array([math.cos(1.2), math.sin(1.2)]) - np.array([math.cos(1.1), math.sin(1.1)])) / 0.1
        assert o.vel == pytest.approx(tuple(chord), abs=1e-12)

    def test_off_grid_time(self):
        with pytest.raises(ValueError):
            replay_observe([GridTrack(1, 0, np.zeros((3, 2)))], 0.05)


def test_tick_of():
    assert tick_of(0.3) == 3 and tick_of(12.000000001) == 120


def test_positions_and_span():
    a = GridTrack(1, 0, np.zeros((5, 2)))
    b = GridTrack(2, 3, np.ones((5, 2)))
    ids, pos = positions_at([a, b], 4)
    assert ids.tolist() == [1, 2] and pos.shape == (2, 2)
    assert positions_at([a, b], 10)[0].tolist() == []
    assert scene_span([a, b]) == (0, 7) and scene_span([]) == (0, 0)


class TestConvert:
    def test_sgan(self, tmp_path):
        src = tmp_path / "in.txt"
        src.write_text("10\t1.0\t0.5\t0.25\n0\t1.0\t0.0\t0.0\n0 2 3 3\n")
        n = convert_tracks(src, tmp_path / "out.txt", "sgan", frame_dt=0.4)
        assert n == 3
        raw = read_raw_tracks(open(tmp_path / "out.txt"))
        assert [t.agent_id for t in raw] == [1, 2]
        assert raw[0].t.tolist() == [0.0, 4.0] and raw[0].pos[1].tolist() == [0.5, 0.25]

    def test_obsmat_columns(self, tmp_path):
        src = tmp_path / "obsmat.txt"
        src.write_text("6 1 2.5 0 7.5 0 0 0\n")
        convert_tracks(src, tmp_path / "out.txt", "obsmat")
        raw = read_raw_tracks(open(tmp_path / "out.txt"))
        assert raw[0].pos[0].tolist() == [2.5, 7.5]
        assert raw[0].t[0] == pytest.approx(6 / 15)

    def test_short_row(self, tmp_path):
        src = tmp_path / "bad.txt"
        src.write_text("0 1 2 3\n0 2 1\n")
        with pytest.raises(TrackFormatError) as e:
            convert_tracks(src, tmp_path / "out.txt")
        assert e.value.line == 2

    def test_unknown_layout(self, tmp_path):
        with pytest.raises(ValueError):
            convert_tracks(tmp_path / "x", tmp_path / "y", "csv")


def test_synthetic_crowd_density_and_determinism():
    spec = CrowdSpec(duration=60, mean_agents=20, seed=4)
    a, b = synthetic_crowd(spec), synthetic_crowd(spec)
    assert len(a) == len(b) and all(np.array_equal(x.pos, y.pos) for x, y in zip(a, b))
    grid = [resample(t) for t in a]
    counts = [len(positions_at([g for g in grid if g], k)[0]) for k in range(200, 500)]
    assert 10 < np.mean(counts) < 30

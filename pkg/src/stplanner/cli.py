"""Command-line entry point.

    stplanner run SPEC [--set path=value ...] [--out DIR] [--workers N]
    stplanner replay SPEC --episode I [--point K] [--out FILE]
    stplanner convert-tracks IN OUT [--layout sgan|obsmat] [--frame-dt S]
    stplanner init-spec OUT [--preset sim|replay] [--tracks PATH]
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys

from . import harness
from .world.tracks import LAYOUTS, TrackFormatError, convert_tracks

log = logging.getLogger("stplanner")

INFRA_ERRORS = (harness.SpecError, TrackFormatError, OSError)


def _json_default(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    raise TypeError(type(x))


def _summary(result: harness.ExperimentResult) -> str:
    lines = [f"{'value':>12} {'success':>8} {'coll':>5} {'tout':>5} {'time':>8} {'lat ms':>8} {'p99 ms':>8}"]
    for a, l in zip(harness.aggregate_rows(result), harness.latency_rows(result)):
        v = "-" if a["value"] is None else str(a["value"])
        lines.append(f"{v:>12} {a['success_rate']:>8.3f} {a['collisions']:>5} {a['timeouts']:>5} "
                     f"{a['time_mean']:>8.2f} {l['mean_ms']:>8.2f} {l['p99_ms']:>8.2f}")
    return "\n".join(lines)


def cmd_run(args) -> int:
    spec = harness.load_spec(args.spec, args.set)
    if args.trials is not None:
        spec = dataclasses.replace(spec, trials=args.trials)
    done = [0]
    total = spec.trials * (len(spec.sweep.values) if spec.sweep else 1)

    def progress(rec):
        done[0] += 1
        log.info("[%d/%d] point=%s trial=%d %s", done[0], total, rec.value, rec.trial,
                 "success" if rec.success else rec.failure_kind)

    result = harness.run_experiment(spec, workers=args.workers, progress=progress)
    out = args.out or f"results/{spec.name}"
    for path in harness.write_results(result, out):
        log.info("wrote %s", path)
    log.info("wrote %s", harness.emit_plot_data(result, out))
    print(_summary(result))
    return 0


def cmd_replay(args) -> int:
    spec = harness.load_spec(args.spec, args.set)
    points = harness.sweep_points(spec)
    if not 0 <= args.point < len(points):
        raise harness.SpecError(f"--point must be in [0, {len(points)})")
    value, point_spec = points[args.point]
    m = harness.run_trial(point_spec, args.episode, record_plans=True)
    doc = {
        "episode": args.episode, "point": args.point, "value": value,
        "seed": point_spec.base_seed + args.episode,
        "metrics": {k: v for k, v in dataclasses.asdict(m).items() if k != "plans"},
        "plans": m.plans,
    }
    text = json.dumps(harness.to_plain(doc), indent=1, default=_json_default)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        log.info("wrote %d plans to %s", len(m.plans), args.out)
    else:
        print(text)
    outcome = "success" if m.success else m.failure_kind
    log.info("episode %d: %s after %.2f s, %d plans", args.episode, outcome, m.elapsed, len(m.plans))
    return 0


def cmd_convert(args) -> int:
    n = convert_tracks(args.input, args.output, args.layout, args.frame_dt)
    log.info("wrote %d rows to %s", n, args.output)
    return 0


def cmd_init(args) -> int:
    if args.preset == "replay":
        spec = harness.replay_defaults(args.tracks or "data/crowd_30.txt")
    else:
        spec = harness.sim_defaults()
    with open(args.output, "w") as fh:
        fh.write(harness.dump_spec(spec))
    log.info("wrote %s", args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stplanner", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment spec")
    r.add_argument("spec")
    r.add_argument("--set", action="append", default=[], metavar="PATH=VALUE",
                   help="override a spec field, e.g. --set sim.n_agents=60")
    r.add_argument("--out", help="output directory (default results/<name>)")
    r.add_argument("--workers", type=int, help="parallel worker processes")
    r.add_argument("--trials", type=int)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("replay", help="re-run one episode and dump every plan")
    e.add_argument("spec")
    e.add_argument("--episode", type=int, required=True, help="trial index")
    e.add_argument("--point", type=int, default=0, help="sweep point index")
    e.add_argument("--set", action="append", default=[], metavar="PATH=VALUE")
    e.add_argument("--out", help="JSON output file (default stdout)")
    e.set_defaults(func=cmd_replay)

    c = sub.add_parser("convert-tracks", help="convert public pedestrian data to the track format")
    c.add_argument("input")
    c.add_argument("output")
    c.add_argument("--layout", choices=sorted(LAYOUTS), default="sgan")
    c.add_argument("--frame-dt", type=float, help="seconds per frame id (layout default otherwise)")
    c.set_defaults(func=cmd_convert)

    i = sub.add_parser("init-spec", help="write a spec file with every default spelled out")
    i.add_argument("output")
    i.add_argument("--preset", choices=["sim", "replay"], default="sim")
    i.add_argument("--tracks", help="track file for the replay preset")
    i.set_defaults(func=cmd_init)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except INFRA_ERRORS as e:
        log.error("%s", e)
        return 2

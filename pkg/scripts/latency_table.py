"""Per-scene planning latency (mean/std ms) of the search planner on the
replayed crowd scenes, plus success and time-to-goal for both planners."""
import argparse
import glob
import os

from stplanner import harness


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("scenes", nargs="*", help="track files (default data/*.txt)")
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--workers", type=int, default=1, help="keep 1 for clean timings")
    args = ap.parse_args()
    scenes = args.scenes or sorted(glob.glob("data/*.txt"))
    if not scenes:
        ap.error("no track files; run scripts/make_crowd_tracks.py first")
    print(f"{'scene':<14} {'planner':<12} {'success':>8} {'time s':>8} {'mean ms':>8} {'std ms':>8} {'p99 ms':>8}")
    for path in scenes:
        for planner in harness.PLANNERS:
            spec = harness.replay_defaults(path, trials=args.trials, planner=planner)
            result = harness.run_experiment(spec, workers=args.workers)
            a = harness.aggregate_rows(result)[0]
            lat = harness.latency_rows(result)[0]
            name = os.path.splitext(os.path.basename(path))[0]
            print(f"{name:<14} {planner:<12} {a['success_rate']:>8.2f} {a['time_mean']:>8.2f} "
                  f"{lat['mean_ms']:>8.2f} {lat['std_ms']:>8.2f} {lat['p99_ms']:>8.2f}")


if __name__ == "__main__":
    main()

"""Control experiments in the crowd simulator: vary one of agent count,
safety margin or maximum speed with the rest at defaults, for both the
search planner and wait-and-go.  Writes one plot table per sweep."""
import argparse
import dataclasses
import os

from stplanner import harness

SWEEPS = {
    "agents": ("sim.n_agents", [20, 40, 60, 80]),
    "margin": ("safety.margin", [0.1, 0.2, 0.3, 0.4, 0.5]),
    "speed": ("vehicle.v_max", [1.0, 1.4, 1.8, 2.2, 2.6]),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default="results/sim_sweeps")
    ap.add_argument("--only", choices=sorted(SWEEPS))
    args = ap.parse_args()
    for key, (param, values) in SWEEPS.items():
        if args.only and key != args.only:
            continue
        for planner in harness.PLANNERS:
            spec = harness.sim_defaults(trials=args.trials, planner=planner,
                                        sweep=harness.Sweep(param, tuple(values)))
            spec = dataclasses.replace(spec, name=f"{key}_{planner}")
            result = harness.run_experiment(spec, workers=args.workers)
            outdir = os.path.join(args.out, spec.name)
            harness.write_results(result, outdir)
            path = harness.emit_plot_data(result, outdir)
            print(f"== {spec.name} -> {path}")
            print(harness.aggregates_csv(result))


if __name__ == "__main__":
    main()

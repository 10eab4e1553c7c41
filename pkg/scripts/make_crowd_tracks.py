"""Write the synthetic recorded-crowd scenes used by the replay experiments.

Each scene is a 12 m square crossed by walkers sampled every 0.4 s (the
rate of the common public pedestrian datasets); the mean number of people
present is 20, 30 or 40.
"""
import argparse
import os

import numpy as np

from stplanner.world.tracks import CrowdSpec, load_tracks, positions_at, scene_span, synthetic_crowd, write_tracks

SCENES = {"crowd_20": (20, 0), "crowd_30": (30, 1), "crowd_40": (40, 2)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--out", default="data")
    ap.add_argument("--duration", type=float, default=120.0)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for name, (mean, seed) in SCENES.items():
        path = os.path.join(args.out, f"{name}.txt")
        tracks = synthetic_crowd(CrowdSpec(mean_agents=mean, duration=args.duration, seed=seed))
        write_tracks(tracks, path, frame_dt=0.4)
        grid = load_tracks(path)
        lo, hi = scene_span(grid)
        counts = [len(positions_at(grid, k)[0]) for k in range(lo, hi + 1)]
        print(f"{path}: {len(tracks)} walkers, {np.mean(counts):.1f} present on average "
              f"(min {min(counts)}, max {max(counts)})")


if __name__ == "__main__":
    main()

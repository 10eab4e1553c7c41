"""Batch-convert public pedestrian files into the native track format.

``sgan`` is the tab-separated ``frame ped x y`` layout (frames every 10,
0.04 s each); ``obsmat`` is the ETH ``frame ped x z y vx vz vy`` layout.
"""
import argparse
import os

from stplanner.world.tracks import LAYOUTS, convert_tracks


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("inputs", nargs="+")
    ap.add_argument("--out", default="data")
    ap.add_argument("--layout", choices=sorted(LAYOUTS), default="sgan")
    ap.add_argument("--frame-dt", type=float)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for src in args.inputs:
        stem = os.path.splitext(os.path.basename(src))[0]
        dest = os.path.join(args.out, f"{stem}.txt")
        n = convert_tracks(src, dest, args.layout, args.frame_dt)
        print(f"{src} -> {dest} ({n} rows)")


if __name__ == "__main__":
    main()

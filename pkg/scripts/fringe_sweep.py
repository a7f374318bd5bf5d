"""Franson fringe sweeps on the calibration presets, analytic and Monte Carlo.

    python scripts/fringe_sweep.py --seeds 20 --pairs 100000
"""
import argparse

import numpy as np

from franson_erasure.cli import sweep_rows
from franson_erasure.imaging import fit_contrast
from franson_erasure.scenefile import load_scene


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--scenes", nargs="*", default=["empty", "plate_one_arm", "plates_matched"])
    ap.add_argument("--steps", type=int, default=16)
    ap.add_argument("--pairs", type=int, default=100_000)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--keep-dark", action="store_true", help="do not subtract the dark floor")
    args = ap.parse_args()

    for name in args.scenes:
        scene = load_scene(name).scene
        ph, con, des = (np.array(c) for c in zip(*sweep_rows(scene, args.steps, 0, 0, analytic=True)))
        v_an, off = fit_contrast(ph, con, des)
        vis = []
        for seed in range(args.seeds):
            rows = sweep_rows(scene, args.steps, args.pairs, seed, subtract_dark=not args.keep_dark)
            vis.append(fit_contrast(*(np.array(c) for c in zip(*rows)))[0])
        print(f"{name:15s} analytic V={v_an:.6f} offset={off:+.4f}   "
              f"MC V={np.mean(vis):.4f} +/- {np.std(vis, ddof=1):.4f}")


if __name__ == "__main__":
    main()

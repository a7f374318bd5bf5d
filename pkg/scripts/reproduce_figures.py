"""Render every figure preset over several seeds and tabulate the region SNRs.

    python scripts/reproduce_figures.py --seeds 20 --pairs 1000000 --out runs/figures
"""
import argparse
import json
import time
from pathlib import Path

import numpy as np

from franson_erasure import pgm
from franson_erasure.imaging import Basis, difference_image, simulate_frame, snr
from franson_erasure.scene import fringe_field
from franson_erasure.scenefile import FIGURE_PRESETS, load_scene


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--pairs", type=int, default=1_000_000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, help="write seed-0 PGMs and a summary JSON here")
    args = ap.parse_args()

    summary = {}
    for name in FIGURE_PRESETS:
        doc = load_scene(name)
        field = fringe_field(doc.scene)
        vals = {p.name: [] for p in doc.snr}
        elapsed = []
        for seed in range(args.seeds):
            t0 = time.perf_counter()
            con = simulate_frame(doc.scene, Basis.CONSTRUCTIVE, args.pairs, seed,
                                 workers=args.workers, field=field)
            des = simulate_frame(doc.scene, Basis.DESTRUCTIVE, args.pairs, seed,
                                 workers=args.workers, field=field)
            elapsed.append(time.perf_counter() - t0)
            diff = difference_image(con, des)
            for p in doc.snr:
                vals[p.name].append(snr(diff, doc.region(p.region_in), doc.region(p.region_out)).snr)
            if args.out and seed == 0:
                args.out.mkdir(parents=True, exist_ok=True)
                pgm.write(args.out / f"{name}_con.pgm", np.minimum(con.counts, pgm.MAXVAL))
                pgm.write(args.out / f"{name}_des.pgm", np.minimum(des.counts, pgm.MAXVAL))
                pgm.write(args.out / f"{name}_diff.pgm", pgm.encode_diff(diff.values), [pgm.DIFF_COMMENT])
        summary[name] = {k: {"mean": float(np.mean(v)), "std": float(np.std(v, ddof=1)) if len(v) > 1 else 0.0,
                             "min": float(np.min(v)), "max": float(np.max(v))} for k, v in vals.items()}
        summary[name]["seconds_per_render"] = float(np.mean(elapsed))
        for k, s in summary[name].items():
            if isinstance(s, dict):
                print(f"{name:6s} {k:14s} SNR {s['mean']:6.3f} +/- {s['std']:.3f}  [{s['min']:.3f}, {s['max']:.3f}]")
    if args.out:
        (args.out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()

"""Photon budget for card authentication versus a BB84-style error-rate check,
plus the tamper curve (expected destructive fraction against OPD noise).

    python scripts/auth_budget.py
"""
import argparse

import numpy as np

from franson_erasure.auth import (
    expected_destructive_fraction,
    expected_tamper_fraction,
    random_card,
    required_pairs,
    tamper_model,
)
from franson_erasure.scene import GridSpec, Noise, SceneConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--floor", type=float, nargs="*", default=[0.0, 0.01, 0.05],
                    help="destructive fraction of matched cards (noise floor)")
    args = ap.parse_args()

    print("alpha=beta   floor   cards(1/2)   bb84(1/4)")
    for err in (1e-2, 1e-3, 1e-6, 1e-9):
        for f0 in args.floor:
            if f0 >= 0.25:
                continue
            print(f"{err:9.0e}   {f0:5.2f}   {required_pairs(err, err, 0.5, f0):10d}"
                  f"   {required_pairs(err, err, 0.25, f0):9d}")

    g = GridSpec(64, 64)
    scene = SceneConfig(g, noise=Noise(dark_counts=0.0, heralding_efficiency=1.0))
    card = random_card(g, 1)
    print("\nrms_opd[m]   closed_form   one_realization")
    for rms in np.geomspace(1e-10, 2e-4, 15):
        real = expected_destructive_fraction(card, tamper_model(card, rms, 3), scene)
        print(f"{rms:10.2e}   {expected_tamper_fraction(rms, scene):11.4f}   {real:15.4f}")


if __name__ == "__main__":
    main()

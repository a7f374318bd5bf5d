"""Command line interface.

    franson-erasure render  --scene fig2c --pairs 1000000 --seed 1 --out run/fig2c
    franson-erasure sweep   --scene empty.json --steps 16 --pairs 100000 --out sweep.csv
    franson-erasure auth    alice.pgm bob.pgm --pairs 10000 --seed 3
    franson-erasure analyze --diff run/fig2c_diff.pgm --region-in 24,4,39,19 --region-out 4,24,19,39
    franson-erasure card    --size 64x64 --seed 7 --out alice.pgm
    franson-erasure tamper  alice.pgm --rms 2e-4 --seed 1 --out forged.pgm

Exit status: 0 success / accept, 2 reject, 3 indeterminate, 1 error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import pgm, rng
from .auth import (
    ACCEPT,
    CARD_OPD_SCALE,
    DEFAULT_THRESHOLD,
    INDETERMINATE,
    KeyCard,
    random_card,
    run_authentication,
    tamper_model,
)
from .errors import DomainError
from .imaging import (
    Basis,
    DetectionFrame,
    DifferenceImage,
    difference_image,
    expected_counts,
    expected_rate_map,
    fit_contrast,
    simulate_frame,
    snr,
)
from .scene import GridSpec, Noise, PhaseMap, SceneConfig, fringe_field
from .scenefile import load_scene, parse_region

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REJECT = 2
EXIT_INDETERMINATE = 3

OPD_SCALE_KEY = "opd_scale_m"


class _Parser(argparse.ArgumentParser):
    # usage errors must not collide with the "reject" exit status
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _frames(scene: SceneConfig, pairs: int, seed: int, workers: int, analytic: bool):
    field = fringe_field(scene)
    out = []
    for basis in (Basis.CONSTRUCTIVE, Basis.DESTRUCTIVE):
        if analytic:
            counts = np.rint(expected_counts(scene, basis, pairs, field)).astype(np.int64)
            out.append(DetectionFrame(scene.grid, counts, basis, pairs, None))
        else:
            out.append(simulate_frame(scene, basis, pairs, seed, workers=workers, field=field))
    return out


def _report(r) -> dict:
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
            for k, v in asdict(r).items()}


def cmd_render(args) -> int:
    doc = load_scene(args.scene)
    con, des = _frames(doc.scene, args.pairs, args.seed, args.workers, args.analytic)
    diff = difference_image(con, des)
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    meta = [f"seed={args.seed}", f"pairs={args.pairs}", f"mode={'analytic' if args.analytic else 'mc'}"]
    clipped = False
    for frame in (con, des):
        clipped |= bool(frame.counts.max(initial=0) > pgm.MAXVAL)
        pgm.write(f"{prefix}_{frame.basis.value[:3]}.pgm", np.minimum(frame.counts, pgm.MAXVAL),
                  [f"basis={frame.basis.value}", *meta])
    pgm.write(f"{prefix}_diff.pgm", pgm.encode_diff(diff.values), [pgm.DIFF_COMMENT, *meta])

    snrs = {}
    for pair in doc.snr:
        snrs[pair.name] = _report(snr(diff, doc.region(pair.region_in), doc.region(pair.region_out)))
    if args.region_in or args.region_out:
        if not (args.region_in and args.region_out):
            raise DomainError("--region-in and --region-out go together")
        snrs["cli"] = _report(snr(diff, doc.region(args.region_in), doc.region(args.region_out)))
    stats = {
        "scene": str(args.scene),
        "grid": [doc.scene.grid.width, doc.scene.grid.height],
        "seed": args.seed,
        "pairs_per_basis": args.pairs,
        "mode": "analytic" if args.analytic else "mc",
        "trim_phase": doc.scene.trim_phase,
        "totals": {"constructive": con.total, "destructive": des.total},
        "clipped": clipped,
        "snr": snrs,
    }
    text = json.dumps(stats, indent=2, sort_keys=True) + "\n"
    Path(f"{prefix}_stats.json").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def sweep_rows(scene: SceneConfig, steps: int, pairs: int, seed: int,
               analytic: bool = False, workers: int = 1, subtract_dark: bool = False):
    """(trim_phase, con_rate, des_rate) per step; rates are recorded counts per pair
    (expected rate sums in analytic mode).

    With ``subtract_dark`` the expected dark total is removed from each Monte
    Carlo frame before normalizing, so the fringe contrast is not diluted by
    the dark floor.
    """
    if steps < 4:
        raise DomainError("a fringe sweep needs at least 4 steps")
    if not analytic and pairs < 1:
        raise DomainError("Monte Carlo sweeps need pairs >= 1")
    rows = []
    for k in range(steps):
        trim = 2 * math.pi * k / steps
        s = scene.with_trim(trim)
        if analytic:
            field = fringe_field(s)
            con = float(expected_rate_map(field, s, Basis.CONSTRUCTIVE).sum())
            des = float(expected_rate_map(field, s, Basis.DESTRUCTIVE).sum())
        else:
            step_seed = rng.stream_key(seed, k)
            con_f, des_f = _frames(s, pairs, step_seed, workers, False)
            dark = scene.noise.dark_counts * scene.grid.size if subtract_dark else 0.0
            con, des = (con_f.total - dark) / pairs, (des_f.total - dark) / pairs
        rows.append((trim, con, des))
    return rows


def cmd_sweep(args) -> int:
    doc = load_scene(args.scene)
    rows = sweep_rows(doc.scene, args.steps, args.pairs, args.seed, args.analytic, args.workers,
                      args.subtract_dark)
    ph, con, des = (np.array(c) for c in zip(*rows))
    vis, offset = fit_contrast(ph, con, des)
    lines = ["trim_phase,con_rate,des_rate"]
    lines += [f"{t!r},{c!r},{d!r}" for t, c, d in rows]
    lines += [f"# visibility={vis!r}", f"# phase_offset={offset!r}"]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"visibility={vis:.6f} phase_offset={offset:.6f}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def read_card(path, card_id=None) -> KeyCard:
    img, comments = pgm.read(path)
    scale = pgm.comment_value(comments, OPD_SCALE_KEY)
    scale = float(scale) if scale is not None else CARD_OPD_SCALE
    h, w = img.shape
    return KeyCard(card_id or Path(path).stem, PhaseMap(GridSpec(w, h), img * scale))


def write_card(path, card: KeyCard, scale: float = CARD_OPD_SCALE) -> None:
    gray = np.clip(np.rint(card.pattern.opd / scale), 0, pgm.MAXVAL).astype(np.int64)
    pgm.write(path, gray, [f"{OPD_SCALE_KEY}={scale!r}", f"card_id={card.id}"])


def cmd_auth(args) -> int:
    alice = read_card(args.card_a)
    bob = read_card(args.card_b)
    if alice.pattern.grid.shape != bob.pattern.grid.shape:
        raise DomainError(
            f"card rasters differ in size: {alice.pattern.grid.shape} vs {bob.pattern.grid.shape}")
    if args.scene:
        base = load_scene(args.scene).scene
    else:
        # bucket detector, no dark floor unless a scene asks for one
        base = SceneConfig(alice.pattern.grid, noise=Noise(dark_counts=0.0))
    result = run_authentication(alice, bob, args.pairs, args.seed, base,
                                threshold=args.threshold, workers=args.workers)
    out = _report(result)
    out.update({"card_a": str(args.card_a), "card_b": str(args.card_b),
                "pairs": args.pairs, "seed": args.seed, "threshold": args.threshold})
    sys.stdout.write(json.dumps(out, indent=2, sort_keys=True) + "\n")
    if result.decision == INDETERMINATE:
        return EXIT_INDETERMINATE
    return EXIT_OK if result.decision == ACCEPT else EXIT_REJECT


def cmd_analyze(args) -> int:
    if args.diff:
        img, _ = pgm.read(args.diff)
        values = pgm.decode_diff(img)
    elif args.con and args.des:
        con, _ = pgm.read(args.con)
        des, _ = pgm.read(args.des)
        if con.shape != des.shape:
            raise DomainError("constructive and destructive frames differ in size")
        values = con - des
    else:
        raise DomainError("give --diff, or both --con and --des")
    h, w = values.shape
    grid = GridSpec(w, h)
    doc = load_scene(args.scene) if args.scene else None
    region = (lambda s: doc.region(s)) if doc else (lambda s: parse_region(s, grid))
    rep = snr(DifferenceImage(grid, values), region(args.region_in), region(args.region_out))
    sys.stdout.write(json.dumps(_report(rep), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like 64x64, got {text!r}") from None
    return w, h


def cmd_card(args) -> int:
    w, h = args.size
    card = random_card(GridSpec(w, h), args.seed, Path(args.out).stem,
                       levels=args.levels, cell=args.cell)
    write_card(args.out, card)
    return EXIT_OK


def cmd_tamper(args) -> int:
    card = read_card(args.card)
    write_card(args.out, tamper_model(card, args.rms, args.seed))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="franson-erasure", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, pairs_default):
        sp.add_argument("--pairs", type=int, default=pairs_default)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=1)

    r = sub.add_parser("render", help="simulate constructive/destructive frames and their difference")
    r.add_argument("--scene", required=True, help="scene JSON path or preset name")
    common(r, 1_000_000)
    r.add_argument("--out", required=True, help="output prefix")
    r.add_argument("--region-in")
    r.add_argument("--region-out")
    r.add_argument("--analytic", action="store_true", help="write expected counts instead of MC")
    r.set_defaults(func=cmd_render)

    s = sub.add_parser("sweep", help="Franson fringe over the trim phase")
    s.add_argument("--scene", required=True)
    s.add_argument("--steps", type=int, default=16)
    common(s, 100_000)
    s.add_argument("--out", help="CSV path (stdout if omitted)")
    s.add_argument("--analytic", action="store_true")
    s.add_argument("--subtract-dark", action="store_true",
                   help="remove the expected dark total from each MC frame")
    s.set_defaults(func=cmd_sweep)

    a = sub.add_parser("auth", help="authenticate two key-card rasters")
    a.add_argument("card_a", help="Alice's card (idler arm), 16-bit PGM")
    a.add_argument("card_b", help="Bob's card (signal arm), 16-bit PGM")
    common(a, 10_000)
    a.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    a.add_argument("--scene", help="base scene (grid must match the cards)")
    a.set_defaults(func=cmd_auth)

    n = sub.add_parser("analyze", help="SNR of existing frames")
    n.add_argument("--diff")
    n.add_argument("--con")
    n.add_argument("--des")
    n.add_argument("--scene", help="scene providing named regions")
    n.add_argument("--region-in", required=True)
    n.add_argument("--region-out", required=True)
    n.set_defaults(func=cmd_analyze)

    c = sub.add_parser("card", help="write a random key card")
    c.add_argument("--size", type=_size, required=True, help="WIDTHxHEIGHT")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--levels", type=int, default=256)
    c.add_argument("--cell", type=int, default=1)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_card)

    t = sub.add_parser("tamper", help="write a noisy copy of a key card")
    t.add_argument("card")
    t.add_argument("--rms", type=float, required=True, help="OPD noise RMS, meters")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_tamper)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

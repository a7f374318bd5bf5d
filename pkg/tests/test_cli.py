import json
import subprocess
import sys

import numpy as np
import pytest

from franson_erasure import pgm
from franson_erasure.cli import main, read_card, sweep_rows, write_card
from franson_erasure.imaging import fit_contrast
from franson_erasure.scenefile import PRESETS, load_scene


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name", PRESETS)
def test_render_every_preset(tmp_path, capsys, name):
    code, out, _ = run(capsys, "render", "--scene", name, "--pairs", 10_000, "--seed", 1,
                       "--out", tmp_path / name)
    assert code == 0
    stats = json.loads(out)
    assert stats == json.loads((tmp_path / f"{name}_stats.json").read_text())
    con, _ = pgm.read(tmp_path / f"{name}_con.pgm")
    des, _ = pgm.read(tmp_path / f"{name}_des.pgm")
    diff, comments = pgm.read(tmp_path / f"{name}_diff.pgm")
    assert con.shape == (64, 64)
    assert np.array_equal(pgm.decode_diff(diff), con - des)
    assert pgm.DIFF_COMMENT in comments
    assert stats["totals"] == {"constructive": int(con.sum()), "destructive": int(des.sum())}


def test_analytic_empty_scene_has_dark_destructive_frame(tmp_path, capsys):
    code, _, _ = run(capsys, "render", "--scene", "empty", "--pairs", 10**6, "--analytic",
                     "--out", tmp_path / "e")
    assert code == 0
    des, _ = pgm.read(tmp_path / "e_des.pgm")
    con, _ = pgm.read(tmp_path / "e_con.pgm")
    assert des.max() == 0  # only the 0.05 dark floor, which rounds to zero
    assert con.min() > 0


@pytest.mark.parametrize("name,bright,dark", [
    ("fig2a", "open", "plate"),
    ("fig2b", "open", "plate"),
    ("fig2c", "overlap", "signal_only"),
    ("fig2c", "overlap", "idler_only"),
])
def test_fig2_difference_pattern(tmp_path, capsys, name, bright, dark):
    run(capsys, "render", "--scene", name, "--pairs", 10**6, "--seed", 3, "--out", tmp_path / "r")
    doc = load_scene(name)
    diff = pgm.decode_diff(pgm.read(tmp_path / "r_diff.pgm")[0])
    b = diff[doc.region(bright).slices()].mean()
    d = diff[doc.region(dark).slices()].mean()
    assert b > 40 and abs(d) < 5


def test_fig3b_is_blank(tmp_path, capsys):
    _, out, _ = run(capsys, "render", "--scene", "fig3b", "--pairs", 10**6, "--seed", 3,
                    "--out", tmp_path / "r")
    for rep in json.loads(out)["snr"].values():
        assert rep["snr"] < 0.5


def test_render_cli_regions_and_analyze(tmp_path, capsys):
    code, out, _ = run(capsys, "render", "--scene", "fig2a", "--pairs", 100_000, "--seed", 2,
                       "--out", tmp_path / "r", "--region-in", "plate", "--region-out", "24,44,39,59")
    assert code == 0
    cli_snr = json.loads(out)["snr"]["cli"]
    _, out, _ = run(capsys, "analyze", "--diff", tmp_path / "r_diff.pgm", "--scene", "fig2a",
                    "--region-in", "plate", "--region-out", "open")
    assert json.loads(out) == cli_snr
    _, out, _ = run(capsys, "analyze", "--con", tmp_path / "r_con.pgm", "--des", tmp_path / "r_des.pgm",
                    "--region-in", "4,24,19,39", "--region-out", "24,44,39,59")
    assert json.loads(out) == cli_snr


def test_render_is_byte_identical_across_workers(tmp_path, capsys):
    for w in (1, 4):
        run(capsys, "render", "--scene", "fig2c", "--pairs", 300_000, "--seed", 9,
            "--workers", w, "--out", tmp_path / f"w{w}")
    for suffix in ("con", "des", "diff"):
        a = (tmp_path / f"w1_{suffix}.pgm").read_bytes()
        b = (tmp_path / f"w4_{suffix}.pgm").read_bytes()
        assert a == b


def test_analytic_sweep_on_empty_scene(tmp_path, capsys):
    code, _, _ = run(capsys, "sweep", "--scene", "empty", "--analytic", "--out", tmp_path / "s.csv")
    assert code == 0
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "trim_phase,con_rate,des_rate"
    rows = np.array([[float(v) for v in l.split(",")] for l in lines[1:] if not l.startswith("#")])
    assert rows.shape == (16, 3)
    vis = float(lines[-2].split("=")[1])
    assert abs(vis - 1) < 1e-9
    eta = load_scene("empty").scene.noise.heralding_efficiency
    assert np.allclose(rows[:, 1], eta * 0.25 * (1 + np.cos(rows[:, 0])), atol=1e-12)


@pytest.mark.parametrize("name,check", [
    ("plate_one_arm", lambda v: v <= 0.01),
    ("plates_matched", lambda v: v >= 0.95),
])
def test_mc_sweep_visibility(name, check):
    scene = load_scene(name).scene
    for seed in range(5):
        rows = sweep_rows(scene, 8, 100_000, seed)
        ph, con, des = (np.array(c) for c in zip(*rows))
        assert check(fit_contrast(ph, con, des)[0])


def test_sweep_to_stdout(capsys):
    code, out, _ = run(capsys, "sweep", "--scene", "empty", "--steps", 4, "--analytic")
    assert code == 0 and out.startswith("trim_phase,con_rate,des_rate\n")


def test_card_files(tmp_path, capsys):
    assert run(capsys, "card", "--size", "32x24", "--seed", 4, "--out", tmp_path / "a.pgm")[0] == 0
    card = read_card(tmp_path / "a.pgm")
    assert card.pattern.grid.shape == (24, 32)
    write_card(tmp_path / "b.pgm", card)
    assert (tmp_path / "a.pgm").read_bytes() != b""
    assert np.array_equal(read_card(tmp_path / "b.pgm").pattern.opd, card.pattern.opd)


def test_auth_exit_codes(tmp_path, capsys):
    run(capsys, "card", "--size", "32x32", "--seed", 1, "--out", tmp_path / "a.pgm")
    run(capsys, "card", "--size", "32x32", "--seed", 2, "--out", tmp_path / "b.pgm")
    code, out, _ = run(capsys, "auth", tmp_path / "a.pgm", tmp_path / "a.pgm", "--seed", 1)
    res = json.loads(out)
    assert code == 0 and res["decision"] == "accept" and res["n_destructive"] == 0
    code, out, _ = run(capsys, "auth", tmp_path / "a.pgm", tmp_path / "b.pgm", "--seed", 1)
    assert code == 2 and json.loads(out)["decision"] == "reject"
    code, out, _ = run(capsys, "auth", tmp_path / "a.pgm", tmp_path / "a.pgm", "--pairs", 0)
    res = json.loads(out)
    assert code == 3 and res["decision"] == "indeterminate" and res["destructive_fraction"] is None


def test_tamper_cli(tmp_path, capsys):
    run(capsys, "card", "--size", "32x32", "--seed", 1, "--out", tmp_path / "a.pgm")
    assert run(capsys, "tamper", tmp_path / "a.pgm", "--rms", 2e-4, "--seed", 5,
               "--out", tmp_path / "f.pgm")[0] == 0
    code, _, _ = run(capsys, "auth", tmp_path / "a.pgm", tmp_path / "f.pgm", "--seed", 1)
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["render", "--scene", "nope", "--out", "x"],
    ["auth", "missing_a.pgm", "missing_b.pgm"],
    ["card", "--size", "64by64", "--out", "x.pgm"],
    ["sweep", "--scene", "empty", "--steps", "2"],
    ["analyze", "--region-in", "full", "--region-out", "full"],
    ["bogus"],
])
def test_errors_exit_1(tmp_path, capsys, monkeypatch, argv):
    monkeypatch.chdir(tmp_path)
    try:
        code = main(argv)
    except SystemExit as e:
        code = e.code
    assert code == 1
    assert capsys.readouterr().err


def test_auth_size_mismatch(tmp_path, capsys):
    run(capsys, "card", "--size", "32x32", "--seed", 1, "--out", tmp_path / "a.pgm")
    run(capsys, "card", "--size", "16x16", "--seed", 1, "--out", tmp_path / "b.pgm")
    code, _, err = run(capsys, "auth", tmp_path / "a.pgm", tmp_path / "b.pgm")
    assert code == 1 and "differ in size" in err


def test_module_entry_point(tmp_path):
    p = subprocess.run([sys.executable, "-m", "franson_erasure", "card", "--size", "8x8",
                        "--out", str(tmp_path / "c.pgm")], capture_output=True)
    assert p.returncode == 0 and (tmp_path / "c.pgm").exists()

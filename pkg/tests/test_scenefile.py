import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_scene
from franson_erasure.imaging import Basis, expected_counts
from franson_erasure.scene import GridSpec, Polygon, RegionSpec, fringe_field
from franson_erasure.scenefile import (
    PRESETS,
    SceneError,
    load_scene,
    parse_region,
    parse_scene,
    preset_text,
    serialize_document,
    serialize_scene,
)


def test_minimal_document_defaults():
    doc = parse_scene('{"grid": {}}')
    sc = doc.scene
    assert sc.grid.shape == (256, 256)
    assert sc.pump_wavelength == 355e-9 and sc.photon_wavelength == 710e-9
    assert sc.coherence_length == 2e-5
    assert sc.noise.dark_counts == 0.05 and sc.noise.heralding_efficiency == 0.5
    assert sc.signal_cw_objects == () and sc.idler_cw_objects == ()
    assert doc.regions == {} and doc.snr == ()


@pytest.mark.parametrize("name", PRESETS)
def test_presets_parse(name):
    doc = load_scene(name)
    assert doc.scene.grid.shape == (64, 64)
    for pair in doc.snr:
        assert not doc.region(pair.region_in).overlaps(doc.region(pair.region_out))


def test_load_from_file(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(preset_text("fig2a"))
    assert serialize_document(load_scene(str(p))) == serialize_document(load_scene("fig2a"))
    with pytest.raises(SceneError, match="no scene file or preset"):
        load_scene(str(tmp_path / "missing.json"))


def test_misspelled_key_is_named():
    with pytest.raises(SceneError, match="beam.radus"):
        parse_scene('{"grid": {}, "beam": {"radus": 3}}')
    with pytest.raises(SceneError, match="cohrence_length"):
        parse_scene('{"grid": {}, "cohrence_length": 1e-5}')


def test_missing_keys_listed_together():
    text = json.dumps({"objects": {"a": {"shape": "full"}, "b": {"thickness": 1e-3}}})
    with pytest.raises(SceneError) as e:
        parse_scene(text)
    msg = str(e.value)
    for k in ("grid", "objects.a.thickness", "objects.b.shape"):
        assert k in msg


def test_unknown_and_missing_reported_together():
    with pytest.raises(SceneError) as e:
        parse_scene('{"grdi": {}}')
    assert "grdi" in str(e.value) and "missing" in str(e.value)


def test_syntax_error_location():
    with pytest.raises(SceneError, match=r"line 3, column 5"):
        parse_scene('{\n  "grid": {},\n    oops\n}')


@pytest.mark.parametrize("text,match", [
    ('{"grid": {"width": 1.5}}', "grid.width"),
    ('{"grid": {}, "signal_cw": ["nope"]}', "undefined"),
    ('{"grid": {"width": 8, "height": 8}, "regions": {"r": [0, 0, 8, 8]}}', "region"),
    ('{"grid": {"width": 8, "height": 8}, "objects": {"p": {"shape": {"circle": 3}, "thickness": 1}}}',
     "circle"),
    ('{"grid": {"width": 8, "height": 8}, "objects": {"p": {"shape": {"rectangle": [0, 0, 9, 3]}, '
     '"thickness": 1e-3}}}', "grid"),
    ('{"grid": {}, "noise": {"heralding_efficiency": 1.5}}', "efficiency"),
    ('{"grid": {}, "snr": [{"in": "a", "out": "full"}]}', "'a'"),
    ('{"grid": {}, "pump_wavelength": true}', "pump_wavelength"),
])
def test_semantic_errors(text, match):
    with pytest.raises(SceneError, match=match):
        parse_scene(text)


def _trim_doc(apply_to, arms=("signal_cw",)):
    d = {"grid": {"width": 16, "height": 16},
         "objects": {"p": {"shape": {"rectangle": [0, 0, 7, 15]}, "thickness": 3e-6},
                     "m": {"opd": np.zeros((16, 16)).tolist()}},
         "regions": {"r": [0, 0, 3, 15]},
         "auto_trim": {"region": "r", "apply_to": apply_to}}
    for a in arms:
        d[a] = ["p"]
    return json.dumps(d)


def test_auto_trim_to_object_makes_region_constructive():
    doc = parse_scene(_trim_doc("p"))
    f = fringe_field(doc.scene)
    assert np.allclose(np.cos(f.phi_total[:, :4]), 1.0, atol=1e-9)
    # uncovered half keeps its original phase
    assert np.allclose(np.cos(f.phi_total[:, 8:]), 1.0, atol=1e-12)


def test_auto_trim_to_scene():
    doc = parse_scene(_trim_doc("scene"))
    assert doc.scene.trim_phase != 0
    f = fringe_field(doc.scene)
    assert np.allclose(np.cos(f.phi_total[:, :4]), 1.0, atol=1e-9)


@pytest.mark.parametrize("target,arms,match", [
    ("q", ("signal_cw",), "no glass object"),
    ("m", ("signal_cw",), "no glass object"),
    ("p", ("signal_cw", "idler_cw"), "exactly one arm"),
    ("p", (), "exactly one arm"),
])
def test_auto_trim_target_errors(target, arms, match):
    with pytest.raises(SceneError, match=match):
        parse_scene(_trim_doc(target, arms))


def test_region_specs():
    g = GridSpec(16, 16)
    assert parse_region("full", g) == RegionSpec(0, 0, 15, 15)
    assert parse_region("1,2,3,4", g) == RegionSpec(1, 2, 3, 4)
    with pytest.raises(SceneError):
        parse_region("centre", g)
    doc = load_scene("fig2a")
    assert doc.region("plate") == doc.regions["plate"]


def _same_scene(a, b, tol=1e-12):
    fa, fb = fringe_field(a), fringe_field(b)
    assert np.max(np.abs(np.angle(np.exp(1j * (fa.phi_total - fb.phi_total))))) <= tol
    assert np.max(np.abs(fa.visibility - fb.visibility)) <= tol
    for basis in Basis:
        ea, eb = expected_counts(a, basis, 1000), expected_counts(b, basis, 1000)
        assert np.max(np.abs(ea - eb)) <= tol * max(1.0, np.max(np.abs(ea)))


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_round_trip(seed, dark):
    sc = random_scene(np.random.default_rng(seed), dark=dark)
    back = parse_scene(serialize_scene(sc)).scene
    _same_scene(sc, back)
    assert serialize_scene(back) == serialize_scene(sc)


@pytest.mark.parametrize("name", PRESETS)
def test_preset_round_trip(name):
    doc = load_scene(name)
    back = parse_scene(serialize_document(doc))
    _same_scene(doc.scene, back.scene)
    assert back.regions == doc.regions and back.snr == doc.snr


def test_round_trip_polygon_and_phase_map():
    g = GridSpec(16, 16)
    text = json.dumps({
        "grid": {"width": 16, "height": 16},
        "objects": {"poly": {"shape": {"polygon": [[1, 1], [14, 2.5], [7, 13]]}, "thickness": 1e-5},
                    "mask": {"shape": {"mask": ["01" * 8] * 16}, "thickness": 2e-5},
                    "map": {"opd": (np.arange(256).reshape(16, 16) * 1.3e-8).tolist()}},
        "signal_cw": ["poly", "map"], "idler_cw": ["mask"],
    })
    doc = parse_scene(text)
    assert isinstance(doc.scene.signal_cw_objects[0].shape, Polygon)
    _same_scene(doc.scene, parse_scene(serialize_document(doc)).scene)
    assert doc.scene.grid == GridSpec(16, 16, g.pitch)

"""JSON scene documents.

Schema (all keys optional except ``grid``; unknown keys are rejected)::

    {
      "description": "free text",
      "grid": {"width": 256, "height": 256, "pitch": 1e-5},
      "pump_wavelength": 355e-9,          # meters
      "coherence_length": 2e-5,           # meters
      "crystal_phase": 0.0,               # radians
      "trim_phase": 0.0,                  # radians
      "psf_sigma": 0.0,                   # pixels
      "beam": {"center": [x, y], "radius": 1/e^2 radius in pixels},
      "noise": {"dark_counts": 0.05, "heralding_efficiency": 0.5},
      "objects": {
        "<name>": {"shape": SHAPE, "thickness": 1e-3,
                   "refractive_index": 1.52, "tilt_opd_offset": 0.0},
        "<name>": {"opd": [[...row...], ...]}          # raw OPD map, meters
      },
      "signal_cw": ["<name>", ...],
      "idler_cw": ["<name>", ...],
      "regions": {"<name>": [x0, y0, x1, y1]},          # inclusive pixel box
      "auto_trim": {"region": "<region name>" | "full", "apply_to": "scene" | "<object name>"},
      "snr": [{"name": "...", "in": "<region>", "out": "<region>"}]
    }

    SHAPE := "full" | {"rectangle": [x0, y0, x1, y1]}
           | {"polygon": [[x, y], ...]} | {"mask": ["0110...", ...]}

``auto_trim`` is resolved at parse time: the trim is folded into
``trim_phase`` (``apply_to: "scene"``) or into the named object's tilt OPD,
which only shifts the phase where that object sits.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import DomainError
from .scene import (
    Beam,
    GlassObject,
    GridSpec,
    Noise,
    PhaseMap,
    Polygon,
    RasterMask,
    Rectangle,
    RegionSpec,
    SceneConfig,
    auto_trim,
    trim_opd,
)

FIGURE_PRESETS = ("fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c")
PRESETS = FIGURE_PRESETS + ("empty", "plate_one_arm", "plates_matched")

DEFAULT_GRID = 256

_TOP_KEYS = {
    "description", "grid", "pump_wavelength", "coherence_length", "crystal_phase",
    "trim_phase", "psf_sigma", "beam", "noise", "objects", "signal_cw", "idler_cw",
    "regions", "auto_trim", "snr",
}
_GRID_KEYS = {"width", "height", "pitch"}
_BEAM_KEYS = {"center", "radius"}
_NOISE_KEYS = {"dark_counts", "heralding_efficiency"}
_GLASS_KEYS = {"shape", "thickness", "refractive_index", "tilt_opd_offset"}
_TRIM_KEYS = {"region", "apply_to"}
_SNR_KEYS = {"name", "in", "out"}


class SceneError(DomainError):
    pass


@dataclass(frozen=True)
class SnrPair:
    name: str
    region_in: str
    region_out: str


@dataclass(frozen=True)
class SceneDocument:
    scene: SceneConfig
    regions: dict[str, RegionSpec] = field(default_factory=dict)
    snr: tuple[SnrPair, ...] = ()
    description: str = ""

    def region(self, spec: str) -> RegionSpec:
        """Named region, ``"full"``, or a literal ``"x0,y0,x1,y1"``."""
        if spec in self.regions:
            return self.regions[spec]
        return parse_region(spec, self.scene.grid)


def parse_region(spec: str, grid: Optional[GridSpec] = None) -> RegionSpec:
    if spec == "full" and grid is not None:
        return RegionSpec.full(grid)
    try:
        x0, y0, x1, y1 = (int(v) for v in spec.split(","))
    except ValueError:
        raise SceneError(f"region {spec!r} is neither a known name nor 'x0,y0,x1,y1'") from None
    r = RegionSpec(x0, y0, x1, y1)
    if grid is not None:
        r.validate(grid)
    return r


class _Checker:
    """Collects unknown and missing keys so all problems surface in one error."""

    def __init__(self):
        self.unknown: list[str] = []
        self.missing: list[str] = []

    def keys(self, obj: Any, path: str, allowed: set, required: tuple = ()) -> dict:
        if not isinstance(obj, dict):
            raise SceneError(f"{path or 'document'} must be an object")
        self.unknown += [f"{path}{k}" for k in obj if k not in allowed]
        self.missing += [f"{path}{k}" for k in required if k not in obj]
        return obj

    def raise_if_bad(self):
        msgs = []
        if self.unknown:
            msgs.append("unknown key(s): " + ", ".join(self.unknown))
        if self.missing:
            msgs.append("missing required key(s): " + ", ".join(self.missing))
        if msgs:
            raise SceneError("; ".join(msgs))


def _num(v, key: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SceneError(f"{key} must be a number, got {v!r}")
    if not math.isfinite(v):
        raise SceneError(f"{key} must be finite")
    return float(v)


def _int(v, key: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise SceneError(f"{key} must be an integer, got {v!r}")
    return v


def _box(v, key: str) -> tuple[int, int, int, int]:
    if not (isinstance(v, list) and len(v) == 4):
        raise SceneError(f"{key} must be [x0, y0, x1, y1]")
    return tuple(_int(x, key) for x in v)


def _shape(v, key: str, grid: GridSpec):
    if v == "full":
        return Rectangle(0, 0, grid.width - 1, grid.height - 1)
    if not (isinstance(v, dict) and len(v) == 1):
        raise SceneError(f"{key} must be 'full' or a single-key object (rectangle/polygon/mask)")
    (kind, data), = v.items()
    if kind == "rectangle":
        return Rectangle(*_box(data, f"{key}.rectangle"))
    if kind == "polygon":
        if not isinstance(data, list) or not all(isinstance(p, list) and len(p) == 2 for p in data):
            raise SceneError(f"{key}.polygon must be a list of [x, y] points")
        return Polygon(tuple((_num(x, key), _num(y, key)) for x, y in data))
    if kind == "mask":
        if not isinstance(data, list) or not all(isinstance(r, str) for r in data):
            raise SceneError(f"{key}.mask must be a list of '0'/'1' strings")
        if any(set(r) - {"0", "1"} for r in data):
            raise SceneError(f"{key}.mask rows may only contain '0' and '1'")
        return RasterMask(np.array([[c == "1" for c in r] for r in data], dtype=bool))
    raise SceneError(f"unknown shape kind {kind!r} at {key}")


def _build(doc: dict) -> SceneDocument:
    chk = _Checker()
    chk.keys(doc, "", _TOP_KEYS, required=("grid",))
    g = doc.get("grid", {})
    chk.keys(g, "grid.", _GRID_KEYS)
    beam = chk.keys(doc.get("beam", {}), "beam.", _BEAM_KEYS)
    noise = chk.keys(doc.get("noise", {}), "noise.", _NOISE_KEYS)
    objects = doc.get("objects", {})
    if not isinstance(objects, dict):
        raise SceneError("objects must be an object mapping names to definitions")
    for name, o in objects.items():
        if isinstance(o, dict) and "opd" in o:
            chk.keys(o, f"objects.{name}.", {"opd"})
        else:
            chk.keys(o, f"objects.{name}.", _GLASS_KEYS, required=("shape", "thickness"))
    trim = doc.get("auto_trim")
    if trim is not None:
        chk.keys(trim, "auto_trim.", _TRIM_KEYS, required=("region",))
    snr_list = doc.get("snr", [])
    if not isinstance(snr_list, list):
        raise SceneError("snr must be a list")
    for k, s in enumerate(snr_list):
        chk.keys(s, f"snr[{k}].", _SNR_KEYS, required=("in", "out"))
    chk.raise_if_bad()

    grid = GridSpec(
        _int(g.get("width", DEFAULT_GRID), "grid.width"),
        _int(g.get("height", DEFAULT_GRID), "grid.height"),
        _num(g.get("pitch", 1e-5), "grid.pitch"),
    )

    library: dict[str, Any] = {}
    for name, o in objects.items():
        if "opd" in o:
            library[name] = PhaseMap(grid, np.array(o["opd"], dtype=float))
            continue
        kw = {}
        if "refractive_index" in o:
            kw["refractive_index"] = _num(o["refractive_index"], f"objects.{name}.refractive_index")
        if "tilt_opd_offset" in o:
            kw["tilt_opd_offset"] = _num(o["tilt_opd_offset"], f"objects.{name}.tilt_opd_offset")
        obj = GlassObject(_shape(o["shape"], f"objects.{name}.shape", grid),
                          _num(o["thickness"], f"objects.{name}.thickness"), **kw)
        obj.shape.footprint(grid)  # raises if outside the grid
        library[name] = obj

    def arm(key):
        names = doc.get(key, [])
        if not isinstance(names, list):
            raise SceneError(f"{key} must be a list of object names")
        bad = [n for n in names if n not in library]
        if bad:
            raise SceneError(f"{key} references undefined object(s): {', '.join(map(str, bad))}")
        return names

    signal_names, idler_names = arm("signal_cw"), arm("idler_cw")

    center = beam.get("center")
    if center is not None and not (isinstance(center, list) and len(center) == 2):
        raise SceneError("beam.center must be [x, y]")
    scene_kw = {
        k: _num(doc[k], k)
        for k in ("pump_wavelength", "coherence_length", "crystal_phase", "trim_phase", "psf_sigma")
        if k in doc
    }
    scene = SceneConfig(
        grid=grid,
        signal_cw_objects=tuple(library[n] for n in signal_names),
        idler_cw_objects=tuple(library[n] for n in idler_names),
        beam=Beam(
            tuple(_num(c, "beam.center") for c in center) if center is not None else None,
            _num(beam["radius"], "beam.radius") if "radius" in beam else None,
        ),
        noise=Noise(**{k: _num(v, f"noise.{k}") for k, v in noise.items()}),
        **scene_kw,
    )

    regions_doc = doc.get("regions", {})
    if not isinstance(regions_doc, dict):
        raise SceneError("regions must be an object mapping names to boxes")
    regions = {}
    for name, box in regions_doc.items():
        r = RegionSpec(*_box(box, f"regions.{name}"))
        r.validate(grid)
        regions[name] = r

    out = SceneDocument(scene, regions, description=str(doc.get("description", "")))

    if trim is not None:
        region = out.region(trim["region"])
        target = trim.get("apply_to", "scene")
        t = auto_trim(scene, region)
        if target == "scene":
            scene = scene.with_trim(scene.trim_phase + t)
        else:
            if target not in library or not isinstance(library[target], GlassObject):
                raise SceneError(f"auto_trim.apply_to names no glass object: {target!r}")
            in_s, in_i = target in signal_names, target in idler_names
            if in_s == in_i:
                raise SceneError(f"auto_trim.apply_to object {target!r} must sit in exactly one arm")
            obj = library[target]
            tilted = replace(obj, tilt_opd_offset=obj.tilt_opd_offset + trim_opd(scene, t))
            swap = lambda names: tuple(tilted if n == target else library[n] for n in names)
            scene = replace(scene, signal_cw_objects=swap(signal_names),
                            idler_cw_objects=swap(idler_names))

    pairs = []
    for k, s in enumerate(snr_list):
        for side in ("in", "out"):
            out.region(s[side])
        pairs.append(SnrPair(str(s.get("name", f"snr{k}")), s["in"], s["out"]))
    return replace(out, scene=scene, snr=tuple(pairs))


def parse_scene(text: str) -> SceneDocument:
    """Parse and validate a scene document.

    Raises SceneError with line/column for syntax errors, the offending key
    for semantic errors, and every missing required key at once.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneError(f"syntax error at line {e.lineno}, column {e.colno}: {e.msg}") from None
    try:
        return _build(doc)
    except SceneError:
        raise
    except DomainError as e:
        raise SceneError(str(e)) from None


def preset_text(name: str) -> str:
    return resources.files(__package__).joinpath("presets", f"{name}.json").read_text("utf-8")


def load_scene(path_or_preset: str) -> SceneDocument:
    """Load a scene from a file path or a bundled preset name."""
    p = Path(path_or_preset)
    if p.is_file():
        return parse_scene(p.read_text("utf-8"))
    if path_or_preset in PRESETS:
        return parse_scene(preset_text(path_or_preset))
    raise SceneError(f"no scene file or preset named {path_or_preset!r}")


def _shape_doc(shape) -> Any:
    if isinstance(shape, Rectangle):
        return {"rectangle": [shape.x0, shape.y0, shape.x1, shape.y1]}
    if isinstance(shape, Polygon):
        return {"polygon": [list(v) for v in shape.vertices]}
    return {"mask": ["".join("1" if b else "0" for b in row) for row in shape.mask]}


def scene_to_dict(scene: SceneConfig, regions: Optional[dict] = None,
                  snr: tuple[SnrPair, ...] = (), description: str = "") -> dict:
    objects: dict[str, Any] = {}

    def add(items, prefix):
        names = []
        for k, o in enumerate(items):
            name = f"{prefix}{k}"
            if isinstance(o, PhaseMap):
                objects[name] = {"opd": o.opd.tolist()}
            else:
                objects[name] = {
                    "shape": _shape_doc(o.shape),
                    "thickness": o.thickness,
                    "refractive_index": o.refractive_index,
                    "tilt_opd_offset": o.tilt_opd_offset,
                }
            names.append(name)
        return names

    doc: dict[str, Any] = {}
    if description:
        doc["description"] = description
    doc.update({
        "grid": {"width": scene.grid.width, "height": scene.grid.height, "pitch": scene.grid.pitch},
        "pump_wavelength": scene.pump_wavelength,
        "coherence_length": scene.coherence_length,
        "crystal_phase": scene.crystal_phase,
        "trim_phase": scene.trim_phase,
        "psf_sigma": scene.psf_sigma,
        "beam": {},
        "noise": {"dark_counts": scene.noise.dark_counts,
                  "heralding_efficiency": scene.noise.heralding_efficiency},
    })
    if scene.beam.center is not None:
        doc["beam"]["center"] = list(scene.beam.center)
    if scene.beam.radius is not None:
        doc["beam"]["radius"] = scene.beam.radius
    doc["signal_cw"] = add(scene.signal_cw_objects, "s")
    doc["idler_cw"] = add(scene.idler_cw_objects, "i")
    doc["objects"] = objects
    if regions:
        doc["regions"] = {n: [r.x0, r.y0, r.x1, r.y1] for n, r in regions.items()}
    if snr:
        doc["snr"] = [{"name": s.name, "in": s.region_in, "out": s.region_out} for s in snr]
    return doc


def serialize_scene(scene: SceneConfig, regions: Optional[dict] = None,
                    snr: tuple[SnrPair, ...] = (), description: str = "") -> str:
    """JSON text that :func:`parse_scene` turns back into an equivalent scene."""
    return json.dumps(scene_to_dict(scene, regions, snr, description), indent=2)


def serialize_document(doc: SceneDocument) -> str:
    return serialize_scene(doc.scene, doc.regions, doc.snr, doc.description)

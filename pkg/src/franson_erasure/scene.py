"""Phase objects in the clockwise Sagnac arms and the fringe field they produce.

Coordinates are pixels: ``x`` indexes columns, ``y`` rows, and arrays are
shaped ``(height, width)``. Optical path differences are in meters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .errors import AmbiguousTrimError, DomainError

DEFAULT_INDEX = 1.52
DEFAULT_PUMP_WAVELENGTH = 355e-9
DEFAULT_COHERENCE_LENGTH = 2e-5
DEFAULT_PITCH = 1e-5

# below this resultant length the circular mean has no usable direction
_AMBIGUOUS_RESULTANT = 1e-12


@dataclass(frozen=True)
class GridSpec:
    width: int
    height: int
    pitch: float = DEFAULT_PITCH

    def __post_init__(self):
        if int(self.width) < 1 or int(self.height) < 1:
            raise DomainError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if not self.pitch > 0:
            raise DomainError(f"pitch must be positive, got {self.pitch}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def size(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class RegionSpec:
    """Inclusive pixel box ``[x0, x1] x [y0, y1]``."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise DomainError(f"empty region {self}")

    @classmethod
    def full(cls, grid: GridSpec) -> "RegionSpec":
        return cls(0, 0, grid.width - 1, grid.height - 1)

    @property
    def npix(self) -> int:
        return (self.x1 - self.x0 + 1) * (self.y1 - self.y0 + 1)

    def validate(self, grid: GridSpec) -> None:
        if self.x0 < 0 or self.y0 < 0 or self.x1 >= grid.width or self.y1 >= grid.height:
            raise DomainError(f"region {self} lies outside the {grid.width}x{grid.height} grid")

    def slices(self) -> tuple[slice, slice]:
        return slice(self.y0, self.y1 + 1), slice(self.x0, self.x1 + 1)

    def mask(self, grid: GridSpec) -> np.ndarray:
        self.validate(grid)
        m = np.zeros(grid.shape, dtype=bool)
        m[self.slices()] = True
        return m

    def overlaps(self, other: "RegionSpec") -> bool:
        return not (
            self.x1 < other.x0 or other.x1 < self.x0 or self.y1 < other.y0 or other.y1 < self.y0
        )


# -- object footprints -------------------------------------------------------

@dataclass(frozen=True)
class Rectangle:
    x0: int
    y0: int
    x1: int
    y1: int

    def footprint(self, grid: GridSpec) -> np.ndarray:
        return RegionSpec(self.x0, self.y0, self.x1, self.y1).mask(grid)


@dataclass(frozen=True)
class Polygon:
    """Closed polygon in pixel coordinates; covers pixels whose centers fall inside."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        if len(verts) < 3:
            raise DomainError("polygon needs at least 3 vertices")
        object.__setattr__(self, "vertices", verts)

    def footprint(self, grid: GridSpec) -> np.ndarray:
        v = np.asarray(self.vertices)
        if (
            v[:, 0].min() < -0.5
            or v[:, 1].min() < -0.5
            or v[:, 0].max() > grid.width - 0.5
            or v[:, 1].max() > grid.height - 0.5
        ):
            raise DomainError("polygon extends outside the grid")
        yy, xx = np.mgrid[0 : grid.height, 0 : grid.width].astype(float)
        inside = np.zeros(grid.shape, dtype=bool)
        # even-odd rule, horizontal ray towards +x
        for (xa, ya), (xb, yb) in zip(v, np.roll(v, -1, axis=0)):
            if ya == yb:
                continue
            crosses = (ya > yy) != (yb > yy)
            x_cross = xa + (yy - ya) * (xb - xa) / (yb - ya)
            inside ^= crosses & (xx < x_cross)
        return inside


@dataclass(frozen=True, eq=False)
class RasterMask:
    mask: np.ndarray

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool)
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    def footprint(self, grid: GridSpec) -> np.ndarray:
        if self.mask.shape != grid.shape:
            raise DomainError(f"mask shape {self.mask.shape} does not match grid {grid.shape}")
        return self.mask.copy()

    def __eq__(self, other):
        return isinstance(other, RasterMask) and np.array_equal(self.mask, other.mask)


Shape = Union[Rectangle, Polygon, RasterMask]


@dataclass(frozen=True)
class GlassObject:
    shape: Shape
    thickness: float
    refractive_index: float = DEFAULT_INDEX
    tilt_opd_offset: float = 0.0

    def __post_init__(self):
        if not (self.thickness >= 0 and math.isfinite(self.thickness)):
            raise DomainError(f"thickness must be finite and >= 0, got {self.thickness}")
        if not self.refractive_index > 1:
            raise DomainError(f"refractive index must exceed 1, got {self.refractive_index}")
        if not math.isfinite(self.tilt_opd_offset):
            raise DomainError("tilt_opd_offset must be finite")


@dataclass(frozen=True, eq=False)
class PhaseMap:
    grid: GridSpec
    opd: np.ndarray

    def __post_init__(self):
        opd = np.array(self.opd, dtype=float)
        if opd.shape != self.grid.shape:
            raise DomainError(f"opd shape {opd.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(opd)):
            raise DomainError("opd has non-finite entries")
        opd.setflags(write=False)
        object.__setattr__(self, "opd", opd)

    def __eq__(self, other):
        return (
            isinstance(other, PhaseMap)
            and self.grid == other.grid
            and np.array_equal(self.opd, other.opd)
        )


ArmElement = Union[GlassObject, PhaseMap]


# -- scene -------------------------------------------------------------------

@dataclass(frozen=True)
class Beam:
    """Gaussian pair-generation profile; ``radius`` is the 1/e^2 intensity radius in pixels.

    ``center`` defaults to the grid center and ``radius`` to 0.75 of the larger
    grid dimension.
    """

    center: Optional[tuple[float, float]] = None
    radius: Optional[float] = None

    def __post_init__(self):
        if self.radius is not None and not self.radius > 0:
            raise DomainError(f"beam radius must be positive, got {self.radius}")
        if self.center is not None:
            object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def profile(self, grid: GridSpec) -> np.ndarray:
        """Beam weights normalized to sum to 1 over the grid."""
        cx, cy = self.center if self.center is not None else (
            (grid.width - 1) / 2, (grid.height - 1) / 2)
        w = self.radius if self.radius is not None else 0.75 * max(grid.width, grid.height)
        yy, xx = np.mgrid[0 : grid.height, 0 : grid.width]
        r2 = (xx - cx) ** 2 + (yy - cy) ** 2
        b = np.exp(-2.0 * r2 / w**2)
        return b / b.sum()


@dataclass(frozen=True)
class Noise:
    dark_counts: float = 0.05
    heralding_efficiency: float = 0.5

    def __post_init__(self):
        if not (self.dark_counts >= 0 and math.isfinite(self.dark_counts)):
            raise DomainError(f"dark_counts must be finite and >= 0, got {self.dark_counts}")
        if not (0 < self.heralding_efficiency <= 1):
            raise DomainError(
                f"heralding_efficiency must lie in (0, 1], got {self.heralding_efficiency}")


@dataclass(frozen=True)
class SceneConfig:
    grid: GridSpec
    pump_wavelength: float = DEFAULT_PUMP_WAVELENGTH
    coherence_length: float = DEFAULT_COHERENCE_LENGTH
    crystal_phase: float = 0.0
    trim_phase: float = 0.0
    signal_cw_objects: tuple[ArmElement, ...] = ()
    idler_cw_objects: tuple[ArmElement, ...] = ()
    beam: Beam = field(default_factory=Beam)
    noise: Noise = field(default_factory=Noise)
    psf_sigma: float = 0.0  # detection blur, pixels; 0 disables

    def __post_init__(self):
        object.__setattr__(self, "signal_cw_objects", tuple(self.signal_cw_objects))
        object.__setattr__(self, "idler_cw_objects", tuple(self.idler_cw_objects))
        if not self.pump_wavelength > 0:
            raise DomainError("pump_wavelength must be positive")
        if not self.coherence_length > 0:
            raise DomainError("coherence_length must be positive")
        if not (math.isfinite(self.crystal_phase) and math.isfinite(self.trim_phase)):
            raise DomainError("phases must be finite")
        if not self.psf_sigma >= 0:
            raise DomainError("psf_sigma must be >= 0")

    @property
    def photon_wavelength(self) -> float:
        """Degenerate down-converted wavelength, twice the pump wavelength."""
        return 2.0 * self.pump_wavelength

    @property
    def wavenumber(self) -> float:
        """2 pi / lambda of the photons, equal to omega_p / 2c."""
        return 2.0 * math.pi / self.photon_wavelength

    def with_trim(self, trim_phase: float) -> "SceneConfig":
        return replace(self, trim_phase=float(trim_phase))


@dataclass(frozen=True, eq=False)
class FringeField:
    grid: GridSpec
    phi_total: np.ndarray
    visibility: np.ndarray
    delta: np.ndarray


def glass_opd(obj: GlassObject) -> float:
    """Extra optical path of a glass plate relative to the air it replaces."""
    return (obj.refractive_index - 1.0) * obj.thickness + obj.tilt_opd_offset


def rasterize_arm(objects: Sequence[ArmElement], grid: GridSpec) -> PhaseMap:
    opd = np.zeros(grid.shape)
    for obj in objects:
        if isinstance(obj, PhaseMap):
            if obj.grid.shape != grid.shape:
                raise DomainError(f"phase map grid {obj.grid.shape} does not match {grid.shape}")
            opd += obj.opd
        else:
            opd[obj.shape.footprint(grid)] += glass_opd(obj)
    return PhaseMap(grid, opd)


def visibility_envelope(delta, coherence_length: float):
    """Fringe visibility for an arm imbalance ``delta``: exp(-(delta / l_c)^2)."""
    if not coherence_length > 0:
        raise DomainError("coherence_length must be positive")
    return np.exp(-np.square(np.asarray(delta, dtype=float) / coherence_length))


def fringe_field(scene: SceneConfig) -> FringeField:
    """Per-pixel total two-photon phase, visibility and arm imbalance.

    The OPD sum is reduced modulo the photon wavelength before it is turned
    into a phase, so ``phi_total`` agrees with the unreduced expression modulo
    2 pi but stays accurate for millimeter-thick glass.
    """
    s = rasterize_arm(scene.signal_cw_objects, scene.grid).opd
    i = rasterize_arm(scene.idler_cw_objects, scene.grid).opd
    lam = scene.photon_wavelength
    phi = scene.wavenumber * np.remainder(s + i, lam) + scene.crystal_phase + scene.trim_phase
    delta = s - i
    vis = visibility_envelope(delta, scene.coherence_length)
    return FringeField(scene.grid, phi, vis, delta)


def circular_mean(phases: np.ndarray) -> float:
    """Mean direction of a set of angles; raises AmbiguousTrimError if undefined."""
    z = np.mean(np.exp(1j * np.asarray(phases, dtype=float)))
    if abs(z) < _AMBIGUOUS_RESULTANT:
        raise AmbiguousTrimError("circular mean is undefined (resultant length ~ 0)")
    return float(np.angle(z))


def auto_trim(scene: SceneConfig, region: RegionSpec) -> float:
    """Phase, in (-pi, pi], to add so the circular mean of phi_total over ``region`` is zero.

    Apply it with ``scene.with_trim(scene.trim_phase + t)`` or as an object
    tilt through :func:`trim_opd`.
    """
    region.validate(scene.grid)
    phi = fringe_field(scene).phi_total[region.slices()]
    return float(np.angle(np.exp(-1j * circular_mean(phi))))


def trim_opd(scene: SceneConfig, trim: float) -> float:
    """Tilt OPD that shifts the phase of a single-arm object by ``trim`` radians."""
    return trim / scene.wavenumber

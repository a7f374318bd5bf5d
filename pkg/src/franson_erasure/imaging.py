"""Heralded coincidence imaging: expected rates, Monte Carlo frames, difference
images and the region SNR used to score them."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import ndimage, special, stats

from . import rng
from .errors import DomainError
from .polarization import CONSTRUCTIVE_ANGLES, DESTRUCTIVE_ANGLES
from .scene import FringeField, GridSpec, RegionSpec, SceneConfig, fringe_field

CHUNK_PAIRS = 1 << 16
_DARK_STREAM = 0xDA4C
_PSF_TRUNCATE = 6.0


class Basis(str, Enum):
    CONSTRUCTIVE = "constructive"
    DESTRUCTIVE = "destructive"

    @property
    def sign(self) -> int:
        return 1 if self is Basis.CONSTRUCTIVE else -1

    @property
    def hwp_angles(self) -> tuple[float, float]:
        return CONSTRUCTIVE_ANGLES if self is Basis.CONSTRUCTIVE else DESTRUCTIVE_ANGLES

    @property
    def tag(self) -> int:
        return 1 if self is Basis.CONSTRUCTIVE else 2

    @property
    def other(self) -> "Basis":
        return Basis.DESTRUCTIVE if self is Basis.CONSTRUCTIVE else Basis.CONSTRUCTIVE


@dataclass(frozen=True, eq=False)
class DetectionFrame:
    grid: GridSpec
    counts: np.ndarray
    basis: Basis
    pairs_budget: int
    seed: Optional[int]

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.shape != self.grid.shape:
            raise DomainError(f"counts shape {c.shape} does not match grid {self.grid.shape}")
        if np.any(c < 0):
            raise DomainError("counts must be non-negative")
        object.__setattr__(self, "basis", Basis(self.basis))

    @property
    def total(self) -> int:
        return int(np.sum(self.counts))


@dataclass(frozen=True, eq=False)
class DifferenceImage:
    grid: GridSpec
    values: np.ndarray


@dataclass(frozen=True)
class SnrReport:
    mean_in: float
    mean_out: float
    sigma: float
    snr: float


@dataclass(frozen=True)
class Chi2Result:
    statistic: float
    dof: int
    p_value: float


def _acceptance(field: FringeField, scene: SceneConfig, basis: Basis) -> np.ndarray:
    eta = scene.noise.heralding_efficiency
    return eta * 0.25 * (1.0 + basis.sign * field.visibility * np.cos(field.phi_total))


def _psf_radius(sigma: float) -> int:
    return int(math.ceil(_PSF_TRUNCATE * sigma))


def _psf_kernel(sigma: float) -> np.ndarray:
    # probability that round(sigma * Z) == j, truncated where the MC truncates
    r = _psf_radius(sigma)
    j = np.arange(-r, r + 1)
    return special.ndtr((j + 0.5) / sigma) - special.ndtr((j - 0.5) / sigma)


def expected_rate_map(field: FringeField, scene: SceneConfig, basis) -> np.ndarray:
    """Per-pixel probability that one generated pair is recorded in ``basis``.

    Equals ``beam * eta * (1 +/- V cos phi) / 4``, blurred by the detection
    PSF when the scene has one.
    """
    basis = Basis(basis)
    if field.grid.shape != scene.grid.shape:
        raise DomainError(f"field grid {field.grid.shape} does not match scene grid {scene.grid.shape}")
    p = scene.beam.profile(scene.grid) * _acceptance(field, scene, basis)
    if scene.psf_sigma > 0:
        k = _psf_kernel(scene.psf_sigma)
        p = ndimage.correlate1d(p, k, axis=0, mode="constant")
        p = ndimage.correlate1d(p, k, axis=1, mode="constant")
    return p


def expected_counts(scene: SceneConfig, basis, pairs: int,
                    field: Optional[FringeField] = None) -> np.ndarray:
    """Mean recorded counts per pixel for a frame of ``pairs`` pairs, dark counts included."""
    field = fringe_field(scene) if field is None else field
    return pairs * expected_rate_map(field, scene, basis) + scene.noise.dark_counts


def _simulate_chunk(start: int, stop: int, key: int, cdf: np.ndarray, accept: np.ndarray,
                    grid: GridSpec, psf_sigma: float) -> np.ndarray:
    k = np.arange(start, stop, dtype=np.uint64)
    u_pos = rng.uniform(key, k, 0)
    u_acc = rng.uniform(key, k, 1)
    idx = np.searchsorted(cdf, u_pos * cdf[-1], side="right")
    idx = np.minimum(idx, cdf.size - 1)
    hit = u_acc < accept[idx]
    if psf_sigma > 0:
        r = _psf_radius(psf_sigma)
        dx = np.rint(psf_sigma * rng.normal(key, k, 1))
        dy = np.rint(psf_sigma * rng.normal(key, k, 2))
        y, x = np.divmod(idx, grid.width)
        x = x + dx.astype(np.int64)
        y = y + dy.astype(np.int64)
        hit &= (np.abs(dx) <= r) & (np.abs(dy) <= r)
        hit &= (x >= 0) & (x < grid.width) & (y >= 0) & (y < grid.height)
        idx = np.where(hit, y * grid.width + x, 0)
    return np.bincount(idx[hit], minlength=grid.size).astype(np.int64)


def simulate_frame(scene: SceneConfig, basis, pairs: int, seed: int, *,
                   workers: int = 1, field: Optional[FringeField] = None) -> DetectionFrame:
    """Monte Carlo heralded frame.

    Each pair ``k`` draws its birth pixel from the beam profile and is kept
    with the post-selection probability of that pixel; the signal photon is
    then recorded (after optional PSF blur). Poisson dark counts are added
    per pixel. All randomness is keyed on (seed, basis, k), so the frame does
    not depend on ``workers``.
    """
    basis = Basis(basis)
    pairs = int(pairs)
    if pairs < 0:
        raise DomainError("pairs must be >= 0")
    grid = scene.grid
    field = fringe_field(scene) if field is None else field
    key = rng.stream_key(seed, basis.tag)
    cdf = np.cumsum(scene.beam.profile(grid).ravel())
    accept = _acceptance(field, scene, basis).ravel()

    bounds = [(a, min(a + CHUNK_PAIRS, pairs)) for a in range(0, pairs, CHUNK_PAIRS)]
    counts = np.zeros(grid.size, dtype=np.int64)

    def run(b):
        return _simulate_chunk(b[0], b[1], key, cdf, accept, grid, scene.psf_sigma)

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(run, bounds):
                counts += part
    else:
        for b in bounds:
            counts += run(b)

    mu = scene.noise.dark_counts
    if mu > 0:
        dark_key = rng.stream_key(seed, basis.tag, _DARK_STREAM)
        u = rng.uniform(dark_key, np.arange(grid.size, dtype=np.uint64))
        counts += stats.poisson.ppf(u, mu).astype(np.int64)

    return DetectionFrame(grid, counts.reshape(grid.shape), basis, pairs, seed)


def difference_image(con: DetectionFrame, des: DetectionFrame) -> DifferenceImage:
    if con.grid.shape != des.grid.shape:
        raise DomainError("frames have different grids")
    if con.basis is not Basis.CONSTRUCTIVE or des.basis is not Basis.DESTRUCTIVE:
        raise DomainError(
            f"expected constructive minus destructive, got {con.basis.value} minus {des.basis.value}")
    values = con.counts.astype(np.int64) - des.counts.astype(np.int64)
    return DifferenceImage(con.grid, values)


def snr(diff: DifferenceImage, region_in: RegionSpec, region_out: RegionSpec) -> SnrReport:
    """|mean_in - mean_out| / sigma, with sigma the quadrature sum of the two
    regions' per-pixel sample standard deviations."""
    for r in (region_in, region_out):
        r.validate(diff.grid)
        if r.npix < 2:
            raise DomainError(f"region {r} has fewer than 2 pixels; sigma is undefined")
    if region_in.overlaps(region_out):
        raise DomainError("SNR regions must be disjoint")
    a = np.asarray(diff.values[region_in.slices()], dtype=float)
    b = np.asarray(diff.values[region_out.slices()], dtype=float)
    sigma = math.hypot(a.std(ddof=1), b.std(ddof=1))
    if sigma == 0:
        raise DomainError("both regions have zero variance; SNR is undefined")
    m_in, m_out = float(a.mean()), float(b.mean())
    return SnrReport(m_in, m_out, sigma, abs(m_in - m_out) / sigma)


def expected_snr(scene: SceneConfig, pairs: int, region_in: RegionSpec,
                 region_out: RegionSpec) -> float:
    """SNR the difference image converges to, from means and Poisson variances.

    Each region's variance is the mean per-pixel shot variance plus the
    spatial variance of the expected difference across the region.
    """
    field = fringe_field(scene)
    con = expected_counts(scene, Basis.CONSTRUCTIVE, pairs, field)
    des = expected_counts(scene, Basis.DESTRUCTIVE, pairs, field)
    mu, var = con - des, con + des
    m, v = [], []
    for r in (region_in, region_out):
        r.validate(scene.grid)
        m.append(mu[r.slices()].mean())
        v.append(var[r.slices()].mean() + mu[r.slices()].var())
    return float(abs(m[0] - m[1]) / math.sqrt(v[0] + v[1]))


def chi2_frame_test(frame: DetectionFrame, expectation: np.ndarray,
                    min_expected: float = 5.0) -> Chi2Result:
    """Pearson chi-square of ``frame`` against per-pixel expected counts.

    Only pixels expecting at least ``min_expected`` counts enter the sum.
    """
    e = np.asarray(expectation, dtype=float)
    if e.shape != frame.grid.shape:
        raise DomainError(f"expectation shape {e.shape} does not match frame {frame.grid.shape}")
    keep = e >= min_expected
    n = int(keep.sum())
    if n == 0:
        raise DomainError(f"no pixel expects >= {min_expected} counts; nothing to test")
    o = frame.counts[keep].astype(float)
    stat = float(np.sum((o - e[keep]) ** 2 / e[keep]))
    return Chi2Result(stat, n, float(stats.chi2.sf(stat, n)))


def fit_fringe(phases, values) -> tuple[float, float, float]:
    """Least-squares fit of ``values = m * (1 + V cos(phases + offset))``.

    Returns ``(m, V, offset)``.
    """
    ph = np.asarray(phases, dtype=float)
    y = np.asarray(values, dtype=float)
    design = np.column_stack([np.ones_like(ph), np.cos(ph), np.sin(ph)])
    (m, a, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    if m == 0:
        raise DomainError("fringe has zero mean; visibility undefined")
    return float(m), float(math.hypot(a, b) / abs(m)), float(math.atan2(-b, a))


def fit_contrast(phases, con, des) -> tuple[float, float]:
    """Visibility and phase offset from the normalized contrast (con - des)/(con + des).

    Using both bases cancels beam and efficiency drifts; an empty sum gives
    zero contrast at that step.
    """
    con = np.asarray(con, dtype=float)
    des = np.asarray(des, dtype=float)
    tot = con + des
    e = np.divide(con - des, tot, out=np.zeros_like(tot), where=tot > 0)
    ph = np.asarray(phases, dtype=float)
    design = np.column_stack([np.cos(ph), np.sin(ph)])
    (a, b), *_ = np.linalg.lstsq(design, e, rcond=None)
    return float(math.hypot(a, b)), float(math.atan2(-b, a))

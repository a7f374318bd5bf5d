"""Two-party phase-card authentication.

Alice's card sits in the idler interferometer, Bob's in the signal one. If
the cards match, the arm imbalance cancels everywhere and coincidences land
only in the constructive basis (ratio 1:0); a mismatch destroys the
two-photon coherence and splits them evenly (1:1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import stats

from . import rng
from .errors import AmbiguousTrimError, DomainError
from .imaging import Basis, expected_counts, expected_rate_map, simulate_frame
from .scene import GridSpec, PhaseMap, RegionSpec, SceneConfig, auto_trim, fringe_field

# Card OPDs are stored as integer gray levels times this scale. Matching the
# pump wavelength makes the phase of two identical cards a multiple of 2 pi.
CARD_OPD_SCALE = 355e-9
CARD_LEVEL_GRAY = 200  # one pattern step, ~71 um of OPD: several coherence lengths
CARD_SUBSTRATE_GRAY = 1000

DEFAULT_THRESHOLD = 0.05

ACCEPT = "accept"
REJECT = "reject"
INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class KeyCard:
    id: str
    pattern: PhaseMap

    def __post_init__(self):
        if np.any(self.pattern.opd < 0):
            raise DomainError(f"card {self.id!r} has negative OPD entries")


@dataclass(frozen=True)
class AuthResult:
    n_constructive: int
    n_destructive: int
    destructive_fraction: float
    decision: str
    p_value: float

    @property
    def accepted(self) -> bool:
        return self.decision == ACCEPT


def random_card(grid: GridSpec, seed: int, card_id: Optional[str] = None, *,
                levels: int = 256, cell: int = 1) -> KeyCard:
    """Card with an independent random depth level on every ``cell`` x ``cell`` block."""
    if levels < 2 or cell < 1:
        raise DomainError("need levels >= 2 and cell >= 1")
    ny, nx = -(-grid.height // cell), -(-grid.width // cell)
    key = rng.stream_key(seed, 0xCA4D)
    bits = rng.random_bits(key, np.arange(nx * ny, dtype=np.uint64))
    level = (bits % np.uint64(levels)).astype(np.int64).reshape(ny, nx)
    level = np.kron(level, np.ones((cell, cell), dtype=np.int64))[: grid.height, : grid.width]
    gray = CARD_SUBSTRATE_GRAY + CARD_LEVEL_GRAY * level
    return KeyCard(card_id or f"card-{seed}", PhaseMap(grid, gray * CARD_OPD_SCALE))


def tamper_model(card: KeyCard, noise_opd_rms: float, seed: int) -> KeyCard:
    """Copy of ``card`` with zero-mean Gaussian OPD noise on every pixel.

    Noise that would push a pixel below zero OPD is clipped at zero.
    """
    if not noise_opd_rms >= 0:
        raise DomainError("noise_opd_rms must be >= 0")
    if noise_opd_rms == 0:
        return card
    grid = card.pattern.grid
    z = rng.normal(rng.stream_key(seed, 0x7A3B), np.arange(grid.size, dtype=np.uint64))
    opd = card.pattern.opd + noise_opd_rms * z.reshape(grid.shape)
    return KeyCard(f"{card.id}~tampered", PhaseMap(grid, np.maximum(opd, 0.0)))


def _auth_scene(card_alice: KeyCard, card_bob: KeyCard, scene_base: SceneConfig) -> SceneConfig:
    for c in (card_alice, card_bob):
        if c.pattern.grid.shape != scene_base.grid.shape:
            raise DomainError(f"card {c.id!r} grid does not match the scene grid")
    scene = replace(
        scene_base,
        signal_cw_objects=scene_base.signal_cw_objects + (card_bob.pattern,),
        idler_cw_objects=scene_base.idler_cw_objects + (card_alice.pattern,),
    )
    try:
        t = auto_trim(scene, RegionSpec.full(scene.grid))
    except AmbiguousTrimError:
        t = 0.0
    return scene.with_trim(scene.trim_phase + t)


def run_authentication(card_alice: KeyCard, card_bob: KeyCard, pairs: int, seed: int,
                       scene_base: SceneConfig, threshold: float = DEFAULT_THRESHOLD,
                       workers: int = 1) -> AuthResult:
    """Bucket-detector authentication run with ``pairs // 2`` pairs per basis.

    Accepts iff the destructive fraction is at most ``threshold``. ``p_value``
    is the probability of seeing this few destructive counts if the cards
    did not match (fraction 1/2). With no counts at all the decision is
    ``"indeterminate"``.
    """
    if not 0 < threshold < 0.5:
        raise DomainError(f"threshold must lie in (0, 1/2), got {threshold}")
    if pairs < 0:
        raise DomainError("pairs must be >= 0")
    scene = _auth_scene(card_alice, card_bob, scene_base)
    field = fringe_field(scene)
    half = int(pairs) // 2
    n_con = simulate_frame(scene, Basis.CONSTRUCTIVE, half, seed, workers=workers, field=field).total
    n_des = simulate_frame(scene, Basis.DESTRUCTIVE, half, seed, workers=workers, field=field).total
    n = n_con + n_des
    if n == 0:
        return AuthResult(0, 0, math.nan, INDETERMINATE, math.nan)
    f = n_des / n
    p = float(stats.binom.cdf(n_des, n, 0.5))
    return AuthResult(n_con, n_des, f, ACCEPT if f <= threshold else REJECT, p)


def expected_destructive_fraction(card_alice: KeyCard, card_bob: KeyCard,
                                  scene_base: SceneConfig, pairs: Optional[int] = None) -> float:
    """Destructive fraction of the mean counts.

    Dark counts are left out unless a per-run ``pairs`` budget is given.
    """
    scene = _auth_scene(card_alice, card_bob, scene_base)
    field = fringe_field(scene)
    if pairs is None:
        con = expected_rate_map(field, scene, Basis.CONSTRUCTIVE).sum()
        des = expected_rate_map(field, scene, Basis.DESTRUCTIVE).sum()
    else:
        con = expected_counts(scene, Basis.CONSTRUCTIVE, pairs // 2, field).sum()
        des = expected_counts(scene, Basis.DESTRUCTIVE, pairs // 2, field).sum()
    return float(des / (con + des))


def expected_tamper_fraction(noise_opd_rms: float, scene: SceneConfig) -> float:
    """Mean destructive fraction when one card carries Gaussian OPD noise.

    Closed form of E[V cos phi] over the noise for a Gaussian envelope,
    without trim or dark counts.
    """
    s2 = noise_opd_rms**2
    a = 1.0 + 2.0 * s2 / scene.coherence_length**2
    k = scene.wavenumber
    mean_vcos = math.exp(-k * k * s2 / (2.0 * a)) / math.sqrt(a)
    return 0.5 * (1.0 - mean_vcos)


def _errors(n: int, f0: float, f1: float, beta: float) -> tuple[int, float, float]:
    # threshold test: reject (mismatch) iff k >= c. Smallest c meeting the
    # false-reject bound is the best choice for the false-accept side.
    k = np.arange(n + 2)
    false_reject = stats.binom.sf(k - 1, n, f0)  # P(K >= c | f0)
    c = int(np.argmax(false_reject <= beta))
    false_accept = float(stats.binom.cdf(c - 1, n, f1))  # P(K < c | f1)
    return c, float(false_reject[c]), false_accept


def required_pairs(alpha: float, beta: float, mismatch_fraction: float,
                   match_fraction: float = 0.0, max_pairs: int = 1_000_000) -> int:
    """Smallest number of recorded coincidences that separates a match from a mismatch.

    Parameters
    ----------
    alpha : float
        Allowed probability of accepting mismatched cards.
    beta : float
        Allowed probability of rejecting matched cards.
    mismatch_fraction : float
        Destructive fraction under a mismatch (1/2 here, 1/4 for a BB84-style error rate).
    match_fraction : float
        Destructive fraction for matched cards (noise floor).

    Uses an exact binomial search over threshold tests on the destructive count.
    """
    f0, f1 = match_fraction, mismatch_fraction
    if not (0 <= f0 <= 0.5 and 0 <= f1 <= 0.5):
        raise DomainError("fractions must lie in [0, 1/2]")
    if f0 >= f1:
        raise DomainError("match and mismatch fractions must differ (f0 < f1); no finite sample size")
    if not (0 < alpha < 1 and 0 < beta < 1):
        raise DomainError("alpha and beta must lie in (0, 1)")
    for n in range(1, max_pairs + 1):
        _, _, false_accept = _errors(n, f0, f1, beta)
        if false_accept <= alpha:
            return n
    raise DomainError(f"no sample size up to {max_pairs} meets the error bounds")

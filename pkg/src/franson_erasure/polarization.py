"""Two-photon polarization state algebra.

Basis order for every 4-vector and 4x4 matrix is (HH, HV, VH, VV), signal
photon first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10

# HWP angles selecting the two post-selection bases
CONSTRUCTIVE_ANGLES = (math.radians(22.5), math.radians(22.5))
DESTRUCTIVE_ANGLES = (math.radians(22.5), math.radians(-22.5))


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    """Density matrix of a polarization-entangled photon pair."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        if rho.shape != (4, 4):
            raise DomainError(f"rho must be 4x4, got {rho.shape}")

    def check(self) -> None:
        """Raise DomainError unless rho is Hermitian, unit-trace and PSD."""
        rho = self.rho
        if not np.all(np.isfinite(rho)):
            raise DomainError("rho has non-finite entries")
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > HERMITIAN_TOL:
            raise DomainError(f"rho is not Hermitian (max deviation {herm:.3g})")
        tr = np.trace(rho)
        if abs(tr - 1) > TRACE_TOL:
            raise DomainError(f"trace(rho) = {tr:.15g}, expected 1")
        lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
        if lam.min() < -PSD_TOL:
            raise DomainError(f"rho is not positive semidefinite (min eig {lam.min():.3g})")


@dataclass(frozen=True)
class DephasedBellParams:
    phi: float
    visibility: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise DomainError("phi must be finite")
        if not (0.0 <= self.visibility <= 1.0):
            raise DomainError(f"visibility must lie in [0, 1], got {self.visibility}")


def make_dephased_bell(params: DephasedBellParams) -> TwoPhotonState:
    """(|HH> + e^{i phi}|VV>)/sqrt(2) with its coherences scaled by the visibility.

    At visibility 0 this is the equal classical mixture of HH and VV.
    """
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = 0.5
    coherence = 0.5 * params.visibility * np.exp(1j * params.phi)
    rho[3, 0] = coherence
    rho[0, 3] = np.conj(coherence)
    return TwoPhotonState(rho)


def hwp_jones(theta: float) -> np.ndarray:
    """Jones matrix of a half-wave plate with its fast axis at ``theta`` (rad)."""
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [s, -c]])


def postselect_amplitudes(phi: float) -> np.ndarray:
    """Amplitudes on (HH, HV, VH, VV) after both HWPs at 22.5 degrees."""
    e = np.exp(1j * phi)
    plus = (1 + e) / (2 * math.sqrt(2))
    minus = (1 - e) / (2 * math.sqrt(2))
    return np.array([plus, minus, minus, plus])


def _transmitted_vector(theta: float) -> np.ndarray:
    # polarization that the HWP maps onto the PBS transmitted (H) port
    return np.array([math.cos(2 * theta), math.sin(2 * theta)])


def coincidence_probability(state: TwoPhotonState, theta_s: float, theta_i: float) -> float:
    """Probability that both photons leave their PBS through the transmitted port.

    Parameters
    ----------
    state : TwoPhotonState
        Pair state at the exit of the interferometers.
    theta_s, theta_i : float
        HWP fast-axis angles (radians) in front of the signal and idler PBS.
    """
    state.check()
    d = np.kron(_transmitted_vector(theta_s), _transmitted_vector(theta_i))
    p = float(np.real(d @ state.rho @ d))
    return min(max(p, 0.0), 1.0)

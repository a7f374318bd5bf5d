"""Counter-based random numbers.

Every draw is a pure function of (key, counter, lane), so a Monte Carlo run
can be split over any number of workers and still reproduce bit for bit.
The mixing function is the SplitMix64 finalizer.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)
_TWO_POW_53 = float(1 << 53)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _mix_int(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, *tags: int) -> int:
    """Fold a seed and integer tags into a 64-bit stream key."""
    key = _mix_int(int(seed) + 0x9E3779B97F4A7C15)
    for tag in tags:
        key = _mix_int(key ^ _mix_int(int(tag) + 0x632BE59BD9B4E019))
    return key


def random_bits(key: int, counters: np.ndarray, lane: int = 0) -> np.ndarray:
    """64 random bits per counter for the given key and lane."""
    k = np.asarray(counters, dtype=np.uint64)
    lane_key = np.uint64(stream_key(key, lane))
    return _mix(_mix(k * _GOLDEN + lane_key) ^ lane_key)


def uniform(key: int, counters: np.ndarray, lane: int = 0) -> np.ndarray:
    """Uniform doubles in the open interval (0, 1), one per counter."""
    bits = random_bits(key, counters, lane) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) / _TWO_POW_53


def normal(key: int, counters: np.ndarray, lane: int = 0) -> np.ndarray:
    """Standard normal deviates by Box-Muller, consuming lanes 2*lane and 2*lane+1."""
    u1 = uniform(key, counters, 2 * lane)
    u2 = uniform(key, counters, 2 * lane + 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

"""Angle wrapping and deterministic seed derivation helpers."""

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def wrap_angle(x: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    return math.pi - (math.pi - x) % (2.0 * math.pi)


def wrap_symmetric(x: float, period: float) -> float:
    """Wrap ``x`` into (-period/2, period/2]; a period of 0 means full symmetry -> 0."""
    if period == 0.0:
        return 0.0
    half = 0.5 * period
    return half - (half - x) % period


def _splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def mix64(seed: int, *stream: int) -> int:
    """Deterministic 64-bit mix of a seed with stream indices.

    Used everywhere a child seed is derived (worker seeds, per-episode seeds,
    per-step CEM seeds) so that worker counts and call order cannot change the
    random streams.
    """
    h = _splitmix64(seed & _MASK64)
    for v in stream:
        h = _splitmix64(h ^ (v & _MASK64))
    return h


def rng_from(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator keyed by ``mix64(seed, *stream)``."""
    return np.random.Generator(np.random.PCG64(mix64(seed, *stream)))

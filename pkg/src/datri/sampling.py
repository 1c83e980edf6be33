"""Deterministic unit-vector sampling with per-sample derived seeds."""

from __future__ import annotations

import numpy as np

from .liealg import MetricLieAlgebra

_MASK = (1 << 64) - 1


def splitmix64(seed: int, index: int) -> int:
    """SplitMix64 output for state ``seed + (index + 1) * golden``."""
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def sample_unit_vector(alg: MetricLieAlgebra, seed: int, index: int) -> np.ndarray:
    """Uniform unit vector (w.r.t. the metric) for sample ``index``.

    Independent of how many other samples are drawn or in what order.
    """
    rng = np.random.default_rng(splitmix64(seed, index))
    y = rng.standard_normal(alg.dim)
    y /= np.linalg.norm(y)
    x = alg.from_internal(y)
    return x / alg.norm(x)


def sample_unit_vectors(alg: MetricLieAlgebra, samples: int, seed: int = 1) -> list[np.ndarray]:
    return [sample_unit_vector(alg, seed, i) for i in range(samples)]

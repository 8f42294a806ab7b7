"""Seeded simulation of photocounting measurements.

Draws independent categorical samples by inverse-CDF lookup on a uniform
stream derived from the PCG64 bit generator. The uniform mapping is pinned
here explicitly (top 53 bits of each 64-bit word), so the sample stream is
fully specified by (distribution, events, seed) and reproduces across
platforms and library versions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detector import CountDistribution

__all__ = [
    "GENERATOR_NAME",
    "SamplingConfig",
    "sample_counts",
    "expected_sampling_error",
]

GENERATOR_NAME = "pcg64"

_SEED_LIMIT = 2**64


@dataclass(frozen=True)
class SamplingConfig:
    """Number of sampling events and the 64-bit generator seed."""

    events: int
    seed: int = 0

    def __post_init__(self):
        if self.events < 1:
            raise ValueError(f"events must be >= 1, got {self.events}")
        if not (0 <= self.seed < _SEED_LIMIT):
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def _uniform_stream(seed: int, count: int) -> np.ndarray:
    """Uniforms in [0, 1) from the raw PCG64 output: u = (word >> 11) / 2^53."""
    raw = np.random.PCG64(seed).random_raw(count)
    return (raw >> np.uint64(11)) * 2.0**-53


def sample_counts(
    true_dist: CountDistribution, config: SamplingConfig
) -> CountDistribution:
    """Simulate empirical photocount frequencies.

    Draws ``config.events`` i.i.d. samples from the given distribution
    (renormalized over its window) and returns the frequencies counts/nu.
    Identical inputs and seed give bit-identical output.
    """
    probs = np.asarray(true_dist.probs, dtype=float)
    if np.any(probs < 0):
        bad = int(np.argmin(probs))
        raise ValueError(
            f"invalid distribution: negative entry {probs[bad]!r} at "
            f"index {bad}"
        )
    total = float(probs.sum())
    if total <= 0.0:
        raise ValueError("invalid distribution: total mass is zero")
    cdf = np.cumsum(probs / total)
    cdf[-1] = 1.0  # close the window so every u < 1 lands inside
    uniforms = _uniform_stream(config.seed, config.events)
    draws = np.searchsorted(cdf, uniforms, side="right")
    counts = np.bincount(draws, minlength=probs.size)
    return CountDistribution(counts / config.events)


def expected_sampling_error(dist: CountDistribution, events: int) -> float:
    """Expected Euclidean error of empirical frequencies from ``events``
    i.i.d. draws: sqrt((1 - sum p^2) / nu)."""
    probs = np.asarray(dist.probs, dtype=float)
    return float(np.sqrt(max(0.0, 1.0 - float(probs @ probs)) / events))

"""Analytic photon-number distributions used as test inputs.

Each generator returns a distribution truncated to a finite window chosen
so that the discarded mass is below a caller-supplied tail bound; the bound
actually achieved is recorded on the result so downstream consumers can
audit truncation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PhotonDistribution",
    "thermal",
    "spats",
    "even_cat",
    "fock",
    "from_file",
    "DistributionFileError",
    "ParseError",
    "NegativeProbabilityError",
    "SumDeviationError",
]

_SUM_UPPER_SLACK = 1e-12
_FILE_SUM_TOL = 1e-6
_WINDOW_CAP = 10_000_000


class DistributionFileError(ValueError):
    """A distribution file failed validation."""


class ParseError(DistributionFileError):
    """The file contents could not be parsed as a vector of reals."""


class NegativeProbabilityError(DistributionFileError):
    """The file contains a negative entry."""


class SumDeviationError(DistributionFileError):
    """The file's entries do not sum to 1 within tolerance."""


@dataclass(frozen=True)
class PhotonDistribution:
    """Probabilities over photon numbers 0..N plus the truncation bound.

    Invariants: all probabilities nonnegative, and the total mass lies in
    [1 - truncation_tail, 1 + 1e-12].
    """

    probs: np.ndarray
    truncation_tail: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "probs", np.asarray(self.probs, dtype=float)
        )

    def validate(self) -> None:
        if self.probs.ndim != 1 or self.probs.size == 0:
            raise ValueError("probs must be a nonempty 1-d vector")
        if np.any(self.probs < 0):
            raise ValueError("photon probabilities must be nonnegative")
        total = float(self.probs.sum())
        if not (1.0 - self.truncation_tail <= total <= 1.0 + _SUM_UPPER_SLACK):
            raise ValueError(
                f"total mass {total!r} outside "
                f"[1 - {self.truncation_tail!r}, 1 + 1e-12]"
            )

    @property
    def n_max(self) -> int:
        return self.probs.size - 1


def _check_tail(tail: float) -> None:
    if not (0.0 < tail < 1.0):
        raise ValueError(f"tail must be in (0, 1), got {tail}")


def _truncate_by_mass(term, tail: float) -> PhotonDistribution:
    """Accumulate term(n) for n = 0, 1, ... until the collected mass
    reaches 1 - tail.  term must describe a normalized distribution."""
    probs = []
    cum = 0.0
    n = 0
    while cum < 1.0 - tail:
        p = term(n)
        probs.append(p)
        cum += p
        n += 1
        if n > _WINDOW_CAP:
            raise RuntimeError("truncation window exceeded sanity cap")
    arr = np.array(probs)
    discarded = max(0.0, 1.0 - float(arr.sum()))
    return PhotonDistribution(arr, discarded)


def thermal(mean_n: float, tail: float = 1e-10) -> PhotonDistribution:
    """Thermal distribution p_n = (1/(1+nbar)) (nbar/(1+nbar))^n.

    Truncated at the smallest window holding at least 1 - tail of the
    (geometric) mass.
    """
    if mean_n <= 0:
        raise ValueError(f"mean_n must be positive, got {mean_n}")
    _check_tail(tail)
    ratio = mean_n / (1.0 + mean_n)
    scale = 1.0 / (1.0 + mean_n)
    return _truncate_by_mass(lambda n: scale * ratio**n, tail)


def spats(mean_n: float, tail: float = 1e-10) -> PhotonDistribution:
    """Single-photon-added thermal distribution,
    p_n = n/(nbar (1+nbar)) (nbar/(1+nbar))^n, with p_0 = 0."""
    if mean_n <= 0:
        raise ValueError(f"mean_n must be positive, got {mean_n}")
    _check_tail(tail)
    ratio = mean_n / (1.0 + mean_n)
    scale = 1.0 / (mean_n * (1.0 + mean_n))
    return _truncate_by_mass(lambda n: n * scale * ratio**n, tail)


def even_cat(alpha_sq: float, tail: float = 1e-10) -> PhotonDistribution:
    """Even coherent-superposition distribution: zero at odd n, and

        p_n = 2 e^{-|a|^2} |a|^{2n} / (n! (1 + e^{-2|a|^2}))

    at even n, with alpha_sq = |a|^2. Computed in log space; |a|^{2n}/n!
    overflows a double beyond n of roughly 35 at the magnitudes of
    interest.
    """
    if alpha_sq <= 0:
        raise ValueError(f"alpha_sq must be positive, got {alpha_sq}")
    _check_tail(tail)
    log_norm = math.log(2.0) - alpha_sq - math.log1p(math.exp(-2.0 * alpha_sq))
    log_asq = math.log(alpha_sq)

    def term(n: int) -> float:
        if n % 2 == 1:
            return 0.0
        return math.exp(log_norm + n * log_asq - math.lgamma(n + 1))

    return _truncate_by_mass(term, tail)


def fock(n: int) -> PhotonDistribution:
    """Delta distribution concentrated at photon number n."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    probs = np.zeros(n + 1)
    probs[n] = 1.0
    return PhotonDistribution(probs, 0.0)


def parse_vector(text: str) -> np.ndarray:
    """Parse a distribution payload: a JSON array, a JSON object with a
    "probs" array, or comma/whitespace-separated reals."""
    import json

    stripped = text.strip()
    if not stripped:
        raise ParseError("empty distribution file")
    if stripped[0] in "[{":
        try:
            payload = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
        if isinstance(payload, dict):
            if "probs" not in payload:
                raise ParseError('JSON object lacks a "probs" array')
            payload = payload["probs"]
        if not isinstance(payload, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool)
            for v in payload
        ):
            raise ParseError("JSON payload is not an array of reals")
        if not payload:
            raise ParseError("empty distribution file")
        return np.array(payload, dtype=float)
    tokens = stripped.replace(",", " ").split()
    try:
        return np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise ParseError(f"invalid numeric token: {exc}") from exc


def from_file(path) -> PhotonDistribution:
    """Load and validate a photon-number distribution from a file.

    Rejects negative entries and total mass departing from 1 by more than
    1e-6. Never renormalizes: a normalization defect signals an upstream
    mistake the caller has to see.
    """
    with open(path, encoding="utf-8") as handle:
        values = parse_vector(handle.read())
    if np.any(values < 0):
        bad = int(np.argmin(values))
        raise NegativeProbabilityError(
            f"negative probability {values[bad]!r} at index {bad}"
        )
    total = float(values.sum())
    if abs(total - 1.0) > _FILE_SUM_TOL:
        raise SumDeviationError(
            f"probabilities sum to {total!r}, deviating from 1 by more "
            f"than {_FILE_SUM_TOL}"
        )
    return PhotonDistribution(values, max(0.0, 1.0 - total))

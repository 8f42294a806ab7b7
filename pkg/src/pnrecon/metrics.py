"""Error figures: relative Euclidean error, relative residual, and the
normalization defect of an estimate.

All norms are Euclidean; vectors of unequal length are zero-padded to a
common length, never truncated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detector import CountDistribution, ResponseMatrix

__all__ = [
    "ErrorReport",
    "relative_error",
    "relative_residual",
    "normalization_defect",
]


@dataclass(frozen=True)
class ErrorReport:
    relative_error: float
    relative_residual: float
    normalization_defect: float

    def as_dict(self) -> dict:
        return {
            "relative_error": self.relative_error,
            "relative_residual": self.relative_residual,
            "normalization_defect": self.normalization_defect,
        }


def _pad_common(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    size = max(a.size, b.size)
    if a.size < size:
        a = np.pad(a, (0, size - a.size))
    if b.size < size:
        b = np.pad(b, (0, size - b.size))
    return a, b


def relative_error(estimate, truth) -> float:
    """||estimate - truth|| / ||truth|| in the Euclidean norm."""
    est, ref = _pad_common(estimate, truth)
    norm = float(np.linalg.norm(ref))
    if norm == 0.0:
        raise ValueError("reference vector has zero norm")
    return float(np.linalg.norm(est - ref)) / norm


def relative_residual(
    mat: ResponseMatrix, estimate, measured: CountDistribution
) -> float:
    """||S @ estimate - measured|| / ||measured|| in the Euclidean norm."""
    est = np.asarray(estimate, dtype=float)
    cols = mat.n_max + 1
    if est.size > cols:
        raise ValueError(
            f"estimate of length {est.size} exceeds matrix columns {cols}"
        )
    if est.size < cols:
        est = np.pad(est, (0, cols - est.size))
    data = np.asarray(measured.probs, dtype=float)
    rows = mat.m_max + 1
    if data.size > rows:
        raise ValueError(
            f"measured vector of length {data.size} exceeds matrix rows {rows}"
        )
    if data.size < rows:
        data = np.pad(data, (0, rows - data.size))
    norm = float(np.linalg.norm(data))
    if norm == 0.0:
        raise ValueError("measured vector has zero norm")
    return float(np.linalg.norm(mat.entries @ est - data)) / norm


def normalization_defect(values) -> float:
    """Total mass minus one."""
    return float(np.asarray(values, dtype=float).sum()) - 1.0

"""Interval-valued observation container and empirical bound covariances."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientData, InvalidInput


@dataclass(frozen=True)
class IntervalMatrix:
    """n x p paired lower/upper observation matrices.

    Immutable after construction; the arrays are marked read-only so the
    value is safe to share across threads.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.ndim != 2 or upper.ndim != 2:
            raise InvalidInput("lower and upper must be 2-dimensional")
        if lower.shape != upper.shape:
            raise InvalidInput(
                f"shape mismatch: lower {lower.shape} vs upper {upper.shape}"
            )
        if lower.shape[0] < 1 or lower.shape[1] < 1:
            raise InvalidInput("need at least one observation and one variable")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise InvalidInput("interval bounds must be finite")
        if np.any(lower > upper):
            i, j = np.argwhere(lower > upper)[0]
            raise InvalidInput(
                f"lower > upper at ({i}, {j}): {lower[i, j]} > {upper[i, j]}"
            )
        lower = lower.copy()
        upper = upper.copy()
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    @property
    def p(self) -> int:
        return self.lower.shape[1]

    def take_rows(self, idx) -> "IntervalMatrix":
        """New IntervalMatrix restricted to the given observation rows."""
        idx = np.asarray(idx, dtype=int)
        return IntervalMatrix(self.lower[idx], self.upper[idx])


def _empirical_cov(y: np.ndarray) -> np.ndarray:
    # 1/n normalization: S_ij = mean(y_i * y_j) - mean(y_i) * mean(y_j)
    n = y.shape[0]
    m = y.mean(axis=0)
    s = y.T @ y / n - np.outer(m, m)
    return (s + s.T) / 2.0


def bound_covariances(data: IntervalMatrix):
    """Empirical covariance matrices (S_lower, S_upper) of the two bound
    matrices, both with 1/n normalization."""
    if data.n < 2:
        raise InsufficientData(
            f"need at least 2 observations for a covariance, got {data.n}"
        )
    return _empirical_cov(data.lower), _empirical_cov(data.upper)

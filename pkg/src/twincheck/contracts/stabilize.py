"""Moving-average stabilization and component-wise ordering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def mean_round_half_up(total, m: int):
    """``round(total / m)`` with ties toward +inf, exact on integers."""
    return (2 * total + m) // (2 * m)


@dataclass(frozen=True)
class StabilizedSeries:
    original: np.ndarray
    m: int
    values: np.ndarray  # values[t - m] is the stabilized value at index t

    def __getitem__(self, t: int) -> int:
        if t < self.m or t >= len(self.original):
            raise IndexError(f"stabilized value defined for t in [{self.m}, {len(self.original)})")
        return int(self.values[t - self.m])

    @property
    def first_index(self) -> int:
        return self.m

    def full(self) -> np.ndarray:
        """Length-preserving view with the undefined prefix filled by the first value."""
        out = np.empty(len(self.original), dtype=np.int64)
        out[self.m:] = self.values
        out[:self.m] = self.values[0] if len(self.values) else 0
        return out


def stabilize(series, m: int) -> StabilizedSeries:
    """Mean of the ``m`` values strictly before each index.

    ``x_hat[t] = (x[t-1] + ... + x[t-m]) / m`` on scaled integers, rounded
    half up, defined for ``m <= t < len(series)``.
    """
    x = np.asarray(series, dtype=np.int64)
    if m < 1:
        raise ValueError("window must be at least 1")
    if m >= len(x):
        raise ValueError("window exceeds series")
    c = np.concatenate(([0], np.cumsum(x)))
    sums = c[m:len(x)] - c[0:len(x) - m]
    return StabilizedSeries(x, m, mean_round_half_up(sums, m))


def componentwise_leq(x, y) -> bool:
    """``x[i] <= y[i]`` for every component."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    return bool(np.all(x <= y))

"""Observation storage for a single optimization run."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Dataset:
    """Ordered observations with per-point outlier flags.

    Observations are append-only: a flagged point is excluded from model
    fitting but never deleted, so flags can be revised later.
    """

    bounds: np.ndarray  # (d, 2) finite box
    X: np.ndarray = field(default=None)
    y: np.ndarray = field(default=None)
    flags: np.ndarray = field(default=None)

    def __post_init__(self):
        self.bounds = np.atleast_2d(np.asarray(self.bounds, dtype=float))
        if self.bounds.shape[1] != 2:
            raise ValueError("bounds must be a (d, 2) array")
        if not np.all(np.isfinite(self.bounds)):
            raise ValueError("bounds must be finite")
        if not np.all(self.bounds[:, 0] < self.bounds[:, 1]):
            raise ValueError("each lower bound must be below its upper bound")
        d = self.bounds.shape[0]
        if self.X is None:
            self.X = np.empty((0, d))
        else:
            self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        if self.y is None:
            self.y = np.empty(0)
        else:
            self.y = np.asarray(self.y, dtype=float).ravel()
        if self.flags is None:
            self.flags = np.zeros(self.y.size, dtype=bool)
        else:
            self.flags = np.asarray(self.flags, dtype=bool).ravel()
        if not (self.X.shape[0] == self.y.size == self.flags.size):
            raise ValueError("X, y and flags lengths differ")

    @property
    def dimension(self) -> int:
        return self.bounds.shape[0]

    def __len__(self) -> int:
        return self.y.size

    def append(self, point, value: float) -> None:
        point = np.atleast_1d(np.asarray(point, dtype=float))
        if point.size != self.dimension:
            raise ValueError("point dimension does not match dataset")
        if not np.isfinite(value):
            raise ValueError("observation value must be finite")
        if np.any(point < self.bounds[:, 0] - 1e-12) or \
                np.any(point > self.bounds[:, 1] + 1e-12):
            raise ValueError("point lies outside the bounds")
        self.X = np.vstack([self.X, point])
        self.y = np.append(self.y, float(value))
        self.flags = np.append(self.flags, False)

    def active_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.flags)

"""Min-max scaling fitted on a training split and reused on test data."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DataError


@dataclass(frozen=True)
class Normalizer:
    x_min: np.ndarray
    x_max: np.ndarray
    y_min: float
    y_max: float

    @staticmethod
    def _scale(lo, hi):
        span = np.asarray(hi - lo, dtype=float)
        # constant training columns map to 0 everywhere
        return np.divide(1.0, span, out=np.zeros_like(span), where=span > 0)

    def transform_inputs(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.x_min.size:
            raise DataError(f"expected inputs with {self.x_min.size} columns, got shape {X.shape}")
        return (X - self.x_min) * self._scale(self.x_min, self.x_max)

    def transform_targets(self, y) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.y_min) * self._scale(self.y_min, self.y_max)

    def inverse_targets(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) * (self.y_max - self.y_min) + self.y_min

    def to_dict(self) -> dict:
        return {"x_min": self.x_min.tolist(), "x_max": self.x_max.tolist(),
                "y_min": self.y_min, "y_max": self.y_max}


def fit_normalizer(train_inputs, train_targets) -> Normalizer:
    X = np.asarray(train_inputs, dtype=float)
    y = np.asarray(train_targets, dtype=float).ravel()
    if X.size == 0 or y.size == 0:
        raise ConfigurationError("cannot fit a normalizer on empty data")
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != y.size:
        raise DataError(f"{X.shape[0]} input rows but {y.size} targets")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("training data contains non-finite values")
    return Normalizer(X.min(axis=0), X.max(axis=0), float(y.min()), float(y.max()))

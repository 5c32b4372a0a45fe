from __future__ import annotations

import numpy as np

from ..errors import DataError


def check_xy(X, y=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError(f"expected a non-empty (n_samples, n_features) matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("inputs contain non-finite values")
    if y is None:
        return X
    y = np.asarray(y, dtype=float).ravel()
    if y.size != X.shape[0]:
        raise DataError(f"{X.shape[0]} input rows but {y.size} targets")
    if not np.all(np.isfinite(y)):
        raise DataError("targets contain non-finite values")
    return X, y


def check_query(X, n_features: int) -> np.ndarray:
    X = check_xy(X)
    if X.shape[1] != n_features:
        raise DataError(f"model fitted on {n_features} features, got {X.shape[1]}")
    return X


def sq_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between rows of ``A`` and ``B``.

    Uses the norm expansion; values within round-off of zero (relative to
    the row norms) are snapped to exactly zero so coincident points match.
    """
    na, nb = (A * A).sum(1)[:, None], (B * B).sum(1)[None, :]
    d = na + nb - 2.0 * A @ B.T
    d[d <= 1e-12 * (na + nb)] = 0.0
    return d

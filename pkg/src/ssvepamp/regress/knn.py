from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from ._common import check_query, check_xy, sq_distances


def knn_predict_from_distances(dist: np.ndarray, y_train: np.ndarray, k: int, weights: str) -> np.ndarray:
    """k-NN predictions given a (n_query, n_train) Euclidean distance matrix.

    Neighbours are ordered by distance with ties broken by training index.
    Under distance weighting a query that coincides with training points
    returns the mean target of those exact matches.
    """
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    d = np.take_along_axis(dist, order, axis=1)
    yk = y_train[order]
    if weights == "uniform":
        return yk.mean(axis=1)
    exact = d == 0.0
    with np.errstate(divide="ignore"):
        w = np.where(exact.any(axis=1, keepdims=True), exact.astype(float), 1.0 / d)
    return (w * yk).sum(axis=1) / w.sum(axis=1)


class KNNRegressor:
    def __init__(self, k: int = 5, weighting: str = "uniform"):
        if weighting not in ("uniform", "distance"):
            raise ConfigurationError(f"unknown weighting {weighting!r}")
        self.k = int(k)
        self.weighting = weighting

    def fit(self, X, y) -> KNNRegressor:
        X, y = check_xy(X, y)
        if not 1 <= self.k <= len(X):
            raise ConfigurationError(f"k={self.k} must be between 1 and the training size {len(X)}")
        self.X_, self.y_ = X, y
        return self

    def predict(self, X) -> np.ndarray:
        X = check_query(X, self.X_.shape[1])
        dist = np.sqrt(sq_distances(X, self.X_))
        return knn_predict_from_distances(dist, self.y_, self.k, self.weighting)

    def to_dict(self) -> dict:
        return {"model": "knn", "k": self.k, "weighting": self.weighting, "n_train": len(self.y_)}

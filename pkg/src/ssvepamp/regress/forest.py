"""CART regression trees and a bagged random forest.

Splits maximize variance reduction over a random subset of features, with
thresholds at midpoints between consecutive distinct values. Fractional
``min_samples_split`` / ``min_samples_leaf`` are fractions of the training
size seen by the tree.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigurationError
from ._common import check_query, check_xy


def _resolve_count(value, n: int, floor: int, what: str) -> int:
    # floats are fractions of n, ints are absolute counts
    if isinstance(value, (float, np.floating)):
        if not 0 < value <= 1:
            raise ConfigurationError(f"fractional {what} must be in (0, 1], got {value}")
        return max(floor, math.ceil(value * n))
    value = int(value)
    if value < floor:
        raise ConfigurationError(f"{what} must be at least {floor}, got {value}")
    return value


class RegressionTree:
    def __init__(self, max_depth=None, max_features=None, min_samples_split=2, min_samples_leaf=1, rng=None):
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.rng = rng if rng is not None else np.random.default_rng()

    def fit(self, X, y) -> RegressionTree:
        X, y = check_xy(X, y)
        n, p = X.shape
        self.n_features_ = p
        self._split_min = _resolve_count(self.min_samples_split, n, 2, "min_samples_split")
        self._leaf_min = _resolve_count(self.min_samples_leaf, n, 1, "min_samples_leaf")
        self._mtry = p if self.max_features is None else min(p, int(self.max_features))
        if self._mtry < 1:
            raise ConfigurationError(f"max_features must be positive, got {self.max_features}")
        self._depth_cap = np.inf if self.max_depth is None else int(self.max_depth)

        self.feature_, self.threshold_, self.left_, self.right_, self.value_ = [], [], [], [], []
        self._grow(X, y, np.arange(n), 0)
        for name in ("feature_", "threshold_", "left_", "right_", "value_"):
            setattr(self, name, np.asarray(getattr(self, name)))
        return self

    def _new_node(self, value: float) -> int:
        self.feature_.append(-1)
        self.threshold_.append(np.nan)
        self.left_.append(-1)
        self.right_.append(-1)
        self.value_.append(value)
        return len(self.value_) - 1

    def _grow(self, X, y, idx, depth) -> int:
        yi = y[idx]
        node = self._new_node(float(yi.mean()))
        n = idx.size
        if depth >= self._depth_cap or n < self._split_min or n < 2 * self._leaf_min or np.ptp(yi) == 0:
            return node
        split = self._best_split(X, yi, idx)
        if split is None:
            return node
        feat, thr = split
        go_left = X[idx, feat] <= thr
        self.feature_[node], self.threshold_[node] = feat, thr
        self.left_[node] = self._grow(X, y, idx[go_left], depth + 1)
        self.right_[node] = self._grow(X, y, idx[~go_left], depth + 1)
        return node

    def _best_split(self, X, yi, idx):
        n = idx.size
        p = self.n_features_
        feats = self.rng.choice(p, self._mtry, replace=False) if self._mtry < p else np.arange(p)
        xs = X[np.ix_(idx, feats)]
        order = np.argsort(xs, axis=0, kind="stable")
        xs = np.take_along_axis(xs, order, axis=0)
        ys = yi[order]
        csum = np.cumsum(ys, axis=0)[:-1]
        total = yi.sum()
        n_left = np.arange(1, n)[:, None]
        # maximizing this is equivalent to minimizing the children's SSE
        gain = csum**2 / n_left + (total - csum) ** 2 / (n - n_left) - total**2 / n
        valid = (xs[1:] > xs[:-1]) & (n_left >= self._leaf_min) & (n - n_left >= self._leaf_min)
        gain = np.where(valid, gain, -np.inf)
        pos, col = np.unravel_index(np.argmax(gain.T), gain.T.shape)[::-1]
        best = gain[pos, col]
        if not np.isfinite(best) or best <= 1e-12 * max(1.0, float(np.sum((yi - yi.mean()) ** 2))):
            return None
        return int(feats[col]), 0.5 * (xs[pos, col] + xs[pos + 1, col])

    def predict(self, X) -> np.ndarray:
        X = check_query(X, self.n_features_)
        node = np.zeros(len(X), dtype=int)
        active = self.feature_[node] >= 0
        while active.any():
            cur = node[active]
            f = self.feature_[cur]
            go_left = X[active, f] <= self.threshold_[cur]
            node[active] = np.where(go_left, self.left_[cur], self.right_[cur])
            active = self.feature_[node] >= 0
        return self.value_[node]

    @property
    def depth(self) -> int:
        def walk(i):
            return 0 if self.feature_[i] < 0 else 1 + max(walk(self.left_[i]), walk(self.right_[i]))
        return walk(0)

    def to_dict(self) -> dict:
        return {"feature": self.feature_.tolist(), "threshold": [None if np.isnan(t) else float(t) for t in self.threshold_],
                "left": self.left_.tolist(), "right": self.right_.tolist(), "value": self.value_.tolist()}


class RandomForestRegressor:
    """Mean of CART trees, each grown on a bootstrap resample."""

    def __init__(self, n_estimators=10, max_depth=None, max_features=None, min_samples_split=2,
                 min_samples_leaf=1, bootstrap=True, random_state=0):
        if n_estimators < 1:
            raise ConfigurationError(f"n_estimators must be positive, got {n_estimators}")
        self.n_estimators = int(n_estimators)
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.random_state = random_state

    def fit(self, X, y) -> RandomForestRegressor:
        X, y = check_xy(X, y)
        n = len(X)
        self.trees_ = []
        for seq in np.random.SeedSequence(self.random_state).spawn(self.n_estimators):
            rng = np.random.default_rng(seq)
            rows = rng.integers(0, n, n) if self.bootstrap else np.arange(n)
            tree = RegressionTree(self.max_depth, self.max_features, self.min_samples_split,
                                  self.min_samples_leaf, rng)
            self.trees_.append(tree.fit(X[rows], y[rows]))
        return self

    def predict(self, X) -> np.ndarray:
        return np.mean([t.predict(X) for t in self.trees_], axis=0)

    def to_dict(self) -> dict:
        return {"model": "rf", "n_estimators": self.n_estimators, "max_depth": self.max_depth,
                "max_features": self.max_features, "min_samples_split": self.min_samples_split,
                "min_samples_leaf": self.min_samples_leaf, "bootstrap": self.bootstrap,
                "random_state": self.random_state, "trees": [t.to_dict() for t in self.trees_]}

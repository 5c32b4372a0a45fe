from __future__ import annotations

import numpy as np

from ._common import check_query, check_xy


class LinearRegression:
    """Ordinary least squares with an intercept (minimum-norm when the
    design is rank deficient)."""

    def fit(self, X, y) -> LinearRegression:
        X, y = check_xy(X, y)
        A = np.column_stack([X, np.ones(len(X))])
        sol, *_ = np.linalg.lstsq(A, y, rcond=None)
        self.coef_ = sol[:-1]
        self.intercept_ = float(sol[-1])
        return self

    def predict(self, X) -> np.ndarray:
        X = check_query(X, self.coef_.size)
        return X @ self.coef_ + self.intercept_

    def to_dict(self) -> dict:
        return {"model": "lr", "coef": self.coef_.tolist(), "intercept": self.intercept_}

"""Epsilon-insensitive support vector regression solved by SMO.

The dual is handled in the doubled form with ``2n`` variables
``(alpha, alpha*)`` and labels ``(+1, -1)``::

    min  1/2 (a - a*)' K (a - a*) + eps * sum(a + a*) - y' (a - a*)
    s.t. sum(a - a*) = 0,  0 <= a, a* <= C

Each step updates a violating pair in closed form and clips it to the box.
The first member is always the maximal KKT violator.
Only ``f = K beta`` with ``beta = a - a*`` is stored, since every gradient
entry is ``+/-(f - y) + eps``. The loop stops once the violation gap drops
below ``tol`` or after ``max_passes * n`` pair updates.
"""
from __future__ import annotations

import warnings

import numba
import numpy as np

from ..errors import ConfigurationError, ConvergenceWarning, DataError
from ._common import check_query, check_xy, sq_distances

__all__ = ["kernel_matrix", "solve_svr_dual", "SVR", "fit_svr"]

KERNELS = ("rbf", "poly")
SELECTIONS = ("second-order", "max-violation")
TAU = 1e-12


def kernel_matrix(A, B, kernel: str = "rbf", gamma: float = 1.0, degree: int = 3) -> np.ndarray:
    """``exp(-gamma ||a - b||^2)`` or ``(1 + a.b)^degree`` for every row pair."""
    if kernel == "rbf":
        return np.exp(-gamma * sq_distances(A, B))
    if kernel == "poly":
        if degree == 0:
            return np.ones((len(A), len(B)))
        return (1.0 + A @ B.T) ** degree
    raise ConfigurationError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")


@numba.njit(cache=True)
def _smo(K, y, C, eps, tol, max_iter, second_order):
    n = y.size
    a_pos = np.zeros(n)
    a_neg = np.zeros(n)
    f = np.zeros(n)
    it = 0
    converged = False
    while it < max_iter:
        # i from I_up maximizes -yG, j from I_low minimizes it; index >= n is the a* half
        m, M = -np.inf, np.inf
        i, j = -1, -1
        for t in range(n):
            r = y[t] - f[t]
            v = r - eps
            if a_pos[t] < C and v > m:
                m, i = v, t
            if a_pos[t] > 0 and v < M:
                M, j = v, t
            v = r + eps
            if a_neg[t] > 0 and v > m:
                m, i = v, t + n
            if a_neg[t] < C and v < M:
                M, j = v, t + n
        if m - M < tol:
            converged = True
            break
        if second_order:
            # keep i; pick j in I_low maximizing the guaranteed objective decrease b^2 / a
            ii = i if i < n else i - n
            best = -np.inf
            for t in range(n):
                a = K[ii, ii] + K[t, t] - 2.0 * K[ii, t]
                if a <= 0:
                    a = TAU
                r = y[t] - f[t]
                v = r - eps
                if a_pos[t] > 0 and v < m:
                    g = (m - v) * (m - v) / a
                    if g > best:
                        best, j = g, t
                v = r + eps
                if a_neg[t] < C and v < m:
                    g = (m - v) * (m - v) / a
                    if g > best:
                        best, j = g, t + n
        it += 1

        ii, si = (i, 1.0) if i < n else (i - n, -1.0)
        jj, sj = (j, 1.0) if j < n else (j - n, -1.0)
        ai = a_pos[ii] if si > 0 else a_neg[ii]
        aj = a_pos[jj] if sj > 0 else a_neg[jj]
        # G = Q alpha + p, with Q_tu = s_t s_u K and p = eps - s y
        gi = si * f[ii] + eps - si * y[ii]
        gj = sj * f[jj] + eps - sj * y[jj]
        qij = si * sj * K[ii, jj]
        old_i, old_j = ai, aj
        if si != sj:
            quad = K[ii, ii] + K[jj, jj] + 2.0 * qij
            if quad <= 0:
                quad = TAU
            delta = (-gi - gj) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
            elif ai < 0:
                ai = 0.0
                aj = -diff
            if diff > 0:
                if ai > C:
                    ai = C
                    aj = C - diff
            elif aj > C:
                aj = C
                ai = C + diff
        else:
            quad = K[ii, ii] + K[jj, jj] - 2.0 * qij
            if quad <= 0:
                quad = TAU
            delta = (gi - gj) / quad
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai = C
                    aj = total - C
            elif aj < 0:
                aj = 0.0
                ai = total
            if total > C:
                if aj > C:
                    aj = C
                    ai = total - C
            elif ai < 0:
                ai = 0.0
                aj = total

        if si > 0:
            a_pos[ii] = ai
        else:
            a_neg[ii] = ai
        if sj > 0:
            a_pos[jj] = aj
        else:
            a_neg[jj] = aj
        dbi = si * (ai - old_i)
        dbj = sj * (aj - old_j)
        for t in range(n):
            f[t] += K[ii, t] * dbi + K[jj, t] * dbj

    # bias: average -yG over free variables, else midpoint of the feasible interval
    ub, lb = np.inf, -np.inf
    acc, n_free = 0.0, 0
    for t in range(n):
        for s in (1.0, -1.0):
            a = a_pos[t] if s > 0 else a_neg[t]
            yg = f[t] + s * eps - y[t]  # y_t * G_t
            if a >= C:
                if s < 0:
                    ub = min(ub, yg)
                else:
                    lb = max(lb, yg)
            elif a <= 0:
                if s > 0:
                    ub = min(ub, yg)
                else:
                    lb = max(lb, yg)
            else:
                n_free += 1
                acc += yg
    rho = acc / n_free if n_free > 0 else 0.5 * (ub + lb)
    return a_pos - a_neg, -rho, converged, it


def solve_svr_dual(K, y, C: float, epsilon: float, tol: float = 1e-3, max_passes: int = 10_000,
                   selection: str = "second-order"):
    """Solve the SVR dual for a precomputed kernel matrix.

    ``selection="max-violation"`` takes both members of the working pair
    from the extremes of the KKT violation. ``"second-order"`` keeps the
    first member and picks the second to maximize the closed-form decrease
    of the objective, which needs far fewer updates on dense kernels. The
    stopping rule is the same for both.

    Returns
    -------
    beta : ndarray
        ``alpha - alpha*`` per training point, each in ``[-C, C]``.
    bias : float
    converged : bool
    n_iter : int
        Pair updates performed.
    """
    if not C > 0:
        raise ConfigurationError(f"C must be positive, got {C}")
    if not epsilon >= 0:
        raise ConfigurationError(f"epsilon must be non-negative, got {epsilon}")
    K = np.ascontiguousarray(K, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if K.shape != (y.size, y.size):
        raise DataError(f"kernel matrix {K.shape} does not match {y.size} targets")
    if not (np.all(np.isfinite(K)) and np.all(np.isfinite(y))):
        raise DataError("kernel matrix and targets must be finite")
    if selection not in SELECTIONS:
        raise ConfigurationError(f"unknown selection {selection!r}; expected one of {SELECTIONS}")
    max_iter = int(max_passes) * max(y.size, 1)
    beta, bias, converged, n_iter = _smo(K, y, float(C), float(epsilon), float(tol), max_iter,
                                         selection == "second-order")
    if not converged:
        warnings.warn(f"SMO stopped after {n_iter} updates without reaching tol={tol}",
                      ConvergenceWarning, stacklevel=2)
    return beta, float(bias), bool(converged), int(n_iter)


class SVR:
    """Kernel epsilon-SVR.

    Parameters
    ----------
    kernel : {"rbf", "poly"}
    C : float
        Box bound on each dual coefficient.
    epsilon : float
        Half-width of the insensitive tube.
    gamma : float
        RBF width, ``exp(-gamma ||x - x'||^2)``.
    degree : int
        Polynomial degree for ``(1 + x.x')^degree``.
    """

    def __init__(self, kernel="rbf", C=1.0, epsilon=0.1, gamma=1.0, degree=3, tol=1e-3, max_passes=10_000,
                 selection="second-order"):
        if kernel not in KERNELS:
            raise ConfigurationError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
        if kernel == "poly" and (int(degree) != degree or degree < 0):
            raise ConfigurationError(f"degree must be a non-negative integer, got {degree}")
        self.kernel = kernel
        self.C = C
        self.epsilon = epsilon
        self.gamma = gamma
        self.degree = int(degree)
        self.tol = tol
        self.max_passes = max_passes
        self.selection = selection

    def _k(self, A, B):
        return kernel_matrix(A, B, self.kernel, self.gamma, self.degree)

    def fit(self, X, y) -> SVR:
        X, y = check_xy(X, y)
        return self.fit_kernel(self._k(X, X), X, y)

    def fit_kernel(self, K, X, y) -> SVR:
        """Fit from a kernel matrix already computed on ``X``."""
        beta, self.intercept_, self.converged_, self.n_iter_ = solve_svr_dual(
            K, y, self.C, self.epsilon, self.tol, self.max_passes, self.selection)
        self.n_features_ = X.shape[1]
        keep = beta != 0
        self.support_ = np.flatnonzero(keep)
        self.support_vectors_ = X[keep]
        self.dual_coef_ = beta[keep]
        return self

    def predict(self, X) -> np.ndarray:
        X = check_query(X, self.n_features_)
        if self.dual_coef_.size == 0:
            return np.full(len(X), self.intercept_)
        return self._k(X, self.support_vectors_) @ self.dual_coef_ + self.intercept_

    def to_dict(self) -> dict:
        return {
            "model": "svr", "kernel": self.kernel, "C": self.C, "epsilon": self.epsilon,
            "gamma": self.gamma if self.kernel == "rbf" else None,
            "degree": self.degree if self.kernel == "poly" else None,
            "tol": self.tol, "selection": self.selection, "converged": self.converged_, "n_iter": self.n_iter_,
            "bias": self.intercept_, "dual_coef": self.dual_coef_.tolist(),
            "support_vectors": self.support_vectors_.tolist(),
        }


def fit_svr(inputs, targets, kernel="rbf", C=1.0, epsilon=0.1, gamma_or_degree=1.0, **kw) -> SVR:
    if kernel == "poly":
        model = SVR("poly", C, epsilon, degree=gamma_or_degree, **kw)
    else:
        model = SVR(kernel, C, epsilon, gamma=gamma_or_degree, **kw)
    return model.fit(inputs, targets)

"""Canonical correlation between EEG windows and reference sets.

The maximal canonical correlation is the top singular value of the
whitened cross-covariance ``Cxx^-1/2 Cxy Cyy^-1/2``. Whitening uses a
pseudo-inverse that drops eigen-directions below 1e-10 of the largest
eigenvalue, so rank-deficient references are handled without error.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .dsp import TimeSeries
from .errors import ConfigurationError, DataError, DegenerateInputError
from .reference import ReferenceSet, build_reference

__all__ = ["CcaResult", "Recognition", "cca_max_correlation", "recognize_cca", "pick_label"]

WHITEN_RTOL = 1e-10


@dataclass(frozen=True)
class CcaResult:
    rho: float
    wx: np.ndarray
    wy: np.ndarray


@dataclass(frozen=True)
class Recognition:
    label: float
    scores: dict = field(default_factory=dict)


def _centre(m: np.ndarray) -> np.ndarray:
    return m - m.mean(axis=1, keepdims=True)


def _inv_sqrt_cov(centred: np.ndarray, what: str) -> np.ndarray:
    n = centred.shape[1]
    cov = centred @ centred.T / n
    vals, vecs = np.linalg.eigh(cov)
    top = vals[-1]
    # variance below round-off of the data scale counts as none at all
    scale = np.abs(centred).max() if centred.size else 0.0
    if top <= (1e-12 * max(scale, np.finfo(float).tiny)) ** 2 or scale == 0.0:
        raise DegenerateInputError(f"{what} block has zero variance")
    keep = vals > WHITEN_RTOL * top
    v = vecs[:, keep]
    return (v / np.sqrt(vals[keep])) @ v.T


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, TimeSeries):
        x = x.samples
    m = np.atleast_2d(np.asarray(x, dtype=float))
    if m.ndim != 2:
        raise DataError(f"expected a channels x samples matrix, got shape {m.shape}")
    return m


def cca_max_correlation(x, y) -> CcaResult:
    """Largest canonical correlation between ``x`` and ``y``.

    Parameters
    ----------
    x : array (channels, samples), 1-D array or TimeSeries
        The EEG block. A single channel reduces to the multiple correlation
        of the signal with the reference row space.
    y : ReferenceSet or array (rows, samples)

    Returns
    -------
    CcaResult
        ``rho`` in [0, 1] with weight vectors ``wx``, ``wy`` whose
        projections (after mean-centring) correlate at exactly ``rho``.
    """
    xm = _as_matrix(x)
    if isinstance(y, ReferenceSet):
        yc, wyy = y.whitened_basis
    else:
        yc = _centre(_as_matrix(y))
        wyy = None
    if xm.shape[1] != yc.shape[1]:
        raise DataError(f"sample counts differ: x has {xm.shape[1]}, y has {yc.shape[1]}")
    n = xm.shape[1]
    if n <= xm.shape[0] + yc.shape[0]:
        raise DataError(f"{n} samples is too few for {xm.shape[0]} + {yc.shape[0]} variables")
    if not np.all(np.isfinite(xm)):
        raise DataError("x contains non-finite samples")

    xc = _centre(xm)
    wxx = _inv_sqrt_cov(xc, "signal")
    if wyy is None:
        wyy = _inv_sqrt_cov(yc, "reference")
    cxy = xc @ yc.T / n
    u, s, vt = np.linalg.svd(wxx @ cxy @ wyy)
    rho = float(min(max(s[0], 0.0), 1.0))
    return CcaResult(rho, wxx @ u[:, 0], wyy @ vt[0])


def pick_label(scores: dict) -> float:
    """Argmax over candidate scores; ties go to the lowest frequency."""
    best = None
    for f in sorted(scores):
        if best is None or scores[f] > scores[best]:
            best = f
    return best


def recognize_cca(window: TimeSeries, candidates: Iterable[float] = (7.5, 10.0), n_harmonics: int = 3) -> Recognition:
    candidates = list(candidates)
    if not candidates:
        raise ConfigurationError("no candidate frequencies given")
    xm = _as_matrix(window)
    fs = window.fs if isinstance(window, TimeSeries) else None
    if fs is None:
        raise DataError("recognition needs a TimeSeries/Window carrying its sample rate")
    scores = {
        float(f): cca_max_correlation(xm, build_reference(f, n_harmonics, fs, xm.shape[1])).rho
        for f in candidates
    }
    return Recognition(pick_label(scores), scores)

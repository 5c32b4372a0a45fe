"""Filter-bank CCA: per-sub-band CCA fused with weights ``w(n) = n**-a + b``."""
from __future__ import annotations

import logging
import warnings
from functools import lru_cache
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .cca import Recognition, cca_max_correlation, pick_label
from .dsp import TimeSeries, design_bandpass, filter_apply
from .errors import ConfigurationError, DegenerateInputError
from .reference import ReferenceSet, build_reference

__all__ = [
    "DEFAULT_PASSBANDS",
    "FilterBankSpec",
    "SubbandWeights",
    "FbccaScore",
    "default_filter_bank",
    "decompose",
    "fbcca_score",
    "recognize_fbcca",
    "subband_correlations",
    "grid_search_ab",
    "select_weights",
    "fused_labels",
]

log = logging.getLogger(__name__)

# band n starts just below harmonic n of 7.5 Hz; all share the 25 Hz upper edge
DEFAULT_PASSBANDS = ((6.0, 25.0), (14.0, 25.0), (21.0, 25.0))


@dataclass(frozen=True)
class FilterBankSpec:
    passbands: tuple
    filters: tuple
    fs: float

    def __post_init__(self):
        if len(self.passbands) < 1 or len(self.passbands) != len(self.filters):
            raise ConfigurationError("filter bank needs one filter per passband and at least one band")
        lows = [lo for lo, _ in self.passbands]
        if any(b < a for a, b in zip(lows, lows[1:])):
            raise ConfigurationError("sub-band low edges must be non-decreasing")
        for lo, hi in self.passbands:
            if not 0 < lo < hi < self.fs / 2:
                raise ConfigurationError(f"passband ({lo}, {hi}) outside (0, {self.fs / 2})")

    @property
    def n_subbands(self) -> int:
        return len(self.filters)

    @classmethod
    def from_passbands(cls, passbands: Sequence[tuple[float, float]], fs: float, order: int = 2) -> FilterBankSpec:
        bands = tuple((float(lo), float(hi)) for lo, hi in passbands)
        filters = tuple(design_bandpass(lo, hi, fs, order) for lo, hi in bands)
        return cls(bands, filters, float(fs))

    def to_dict(self) -> dict:
        return {"fs": self.fs, "passbands": [list(p) for p in self.passbands],
                "filters": [f.to_dict() for f in self.filters]}


@lru_cache(maxsize=8)
def default_filter_bank(fs: float = 250.0) -> FilterBankSpec:
    return FilterBankSpec.from_passbands(DEFAULT_PASSBANDS, fs)


@dataclass(frozen=True)
class SubbandWeights:
    a: float = 1.25
    b: float = 0.25
    n: int = 3

    @property
    def weights(self) -> np.ndarray:
        w = np.arange(1, self.n + 1, dtype=float) ** (-self.a) + self.b
        if not np.all(np.isfinite(w)):
            raise ConfigurationError(f"non-finite sub-band weights for a={self.a}, b={self.b}")
        return w


@dataclass(frozen=True)
class FbccaScore:
    per_band_rho: np.ndarray
    weights: np.ndarray

    @property
    def fused(self) -> float:
        return float(np.dot(self.weights, np.asarray(self.per_band_rho) ** 2))


def decompose(window: TimeSeries, spec: FilterBankSpec) -> list[TimeSeries]:
    """One filtered copy of ``window`` per sub-band, each the same length."""
    return [filter_apply(f, window) for f in spec.filters]


def _band_rho(band: TimeSeries, y: ReferenceSet, idx: int) -> float:
    try:
        return cca_max_correlation(band, y).rho
    except DegenerateInputError:
        warnings.warn(f"sub-band {idx + 1} has no variance; scoring it as rho=0", RuntimeWarning, stacklevel=3)
        return 0.0


def fbcca_score(window: TimeSeries, y: ReferenceSet, spec: FilterBankSpec, wts: SubbandWeights) -> FbccaScore:
    if wts.n != spec.n_subbands:
        raise ConfigurationError(f"{wts.n} weights for {spec.n_subbands} sub-bands")
    bands = decompose(window, spec)
    rho = np.array([_band_rho(b, y, i) for i, b in enumerate(bands)])
    return FbccaScore(rho, wts.weights)


def subband_correlations(
    window: TimeSeries,
    candidates: Sequence[float],
    spec: FilterBankSpec,
    n_harmonics: int = 3,
) -> np.ndarray:
    """Array ``(n_candidates, n_subbands)`` of sub-band canonical correlations.

    The window is decomposed once and reused for every candidate.
    """
    bands = decompose(window, spec)
    out = np.empty((len(candidates), len(bands)))
    for k, f in enumerate(candidates):
        y = build_reference(f, n_harmonics, window.fs, len(window))
        for n, band in enumerate(bands):
            out[k, n] = _band_rho(band, y, n)
    return out


def recognize_fbcca(
    window: TimeSeries,
    candidates: Iterable[float] = (7.5, 10.0),
    spec: FilterBankSpec | None = None,
    wts: SubbandWeights | None = None,
    n_harmonics: int = 3,
) -> Recognition:
    candidates = sorted(float(f) for f in candidates)
    if not candidates:
        raise ConfigurationError("no candidate frequencies given")
    spec = spec or default_filter_bank(window.fs)
    wts = wts or SubbandWeights(n=spec.n_subbands)
    if wts.n != spec.n_subbands:
        raise ConfigurationError(f"{wts.n} weights for {spec.n_subbands} sub-bands")
    rho = subband_correlations(window, candidates, spec, n_harmonics)
    fused = rho**2 @ wts.weights
    scores = dict(zip(candidates, map(float, fused)))
    return Recognition(pick_label(scores), scores)


def fused_labels(rho: np.ndarray, candidates: Sequence[float], wts: SubbandWeights) -> np.ndarray:
    """Labels from stacked sub-band correlations ``(n_windows, n_candidates,
    n_subbands)``; candidates must be sorted so ties go to the lowest."""
    return np.asarray(candidates, dtype=float)[np.argmax(rho**2 @ wts.weights, axis=1)]


def select_weights(
    rho: np.ndarray,
    true_labels: Sequence[float],
    candidates: Sequence[float],
    a_grid: Iterable[float] = (0.0, 0.5, 1.0, 1.25, 1.5, 2.0),
    b_grid: Iterable[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
) -> tuple[SubbandWeights, float]:
    """Best ``(a, b)`` by accuracy given precomputed sub-band correlations.

    Ties keep the smallest a, then the smallest b.
    """
    a_grid, b_grid = sorted(a_grid), sorted(b_grid)
    if not a_grid or not b_grid:
        raise ConfigurationError("a and b grids must be non-empty")
    if len(rho) == 0:
        raise ConfigurationError("grid search needs at least one training window")
    if len(rho) != len(true_labels):
        raise ConfigurationError("one true label per window required")
    truth = np.asarray(true_labels, dtype=float)
    best, best_acc = None, -1.0
    for a in a_grid:
        for b in b_grid:
            w = SubbandWeights(a, b, rho.shape[2])
            acc = float(np.mean(fused_labels(rho, candidates, w) == truth))
            if acc > best_acc:
                best, best_acc = w, acc
    return best, best_acc


def grid_search_ab(
    windows: Sequence[TimeSeries],
    true_labels: Sequence[float],
    spec: FilterBankSpec,
    a_grid: Iterable[float] = (0.0, 0.5, 1.0, 1.25, 1.5, 2.0),
    b_grid: Iterable[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
    candidates: Iterable[float] = (7.5, 10.0),
    n_harmonics: int = 3,
) -> SubbandWeights:
    """Choose (a, b) maximizing recognition accuracy over labelled windows.

    Sub-band correlations are computed once; each grid cell only re-fuses
    them.
    """
    if len(windows) == 0:
        raise ConfigurationError("grid search needs at least one training window")
    candidates = sorted(float(f) for f in candidates)
    rho = np.stack([subband_correlations(w, candidates, spec, n_harmonics) for w in windows])
    best, acc = select_weights(rho, true_labels, candidates, a_grid, b_grid)
    log.info("grid search picked a=%g b=%g (accuracy %.4f)", best.a, best.b, acc)
    return best

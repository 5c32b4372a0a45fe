"""Sine/cosine reference matrices for CCA-based frequency recognition."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import ConfigurationError

__all__ = ["ReferenceSet", "build_reference"]


@dataclass(frozen=True, eq=False)
class ReferenceSet:
    """Rows ``sin(2*pi*k*f*t), cos(2*pi*k*f*t)`` for k = 1..n_harmonics.

    The time grid is ``t = 1/fs, 2/fs, ..., n_samples/fs``; it deliberately
    does not start at zero.
    """

    freq: float
    n_harmonics: int
    fs: float
    n_samples: int
    matrix: np.ndarray

    @cached_property
    def whitened_basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Mean-centred matrix and its inverse-square-root covariance.

        Cached because every window scored against this set reuses them.
        """
        from .cca import _centre, _inv_sqrt_cov

        yc = _centre(self.matrix)
        return yc, _inv_sqrt_cov(yc, "reference")


def build_reference(freq: float, n_harmonics: int, fs: float, n_samples: int) -> ReferenceSet:
    if n_harmonics < 1:
        raise ConfigurationError(f"need at least one harmonic, got {n_harmonics}")
    if not freq > 0 or not freq * n_harmonics < fs / 2:
        raise ConfigurationError(
            f"harmonic {n_harmonics} of {freq} Hz is not below the Nyquist frequency {fs / 2} Hz"
        )
    if n_samples < 1:
        raise ConfigurationError(f"n_samples must be positive, got {n_samples}")
    return _cached_reference(float(freq), int(n_harmonics), float(fs), int(n_samples))


@lru_cache(maxsize=256)
def _cached_reference(freq: float, n_harmonics: int, fs: float, n_samples: int) -> ReferenceSet:
    t = np.arange(1, n_samples + 1) / fs
    rows = []
    for k in range(1, n_harmonics + 1):
        rows.append(np.sin(2 * np.pi * k * freq * t))
        rows.append(np.cos(2 * np.pi * k * freq * t))
    m = np.vstack(rows)
    m.setflags(write=False)
    return ReferenceSet(freq, n_harmonics, fs, n_samples, m)

"""Digital filtering, sliding windows and Welch spectra for single-channel EEG.

Filters are stored as cascades of normalized biquads ``(b0, b1, b2, a1, a2)``
with ``a0 == 1``. Designs come from the analog Butterworth prototype mapped
through the bilinear transform with band-edge pre-warping, so the -3 dB
points land exactly on the requested edges.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import ConfigurationError, DataError

__all__ = [
    "TimeSeries",
    "Window",
    "BiquadCascade",
    "PsdEstimate",
    "design_bandpass",
    "design_notch",
    "filter_apply",
    "preprocess",
    "sliding_windows",
    "window_count",
    "welch_psd",
]


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled single-channel signal in microvolts."""

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise DataError(f"expected a non-empty 1-D sample array, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DataError("samples must be finite")
        if not self.fs > 0:
            raise ConfigurationError(f"sample rate must be positive, got {self.fs}")
        object.__setattr__(self, "samples", x)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.fs


@dataclass(frozen=True)
class Window(TimeSeries):
    """A fixed-length slice of a recording; ``start_index`` is in samples."""

    start_index: int = 0


@dataclass(frozen=True)
class BiquadCascade:
    sections: np.ndarray
    description: str = ""
    fs: float | None = None

    def __post_init__(self):
        sos = np.atleast_2d(np.asarray(self.sections, dtype=float))
        if sos.ndim != 2 or sos.shape[1] != 5 or sos.shape[0] == 0:
            raise ConfigurationError("sections must be an (n, 5) array of (b0, b1, b2, a1, a2)")
        object.__setattr__(self, "sections", sos)

    @classmethod
    def identity(cls, fs: float | None = None) -> BiquadCascade:
        return cls(np.array([[1.0, 0.0, 0.0, 0.0, 0.0]]), "identity", fs)

    def as_sos(self) -> np.ndarray:
        """Sections in the ``(b0, b1, b2, 1, a1, a2)`` layout scipy expects."""
        s = self.sections
        return np.column_stack([s[:, :3], np.ones(len(s)), s[:, 3:]])

    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots([1.0, a1, a2]) for a1, a2 in self.sections[:, 3:]])

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1.0))

    def response(self, freqs, fs: float | None = None) -> np.ndarray:
        """Complex frequency response evaluated at ``freqs`` (Hz)."""
        fs = fs if fs is not None else self.fs
        if fs is None:
            raise ConfigurationError("sample rate needed to evaluate the response")
        z = np.exp(-1j * 2 * np.pi * np.asarray(freqs, dtype=float) / fs)
        h = np.ones_like(z)
        for b0, b1, b2, a1, a2 in self.sections:
            h = h * (b0 + b1 * z + b2 * z**2) / (1.0 + a1 * z + a2 * z**2)
        return h

    def to_dict(self) -> dict:
        return {
            "description": self.description,
            "fs": self.fs,
            "sections": [dict(zip(("b0", "b1", "b2", "a1", "a2"), map(float, s))) for s in self.sections],
        }


@dataclass(frozen=True)
class PsdEstimate:
    freqs: np.ndarray
    power: np.ndarray
    resolution: float

    def peak_in(self, center: float, half_width: float) -> float:
        """Largest PSD value among bins within ``center +/- half_width``."""
        mask = np.abs(self.freqs - center) <= half_width + 1e-9
        if not mask.any():
            raise ConfigurationError(f"no PSD bins within {half_width} Hz of {center} Hz")
        return float(self.power[mask].max())


def _check_band(low: float, high: float, fs: float) -> None:
    if not (0 < low < high < fs / 2):
        raise ConfigurationError(f"band edges must satisfy 0 < low < high < fs/2, got ({low}, {high}) at fs={fs}")


def design_bandpass(low: float, high: float, fs: float, order: int = 2) -> BiquadCascade:
    """Butterworth band-pass of total ``order`` (2 -> a single biquad).

    The low-pass prototype has order ``order // 2``; the low-pass to
    band-pass substitution doubles it. Edges are pre-warped so that the
    digital response is exactly 1/sqrt(2) of its peak at ``low`` and ``high``.
    """
    _check_band(low, high, fs)
    if order < 2 or order % 2:
        raise ConfigurationError(f"band-pass order must be an even integer >= 2, got {order}")
    n_proto = order // 2

    # pre-warped analog edges
    wl = 2 * fs * np.tan(np.pi * low / fs)
    wh = 2 * fs * np.tan(np.pi * high / fs)
    bw, w0 = wh - wl, np.sqrt(wl * wh)

    k = np.arange(n_proto)
    proto = np.exp(1j * np.pi * (2 * k + n_proto + 1) / (2 * n_proto))
    half = proto * bw / 2
    disc = np.sqrt(half**2 - w0**2 + 0j)
    s_poles = np.concatenate([half + disc, half - disc])
    z_poles = (1 + s_poles / (2 * fs)) / (1 - s_poles / (2 * fs))

    sections = []
    upper = z_poles[z_poles.imag > 1e-12]
    real = np.sort(z_poles[np.abs(z_poles.imag) <= 1e-12].real)
    for p in upper:
        sections.append([1.0, 0.0, -1.0, -2 * p.real, abs(p) ** 2])
    for p, q in zip(real[::2], real[1::2]):
        sections.append([1.0, 0.0, -1.0, -(p + q), p * q])
    sos = np.array(sections)

    # unit gain at the band centre
    f_center = fs / np.pi * np.arctan(w0 / (2 * fs))
    cascade = BiquadCascade(sos, "", fs)
    g = 1.0 / abs(cascade.response([f_center])[0])
    sos[:, :3] *= g ** (1.0 / len(sos))
    return BiquadCascade(sos, f"butterworth band-pass {low:g}-{high:g} Hz, order {order}", fs)


def design_notch(f0: float, q: float = 30.0, fs: float = 250.0) -> BiquadCascade:
    """Second-order notch with zeros on the unit circle at ``f0``.

    ``q`` is ``f0`` over the -3 dB bandwidth. The band edges are placed
    through the bilinear transform, so the digital bandwidth is exact.
    """
    if not (0 < f0 < fs / 2):
        raise ConfigurationError(f"notch frequency must satisfy 0 < f0 < fs/2, got {f0} at fs={fs}")
    if not q > 0:
        raise ConfigurationError(f"notch quality factor must be positive, got {q}")
    w0 = 2 * np.pi * f0 / fs
    bw = w0 / q
    if bw >= np.pi:
        raise ConfigurationError(f"notch bandwidth {f0 / q:g} Hz is too wide for fs={fs}")
    g = 1 / (1 + np.tan(bw / 2))
    c = -2 * np.cos(w0)
    sos = np.array([[g, g * c, g, g * c, 2 * g - 1]])
    return BiquadCascade(sos, f"notch {f0:g} Hz, Q={q:g}", fs)


def filter_apply(f: BiquadCascade, x: TimeSeries) -> TimeSeries:
    """Causal, zero-initial-state filtering; returns the same type as ``x``."""
    if not np.all(np.isfinite(x.samples)):
        raise DataError("input contains non-finite samples")
    if f.fs is not None and not np.isclose(f.fs, x.fs):
        raise ConfigurationError(f"filter designed for fs={f.fs} applied to signal at fs={x.fs}")
    y = signal.sosfilt(f.as_sos(), x.samples)
    return dataclasses.replace(x, samples=y)


def preprocess(
    x: TimeSeries,
    notch_hz: float = 50.0,
    notch_q: float = 30.0,
    band: tuple[float, float] = (6.0, 25.0),
    order: int = 2,
) -> TimeSeries:
    """Mains notch followed by the broad SSVEP band-pass."""
    y = filter_apply(design_notch(notch_hz, notch_q, x.fs), x)
    return filter_apply(design_bandpass(band[0], band[1], x.fs, order), y)


def _to_samples(seconds: float, fs: float, what: str) -> int:
    n = seconds * fs
    if not n > 0 or abs(n - round(n)) > 1e-9:
        raise ConfigurationError(f"{what} of {seconds} s is not a positive whole number of samples at {fs} Hz")
    return int(round(n))


def window_count(n_samples: int, window: int, step: int) -> int:
    return (n_samples - window) // step + 1 if n_samples >= window else 0


def sliding_windows(x: TimeSeries, window_s: float = 3.0, step_s: float = 1.0) -> list[Window]:
    win = _to_samples(window_s, x.fs, "window")
    step = _to_samples(step_s, x.fs, "step")
    count = window_count(len(x), win, step)
    if count == 0:
        raise DataError(f"window of {window_s} s does not fit in a {x.duration_s:g} s signal")
    return [
        Window(x.samples[i * step : i * step + win].copy(), x.fs, start_index=i * step)
        for i in range(count)
    ]


def welch_psd(
    x: TimeSeries,
    segment_s: float = 2.0,
    overlap_frac: float = 0.5,
    taper: str = "hann",
) -> PsdEstimate:
    """One-sided Welch power spectral density in units of x**2 / Hz.

    Segments are mean-removed and Hann tapered (periodic form); the scaling
    makes the integral of the spectrum equal the mean-square of the signal,
    so an on-bin sine of amplitude A integrates to A**2 / 2 over its peak.
    """
    if taper != "hann":
        raise ConfigurationError(f"unsupported taper {taper!r}")
    if not 0 <= overlap_frac < 1:
        raise ConfigurationError(f"overlap fraction must be in [0, 1), got {overlap_frac}")
    nseg = _to_samples(segment_s, x.fs, "segment")
    if nseg > len(x):
        raise ConfigurationError(f"segment of {nseg} samples exceeds the {len(x)}-sample input")
    step = nseg - int(round(overlap_frac * nseg))

    taper_w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(nseg) / nseg)
    starts = np.arange(0, len(x) - nseg + 1, step)
    segs = np.stack([x.samples[s : s + nseg] for s in starts])
    segs = (segs - segs.mean(axis=1, keepdims=True)) * taper_w
    spec = np.abs(np.fft.rfft(segs, axis=1)) ** 2 / (x.fs * np.sum(taper_w**2))
    power = spec.mean(axis=0)
    power[1:] *= 2
    if nseg % 2 == 0:
        power[-1] /= 2
    freqs = np.fft.rfftfreq(nseg, d=1.0 / x.fs)
    return PsdEstimate(freqs, power, x.fs / nseg)

"""Windowed amplitude extraction and curve-fitted regression targets.

For every sliding window of a preprocessed recording: recognize the SSVEP
frequency, band-pass the window narrowly around the recognized frequency,
and take the highest Welch PSD bin within +/-0.5 Hz of it. The resulting
per-window trace is fitted with a line (condition 1) or a parabola
(conditions 2-4) over the window index; the fitted values are the targets,
and the narrow-band windows are the model inputs.

Amplitudes are kept in PSD units (uV**2/Hz).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache, partial
from typing import Callable, Mapping, Sequence

import numpy as np

from .cca import Recognition
from .dsp import BiquadCascade, TimeSeries, Window, design_bandpass, filter_apply, sliding_windows, welch_psd
from .errors import ConfigurationError, DataError
from .fbcca import FilterBankSpec, SubbandWeights, default_filter_bank, recognize_fbcca

__all__ = [
    "NARROW_BANDS",
    "AmplitudeSignal",
    "FittedTarget",
    "WindowedDataset",
    "narrowband_for",
    "extract_amplitude",
    "build_amplitude_signal",
    "fit_target",
    "fbcca_recognizer",
    "build_dataset",
]

NARROW_BANDS = {7.5: (7.0, 8.0), 10.0: (9.5, 10.5)}

Recognizer = Callable[[Window], Recognition]


@dataclass(frozen=True)
class AmplitudeSignal:
    subject: int
    condition: int
    points: np.ndarray
    window_labels: np.ndarray
    windows: list = field(default_factory=list, repr=False)  # narrow-band filtered


@dataclass(frozen=True)
class FittedTarget:
    subject: int
    condition: int
    coeffs: np.ndarray  # highest power first
    fitted: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


@lru_cache(maxsize=16)
def narrowband_for(label: float, fs: float = 250.0) -> BiquadCascade:
    """The order-2 Butterworth band-pass used for amplitude extraction."""
    try:
        low, high = NARROW_BANDS[float(label)]
    except KeyError:
        raise ConfigurationError(f"no narrow band defined for {label} Hz; known: {sorted(NARROW_BANDS)}") from None
    return design_bandpass(low, high, fs, 2)


def extract_amplitude(
    window: Window,
    label: float,
    segment_s: float = 2.0,
    overlap_frac: float = 0.5,
    search_hz: float = 0.5,
) -> tuple[Window, float]:
    filtered = filter_apply(narrowband_for(label, window.fs), window)
    psd = welch_psd(filtered, segment_s, overlap_frac)
    return filtered, psd.peak_in(label, search_hz)


def fbcca_recognizer(
    fs: float = 250.0,
    candidates: Sequence[float] = (7.5, 10.0),
    spec: FilterBankSpec | None = None,
    wts: SubbandWeights | None = None,
    n_harmonics: int = 3,
) -> Recognizer:
    spec = spec or default_filter_bank(fs)
    wts = wts or SubbandWeights(n=spec.n_subbands)
    return partial(recognize_fbcca, candidates=tuple(candidates), spec=spec, wts=wts, n_harmonics=n_harmonics)


def build_amplitude_signal(
    x: TimeSeries,
    recognizer: Recognizer | None = None,
    window_s: float = 3.0,
    step_s: float = 1.0,
    subject: int = 0,
    condition: int = 1,
    segment_s: float = 2.0,
    overlap_frac: float = 0.5,
) -> AmplitudeSignal:
    """Per-window amplitude trace of a preprocessed recording.

    Point ``i`` is read at the frequency the recognizer assigned to window
    ``i``.
    """
    recognizer = recognizer or fbcca_recognizer(x.fs)
    points, labels, filtered = [], [], []
    for w in sliding_windows(x, window_s, step_s):
        label = recognizer(w).label
        fw, amp = extract_amplitude(w, label, segment_s, overlap_frac)
        points.append(amp)
        labels.append(label)
        filtered.append(fw)
    return AmplitudeSignal(subject, condition, np.array(points), np.array(labels), filtered)


def fit_target(sig: AmplitudeSignal) -> FittedTarget:
    """Least-squares polynomial over the window index: degree 1 for
    condition 1, degree 2 otherwise."""
    degree = 1 if sig.condition == 1 else 2
    y = np.asarray(sig.points, dtype=float)
    if y.size <= degree:
        raise DataError(f"{y.size} points cannot determine a degree-{degree} fit")
    i = np.arange(y.size, dtype=float)
    coeffs = np.polyfit(i, y, degree)
    return FittedTarget(sig.subject, sig.condition, coeffs, np.polyval(coeffs, i))


@dataclass
class WindowedDataset:
    """Model-ready windows, one row per (subject, condition, window)."""

    subjects: np.ndarray
    conditions: np.ndarray
    window_index: np.ndarray
    windows: np.ndarray
    labels: np.ndarray
    targets: np.ndarray
    fs: float = 250.0

    def __post_init__(self):
        n = len(self.subjects)
        for name in ("conditions", "window_index", "labels", "targets"):
            if len(getattr(self, name)) != n:
                raise DataError(f"column {name} has {len(getattr(self, name))} rows, expected {n}")
        if self.windows.ndim != 2 or self.windows.shape[0] != n:
            raise DataError(f"windows must be ({n}, window_length), got {self.windows.shape}")

    def __len__(self) -> int:
        return len(self.subjects)

    @property
    def subject_ids(self) -> list[int]:
        return sorted(int(s) for s in np.unique(self.subjects))

    @property
    def condition_ids(self) -> list[int]:
        return sorted(int(c) for c in np.unique(self.conditions))

    def select(self, mask) -> WindowedDataset:
        mask = np.asarray(mask)
        return WindowedDataset(
            self.subjects[mask], self.conditions[mask], self.window_index[mask],
            self.windows[mask], self.labels[mask], self.targets[mask], self.fs,
        )

    def for_condition(self, condition: int) -> WindowedDataset:
        return self.select(self.conditions == condition)

    @classmethod
    def concat(cls, parts: Sequence[WindowedDataset]) -> WindowedDataset:
        if not parts:
            raise DataError("nothing to concatenate")
        return cls(*(np.concatenate([getattr(p, k) for p in parts]) for k in
                     ("subjects", "conditions", "window_index", "windows", "labels", "targets")),
                   fs=parts[0].fs)


def build_dataset(
    recordings: Mapping[tuple[int, int], TimeSeries],
    recognizer: Recognizer | None = None,
    window_s: float = 3.0,
    step_s: float = 1.0,
    segment_s: float = 2.0,
    overlap_frac: float = 0.5,
) -> tuple[WindowedDataset, list[AmplitudeSignal], list[FittedTarget]]:
    """Assemble the windowed dataset from preprocessed recordings keyed by
    ``(subject, condition)``."""
    if not recordings:
        raise DataError("no recordings given")
    signals, targets, parts = [], [], []
    for (subject, condition) in sorted(recordings):
        x = recordings[(subject, condition)]
        sig = build_amplitude_signal(x, recognizer, window_s, step_s, subject, condition, segment_s, overlap_frac)
        fit = fit_target(sig)
        n = len(sig.points)
        parts.append(WindowedDataset(
            np.full(n, subject), np.full(n, condition), np.arange(n),
            np.stack([w.samples for w in sig.windows]), sig.window_labels, fit.fitted, x.fs,
        ))
        signals.append(sig)
        targets.append(fit)
    return WindowedDataset.concat(parts), signals, targets

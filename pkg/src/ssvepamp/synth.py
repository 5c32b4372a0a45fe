"""Contrast schedules and synthetic single-channel SSVEP recordings.

The synthetic signal is a harmonic sum at the stimulation frequency whose
amplitude follows the stimulus contrast through an affine gain map, plus
a resting-state alpha rhythm around 10 Hz and white Gaussian noise::

    x(t) = sum_h g_h * A(c(t)) * sin(2*pi*h*f*t + phi_h)
           + alpha(t) + noise(t)

With ``alpha_bandwidth_hz == 0`` the alpha term is the fixed sinusoid
``alpha_amp * sin(2*pi*f_rest*t)``. Otherwise it is a narrow-band Gaussian
process, ``alpha_amp / sqrt(2) * (z1(t) sin + z2(t) cos)`` with smooth
unit-variance envelopes ``z1, z2``, whose waxing and waning bursts are what
make 7.5 Hz vs 10 Hz recognition from single windows non-trivial.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import signal

from .dsp import TimeSeries
from .errors import ConfigurationError

__all__ = [
    "CONDITIONS",
    "ContrastSchedule",
    "SynthConfig",
    "make_schedule",
    "synthesize_eeg",
    "subject_config",
    "synthesize_cohort",
]

CONDITIONS = (1, 2, 3, 4)
MAX_CONTRAST = 255.0


@dataclass(frozen=True)
class ContrastSchedule:
    condition_id: int
    samples: np.ndarray
    fs: float
    duration_s: float

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.fs


def make_schedule(condition_id: int, duration_s: float = 60.0, fs: float = 250.0) -> ContrastSchedule:
    """Per-sample contrast (0-255) for one of the four stimulus conditions.

    1: constant 255. 2: linear 75 -> 255. 3: linear 255 -> 75.
    4: 150 -> 255 at mid-duration -> 150. Ramps are piecewise linear with
    the final knot on the last sample, so end values are exact.
    """
    if condition_id not in CONDITIONS:
        raise ConfigurationError(f"unknown condition {condition_id!r}; expected one of {CONDITIONS}")
    if not duration_s > 0 or not fs > 0:
        raise ConfigurationError("duration and sample rate must be positive")
    n = int(round(duration_s * fs))
    if n < 2:
        raise ConfigurationError(f"{duration_s} s at {fs} Hz gives fewer than two samples")
    t = np.arange(n) / fs
    t_end = t[-1]
    if condition_id == 1:
        c = np.full(n, MAX_CONTRAST)
    elif condition_id == 2:
        c = np.interp(t, [0.0, t_end], [75.0, MAX_CONTRAST])
    elif condition_id == 3:
        c = np.interp(t, [0.0, t_end], [MAX_CONTRAST, 75.0])
    else:
        c = np.interp(t, [0.0, duration_s / 2, t_end], [150.0, MAX_CONTRAST, 150.0])
    return ContrastSchedule(condition_id, c, float(fs), float(duration_s))


@dataclass(frozen=True)
class SynthConfig:
    target_freq: float = 7.5
    rest_freq: float = 10.0
    fs: float = 250.0
    n_harmonics: int = 3
    harmonic_gains: tuple = (1.0, 0.4, 0.2)
    gain_offset: float = 0.5  # uV at contrast 0
    gain_slope: float = 4.5  # uV added at full contrast
    noise_sigma: float = 1.0
    alpha_amp: float = 5.0
    alpha_bandwidth_hz: float = 1.0
    rng_seed: int | tuple = 0
    harmonic_phases: tuple | None = None  # radians; None means all zero

    def __post_init__(self):
        if self.n_harmonics < 1:
            raise ConfigurationError("need at least one harmonic")
        if not self.fs > 2 * self.n_harmonics * self.target_freq:
            raise ConfigurationError(
                f"fs={self.fs} Hz violates Nyquist for harmonic {self.n_harmonics} of {self.target_freq} Hz"
            )
        if not self.fs > 2 * self.rest_freq:
            raise ConfigurationError(f"fs={self.fs} Hz violates Nyquist for rest frequency {self.rest_freq} Hz")
        if len(self.harmonic_gains) != self.n_harmonics:
            raise ConfigurationError("harmonic_gains must have one entry per harmonic")
        if self.harmonic_phases is not None and len(self.harmonic_phases) != self.n_harmonics:
            raise ConfigurationError("harmonic_phases must have one entry per harmonic")
        if self.gain_slope < 0:
            raise ConfigurationError("gain map must be non-decreasing in contrast")
        if self.noise_sigma < 0 or self.alpha_amp < 0 or self.alpha_bandwidth_hz < 0:
            raise ConfigurationError("noise_sigma, alpha_amp and alpha_bandwidth_hz must be non-negative")

    def gain_map(self, contrast) -> np.ndarray:
        """SSVEP fundamental amplitude (uV) for a contrast level."""
        return self.gain_offset + self.gain_slope * np.asarray(contrast, dtype=float) / MAX_CONTRAST

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["harmonic_gains"] = list(self.harmonic_gains)
        d["harmonic_phases"] = None if self.harmonic_phases is None else list(self.harmonic_phases)
        d["rng_seed"] = list(self.rng_seed) if isinstance(self.rng_seed, tuple) else self.rng_seed
        return d


def _smooth_unit_noise(rng: np.random.Generator, n: int, cutoff_hz: float, fs: float) -> np.ndarray:
    lp = signal.butter(2, cutoff_hz, fs=fs, output="sos")
    z = signal.sosfiltfilt(lp, rng.standard_normal(n))
    return z / z.std()


def synthesize_eeg(schedule: ContrastSchedule, cfg: SynthConfig = SynthConfig()) -> TimeSeries:
    if not np.isclose(schedule.fs, cfg.fs):
        raise ConfigurationError(f"schedule sampled at {schedule.fs} Hz but config says {cfg.fs} Hz")
    n = schedule.samples.size
    t = schedule.times
    rng = np.random.default_rng(cfg.rng_seed)

    amp = cfg.gain_map(schedule.samples)
    x = np.zeros(n)
    for h in range(1, cfg.n_harmonics + 1):
        phase = 0.0 if cfg.harmonic_phases is None else cfg.harmonic_phases[h - 1]
        x += cfg.harmonic_gains[h - 1] * amp * np.sin(2 * np.pi * h * cfg.target_freq * t + phase)

    arg = 2 * np.pi * cfg.rest_freq * t
    if cfg.alpha_amp > 0:
        if cfg.alpha_bandwidth_hz == 0:
            x += cfg.alpha_amp * np.sin(arg)
        else:
            z1 = _smooth_unit_noise(rng, n, cfg.alpha_bandwidth_hz, cfg.fs)
            z2 = _smooth_unit_noise(rng, n, cfg.alpha_bandwidth_hz, cfg.fs)
            x += cfg.alpha_amp / np.sqrt(2) * (z1 * np.sin(arg) + z2 * np.cos(arg))
    if cfg.noise_sigma > 0:
        x += rng.normal(0.0, cfg.noise_sigma, n)
    return TimeSeries(x, cfg.fs)


def subject_config(base: SynthConfig, subject: int, seed: int, jitter: float = 0.2) -> SynthConfig:
    """Per-subject variant of ``base``: gain map and noise level scaled by
    independent factors drawn uniformly from [1 - jitter, 1 + jitter].

    The draw depends only on ``(seed, subject)``, so adding subjects never
    changes existing ones.
    """
    rng = np.random.default_rng([seed, subject])
    g, s = rng.uniform(1 - jitter, 1 + jitter, size=2)
    return dataclasses.replace(
        base,
        gain_offset=base.gain_offset * g,
        gain_slope=base.gain_slope * g,
        noise_sigma=base.noise_sigma * s,
    )


def synthesize_cohort(
    n_subjects: int = 16,
    conditions: Sequence[int] = CONDITIONS,
    base: SynthConfig = SynthConfig(),
    seed: int = 0,
    duration_s: float = 60.0,
    jitter: float = 0.2,
    subjects: Sequence[int] | None = None,
) -> dict[tuple[int, int], tuple[TimeSeries, SynthConfig]]:
    """Raw recordings keyed by ``(subject, condition)``; subjects are 1-based."""
    subjects = list(subjects) if subjects is not None else list(range(1, n_subjects + 1))
    out = {}
    for s in subjects:
        cfg_s = subject_config(base, s, seed, jitter)
        for c in conditions:
            cfg = dataclasses.replace(cfg_s, rng_seed=(seed, s, c))
            out[(s, c)] = (synthesize_eeg(make_schedule(c, duration_s, base.fs), cfg), cfg)
    return out

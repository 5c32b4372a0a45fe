from __future__ import annotations

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssvepamp.errors import ConfigurationError
from ssvepamp.synth import SynthConfig, make_schedule, subject_config, synthesize_cohort, synthesize_eeg

QUIET = SynthConfig(noise_sigma=0.0, alpha_amp=0.0)


def test_condition1_is_constant_full_contrast():
    s = make_schedule(1, 60, 250)
    assert s.samples.size == 15000
    assert np.all(s.samples == 255)


def test_condition2_ramps_up_three_levels_per_second():
    s = make_schedule(2, 60, 250)
    assert s.samples[0] == 75 and s.samples[-1] == 255
    assert np.all(np.diff(s.samples) > 0)
    slope = np.polyfit(s.times, s.samples, 1)[0]
    assert slope == pytest.approx(3.0, abs=1e-3)


def test_condition3_ramps_down():
    s = make_schedule(3, 60, 250)
    assert s.samples[0] == 255 and s.samples[-1] == 75
    assert np.all(np.diff(s.samples) < 0)


def test_condition4_peaks_at_midpoint():
    s = make_schedule(4, 60, 250)
    mid = 30 * 250
    assert s.samples[0] == 150
    assert s.samples[mid] == 255
    assert np.all(np.diff(s.samples[: mid + 1]) >= 0)
    assert np.all(np.diff(s.samples[mid:]) <= 0)
    rise = np.polyfit(s.times[: mid + 1], s.samples[: mid + 1], 1)[0]
    assert rise == pytest.approx(3.5, abs=1e-9)


@pytest.mark.parametrize("cond", [1, 2, 3, 4])
def test_schedules_stay_in_contrast_range(cond):
    s = make_schedule(cond, 13.3, 250)
    assert s.samples.min() >= 0 and s.samples.max() <= 255


@pytest.mark.parametrize("bad", [0, 5, "2"])
def test_unknown_condition_rejected(bad):
    with pytest.raises(ConfigurationError):
        make_schedule(bad)


def test_noise_free_condition1_is_pure_harmonic_sum():
    x = synthesize_eeg(make_schedule(1, 4, 250), QUIET)
    t = np.arange(1000) / 250
    amp = 0.5 + 4.5
    expected = sum(g * amp * np.sin(2 * np.pi * h * 7.5 * t) for h, g in zip((1, 2, 3), (1.0, 0.4, 0.2)))
    np.testing.assert_allclose(x.samples, expected, atol=1e-12)


def test_fixed_alpha_sinusoid_when_bandwidth_zero():
    cfg = SynthConfig(noise_sigma=0.0, alpha_amp=0.3, alpha_bandwidth_hz=0.0, gain_offset=0.0, gain_slope=0.0)
    x = synthesize_eeg(make_schedule(1, 2, 250), cfg)
    t = np.arange(500) / 250
    np.testing.assert_allclose(x.samples, 0.3 * np.sin(2 * np.pi * 10 * t), atol=1e-12)


def test_same_seed_is_bit_identical():
    cfg = SynthConfig(rng_seed=42)
    a = synthesize_eeg(make_schedule(3, 10, 250), cfg)
    b = synthesize_eeg(make_schedule(3, 10, 250), cfg)
    assert a.samples.tobytes() == b.samples.tobytes()
    c = synthesize_eeg(make_schedule(3, 10, 250), dataclasses.replace(cfg, rng_seed=43))
    assert not np.array_equal(a.samples, c.samples)


def test_noise_free_condition2_block_rms_non_decreasing():
    x = synthesize_eeg(make_schedule(2, 60, 250), QUIET)
    rms = np.sqrt((x.samples.reshape(60, 250) ** 2).mean(axis=1))
    assert np.all(np.diff(rms) >= 0)


@settings(max_examples=20, deadline=None)
@given(cond=st.sampled_from([2, 3, 4]), slope=st.floats(0.1, 10), offset=st.floats(0, 2))
def test_block_dft_amplitude_tracks_contrast(cond, slope, offset):
    cfg = dataclasses.replace(QUIET, gain_slope=slope, gain_offset=offset)
    sched = make_schedule(cond, 20, 250)
    x = synthesize_eeg(sched, cfg)
    blocks = x.samples.reshape(10, 500)
    t = np.arange(500) / 250
    # direct DFT at 7.5 Hz over each 2 s block (a whole number of cycles)
    amp = np.abs(blocks @ np.exp(-2j * np.pi * 7.5 * t)) * 2 / 500
    # the gain map is affine, so the mean envelope is the gain of the mean contrast
    expected = cfg.gain_map(sched.samples.reshape(10, 500).mean(axis=1))
    np.testing.assert_allclose(amp, expected, rtol=1e-3)


def test_nyquist_violation_rejected():
    with pytest.raises(ConfigurationError):
        SynthConfig(target_freq=50.0, fs=250.0)
    with pytest.raises(ConfigurationError):
        SynthConfig(gain_slope=-1.0)


def test_gain_map_is_monotone():
    c = np.linspace(0, 255, 100)
    assert np.all(np.diff(SynthConfig().gain_map(c)) > 0)


def test_adding_subjects_leaves_existing_recordings_unchanged():
    a = synthesize_cohort(n_subjects=2, conditions=(1, 2), duration_s=5)
    b = synthesize_cohort(n_subjects=3, conditions=(1, 2), duration_s=5)
    for key, (x, _) in a.items():
        assert np.array_equal(x.samples, b[key][0].samples)


def test_subject_jitter_bounds():
    base = SynthConfig()
    for s in range(1, 30):
        cfg = subject_config(base, s, seed=0)
        assert 0.8 <= cfg.gain_slope / base.gain_slope <= 1.2
        assert 0.8 <= cfg.noise_sigma / base.noise_sigma <= 1.2


def test_cohort_shape():
    cohort = synthesize_cohort(duration_s=60)
    assert len(cohort) == 64
    assert all(len(x) == 15000 for x, _ in cohort.values())

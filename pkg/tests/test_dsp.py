from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal

from ssvepamp.dsp import (
    BiquadCascade,
    TimeSeries,
    design_bandpass,
    design_notch,
    filter_apply,
    preprocess,
    sliding_windows,
    welch_psd,
    window_count,
)
from ssvepamp.errors import ConfigurationError, DataError

from oracles import butterworth_bp_magnitude, df2t_reference, direct_dft_periodogram

FS = 250.0


# --------------------------------------------------------------------------- band-pass


@pytest.mark.parametrize("order", [2, 4, 6])
def test_bandpass_matches_analytic_magnitude(order):
    f = np.linspace(0.5, 124.5, 400)
    h = np.abs(design_bandpass(6, 25, FS, order).response(f))
    np.testing.assert_allclose(h, butterworth_bp_magnitude(f, 6, 25, FS, order), atol=1e-10)


def test_bandpass_edges_are_minus_3db():
    h = np.abs(design_bandpass(6, 25, FS, 2).response([6.0, 25.0]))
    np.testing.assert_allclose(20 * np.log10(h), -3.0103, atol=0.01)


def test_bandpass_attenuation_at_mains_matches_analytic_value():
    # a single-biquad band-pass only reaches about -9.4 dB at 50 Hz
    h = abs(design_bandpass(6, 25, FS, 2).response([50.0])[0])
    assert h == pytest.approx(butterworth_bp_magnitude(50.0, 6, 25, FS, 2), abs=1e-12)
    assert h < 0.35
    assert abs(design_bandpass(6, 25, FS, 4).response([50.0])[0]) < 0.13


@pytest.mark.parametrize("order", [2, 4])
def test_bandpass_agrees_with_scipy_design(order):
    ours = design_bandpass(6, 25, FS, order)
    ref = signal.butter(order // 2, [6, 25], "bandpass", fs=FS, output="sos")
    f = np.linspace(0.1, 124.9, 300)
    _, h_ref = signal.sosfreqz(ref, worN=f, fs=FS)
    np.testing.assert_allclose(ours.response(f), h_ref, atol=1e-10)


@pytest.mark.parametrize("low,high", [(25, 6), (6, 6), (0, 25), (6, 125), (6, 130)])
def test_bandpass_invalid_edges(low, high):
    with pytest.raises(ConfigurationError):
        design_bandpass(low, high, FS, 2)


def test_bandpass_odd_order_rejected():
    with pytest.raises(ConfigurationError):
        design_bandpass(6, 25, FS, 3)


@settings(max_examples=50, deadline=None)
@given(low=st.floats(0.5, 100), width=st.floats(0.3, 20), order=st.sampled_from([2, 4, 6]))
def test_designed_filters_are_stable(low, width, order):
    high = min(low + width, 124.0)
    if high <= low:
        return
    f = design_bandpass(low, high, FS, order)
    assert f.is_stable()
    h = np.abs(f.response([low, high]))
    np.testing.assert_allclose(h, 1 / np.sqrt(2), atol=0.01)


# --------------------------------------------------------------------------- notch


def test_notch_zero_at_centre_and_flat_in_band():
    n = design_notch(50, 30, FS)
    assert abs(n.response([50.0])[0]) < 1e-10
    assert abs(n.response([7.5])[0]) > 0.99
    assert n.is_stable()


def test_notch_matches_scipy():
    b, a = signal.iirnotch(50, 30, FS)
    f = np.linspace(0.1, 124.9, 300)
    _, h_ref = signal.freqz(b, a, worN=f, fs=FS)
    np.testing.assert_allclose(design_notch(50, 30, FS).response(f), h_ref, atol=1e-12)


@pytest.mark.parametrize("f0,q", [(50, 5), (50, 30), (12, 2)])
def test_notch_bandwidth_is_f0_over_q(f0, q):
    n = design_notch(f0, q, FS)
    f = np.linspace(max(f0 - 3 * f0 / q, 0.01), min(f0 + 3 * f0 / q, 124.99), 400001)
    below = f[np.abs(n.response(f)) < 2**-0.5]
    assert below.max() - below.min() == pytest.approx(f0 / q, abs=1e-3)


def test_notch_gain_is_negligible_relative_to_peak():
    n = design_notch(50, 30, FS)
    peak = np.abs(n.response(np.linspace(0, 125, 5001))).max()
    assert abs(n.response([50.0])[0]) < 1e-6 * peak


@pytest.mark.parametrize("f0,q", [(125, 30), (0, 30), (130, 30), (50, 0), (50, 0.1)])
def test_notch_invalid(f0, q):
    with pytest.raises(ConfigurationError):
        design_notch(f0, q, FS)


# --------------------------------------------------------------------------- filtering


def test_identity_cascade_passes_input(rng):
    x = TimeSeries(rng.normal(size=300), FS)
    np.testing.assert_array_equal(filter_apply(BiquadCascade.identity(FS), x).samples, x.samples)


def test_dc_is_rejected_by_bandpass():
    y = filter_apply(design_bandpass(6, 25, FS, 2), TimeSeries(np.ones(5000), FS))
    assert abs(y.samples[-1]) < 1e-6


@pytest.mark.parametrize("design", [lambda: design_notch(50, 30, FS), lambda: design_bandpass(6, 25, FS, 4)])
def test_impulse_response_matches_direct_recurrence(design):
    f = design()
    x = np.zeros(400)
    x[0] = 1.0
    np.testing.assert_allclose(filter_apply(f, TimeSeries(x, FS)).samples, df2t_reference(f.sections, x), atol=1e-14)


def test_random_input_matches_direct_recurrence(rng):
    f = design_bandpass(7, 8, FS, 2)
    x = rng.normal(size=750)
    np.testing.assert_allclose(filter_apply(f, TimeSeries(x, FS)).samples, df2t_reference(f.sections, x), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-10, 10), b=st.floats(-10, 10), seed=st.integers(0, 2**31))
def test_filtering_is_linear(a, b, seed):
    r = np.random.default_rng(seed)
    x, y = r.normal(size=500), r.normal(size=500)
    f = design_bandpass(6, 25, FS, 2)
    lhs = filter_apply(f, TimeSeries(a * x + b * y, FS)).samples
    rhs = a * filter_apply(f, TimeSeries(x, FS)).samples + b * filter_apply(f, TimeSeries(y, FS)).samples
    scale = max(1.0, np.abs(lhs).max())
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * scale)


def test_output_keeps_length_and_type():
    w = sliding_windows(TimeSeries(np.arange(1000.0), FS), 3, 1)[1]
    y = filter_apply(design_notch(50, 30, FS), w)
    assert type(y) is type(w) and len(y) == len(w) and y.start_index == w.start_index


def test_non_finite_samples_rejected():
    with pytest.raises(DataError):
        TimeSeries(np.array([0.0, np.nan, 1.0]), FS)


def test_filter_sample_rate_mismatch():
    with pytest.raises(ConfigurationError):
        filter_apply(design_notch(50, 30, 500.0), TimeSeries(np.zeros(10), FS))


def test_preprocess_removes_mains_and_keeps_ssvep():
    t = np.arange(15000) / FS
    x = TimeSeries(np.sin(2 * np.pi * 50 * t) + np.sin(2 * np.pi * 12 * t), FS)
    y = preprocess(x).samples[5000:]
    expected = np.sin(2 * np.pi * 12 * t[5000:])
    # mains gone; 12 Hz passes with the band-pass phase shift only
    amp = np.abs(np.fft.rfft(y))
    freqs = np.fft.rfftfreq(y.size, 1 / FS)
    assert amp[freqs == 50].item() < 1e-3 * amp[freqs == 12].item()
    assert np.std(y) == pytest.approx(np.std(expected) * abs(design_bandpass(6, 25, FS).response([12.0])[0]), rel=0.01)


# --------------------------------------------------------------------------- windows


@pytest.mark.parametrize("win,step,count", [(3, 1, 58), (1, 0.5, 119), (5, 1, 56), (7, 1, 54)])
def test_window_counts(win, step, count):
    wins = sliding_windows(TimeSeries(np.zeros(15000), FS), win, step)
    assert len(wins) == count
    assert all(len(w) == int(win * FS) for w in wins)


def test_windows_reference_contiguous_ranges():
    x = TimeSeries(np.arange(15000.0), FS)
    for i, w in enumerate(sliding_windows(x, 3, 1)):
        assert w.start_index == 250 * i
        np.testing.assert_array_equal(w.samples, np.arange(250 * i, 250 * i + 750))


def test_windows_are_snapshots():
    x = TimeSeries(np.zeros(1000), FS)
    w = sliding_windows(x, 1, 1)[0]
    w.samples[0] = 5.0
    assert x.samples[0] == 0.0


def test_window_longer_than_signal():
    with pytest.raises(DataError):
        sliding_windows(TimeSeries(np.zeros(500), FS), 3, 1)


def test_fractional_sample_window_rejected():
    with pytest.raises(ConfigurationError):
        sliding_windows(TimeSeries(np.zeros(1000), FS), 1.001, 1)


@given(n=st.integers(1, 5000), win=st.integers(1, 800), step=st.integers(1, 300))
def test_window_count_formula(n, win, step):
    c = window_count(n, win, step)
    if n < win:
        assert c == 0
    else:
        # last window fits, one more would not
        assert (c - 1) * step + win <= n < c * step + win


# --------------------------------------------------------------------------- Welch


def sine(freq, amp, n=750, phase=0.0):
    return TimeSeries(amp * np.sin(2 * np.pi * freq * np.arange(n) / FS + phase), FS)


def test_welch_peak_bin_on_grid():
    psd = welch_psd(sine(7.5, 1.0))
    assert psd.resolution == 0.5
    assert psd.freqs[np.argmax(psd.power)] == 7.5


def test_welch_zero_signal():
    assert np.all(welch_psd(TimeSeries(np.zeros(750), FS)).power == 0)


def test_welch_matches_direct_dft_oracle(rng):
    x = rng.normal(size=750)
    np.testing.assert_allclose(welch_psd(TimeSeries(x, FS)).power, direct_dft_periodogram(x, 500, 250, FS)[1], rtol=1e-10)


def test_welch_matches_scipy(rng):
    x = rng.normal(size=2000)
    f, p = signal.welch(x, FS, window="hann", nperseg=500, noverlap=250, detrend="constant", scaling="density")
    psd = welch_psd(TimeSeries(x, FS))
    np.testing.assert_allclose(psd.freqs, f)
    np.testing.assert_allclose(psd.power, p, rtol=1e-10)


def test_welch_power_scales_quadratically():
    p1 = welch_psd(sine(7.5, 1.0)).peak_in(7.5, 0.5)
    p2 = welch_psd(sine(7.5, 2.0)).peak_in(7.5, 0.5)
    assert p2 / p1 == pytest.approx(4.0, rel=0.01)


def test_welch_sine_power_integrates_to_half_amp_squared():
    psd = welch_psd(sine(10.0, 3.0, n=5000, phase=0.3))
    peak = np.abs(psd.freqs - 10.0) <= 1.0
    assert np.sum(psd.power[peak]) * psd.resolution == pytest.approx(4.5, rel=0.05)


def test_white_noise_power_equals_variance(rng):
    x = rng.normal(0, 2.0, size=50000)
    psd = welch_psd(TimeSeries(x, FS))
    assert np.sum(psd.power) * psd.resolution == pytest.approx(4.0, rel=0.1)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), overlap=st.floats(0, 0.9))
def test_welch_non_negative_and_increasing_freqs(seed, overlap):
    x = np.random.default_rng(seed).normal(size=900)
    psd = welch_psd(TimeSeries(x, FS), 1.0, overlap)
    assert np.all(psd.power >= 0)
    assert np.all(np.diff(psd.freqs) > 0)


def test_welch_segment_longer_than_window():
    with pytest.raises(ConfigurationError):
        welch_psd(TimeSeries(np.zeros(400), FS), 2.0)


def test_welch_bad_taper():
    with pytest.raises(ConfigurationError):
        welch_psd(sine(7.5, 1.0), taper="hamming")

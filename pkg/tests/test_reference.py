from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssvepamp.errors import ConfigurationError
from ssvepamp.reference import build_reference


def test_shape_and_first_sample():
    y = build_reference(7.5, 3, 250, 750)
    assert y.matrix.shape == (6, 750)
    # time grid starts at 1/fs, not 0
    assert y.matrix[0, 0] == pytest.approx(math.sin(2 * math.pi * 7.5 / 250), abs=1e-15)
    assert y.matrix[0, 0] == pytest.approx(0.187381, abs=1e-6)
    assert y.matrix[1, 0] == pytest.approx(math.cos(2 * math.pi * 7.5 / 250), abs=1e-15)


def test_rows_match_direct_evaluation():
    y = build_reference(7.5, 3, 250, 750)
    for r in range(6):
        k, fn = r // 2 + 1, (math.sin, math.cos)[r % 2]
        expected = [fn(2 * math.pi * k * 7.5 * n / 250) for n in range(1, 751)]
        np.testing.assert_allclose(y.matrix[r], expected, atol=1e-12)


def test_sin_cos_orthogonal_over_whole_cycles():
    y = build_reference(10, 1, 250, 250).matrix
    assert abs(y[0] @ y[1]) < 1e-9


@given(freq_bin=st.integers(1, 20), n_harm=st.integers(1, 5), cycles_scale=st.integers(1, 4))
def test_rows_orthogonal_and_rms(freq_bin, n_harm, cycles_scale):
    fs, n = 250.0, 500 * cycles_scale
    freq = freq_bin * fs / 500  # an integer number of cycles in n samples
    if freq * n_harm >= fs / 2:
        return
    m = build_reference(freq, n_harm, fs, n).matrix
    norms = np.linalg.norm(m, axis=1)
    gram = (m @ m.T) / np.outer(norms, norms)
    np.testing.assert_allclose(gram, np.eye(2 * n_harm), atol=1e-6)
    np.testing.assert_allclose(np.sqrt((m**2).mean(axis=1)), 1 / np.sqrt(2), rtol=0.02)


def test_deterministic_and_read_only():
    a = build_reference(7.5, 3, 250, 750)
    b = build_reference(7.5, 3, 250, 750)
    assert np.array_equal(a.matrix, b.matrix)
    with pytest.raises(ValueError):
        a.matrix[0, 0] = 2.0


@pytest.mark.parametrize("args", [(7.5, 0, 250, 750), (50, 3, 250, 750), (42, 3, 250, 750), (-1, 1, 250, 10), (7.5, 1, 250, 0)])
def test_invalid_arguments(args):
    with pytest.raises(ConfigurationError):
        build_reference(*args)

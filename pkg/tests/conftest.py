from __future__ import annotations

import time

import numpy as np
import pytest

from ssvepamp.amplitude import build_dataset, fbcca_recognizer
from ssvepamp.dsp import preprocess
from ssvepamp.synth import synthesize_cohort

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


SETUP_SECONDS: dict[str, float] = {}


@pytest.fixture(scope="session")
def default_cohort():
    """Raw and preprocessed recordings of the default 16-subject cohort."""
    t0 = time.perf_counter()
    raw = synthesize_cohort()
    pre = {k: preprocess(x) for k, (x, _) in raw.items()}
    SETUP_SECONDS["cohort"] = time.perf_counter() - t0
    return raw, pre


@pytest.fixture(scope="session")
def small_dataset():
    """Four subjects, 20 s recordings: 18 windows per (subject, condition)."""
    raw = synthesize_cohort(n_subjects=4, duration_s=20.0, seed=7)
    pre = {k: preprocess(x) for k, (x, _) in raw.items()}
    ds, _, _ = build_dataset(pre, fbcca_recognizer())
    return ds


@pytest.fixture(scope="session")
def default_dataset(default_cohort):
    """Windowed amplitude dataset of the default cohort with its signals and fits."""
    _, pre = default_cohort
    t0 = time.perf_counter()
    out = build_dataset(pre, fbcca_recognizer())
    SETUP_SECONDS["dataset"] = time.perf_counter() - t0
    return out

"""SSVEP frequency recognition and contrast-driven amplitude regression.

Synthetic single-channel recordings, IIR preprocessing, CCA and filter-bank
CCA recognition, Welch amplitude traces with polynomial targets, four
regressors (least squares, k-NN, random forest, epsilon-SVR) and a nested
leave-one-subject-out evaluation harness.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .amplitude import (
    AmplitudeSignal,
    FittedTarget,
    WindowedDataset,
    build_amplitude_signal,
    build_dataset,
    extract_amplitude,
    fit_target,
    narrowband_for,
)
from .cca import CcaResult, Recognition, cca_max_correlation, recognize_cca
from .dsp import (
    BiquadCascade,
    PsdEstimate,
    TimeSeries,
    Window,
    design_bandpass,
    design_notch,
    filter_apply,
    preprocess,
    sliding_windows,
    welch_psd,
)
from .errors import ConfigurationError, ConvergenceWarning, DataError, DegenerateInputError, NumericError, SsvepError
from .evaluation import FoldReport, GridSpec, aae_curve, itr, locv_run, paired_ttest, recognition_study, window_length_study
from .fbcca import FbccaScore, FilterBankSpec, SubbandWeights, decompose, fbcca_score, grid_search_ab, recognize_fbcca
from .reference import ReferenceSet, build_reference
from .regress import mae, predict
from .synth import ContrastSchedule, SynthConfig, make_schedule, synthesize_cohort, synthesize_eeg

__all__ = [
    "AmplitudeSignal",
    "BiquadCascade",
    "CcaResult",
    "ConfigurationError",
    "ContrastSchedule",
    "ConvergenceWarning",
    "DataError",
    "DegenerateInputError",
    "FbccaScore",
    "FilterBankSpec",
    "FittedTarget",
    "FoldReport",
    "GridSpec",
    "NumericError",
    "PsdEstimate",
    "Recognition",
    "ReferenceSet",
    "SsvepError",
    "SubbandWeights",
    "SynthConfig",
    "TimeSeries",
    "Window",
    "WindowedDataset",
    "aae_curve",
    "build_amplitude_signal",
    "build_dataset",
    "build_reference",
    "cca_max_correlation",
    "decompose",
    "design_bandpass",
    "design_notch",
    "extract_amplitude",
    "fbcca_score",
    "filter_apply",
    "fit_target",
    "grid_search_ab",
    "itr",
    "locv_run",
    "mae",
    "make_schedule",
    "narrowband_for",
    "paired_ttest",
    "predict",
    "preprocess",
    "recognition_study",
    "recognize_cca",
    "recognize_fbcca",
    "sliding_windows",
    "synthesize_cohort",
    "synthesize_eeg",
    "welch_psd",
    "window_length_study",
]

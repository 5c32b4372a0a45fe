"""Run configuration and end-to-end study orchestration.

A :class:`RunConfig` is a flat mapping of knobs. Values come from the
built-in defaults, then an optional JSON file, then explicit overrides
(command-line flags), each layer replacing the previous one.
"""
from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .amplitude import WindowedDataset, build_dataset, fbcca_recognizer, narrowband_for
from .dsp import TimeSeries, design_bandpass, design_notch, preprocess
from .errors import ConfigurationError, DataError
from .evaluation import (
    FoldReport,
    GridSpec,
    RecognitionStudy,
    WindowLengthStudy,
    aae_curve,
    locv_run,
    mean_se,
    recognition_study,
    window_length_study,
)
from .fbcca import FilterBankSpec, SubbandWeights
from .io import write_json, write_table
from .regress import MODEL_FAMILIES
from .synth import CONDITIONS, SynthConfig, synthesize_cohort

__all__ = [
    "RunConfig",
    "load_config",
    "synthesize",
    "preprocess_all",
    "filter_designs",
    "run_recognition",
    "run_window_study",
    "build_amplitude_dataset",
    "run_models",
    "mae_table",
    "aae_rows",
    "prediction_rows",
    "attach_recognition",
    "write_full_report",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    n_subjects: int = 16
    conditions: tuple = CONDITIONS
    duration_s: float = 60.0
    fs: float = 250.0
    # synthetic cohort
    noise_sigma: float = 1.0
    alpha_amp: float = 5.0
    alpha_bandwidth_hz: float = 1.0
    gain_offset: float = 0.5
    gain_slope: float = 4.5
    harmonic_gains: tuple = (1.0, 0.4, 0.2)
    jitter: float = 0.2
    # preprocessing
    notch_hz: float = 50.0
    notch_q: float = 30.0
    band: tuple = (6.0, 25.0)
    filter_order: int = 2
    # recognition
    window_s: float = 3.0
    step_s: float = 1.0
    candidates: tuple = (7.5, 10.0)
    target: float = 7.5
    n_harmonics: int = 3
    passbands: tuple = ((6.0, 25.0), (14.0, 25.0), (21.0, 25.0))
    fb_a: float = 1.25
    fb_b: float = 0.25
    tune_weights: bool = False
    a_grid: tuple = (0.0, 0.5, 1.0, 1.25, 1.5, 2.0)
    b_grid: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    window_lengths: tuple = (1.0, 3.0, 5.0, 7.0)
    # amplitude extraction
    welch_segment_s: float = 2.0
    welch_overlap: float = 0.5
    # regression
    models: tuple = MODEL_FAMILIES
    grid: object = "ci"

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                object.__setattr__(self, f.name, tuple(tuple(e) if isinstance(e, list) else e for e in v))
        if self.n_subjects < 1 or self.duration_s <= 0 or self.fs <= 0:
            raise ConfigurationError("n_subjects, duration_s and fs must be positive")
        if not set(self.conditions) <= set(CONDITIONS) or not self.conditions:
            raise ConfigurationError(f"conditions must be a non-empty subset of {CONDITIONS}")
        if not 0 < self.band[0] < self.band[1] < self.fs / 2:
            raise ConfigurationError(f"band {self.band} outside (0, {self.fs / 2})")
        if self.window_s <= 0 or self.step_s <= 0:
            raise ConfigurationError("window_s and step_s must be positive")
        if len(self.candidates) < 2 or self.target not in self.candidates:
            raise ConfigurationError("need at least two candidates including the target")
        if self.n_harmonics < 1:
            raise ConfigurationError("n_harmonics must be at least 1")
        if not 0 <= self.welch_overlap < 1 or self.welch_segment_s <= 0:
            raise ConfigurationError("Welch segment must be positive and overlap in [0, 1)")
        unknown = set(self.models) - set(MODEL_FAMILIES)
        if unknown:
            raise ConfigurationError(f"unknown models {sorted(unknown)}; expected from {MODEL_FAMILIES}")
        self.grid_spec()  # validate early

    def grid_spec(self) -> GridSpec:
        if isinstance(self.grid, str):
            return GridSpec.named(self.grid)
        if isinstance(self.grid, Mapping):
            return GridSpec.from_dict(self.grid)
        raise ConfigurationError("grid must be 'ci', 'full' or a mapping of grid fields")

    def synth_config(self) -> SynthConfig:
        return SynthConfig(
            fs=self.fs, noise_sigma=self.noise_sigma, alpha_amp=self.alpha_amp,
            alpha_bandwidth_hz=self.alpha_bandwidth_hz, gain_offset=self.gain_offset,
            gain_slope=self.gain_slope, harmonic_gains=tuple(self.harmonic_gains),
            n_harmonics=len(self.harmonic_gains),
        )

    def filter_bank(self) -> FilterBankSpec:
        return FilterBankSpec.from_passbands(self.passbands, self.fs, self.filter_order)

    def weights(self) -> SubbandWeights:
        return SubbandWeights(self.fb_a, self.fb_b, len(self.passbands))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if isinstance(self.grid, Mapping):
            d["grid"] = dict(self.grid)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> RunConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigurationError(f"bad config value: {e}") from None


def load_config(path: str | Path | None = None, overrides: Mapping | None = None) -> RunConfig:
    """Defaults, then the JSON file at ``path``, then non-None ``overrides``."""
    merged: dict = {}
    if path is not None:
        path = Path(path)
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigurationError(f"{path}: config file not found") from None
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from None
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: config must be a flat JSON object")
        merged.update(data)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig.from_dict(merged)


# --------------------------------------------------------------------------- stages


def synthesize(cfg: RunConfig, noise_free: bool = False) -> dict[tuple[int, int], tuple[TimeSeries, SynthConfig]]:
    base = cfg.synth_config()
    if noise_free:
        base = dataclasses.replace(base, noise_sigma=0.0, alpha_amp=0.0)
    return synthesize_cohort(cfg.n_subjects, cfg.conditions, base, cfg.seed, cfg.duration_s, cfg.jitter)


def preprocess_all(recordings: Mapping[tuple[int, int], TimeSeries], cfg: RunConfig) -> dict:
    return {k: preprocess(x, cfg.notch_hz, cfg.notch_q, tuple(cfg.band), cfg.filter_order)
            for k, x in sorted(recordings.items())}


def filter_designs(cfg: RunConfig) -> dict:
    """Every IIR design used by a run, as coefficient lists."""
    return {
        "notch": design_notch(cfg.notch_hz, cfg.notch_q, cfg.fs).to_dict(),
        "bandpass": design_bandpass(cfg.band[0], cfg.band[1], cfg.fs, cfg.filter_order).to_dict(),
        "filter_bank": cfg.filter_bank().to_dict(),
        "narrowband": {f"{f:g}": narrowband_for(f, cfg.fs).to_dict() for f in cfg.candidates},
    }


def _recognition_kw(cfg: RunConfig) -> dict:
    return dict(candidates=cfg.candidates, target=cfg.target, spec=cfg.filter_bank(), wts=cfg.weights(),
                n_harmonics=cfg.n_harmonics, tune_weights=cfg.tune_weights, a_grid=cfg.a_grid, b_grid=cfg.b_grid)


def run_recognition(pre: Mapping, cfg: RunConfig) -> RecognitionStudy:
    return recognition_study(pre, window_s=cfg.window_s, step_s=cfg.step_s, **_recognition_kw(cfg))


def run_window_study(pre: Mapping, cfg: RunConfig) -> WindowLengthStudy:
    return window_length_study(pre, cfg.window_lengths, **_recognition_kw(cfg))


def build_amplitude_dataset(pre: Mapping, cfg: RunConfig):
    rec = fbcca_recognizer(cfg.fs, cfg.candidates, cfg.filter_bank(), cfg.weights(), cfg.n_harmonics)
    return build_dataset(pre, rec, cfg.window_s, cfg.step_s, cfg.welch_segment_s, cfg.welch_overlap)


def run_models(ds: WindowedDataset, cfg: RunConfig, models: Sequence[str] | None = None) -> dict[str, list[FoldReport]]:
    grid = cfg.grid_spec()
    out = {}
    for fam in models or cfg.models:
        log.info("LOCV for %s", fam)
        out[fam] = locv_run(ds, fam, grid, conditions=[c for c in cfg.conditions if c in ds.condition_ids],
                            seed=cfg.seed)
    return out


# --------------------------------------------------------------------------- tables


def mae_table(results: Mapping[str, list[FoldReport]]) -> list[dict]:
    """Rows = conditions; per model the mean and standard error over folds."""
    conditions = sorted({c for reps in results.values() for r in reps for c in r.mae})
    rows = []
    for c in conditions:
        row = {"condition": c}
        for fam, reps in results.items():
            vals = [r.mae[c] for r in reps if r.status == "ok" and c in r.mae]
            row[f"{fam}_mean"], row[f"{fam}_se"] = mean_se(vals) if vals else (None, None)
        rows.append(row)
    return rows


def _stacked(reps: list[FoldReport], c: int) -> tuple[np.ndarray, np.ndarray]:
    ok = [r for r in reps if r.status == "ok" and c in r.predictions]
    return np.stack([r.predictions[c] for r in ok]), np.stack([r.truths[c] for r in ok])


def aae_rows(results: Mapping[str, list[FoldReport]]) -> list[dict]:
    conditions = sorted({c for reps in results.values() for r in reps for c in r.predictions})
    rows = []
    for c in conditions:
        curves = {fam: aae_curve(*_stacked(reps, c)) for fam, reps in results.items()}
        n = len(next(iter(curves.values())))
        for i in range(n):
            rows.append({"condition": c, "window_index": i, **{f: float(v[i]) for f, v in curves.items()}})
    return rows


def prediction_rows(results: Mapping[str, list[FoldReport]]) -> list[dict]:
    rows = []
    for fam, reps in results.items():
        for r in reps:
            for c in sorted(r.predictions):
                for i, (p, t) in enumerate(zip(r.predictions[c], r.truths[c])):
                    rows.append({"model": fam, "subject": r.held_out_subject, "condition": c,
                                 "window_index": i, "predicted": float(p), "truth": float(t)})
    return rows


def attach_recognition(results: Mapping[str, list[FoldReport]], study: RecognitionStudy) -> None:
    """Copy each subject's recognition accuracy and ITR into its fold reports."""
    itrs = {m: study.itr(m) for m in study.accuracy}
    for reps in results.values():
        for r in reps:
            if r.held_out_subject not in study.subjects:
                continue
            i = study.subjects.index(r.held_out_subject)
            r.accuracy = {m: {c: float(a[i, j]) for j, c in enumerate(study.conditions)}
                          for m, a in study.accuracy.items()}
            r.itr = {m: {c: float(a[i, j]) for j, c in enumerate(study.conditions)} for m, a in itrs.items()}


def write_full_report(
    out_dir: Path,
    cfg: RunConfig,
    recognition: RecognitionStudy | None = None,
    windows: WindowLengthStudy | None = None,
    results: Mapping[str, list[FoldReport]] | None = None,
) -> list[str]:
    """``report.json`` plus the CSV tables for whichever parts were run.

    Returns the written file names.
    """
    out_dir = Path(out_dir)
    written = []
    report: dict = {"config": cfg.to_dict(), "units": {
        "accuracy": "fraction of windows labelled with the target frequency",
        "itr": "bits/min, per subject then averaged",
        "mae": "normalized target scale (min-max factors of each fold's training subjects)",
    }}
    if recognition is not None:
        report["recognition"] = recognition.to_dict()
        acc_cols = ["condition", "cca_mean", "cca_se", "fbcca_mean", "fbcca_se", "t", "p"]
        itr_cols = ["condition", "cca_itr_mean", "cca_itr_se", "fbcca_itr_mean", "fbcca_itr_se"]
        summary = recognition.summary()
        write_table(out_dir / "table_recognition_accuracy.csv", summary, acc_cols)
        write_table(out_dir / "table_itr.csv", summary, itr_cols)
        written += ["table_recognition_accuracy.csv", "table_itr.csv"]
    if windows is not None:
        report["window_length_study"] = windows.to_dict()
        write_table(out_dir / "table_window_length.csv", windows.table())
        written.append("table_window_length.csv")
    if results:
        if recognition is not None:
            attach_recognition(results, recognition)
        table = mae_table(results)
        report["mae_table"] = table
        report["folds"] = {fam: [r.to_dict() for r in reps] for fam, reps in results.items()}
        write_table(out_dir / "table_mae.csv", table)
        write_table(out_dir / "aae_curve.csv", aae_rows(results))
        write_table(out_dir / "predicted_vs_truth.csv", prediction_rows(results))
        written += ["table_mae.csv", "aae_curve.csv", "predicted_vs_truth.csv"]
    write_json(out_dir / "report.json", report)
    written.append("report.json")
    return written


def require_complete(recordings: Mapping, cfg: RunConfig) -> None:
    missing = [(s, c) for s in sorted({s for s, _ in recordings}) for c in cfg.conditions if (s, c) not in recordings]
    if missing:
        raise DataError(f"recordings missing for (subject, condition) {missing[:5]}")

"""Leave-one-subject-out evaluation and the metric suite.

Regression models are scored with nested leave-one-subject-out cross
validation. For every held-out subject the min-max factors are fitted on
the remaining subjects only; hyperparameters are chosen by the lowest mean
MAE over an inner leave-one-subject-out loop on those (already normalized)
training subjects; the winner is refit on all of them and scored on the
held-out subject. MAE is reported on the normalized target scale.

Subjects listed as ``eval_only`` get their own fold but never enter any
other fold's training data, so adding or removing them leaves every other
fold unchanged.
"""
from __future__ import annotations

import dataclasses
import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .amplitude import WindowedDataset
from .cca import cca_max_correlation
from .dsp import TimeSeries, sliding_windows, window_count
from .errors import ConfigurationError, ConvergenceWarning, DataError, DegenerateInputError
from .fbcca import FilterBankSpec, SubbandWeights, default_filter_bank, fused_labels, select_weights, subband_correlations
from .reference import build_reference
from .regress import MODEL_FAMILIES, SVR, fit_normalizer, mae, make_model
from .regress._common import sq_distances
from .regress.svr import solve_svr_dual

__all__ = [
    "GridSpec",
    "FoldReport",
    "RecognitionStudy",
    "WindowLengthStudy",
    "locv_run",
    "itr",
    "aae_curve",
    "paired_ttest",
    "mean_se",
    "window_scores",
    "recognition_study",
    "window_length_study",
]

log = logging.getLogger(__name__)

RECOGNITION_METHODS = ("cca", "fbcca")


# --------------------------------------------------------------------------- grids


@dataclass(frozen=True)
class GridSpec:
    """Hyperparameter values per model family.

    Cells are enumerated in declared order (``itertools.product`` over the
    fields of a family, in field order); inner-loop ties keep the first.
    """

    svr_kernel: tuple = ("rbf",)
    svr_C: tuple = (1.0, 10.0)
    svr_gamma: tuple = (0.01,)
    svr_epsilon: tuple = (0.01,)
    svr_degree: tuple = (1, 2)
    knn_k: tuple = tuple(range(1, 51))
    knn_weights: tuple = ("uniform", "distance")
    rf_max_depth: tuple = (3, 9)
    rf_n_estimators: tuple = (10,)
    rf_max_features: tuple = (9,)
    rf_min_samples_split: tuple = (0.1,)
    rf_min_samples_leaf: tuple = (0.1,)

    @classmethod
    def full(cls) -> GridSpec:
        """The full search space (slow: hours on one core)."""
        return cls(
            svr_kernel=("poly", "rbf"),
            svr_C=(0.001, 0.01, 0.1, 1.0, 10.0, 100.0),
            svr_gamma=(0.01, 0.1, 1.0, 10.0, 100.0),
            svr_epsilon=(0.001, 0.01, 0.1, 1.0, 10.0),
            svr_degree=tuple(range(7)),
            knn_k=tuple(range(1, 51)),
            knn_weights=("uniform", "distance"),
            rf_max_depth=tuple(range(1, 33, 2)),
            rf_n_estimators=(1, 5, 10, 15, 20),
            rf_max_features=(1, 3, 5, 7, 9),
            rf_min_samples_split=(0.1, 0.3, 0.5, 0.7, 0.9, 1.0),
            rf_min_samples_leaf=(0.1, 0.3, 0.5),
        )

    @classmethod
    def ci(cls) -> GridSpec:
        """A thinned subset of :meth:`full` that runs in minutes."""
        return cls()

    @classmethod
    def named(cls, name: str) -> GridSpec:
        if name == "full":
            return cls.full()
        if name == "ci":
            return cls.ci()
        raise ConfigurationError(f"unknown grid {name!r}; expected 'ci' or 'full'")

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (str, bytes)) or not isinstance(v, Iterable):
                raise ConfigurationError(f"grid field {f.name} must be a list of values")
            v = tuple(v)
            if not v:
                raise ConfigurationError(f"grid field {f.name} is empty")
            object.__setattr__(self, f.name, v)
        for k in self.svr_kernel:
            if k not in ("rbf", "poly"):
                raise ConfigurationError(f"unknown SVR kernel {k!r}")

    def cells(self, family: str) -> list[dict]:
        if family == "lr":
            return [{}]
        if family == "knn":
            return [{"k": int(k), "weighting": w} for k, w in itertools.product(self.knn_k, self.knn_weights)]
        if family == "rf":
            keys = ("max_depth", "n_estimators", "max_features", "min_samples_split", "min_samples_leaf")
            vals = itertools.product(self.rf_max_depth, self.rf_n_estimators, self.rf_max_features,
                                     self.rf_min_samples_split, self.rf_min_samples_leaf)
            return [dict(zip(keys, v)) for v in vals]
        if family == "svr":
            out = []
            for kern in self.svr_kernel:
                shape = self.svr_gamma if kern == "rbf" else self.svr_degree
                name = "gamma" if kern == "rbf" else "degree"
                for C, s, eps in itertools.product(self.svr_C, shape, self.svr_epsilon):
                    out.append({"kernel": kern, "C": C, name: s, "epsilon": eps})
            return out
        raise ConfigurationError(f"unknown model family {family!r}; expected one of {MODEL_FAMILIES}")

    def to_dict(self) -> dict:
        return {f.name: list(getattr(self, f.name)) for f in dataclasses.fields(self)}

    @classmethod
    def from_dict(cls, d: Mapping) -> GridSpec:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown grid fields: {sorted(unknown)}")
        return cls(**{k: tuple(v) for k, v in d.items()})


# --------------------------------------------------------------------------- metrics


def itr(P: float, C: int, t: float) -> float:
    """Information transfer rate in bits per minute.

    ``P`` is the accuracy, ``C`` the number of classes and ``t`` the
    seconds per selection. ``0 * log 0`` is taken as 0.
    """
    if not 0.0 <= P <= 1.0:
        raise ConfigurationError(f"accuracy must be in [0, 1], got {P}")
    if int(C) != C or C < 2:
        raise ConfigurationError(f"class count must be an integer >= 2, got {C}")
    if not t > 0:
        raise ConfigurationError(f"selection time must be positive, got {t}")
    bits = math.log2(C)
    if P > 0:
        bits += P * math.log2(P)
    if P < 1:
        bits += (1 - P) * math.log2((1 - P) / (C - 1))
    return bits * 60.0 / t


def aae_curve(predictions, truths) -> np.ndarray:
    """Per-window absolute error averaged over subjects.

    Both arguments are ``(n_subjects, n_windows)``.
    """
    p = np.asarray(predictions, dtype=float)
    q = np.asarray(truths, dtype=float)
    if p.shape != q.shape or p.ndim != 2 or p.shape[0] == 0:
        raise DataError(f"expected matching (subjects, windows) arrays, got {p.shape} and {q.shape}")
    return np.abs(p - q).mean(axis=0)


def paired_ttest(a, b) -> tuple[float, float]:
    """Two-tailed paired t-test on ``a - b``; returns ``(t, p)``."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size:
        raise DataError(f"paired samples differ in length: {a.size} vs {b.size}")
    if a.size < 2:
        raise DataError("paired t-test needs at least two pairs")
    d = a - b
    sd = d.std(ddof=1)
    if not sd > 0:
        raise DegenerateInputError("differences have zero variance; t is undefined")
    t = d.mean() / (sd / math.sqrt(d.size))
    p = 2.0 * stats.t.sf(abs(t), d.size - 1)
    return float(t), float(p)


def mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise DataError("no values to summarize")
    se = v.std(ddof=1) / math.sqrt(v.size) if v.size > 1 else 0.0
    return float(v.mean()), float(se)


# --------------------------------------------------------------------------- LOCV


@dataclass
class FoldReport:
    """Results for one held-out subject.

    Regression entries are keyed by condition. ``accuracy`` and ``itr`` are
    keyed by recognition method, then condition, and are filled in when a
    recognition study is merged in.
    """

    held_out_subject: int
    family: str
    status: str = "ok"
    reason: str = ""
    mae: dict = field(default_factory=dict)
    inner_mae: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    predictions: dict = field(default_factory=dict)
    truths: dict = field(default_factory=dict)
    n_train: dict = field(default_factory=dict)
    converged: dict = field(default_factory=dict)
    accuracy: dict = field(default_factory=dict)
    itr: dict = field(default_factory=dict)

    def abs_errors(self, condition: int) -> np.ndarray:
        return np.abs(self.predictions[condition] - self.truths[condition])

    def to_dict(self) -> dict:
        def plain(d):
            return {str(k): (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in d.items()}

        return {
            "held_out_subject": self.held_out_subject, "family": self.family,
            "status": self.status, "reason": self.reason,
            "mae": plain(self.mae), "inner_mae": plain(self.inner_mae), "params": plain(self.params),
            "n_train": plain(self.n_train), "converged": plain(self.converged),
            "predictions": plain(self.predictions), "truths": plain(self.truths),
            "accuracy": {m: plain(v) for m, v in self.accuracy.items()},
            "itr": {m: plain(v) for m, v in self.itr.items()},
        }


def _knn_all_k(dist: np.ndarray, y_train: np.ndarray, kmax: int, weighting: str) -> np.ndarray:
    """Predictions for every k in 1..kmax at once, shape (n_query, kmax)."""
    order = np.argsort(dist, axis=1, kind="stable")[:, :kmax]
    d = np.take_along_axis(dist, order, axis=1)
    yk = y_train[order]
    if weighting == "uniform":
        return np.cumsum(yk, axis=1) / np.arange(1, kmax + 1)
    exact = d == 0.0
    with np.errstate(divide="ignore"):
        w = np.where(exact[:, :1], exact.astype(float), 1.0 / d)
    return np.cumsum(w * yk, axis=1) / np.cumsum(w, axis=1)


def _inner_folds(groups: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    return [(np.flatnonzero(groups != g), np.flatnonzero(groups == g)) for g in np.unique(groups)]


def _fold_mae(pred: np.ndarray, truth: np.ndarray) -> float:
    return float(np.mean(np.abs(pred - truth)))


def _score_generic(family, cells, X, y, folds, seed) -> np.ndarray:
    scores = np.empty(len(cells))
    for ci, cell in enumerate(cells):
        errs = []
        for tr, te in folds:
            model = make_model(family, **_with_seed(family, cell, seed)).fit(X[tr], y[tr])
            errs.append(_fold_mae(model.predict(X[te]), y[te]))
        scores[ci] = np.mean(errs)
    return scores


def _score_knn(cells, X, y, folds) -> np.ndarray:
    dist = np.sqrt(sq_distances(X, X))
    kmax = max(c["k"] for c in cells)
    errs = {w: [] for w in {c["weighting"] for c in cells}}
    sizes = []
    for tr, te in folds:
        sizes.append(tr.size)
        for w in errs:
            kk = min(kmax, tr.size)
            pred = _knn_all_k(dist[np.ix_(te, tr)], y[tr], kk, w)
            errs[w].append(np.abs(pred - y[te][:, None]).mean(axis=0))
    scores = np.empty(len(cells))
    for ci, c in enumerate(cells):
        k = c["k"]
        if k > min(sizes):
            scores[ci] = np.inf
        else:
            scores[ci] = np.mean([e[k - 1] for e in errs[c["weighting"]]])
    return scores


def _score_svr(cells, X, y, folds) -> tuple[np.ndarray, int]:
    d2 = sq_distances(X, X)
    gram = X @ X.T if any(c["kernel"] == "poly" for c in cells) else None
    scores = np.empty(len(cells))
    failed = 0
    cache_key, K = None, None
    for ci, c in enumerate(cells):
        key = (c["kernel"], c.get("gamma"), c.get("degree"))
        if key != cache_key:
            if c["kernel"] == "rbf":
                K = np.exp(-c["gamma"] * d2)
            else:
                K = np.ones_like(gram) if c["degree"] == 0 else (1.0 + gram) ** c["degree"]
            cache_key = key
        errs = []
        for tr, te in folds:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                beta, b, ok, _ = solve_svr_dual(K[np.ix_(tr, tr)], y[tr], c["C"], c["epsilon"], c.get("tol", 1e-3))
            failed += not ok
            errs.append(_fold_mae(K[np.ix_(te, tr)] @ beta + b, y[te]))
        scores[ci] = np.mean(errs)
    return scores, failed


def _with_seed(family: str, cell: dict, seed) -> dict:
    return {**cell, "random_state": seed} if family == "rf" else cell


def locv_run(
    dataset: WindowedDataset,
    family: str,
    grid: GridSpec | None = None,
    conditions: Sequence[int] | None = None,
    eval_only: Iterable[int] = (),
    seed: int = 0,
) -> list[FoldReport]:
    """Nested leave-one-subject-out evaluation of one model family.

    Each condition gets its own models. Subjects lacking any of the
    requested conditions get a ``status="skipped"`` report. Random forest
    seeds derive from ``(seed, held-out subject, condition)`` only.
    """
    if family not in MODEL_FAMILIES:
        raise ConfigurationError(f"unknown model family {family!r}; expected one of {MODEL_FAMILIES}")
    grid = grid or GridSpec.ci()
    cells = grid.cells(family)
    conditions = list(conditions) if conditions is not None else dataset.condition_ids
    subjects = dataset.subject_ids
    eval_only = {int(s) for s in eval_only}
    if len(subjects) < 2:
        raise ConfigurationError(f"LOCV needs at least 2 subjects, got {len(subjects)}")
    if not set(subjects) - eval_only:
        raise ConfigurationError("every subject is evaluation-only; nothing to train on")

    have = {s: {int(c) for c in np.unique(dataset.conditions[dataset.subjects == s])} for s in subjects}
    reports = []
    for s in subjects:
        missing = sorted(set(conditions) - have[s])
        rep = FoldReport(s, family)
        reports.append(rep)
        if missing:
            rep.status, rep.reason = "skipped", f"subject {s} has no data for conditions {missing}"
            log.warning("fold %s skipped: %s", s, rep.reason)
            continue
        for c in conditions:
            d = dataset.for_condition(c)
            train = (d.subjects != s) & ~np.isin(d.subjects, list(eval_only))
            test = d.subjects == s
            if not train.any():
                rep.status, rep.reason = "skipped", f"no training subjects for condition {c}"
                break
            norm = fit_normalizer(d.windows[train], d.targets[train])
            X, y = norm.transform_inputs(d.windows[train]), norm.transform_targets(d.targets[train])
            Xt, yt = norm.transform_inputs(d.windows[test]), norm.transform_targets(d.targets[test])
            groups = d.subjects[train]
            fold_seed = [seed, s, c]

            folds = _inner_folds(groups)
            if len(cells) == 1 or len(folds) < 2:
                # nothing to choose, or no second subject to validate against
                best, inner = 0, None
            else:
                if family == "knn":
                    scores = _score_knn(cells, X, y, folds)
                elif family == "svr":
                    scores, failed = _score_svr(cells, X, y, folds)
                    if failed:
                        log.info("fold %s cond %s: %d inner SVR fits hit the iteration cap", s, c, failed)
                else:
                    scores = _score_generic(family, cells, X, y, folds, fold_seed)
                best = int(np.argmin(scores))  # first minimum = first in declared order
                inner = float(scores[best])

            params = _with_seed(family, cells[best], fold_seed)
            if family == "knn" and params["k"] > len(y):
                raise ConfigurationError(f"k={params['k']} exceeds the {len(y)} training windows")
            model = make_model(family, **params).fit(X, y)
            pred = model.predict(Xt)
            rep.mae[c] = mae(pred, yt)
            rep.inner_mae[c] = inner
            rep.params[c] = dict(cells[best])
            rep.predictions[c] = pred
            rep.truths[c] = yt
            rep.n_train[c] = int(train.sum())
            if isinstance(model, SVR):
                rep.converged[c] = model.converged_
            log.info("fold %s cond %s %s: params=%s mae=%.4f", s, c, family, cells[best], rep.mae[c])
    return reports


# --------------------------------------------------------------------------- recognition


def window_scores(
    x: TimeSeries,
    candidates: Sequence[float],
    window_s: float = 3.0,
    step_s: float = 1.0,
    spec: FilterBankSpec | None = None,
    n_harmonics: int = 3,
) -> tuple[np.ndarray, np.ndarray]:
    """CCA correlations ``(n_windows, n_candidates)`` and FBCCA sub-band
    correlations ``(n_windows, n_candidates, n_subbands)`` for a
    preprocessed recording."""
    spec = spec or default_filter_bank(x.fs)
    wins = sliding_windows(x, window_s, step_s)
    refs = [build_reference(f, n_harmonics, x.fs, len(wins[0])) for f in candidates]
    cca = np.array([[cca_max_correlation(w, r).rho for r in refs] for w in wins])
    sub = np.stack([subband_correlations(w, candidates, spec, n_harmonics) for w in wins])
    return cca, sub


@dataclass
class RecognitionStudy:
    """Window-level recognition accuracy per subject and condition.

    ``accuracy[method]`` is ``(n_subjects, n_conditions)``. ITR is computed
    per subject from that subject's accuracy, with the step as the time
    per selection, and only then averaged.
    """

    subjects: list
    conditions: list
    candidates: tuple
    target: float
    window_s: float
    step_s: float
    n_windows: int
    accuracy: dict
    weights: dict = field(default_factory=dict)

    def itr(self, method: str) -> np.ndarray:
        acc = self.accuracy[method]
        return np.vectorize(lambda p: itr(p, len(self.candidates), self.step_s))(acc)

    def summary(self) -> list[dict]:
        rows = []
        for j, c in enumerate(self.conditions):
            row = {"condition": c}
            for m, acc in self.accuracy.items():
                row[f"{m}_mean"], row[f"{m}_se"] = mean_se(acc[:, j])
                row[f"{m}_itr_mean"], row[f"{m}_itr_se"] = mean_se(self.itr(m)[:, j])
            if {"cca", "fbcca"} <= set(self.accuracy):
                try:
                    row["t"], row["p"] = paired_ttest(self.accuracy["fbcca"][:, j], self.accuracy["cca"][:, j])
                except (DegenerateInputError, DataError):
                    row["t"], row["p"] = None, None
            rows.append(row)
        return rows

    def to_dict(self) -> dict:
        return {
            "subjects": self.subjects, "conditions": self.conditions, "candidates": list(self.candidates),
            "target": self.target, "window_s": self.window_s, "step_s": self.step_s,
            "n_windows": self.n_windows,
            "itr_convention": "per-subject ITR from per-subject accuracy, then averaged; t = step_s",
            "accuracy": {m: a.tolist() for m, a in self.accuracy.items()},
            "itr": {m: self.itr(m).tolist() for m in self.accuracy},
            "fbcca_weights": {str(s): [w.a, w.b] for s, w in self.weights.items()},
            "summary": self.summary(),
        }


def recognition_study(
    recordings: Mapping[tuple[int, int], TimeSeries],
    candidates: Sequence[float] = (7.5, 10.0),
    target: float = 7.5,
    window_s: float = 3.0,
    step_s: float = 1.0,
    spec: FilterBankSpec | None = None,
    wts: SubbandWeights | None = None,
    n_harmonics: int = 3,
    tune_weights: bool = False,
    a_grid: Iterable[float] = (0.0, 0.5, 1.0, 1.25, 1.5, 2.0),
    b_grid: Iterable[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
) -> RecognitionStudy:
    """CCA and FBCCA accuracy on preprocessed recordings keyed by
    ``(subject, condition)``; every window counts as correct when labelled
    ``target``.

    With ``tune_weights`` the FBCCA ``(a, b)`` for each subject is chosen
    by grid search on the other subjects' windows.
    """
    if not recordings:
        raise DataError("no recordings given")
    candidates = tuple(sorted(float(f) for f in candidates))
    subjects = sorted({s for s, _ in recordings})
    conditions = sorted({c for _, c in recordings})
    missing = [(s, c) for s in subjects for c in conditions if (s, c) not in recordings]
    if missing:
        raise DataError(f"recognition study needs every subject x condition; missing {missing[:5]}")
    any_x = next(iter(recordings.values()))
    spec = spec or default_filter_bank(any_x.fs)
    wts = wts or SubbandWeights(n=spec.n_subbands)

    cca, sub = {}, {}
    for key in sorted(recordings):
        cca[key], sub[key] = window_scores(recordings[key], candidates, window_s, step_s, spec, n_harmonics)
    n_win = next(iter(cca.values())).shape[0]
    cand = np.asarray(candidates)

    weights = {}
    for s in subjects:
        if tune_weights and len(subjects) > 1:
            others = np.concatenate([sub[(o, c)] for o in subjects if o != s for c in conditions])
            weights[s], _ = select_weights(others, np.full(len(others), target), candidates, a_grid, b_grid)
        else:
            weights[s] = wts

    acc = {m: np.empty((len(subjects), len(conditions))) for m in RECOGNITION_METHODS}
    for i, s in enumerate(subjects):
        for j, c in enumerate(conditions):
            # argmax keeps the first maximum, i.e. the lowest frequency
            acc["cca"][i, j] = np.mean(cand[np.argmax(cca[(s, c)], axis=1)] == target)
            acc["fbcca"][i, j] = np.mean(fused_labels(sub[(s, c)], candidates, weights[s]) == target)
    return RecognitionStudy(subjects, conditions, candidates, float(target), window_s, step_s, n_win, acc,
                            weights if tune_weights else {})


@dataclass
class WindowLengthStudy:
    lengths: tuple
    steps: tuple
    window_counts: dict
    studies: dict  # length -> RecognitionStudy

    def table(self) -> list[dict]:
        """Rows = conditions; columns = mean accuracy per method and length."""
        first = self.studies[self.lengths[0]]
        rows = []
        for j, c in enumerate(first.conditions):
            row = {"condition": c}
            for m in RECOGNITION_METHODS:
                for L in self.lengths:
                    row[f"{m}_{L:g}s"] = float(self.studies[L].accuracy[m][:, j].mean())
            rows.append(row)
        return rows

    def to_dict(self) -> dict:
        return {"lengths": list(self.lengths), "steps": list(self.steps),
                "window_counts": {f"{k:g}": v for k, v in self.window_counts.items()},
                "table": self.table()}


def window_length_study(
    recordings: Mapping[tuple[int, int], TimeSeries],
    lengths: Sequence[float] = (1.0, 3.0, 5.0, 7.0),
    steps: Sequence[float] | None = None,
    **kw,
) -> WindowLengthStudy:
    """Recognition accuracy per window length; the default step is 0.5 s
    for 1 s windows and 1 s otherwise."""
    lengths = tuple(float(L) for L in lengths)
    if steps is None:
        steps = tuple(0.5 if L == 1.0 else 1.0 for L in lengths)
    steps = tuple(float(s) for s in steps)
    if len(steps) != len(lengths):
        raise ConfigurationError("one step per window length required")
    x = next(iter(recordings.values()))
    counts, studies = {}, {}
    for L, st in zip(lengths, steps):
        counts[L] = window_count(len(x), int(round(L * x.fs)), int(round(st * x.fs)))
        studies[L] = recognition_study(recordings, window_s=L, step_s=st, **kw)
    return WindowLengthStudy(lengths, steps, counts, studies)

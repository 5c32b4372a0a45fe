"""Regression models, min-max normalization and MAE."""
from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError, DataError
from .forest import RandomForestRegressor, RegressionTree
from .knn import KNNRegressor
from .linear import LinearRegression
from .normalize import Normalizer, fit_normalizer
from .svr import SVR, fit_svr, kernel_matrix, solve_svr_dual

__all__ = [
    "MODEL_FAMILIES",
    "KNNRegressor",
    "LinearRegression",
    "Normalizer",
    "RandomForestRegressor",
    "RegressionTree",
    "SVR",
    "fit_normalizer",
    "fit_svr",
    "kernel_matrix",
    "mae",
    "make_model",
    "predict",
    "solve_svr_dual",
]

MODEL_FAMILIES = ("lr", "knn", "rf", "svr")


def make_model(family: str, **params):
    """Unfitted model of ``family`` built from grid-style parameters."""
    if family == "lr":
        return LinearRegression()
    if family == "knn":
        return KNNRegressor(params.get("k", 5), params.get("weighting", "uniform"))
    if family == "rf":
        return RandomForestRegressor(**params)
    if family == "svr":
        return SVR(**params)
    raise ConfigurationError(f"unknown model family {family!r}; expected one of {MODEL_FAMILIES}")


def predict(model, X) -> np.ndarray:
    if not hasattr(model, "predict"):
        raise ConfigurationError(f"{type(model).__name__} is not a regression model")
    return model.predict(X)


def mae(pred, truth) -> float:
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if pred.size != truth.size:
        raise DataError(f"{pred.size} predictions for {truth.size} targets")
    if pred.size == 0:
        raise DataError("MAE of empty vectors is undefined")
    return float(np.mean(np.abs(pred - truth)))

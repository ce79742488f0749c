"""Hyperparameter grid search over ordered, expanding-window folds.

Folds come from :func:`roadroughness.core.ordered_kfold`: the data is cut
into k contiguous blocks and round i trains on blocks 0..i and validates on
block i+1, so validation rows always come after training rows. Per fold the
standardizer (and optional oversampling) is fitted on the training rows
only; the index ranges used per round are recorded for leakage auditing.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..core import classification_metrics, ordered_kfold
from ..features import standardize_apply, standardize_fit
from .baseline import BaselineModel
from .bayes import GaussianNBModel
from .errors import ConvergenceError
from .linear import LinearModel
from .logistic import LogisticModel
from .mlp import MlpModel
from .neighbors import KnnModel
from .resample import adasyn_resample
from .svm import SvmModel
from .tree import RandomForestModel

FAMILIES = ("baseline", "ols", "ridge", "lasso", "elastic_net", "logistic",
            "knn", "gaussian_nb", "random_forest", "svm", "mlp")

DEFAULT_GRIDS = {
    "baseline": {},
    "ols": {},
    "ridge": {"lam": [60.0, 600.0, 6000.0]},
    "lasso": {"lam": [0.01, 0.05, 0.1]},
    "elastic_net": {"lam": [0.01, 0.05, 0.1], "l1_ratio": [0.2, 0.5, 0.8]},
    "logistic": {"lam": [0.01, 0.1, 1.0]},
    "knn": {"k": [5, 22, 50]},
    "gaussian_nb": {},
    "random_forest": {"n_trees": [100, 400], "max_depth": [5, 10],
                      "max_features": [6, "sqrt"]},
    "svm": {"gamma": [1e-3, 1e-2], "c": [1.0, 10.0]},
    "mlp": {"layers": [(2, 4, 6), (16, 16)], "lr0": [0.01],
            "l2": [0.1, 1.0]},
}


def default_grid(family: str) -> dict:
    if family not in DEFAULT_GRIDS:
        raise ValueError(f"unknown model family: {family}")
    return {k: list(v) for k, v in DEFAULT_GRIDS[family].items()}


def make_model(family: str, task: str, hyperparams: dict | None = None,
               seed: int = 0):
    """Instantiates a model of the given family for ``task`` (``regression``
    or ``classification``)."""
    hp = dict(hyperparams or {})
    if task not in ("regression", "classification"):
        raise ValueError(f"unknown task: {task}")
    if family == "baseline":
        return BaselineModel(task=task, **hp)
    if family in ("ols", "ridge", "lasso", "elastic_net"):
        if task != "regression":
            raise ValueError(f"{family} supports regression only")
        return LinearModel(kind=family, **hp)
    if family == "logistic":
        if task != "classification":
            raise ValueError("logistic supports classification only")
        return LogisticModel(**hp)
    if family == "knn":
        return KnnModel(task=task, **hp)
    if family == "gaussian_nb":
        if task != "classification":
            raise ValueError("gaussian_nb supports classification only")
        return GaussianNBModel(**hp)
    if family == "random_forest":
        return RandomForestModel(task=task, seed=seed, **hp)
    if family == "svm":
        return SvmModel(task="svr" if task == "regression" else "svc", **hp)
    if family == "mlp":
        return MlpModel(task=task, seed=seed, **hp)
    raise ValueError(f"unknown model family: {family}")


def grid_points(grid: dict) -> list[dict]:
    """Cartesian product of the grid in declaration order."""
    if not grid:
        return [{}]
    keys = list(grid.keys())
    return [dict(zip(keys, combo))
            for combo in itertools.product(*(grid[k] for k in keys))]


@dataclass
class GridSearchResult:
    family: str
    metric: str
    best_params: dict
    best_score: float
    cv_table: list = field(default_factory=list)
    fold_bounds: list = field(default_factory=list)

    @property
    def n_candidates(self) -> int:
        return len(self.cv_table)


def _fold_score(family, task, params, seed, x_tr, y_tr, x_val, y_val,
                metric, standardize, adasyn):
    if standardize:
        scaler = standardize_fit(x_tr)
        x_tr = standardize_apply(scaler, x_tr)
        x_val = standardize_apply(scaler, x_val)
    if adasyn and task == "classification" and len(np.unique(y_tr)) > 1:
        x_tr, y_tr = adasyn_resample(x_tr, y_tr.astype(int), seed=seed)
    model = make_model(family, task, params, seed=seed)
    model.fit(x_tr, y_tr)
    pred = model.predict(x_val)
    if metric == "rmse":
        return float(np.sqrt(np.mean((pred - y_val) ** 2)))
    if metric == "macro_f1":
        return classification_metrics(y_val.astype(int), pred.astype(int),
                                      average="macro")["f1"]
    raise ValueError(f"unknown metric: {metric}")


def grid_search(family: str, task: str, x, y, grid: dict | None = None,
                k_folds: int = 5, metric: str | None = None, seed: int = 0,
                standardize: bool = True, adasyn: bool = False
                ) -> GridSearchResult:
    """Scores every grid point on every ordered fold and returns the point
    with the best mean score (ties go to the earlier grid point)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if metric is None:
        metric = "rmse" if task == "regression" else "macro_f1"
    if grid is None:
        grid = default_grid(family)
    candidates = grid_points(grid)
    folds = ordered_kfold(len(x), k_folds)
    fold_bounds = [((int(tr[0]), int(tr[-1]) + 1),
                    (int(va[0]), int(va[-1]) + 1)) for tr, va in folds]
    minimize = metric == "rmse"
    best_idx = None
    best_mean = None
    table = []
    for idx, params in enumerate(candidates):
        scores = []
        errors = []
        for fold_idx, (tr, va) in enumerate(folds):
            try:
                scores.append(_fold_score(family, task, params, seed,
                                          x[tr], y[tr], x[va], y[va],
                                          metric, standardize, adasyn))
            except (ConvergenceError, ValueError,
                    np.linalg.LinAlgError) as exc:
                scores.append(None)
                errors.append(f"fold {fold_idx}: {type(exc).__name__}: {exc}")
        valid = [s for s in scores if s is not None]
        mean = float(np.mean(valid)) if valid else float("nan")
        table.append({"params": dict(params), "fold_scores": scores,
                      "mean_score": mean, "errors": errors})
        if not valid:
            continue
        better = (best_mean is None
                  or (mean < best_mean if minimize else mean > best_mean))
        if better:
            best_idx, best_mean = idx, mean
    if best_idx is None:
        raise RuntimeError(
            f"grid search failed for every candidate of family {family}; "
            f"first error: {table[0]['errors'][0]}")
    return GridSearchResult(family=family, metric=metric,
                            best_params=dict(candidates[best_idx]),
                            best_score=best_mean, cv_table=table,
                            fold_bounds=fold_bounds)

"""Feature selection and dimensionality reduction.

Pipeline order: drop constant columns, greedy forward selection scored by
cross-validated random-forest RMSE on ordered folds, then a principal
component projection keeping the smallest number of components whose
explained-variance ratio reaches the target.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ordered_kfold
from .models.tree import RandomForestModel

PCA_VARIANCE_TARGET = 0.99
SFS_TREES = 200
SFS_DEPTH = 8


def drop_constant(x: np.ndarray):
    """Returns (reduced matrix, indices of retained columns)."""
    x = np.asarray(x, dtype=float)
    keep = np.flatnonzero(np.ptp(x, axis=0) > 0.0)
    if len(keep) == 0:
        raise ValueError("all feature columns are constant")
    return x[:, keep], keep


@dataclass
class SfsResult:
    """Greedy inclusion order with the cross-validated RMSE after each
    addition; ``chosen_size`` is the count minimizing that curve (ties go to
    the smaller subset)."""

    order: list[int]
    cv_rmse: list[float]

    @property
    def chosen_size(self) -> int:
        return int(np.argmin(self.cv_rmse)) + 1

    @property
    def chosen(self) -> list[int]:
        return self.order[:self.chosen_size]


def _cv_rmse(x: np.ndarray, y: np.ndarray, folds, n_trees: int,
             max_depth: int, seed: int) -> float:
    errs = []
    for tr, va in folds:
        model = RandomForestModel(task="regression", n_trees=n_trees,
                                  max_depth=max_depth, seed=seed)
        model.fit(x[tr], y[tr])
        pred = model.predict(x[va])
        errs.append(np.mean((pred - y[va]) ** 2))
    return float(np.sqrt(np.mean(errs)))


def sfs_forward(x, y, k_folds: int = 5, max_features: int | None = None,
                n_trees: int = SFS_TREES, max_depth: int = SFS_DEPTH,
                seed: int = 0, max_rows: int | None = None) -> SfsResult:
    """Forward selection: at each step add the feature whose inclusion gives
    the lowest cross-validated RMSE (ties go to the lower feature index).

    ``max_rows`` optionally caps the rows used for scoring (a contiguous
    prefix, preserving the ordered-fold structure) to bound the runtime.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if max_rows is not None and len(x) > max_rows:
        x, y = x[:max_rows], y[:max_rows]
    n_total = x.shape[1]
    if max_features is None:
        max_features = n_total
    max_features = min(max_features, n_total)
    folds = ordered_kfold(len(x), k_folds)
    selected: list[int] = []
    curve: list[float] = []
    remaining = list(range(n_total))
    for _ in range(max_features):
        best_feat = None
        best_rmse = np.inf
        for feat in remaining:
            rmse = _cv_rmse(x[:, selected + [feat]], y, folds, n_trees,
                            max_depth, seed)
            if rmse < best_rmse:
                best_feat, best_rmse = feat, rmse
        selected.append(best_feat)
        remaining.remove(best_feat)
        curve.append(best_rmse)
    return SfsResult(order=selected, cv_rmse=curve)


@dataclass(frozen=True)
class PcaBasis:
    """Centering vector and orthonormal component matrix (d x m)."""

    mean: np.ndarray
    components: np.ndarray
    explained_ratios: np.ndarray = field(default=None)


def pca_fit(x, variance_target: float = PCA_VARIANCE_TARGET) -> PcaBasis:
    """Eigendecomposition of the covariance; keeps the smallest component
    count whose cumulative explained-variance ratio reaches the target."""
    x = np.asarray(x, dtype=float)
    if not 0.0 < variance_target <= 1.0:
        raise ValueError("variance_target must be in (0, 1]")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / len(x)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1]
    evals = np.maximum(evals[order], 0.0)
    evecs = evecs[:, order]
    total = evals.sum()
    if total <= 0.0:
        raise ValueError("zero total variance; nothing to project")
    ratios = evals / total
    m = int(np.searchsorted(np.cumsum(ratios), variance_target) + 1)
    m = min(m, len(evals))
    comps = evecs[:, :m]
    # Sign convention: largest-magnitude entry of each component positive.
    for j in range(m):
        pivot = np.argmax(np.abs(comps[:, j]))
        if comps[pivot, j] < 0:
            comps[:, j] = -comps[:, j]
    return PcaBasis(mean=mean, components=comps,
                    explained_ratios=ratios[:m])


def pca_transform(basis: PcaBasis, x) -> np.ndarray:
    return (np.asarray(x, dtype=float) - basis.mean) @ basis.components

"""Shared domain types, ordered data splitting and evaluation metrics.

Everything here is immutable after construction and safe to share across
workers; the metric functions are pure.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

# IRI severity boundaries in m/km. The band between the published Medium
# upper bound (1.6) and the High lower bound (2.5) is folded into Medium so
# that the three levels partition [0, inf).
IRI_LOW_MAX = 0.9
IRI_MEDIUM_MAX = 2.5


class IriLevel(enum.IntEnum):
    """Ordinal road roughness severity."""

    LOW = 0
    MEDIUM = 1
    HIGH = 2


def to_iri_level(iri: float) -> IriLevel:
    """Map a continuous IRI value (m/km) onto its severity level."""
    if not np.isfinite(iri) or iri < 0:
        raise ValueError(f"IRI must be finite and non-negative, got {iri}")
    if iri <= IRI_LOW_MAX:
        return IriLevel.LOW
    if iri <= IRI_MEDIUM_MAX:
        return IriLevel.MEDIUM
    return IriLevel.HIGH


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 coordinate in degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class TelemetrySample:
    """One in-vehicle sample; ``gps`` is present only at fix instants."""

    t: float
    acc_z: float
    speed: float
    gps: GeoPoint | None = None

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError(f"speed must be non-negative, got {self.speed}")


@dataclass
class TelemetryTrace:
    """A time-ordered trace of vertical acceleration, speed and GPS fixes.

    Channels are stored as flat arrays; ``gps_idx`` holds the sample indices
    at which a fix was recorded (``gps_lat``/``gps_lon`` run parallel to it).
    """

    t: np.ndarray
    acc_z: np.ndarray
    speed: np.ndarray
    gps_idx: np.ndarray
    gps_lat: np.ndarray
    gps_lon: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.acc_z = np.asarray(self.acc_z, dtype=float)
        self.speed = np.asarray(self.speed, dtype=float)
        self.gps_idx = np.asarray(self.gps_idx, dtype=int)
        self.gps_lat = np.asarray(self.gps_lat, dtype=float)
        self.gps_lon = np.asarray(self.gps_lon, dtype=float)
        n = len(self.t)
        if not (len(self.acc_z) == len(self.speed) == n):
            raise ValueError("channel lengths differ")
        if n > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if np.any(self.speed < 0):
            raise ValueError("speed must be non-negative")
        if not (len(self.gps_idx) == len(self.gps_lat) == len(self.gps_lon)):
            raise ValueError("gps arrays differ in length")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def gps_t(self) -> np.ndarray:
        return self.t[self.gps_idx]

    def samples(self):
        """Iterate over the trace as :class:`TelemetrySample` objects."""
        fixes = {int(i): GeoPoint(la, lo)
                 for i, la, lo in zip(self.gps_idx, self.gps_lat, self.gps_lon)}
        for i in range(len(self)):
            yield TelemetrySample(float(self.t[i]), float(self.acc_z[i]),
                                  float(self.speed[i]), fixes.get(i))


@dataclass(frozen=True)
class ReferenceSegment:
    """A geo-referenced road piece with a ground-truth IRI label."""

    start: GeoPoint
    end: GeoPoint
    length: float
    iri: float

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError(f"length must be positive, got {self.length}")
        if self.iri < 0:
            raise ValueError(f"IRI must be non-negative, got {self.iri}")


@dataclass
class AlignedSegment:
    """A road window holding resampled sensor channels and an IRI label."""

    window_id: int
    t: np.ndarray
    acc_z: np.ndarray
    speed: np.ndarray
    iri: float

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.acc_z = np.asarray(self.acc_z, dtype=float)
        self.speed = np.asarray(self.speed, dtype=float)
        if not (len(self.t) == len(self.acc_z) == len(self.speed)):
            raise ValueError("channel lengths differ")
        if self.n_points < 2:
            raise ValueError("aligned segment needs at least 2 points")
        if self.iri < 0:
            raise ValueError(f"IRI must be non-negative, got {self.iri}")

    @property
    def n_points(self) -> int:
        return len(self.t)


@dataclass
class Dataset:
    """Feature matrix with continuous and ordinal per-segment targets."""

    X: np.ndarray
    y: np.ndarray
    level: np.ndarray
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.level = np.asarray(self.level, dtype=int)
        if self.X.ndim != 2:
            raise ValueError("X must be 2-dimensional")
        n = self.X.shape[0]
        if not (len(self.y) == len(self.level) == n):
            raise ValueError("target lengths do not match X")
        if self.feature_names and len(self.feature_names) != self.X.shape[1]:
            raise ValueError("feature_names length does not match X columns")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("X contains non-finite values")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("y contains non-finite values")

    def __len__(self) -> int:
        return self.X.shape[0]

    def take(self, rows) -> "Dataset":
        return Dataset(self.X[rows], self.y[rows], self.level[rows],
                       list(self.feature_names))


def ordered_split(dataset: Dataset, train_frac: float) -> tuple[Dataset, Dataset]:
    """Split a route-ordered dataset into leading train and trailing test parts."""
    if not 0.0 < train_frac < 1.0:
        raise ValueError(f"train_frac must be in (0, 1), got {train_frac}")
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    n_train = int(np.floor(n * train_frac))
    if n_train == 0 or n_train == n:
        raise ValueError(f"split leaves one side empty (N={n}, frac={train_frac})")
    return dataset.take(slice(0, n_train)), dataset.take(slice(n_train, n))


def ordered_kfold(n: int, k: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Expanding-window folds over ``k`` contiguous blocks.

    Round ``i`` trains on blocks ``0..i`` and validates on block ``i+1``, so
    every validation index strictly follows every train index.
    """
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if n < k:
        raise ValueError(f"need at least k={k} rows, got {n}")
    blocks = np.array_split(np.arange(n), k)
    rounds = []
    for i in range(k - 1):
        train = np.concatenate(blocks[: i + 1])
        val = blocks[i + 1]
        rounds.append((train, val))
    return rounds


def regression_metrics(y, yhat) -> dict[str, float]:
    """R^2, MAE, RMSE and mean relative error of predictions.

    R^2 is computed against the mean of the evaluated targets, so a constant
    predictor fitted elsewhere may score below zero. MRE requires strictly
    positive targets.
    """
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {yhat.shape}")
    if len(y) < 2:
        raise ValueError("need at least 2 samples")
    if np.any(y <= 0):
        raise ValueError("MRE requires strictly positive targets")
    err = y - yhat
    ss_res = float(np.sum(err ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("targets are constant; R^2 is undefined")
    return {
        "r2": 1.0 - ss_res / ss_tot,
        "mae": float(np.mean(np.abs(err))),
        "rmse": float(np.sqrt(np.mean(err ** 2))),
        "mre": float(np.mean(np.abs(err) / y)),
    }


def confusion_matrix(y, yhat, n_classes: int = 3) -> np.ndarray:
    """Counts with entry (i, j) = true class i predicted as class j."""
    y = np.asarray(y, dtype=int)
    yhat = np.asarray(yhat, dtype=int)
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {yhat.shape}")
    cm = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(cm, (y, yhat), 1)
    return cm


def classification_metrics(y, yhat, n_classes: int = 3,
                           average: str = "macro") -> dict[str, float]:
    """Precision, recall and F1 averaged over all classes.

    A class absent from both truth and prediction contributes zeros to the
    macro average. ``average="weighted"`` weights classes by support instead.
    """
    if average not in ("macro", "weighted"):
        raise ValueError(f"unknown average: {average}")
    cm = confusion_matrix(y, yhat, n_classes)
    tp = np.diag(cm).astype(float)
    pred = cm.sum(axis=0).astype(float)
    support = cm.sum(axis=1).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(pred > 0, tp / pred, 0.0)
        recall = np.where(support > 0, tp / support, 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2 * precision * recall / pr, 0.0)
    if average == "macro":
        w = np.full(n_classes, 1.0 / n_classes)
    else:
        w = support / support.sum()
    return {
        "precision": float(np.sum(w * precision)),
        "recall": float(np.sum(w * recall)),
        "f1": float(np.sum(w * f1)),
    }

"""Segment resampling, the temporal/statistical feature catalog and
train-fit standardization.

Per channel, 34 extractors are evaluated; over the two channels
(vertical acceleration and speed) this yields the 68-column feature matrix.
Conventions pinned here: population variance/std, quantiles by linear
interpolation, ECDF percentile value = smallest sample whose ECDF reaches p,
lag-1 autocorrelation normalized by the variance, Shannon entropy over a
10-bin equal-width histogram (log base 2), turning points as strict sign
changes of the first difference, neighbourhood peaks with neighbourhood 10.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AlignedSegment, Dataset, to_iri_level

ENTROPY_BINS = 10
PEAK_NEIGHBOURHOOD = 10
DEFAULT_TARGET_LEN = 250


def resample_segment(segment: AlignedSegment, target_len: int) -> AlignedSegment:
    """Linearly interpolate each channel onto ``target_len`` uniform time
    points spanning the original extent; endpoints are preserved exactly."""
    if target_len < 2:
        raise ValueError(f"target_len must be at least 2, got {target_len}")
    if segment.n_points < 2:
        raise ValueError("segment needs at least 2 samples per channel")
    t_new = np.linspace(segment.t[0], segment.t[-1], target_len)
    return AlignedSegment(
        window_id=segment.window_id,
        t=t_new,
        acc_z=np.interp(t_new, segment.t, segment.acc_z),
        speed=np.interp(t_new, segment.t, segment.speed),
        iri=segment.iri,
    )


def _ecdf_percentile(x: np.ndarray, p: float) -> float:
    """Smallest sample value whose empirical CDF is at least p."""
    xs = np.sort(x)
    n = len(xs)
    k = int(np.ceil(p * n))
    return float(xs[max(k, 1) - 1])


def _diffs(x: np.ndarray) -> np.ndarray:
    return np.diff(x)


def _autocorr_lag1(x: np.ndarray) -> float:
    xc = x - x.mean()
    denom = float(np.sum(xc ** 2))
    if denom == 0.0:
        return 0.0
    return float(np.sum(xc[:-1] * xc[1:]) / denom)


def _slope(x: np.ndarray, t: np.ndarray) -> float:
    tc = t - t.mean()
    denom = float(np.sum(tc ** 2))
    if denom == 0.0:
        return 0.0
    return float(np.sum(tc * (x - x.mean())) / denom)


def _skewness(x: np.ndarray) -> float:
    xc = x - x.mean()
    m2 = float(np.mean(xc ** 2))
    if m2 == 0.0:
        return 0.0
    return float(np.mean(xc ** 3) / m2 ** 1.5)


def _kurtosis(x: np.ndarray) -> float:
    """Fisher (excess) kurtosis from population moments."""
    xc = x - x.mean()
    m2 = float(np.mean(xc ** 2))
    if m2 == 0.0:
        return 0.0
    return float(np.mean(xc ** 4) / m2 ** 2 - 3.0)


def _entropy(x: np.ndarray) -> float:
    if np.ptp(x) == 0.0:
        return 0.0
    counts, _ = np.histogram(x, bins=ENTROPY_BINS)
    p = counts[counts > 0] / len(x)
    return float(-np.sum(p * np.log2(p)))


def _turning_points(x: np.ndarray) -> tuple[int, int]:
    """(positive, negative) turning points: strict +to- and -to+ sign changes
    of the first difference."""
    d = np.sign(np.diff(x))
    pos = int(np.sum((d[:-1] > 0) & (d[1:] < 0)))
    neg = int(np.sum((d[:-1] < 0) & (d[1:] > 0)))
    return pos, neg


def _neighbourhood_peaks(x: np.ndarray, n: int = PEAK_NEIGHBOURHOOD) -> int:
    count = 0
    for i in range(n, len(x) - n):
        v = x[i]
        if np.all(v > x[i - n:i]) and np.all(v > x[i + 1:i + n + 1]):
            count += 1
    return count


def _centroid(x: np.ndarray, t: np.ndarray) -> float:
    energy = float(np.sum(x ** 2))
    if energy == 0.0:
        return float(t.mean())
    return float(np.sum(t * x ** 2) / energy)


def _total_energy(x: np.ndarray, t: np.ndarray) -> float:
    span = float(t[-1] - t[0])
    if span == 0.0:
        return 0.0
    return float(np.sum(x ** 2) / span)


def _total_distance(x: np.ndarray, t: np.ndarray) -> float:
    return float(np.sum(np.sqrt(np.diff(t) ** 2 + np.diff(x) ** 2)))


def _catalog():
    """The 34 per-channel extractors in fixed column order."""
    entries = [
        ("mean", lambda x, t: float(np.mean(x))),
        ("median", lambda x, t: float(np.median(x))),
        ("min", lambda x, t: float(np.min(x))),
        ("max", lambda x, t: float(np.max(x))),
        ("variance", lambda x, t: float(np.var(x))),
        ("std", lambda x, t: float(np.std(x))),
        ("mean_abs_dev", lambda x, t: float(np.mean(np.abs(x - np.mean(x))))),
        ("median_abs_dev", lambda x, t: float(np.median(np.abs(x - np.median(x))))),
        ("mean_diff", lambda x, t: float(np.mean(_diffs(x)))),
        ("median_diff", lambda x, t: float(np.median(_diffs(x)))),
        ("sum_abs_diff", lambda x, t: float(np.sum(np.abs(_diffs(x))))),
        ("iqr", lambda x, t: float(np.quantile(x, 0.75) - np.quantile(x, 0.25))),
        ("ecdf_pct_5", lambda x, t: _ecdf_percentile(x, 0.05)),
        ("ecdf_pct_20", lambda x, t: _ecdf_percentile(x, 0.20)),
        ("ecdf_pct_80", lambda x, t: _ecdf_percentile(x, 0.80)),
        ("kurtosis", lambda x, t: _kurtosis(x)),
        ("skewness", lambda x, t: _skewness(x)),
        ("slope", _slope),
        ("autocorr_lag1", lambda x, t: _autocorr_lag1(x)),
        ("auc", lambda x, t: float(np.trapezoid(x, t))),
        ("rms", lambda x, t: float(np.sqrt(np.mean(x ** 2)))),
        ("abs_energy", lambda x, t: float(np.sum(x ** 2))),
        ("total_energy", _total_energy),
        ("centroid", _centroid),
        ("entropy", lambda x, t: _entropy(x)),
        ("total_distance", _total_distance),
        ("pos_turning_points", lambda x, t: float(_turning_points(x)[0])),
        ("neg_turning_points", lambda x, t: float(_turning_points(x)[1])),
        ("neighbourhood_peaks", lambda x, t: float(_neighbourhood_peaks(x))),
        ("peak_to_peak", lambda x, t: float(np.ptp(x))),
        # Zero-mean counterparts of the energy-style extractors.
        ("auc_zm", lambda x, t: float(np.trapezoid(x - np.mean(x), t))),
        ("rms_zm", lambda x, t: float(np.sqrt(np.mean((x - np.mean(x)) ** 2)))),
        ("abs_energy_zm", lambda x, t: float(np.sum((x - np.mean(x)) ** 2))),
        ("total_energy_zm", lambda x, t: _total_energy(x - np.mean(x), t)),
    ]
    return entries


EXTRACTORS = _catalog()
EXTRACTOR_NAMES = [name for name, _ in EXTRACTORS]
N_CHANNEL_FEATURES = len(EXTRACTORS)
CHANNELS = ("acc_z", "speed")


def extract_channel_features(channel, t) -> dict[str, float]:
    """Evaluate the full extractor catalog on one channel."""
    x = np.asarray(channel, dtype=float)
    t = np.asarray(t, dtype=float)
    if len(x) < 3:
        raise ValueError(f"channel needs at least 3 samples, got {len(x)}")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(t)):
        raise ValueError("channel contains non-finite values")
    return {name: fn(x, t) for name, fn in EXTRACTORS}


def feature_names() -> list[str]:
    """Column labels of the full matrix, in fixed order: extractor@channel."""
    return [f"{name}@{ch}" for ch in CHANNELS for name in EXTRACTOR_NAMES]


def build_feature_matrix(segments: list[AlignedSegment]) -> Dataset:
    """One row per segment, in route order, with IRI and level targets."""
    if not segments:
        raise ValueError("no segments given")
    names = feature_names()
    rows = np.empty((len(segments), len(names)))
    y = np.empty(len(segments))
    level = np.empty(len(segments), dtype=int)
    for i, seg in enumerate(segments):
        vals = []
        for ch in CHANNELS:
            feats = extract_channel_features(getattr(seg, ch), seg.t)
            vals.extend(feats[name] for name in EXTRACTOR_NAMES)
        row = np.array(vals)
        if not np.all(np.isfinite(row)):
            bad = names[int(np.flatnonzero(~np.isfinite(row))[0])]
            raise ValueError(f"non-finite feature {bad} in segment "
                             f"{seg.window_id}")
        rows[i] = row
        y[i] = seg.iri
        level[i] = int(to_iri_level(seg.iri))
    return Dataset(rows, y, level, names)


@dataclass(frozen=True)
class Standardizer:
    """Train-fitted per-feature location/scale; immutable after fit."""

    mean: np.ndarray
    std: np.ndarray


def standardize_fit(x_train) -> Standardizer:
    """Fit zero-mean/unit-variance scaling on training rows only."""
    x = np.asarray(x_train, dtype=float)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    if np.any(std == 0.0):
        bad = int(np.flatnonzero(std == 0.0)[0])
        raise ValueError(f"column {bad} has zero train std; drop constant "
                         f"features first")
    return Standardizer(mean, std)


def standardize_apply(standardizer: Standardizer, x) -> np.ndarray:
    return (np.asarray(x, dtype=float) - standardizer.mean) / standardizer.std

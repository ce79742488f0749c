"""Geo-reference every sensor sample and align data to reference segments."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..core import AlignedSegment, ReferenceSegment, TelemetryTrace
from ..geo import haversine
from .match import MatchedTrace

WINDOW_PIECES = 10  # 100 m window out of 10 m pieces
MIN_PIECE_SAMPLES = 2


@dataclass
class InterpolatedPositions:
    """Per-sample positions for the samples bracketed by GPS fixes."""

    idx: np.ndarray   # indices into the trace
    lat: np.ndarray
    lon: np.ndarray
    n_dropped: int    # samples outside the fix time range

    def __len__(self) -> int:
        return len(self.idx)


@dataclass
class MatchedPiece:
    """Sensor samples assigned to one reference segment."""

    seg_index: int
    t: np.ndarray
    acc_z: np.ndarray
    speed: np.ndarray
    iri: float

    @property
    def n_points(self) -> int:
        return len(self.t)


def interpolate_positions(trace: TelemetryTrace,
                          matched: MatchedTrace) -> InterpolatedPositions:
    """Assign a position to every sensor sample by linear interpolation in
    time between adjacent snapped fixes (constant speed assumption)."""
    if len(matched) < 2:
        raise ValueError("need at least 2 matched fixes")
    t0, t1 = matched.t[0], matched.t[-1]
    mask = (trace.t >= t0) & (trace.t <= t1)
    if not np.any(mask):
        raise ValueError("no samples fall inside the matched fix time range")
    idx = np.flatnonzero(mask)
    lat = np.interp(trace.t[idx], matched.t, matched.lat)
    lon = np.interp(trace.t[idx], matched.t, matched.lon)
    n_dropped = len(trace) - len(idx)
    if n_dropped:
        warnings.warn(f"{n_dropped} samples outside GPS fix range were dropped",
                      stacklevel=2)
    return InterpolatedPositions(idx, lat, lon, n_dropped)


def _closest_point(positions: InterpolatedPositions, lat: float, lon: float,
                   lo: int, hi: int) -> int:
    """Index (into positions) of the closest sample within [lo, hi); ties go
    to the earlier timestamp via argmin's first-occurrence rule."""
    lo = max(0, lo)
    hi = min(len(positions), hi)
    d = haversine(positions.lat[lo:hi], positions.lon[lo:hi], lat, lon)
    return lo + int(np.argmin(d))


def align_segments(reference: list[ReferenceSegment],
                   positions: InterpolatedPositions,
                   trace: TelemetryTrace,
                   search_back: int = 100,
                   search_ahead: int = 2000) -> tuple[list[MatchedPiece], int]:
    """Assign samples to each reference segment between its matched endpoints.

    Both the samples and the reference segments run in route order, so each
    endpoint is matched by a windowed search around the previous match.
    Pieces with fewer than 2 samples are dropped; the drop count is returned.
    """
    if len(positions) == 0:
        raise ValueError("no positioned samples")
    start0 = _closest_point(positions, reference[0].start.lat,
                            reference[0].start.lon, 0, len(positions))
    boundaries = [start0]
    cursor = start0
    for seg in reference:
        cursor = _closest_point(positions, seg.end.lat, seg.end.lon,
                                cursor - search_back, cursor + search_ahead)
        boundaries.append(cursor)
    pieces: list[MatchedPiece] = []
    n_dropped = 0
    for i, seg in enumerate(reference):
        a, b = boundaries[i], boundaries[i + 1]
        if b - a < MIN_PIECE_SAMPLES:
            n_dropped += 1
            continue
        rows = positions.idx[a:b]
        pieces.append(MatchedPiece(i, trace.t[rows], trace.acc_z[rows],
                                   trace.speed[rows], seg.iri))
    return pieces, n_dropped


def sliding_windows(pieces: list[MatchedPiece],
                    window: int = WINDOW_PIECES) -> list[AlignedSegment]:
    """Overlapping windows of ``window`` consecutive pieces, step one piece.

    The window IRI is the unweighted mean of the piece IRIs and the channels
    are the concatenated samples. Windows spanning a dropped piece are
    skipped so every window covers the full nominal length.
    """
    segments: list[AlignedSegment] = []
    for i in range(len(pieces) - window + 1):
        run = pieces[i:i + window]
        if run[-1].seg_index - run[0].seg_index != window - 1:
            continue  # a dropped piece interrupts this window
        segments.append(AlignedSegment(
            window_id=run[0].seg_index,
            t=np.concatenate([p.t for p in run]),
            acc_z=np.concatenate([p.acc_z for p in run]),
            speed=np.concatenate([p.speed for p in run]),
            iri=float(np.mean([p.iri for p in run])),
        ))
    if not segments:
        warnings.warn("no complete windows could be formed", stacklevel=2)
    return segments

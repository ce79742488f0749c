"""HMM map matching over GPS fixes (Newson-Krumm style).

Hidden states are candidate edge projections, observations are GPS fixes.
Emission log-density is -d_gc^2 / (2 sigma^2) for the fix-to-projection
great-circle distance; transition log-density is -|d_route - d_gc| / beta
between consecutive candidates. The Viterbi optimum is returned.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geo import haversine
from .network import Candidate, RoadNetwork

DEFAULT_SIGMA = 4.07
DEFAULT_BETA = 20.0


class UnmatchedFixError(ValueError):
    """A GPS fix has no candidate edge within the search radius."""

    def __init__(self, fix_index: int):
        super().__init__(f"fix {fix_index} has no candidate edge in range")
        self.fix_index = fix_index


class BrokenTraceError(ValueError):
    """No connected candidate path exists between consecutive fixes."""

    def __init__(self, fix_index: int):
        super().__init__(f"no connected candidates between fixes "
                         f"{fix_index - 1} and {fix_index}")
        self.fix_index = fix_index


@dataclass
class MatchedTrace:
    """Per-fix snapped positions and the most probable edge sequence."""

    t: np.ndarray
    fix_lat: np.ndarray
    fix_lon: np.ndarray
    edge: np.ndarray
    offset: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    log_score: float

    def __len__(self) -> int:
        return len(self.t)

    def edge_path(self) -> list[int]:
        """Edge sequence with consecutive duplicates removed."""
        path = []
        for e in self.edge:
            if not path or path[-1] != e:
                path.append(int(e))
        return path


def build_lattice(lats, lons, network: RoadNetwork, sigma: float = DEFAULT_SIGMA,
                  beta: float = DEFAULT_BETA, max_candidates: int = 8,
                  radius: float = 50.0):
    """Candidates with emission scores per fix, plus transition score matrices.

    Returns ``(steps, emissions, transitions)`` where ``transitions[i]`` maps
    candidates of fix i to candidates of fix i+1.
    """
    lats = np.asarray(lats, dtype=float)
    lons = np.asarray(lons, dtype=float)
    if len(lats) < 2:
        raise ValueError("need at least 2 fixes")
    steps: list[list[Candidate]] = []
    emissions: list[np.ndarray] = []
    for i in range(len(lats)):
        cands = network.candidates(float(lats[i]), float(lons[i]),
                                   max_candidates, radius)
        if not cands:
            raise UnmatchedFixError(i)
        steps.append(cands)
        emissions.append(np.array([-c.dist ** 2 / (2.0 * sigma ** 2)
                                   for c in cands]))
    transitions: list[np.ndarray] = []
    for i in range(len(lats) - 1):
        d_gc = float(haversine(lats[i], lons[i], lats[i + 1], lons[i + 1]))
        cutoff = max(10.0 * (d_gc + 1.0), 2000.0)
        cache: dict = {}
        mat = np.full((len(steps[i]), len(steps[i + 1])), -np.inf)
        for a, ca in enumerate(steps[i]):
            for b, cb in enumerate(steps[i + 1]):
                d_route = network.route_distance(ca, cb, cutoff, cache)
                if np.isfinite(d_route):
                    mat[a, b] = -abs(d_route - d_gc) / beta
        if not np.any(np.isfinite(mat)):
            raise BrokenTraceError(i + 1)
        transitions.append(mat)
    return steps, emissions, transitions


def viterbi_path(emissions, transitions):
    """Most probable state sequence over the lattice; returns (path, score)."""
    score = emissions[0].copy()
    back: list[np.ndarray] = []
    for i, mat in enumerate(transitions):
        total = score[:, None] + mat
        best_prev = np.argmax(total, axis=0)
        score = total[best_prev, np.arange(mat.shape[1])] + emissions[i + 1]
        back.append(best_prev)
    last = int(np.argmax(score))
    best_score = float(score[last])
    path = [last]
    for bp in reversed(back):
        path.append(int(bp[path[-1]]))
    path.reverse()
    return path, best_score


def match_fixes(t, lats, lons, network: RoadNetwork, sigma: float = DEFAULT_SIGMA,
                beta: float = DEFAULT_BETA, max_candidates: int = 8,
                radius: float = 50.0) -> MatchedTrace:
    """Snap a sequence of timestamped fixes to the network."""
    steps, emissions, transitions = build_lattice(
        lats, lons, network, sigma, beta, max_candidates, radius)
    path, log_score = viterbi_path(emissions, transitions)
    chosen = [steps[i][j] for i, j in enumerate(path)]
    return MatchedTrace(
        t=np.asarray(t, dtype=float),
        fix_lat=np.asarray(lats, dtype=float),
        fix_lon=np.asarray(lons, dtype=float),
        edge=np.array([c.edge for c in chosen], dtype=int),
        offset=np.array([c.offset for c in chosen]),
        lat=np.array([c.lat for c in chosen]),
        lon=np.array([c.lon for c in chosen]),
        log_score=log_score,
    )


def map_match(trace, network: RoadNetwork, sigma: float = DEFAULT_SIGMA,
              beta: float = DEFAULT_BETA, max_candidates: int = 8,
              radius: float = 50.0) -> MatchedTrace:
    """Match the GPS fixes of a telemetry trace to the road network."""
    return match_fixes(trace.gps_t, trace.gps_lat, trace.gps_lon, network,
                       sigma, beta, max_candidates, radius)

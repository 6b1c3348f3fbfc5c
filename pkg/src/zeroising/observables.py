"""Measurable quantities of a run: clusters, crossing events, full-ball
events, fixation fractions and flip counts.

Everything works off (initial configuration, event log) pairs: spins are
piecewise constant and right-continuous, so every continuum-time event used
here is decided exactly from the finitely many event times.
"""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .exact import Vec2, qs, vec
from .geometry import (CrossingGeometry, conv_G, region_contains,
                       region_vertex_ids)
from .harris import EventLog, HarrisSchedule, SpinConfiguration, run, sample_initial
from .plane_graph import GraphError, PlaneGraph, Window


# ---------------------------------------------------------------------------
# clusters
# ---------------------------------------------------------------------------

def cluster_at(w: Window, sigma: SpinConfiguration, v: int) -> set[int]:
    """Breadth-first closure of v over same-spin neighbours."""
    if not 0 <= v < w.n:
        raise GraphError(f"unknown vertex id {v}")
    s = sigma.spins
    target = s[v]
    seen = {v}
    dq = deque([v])
    while dq:
        u = dq.popleft()
        for x in w.neighbors(u):
            if x not in seen and s[x] == target:
                seen.add(x)
                dq.append(x)
    return seen


def _edge_array(w: Window) -> np.ndarray:
    indptr, indices = w.csr()
    rows = np.repeat(np.arange(w.n), np.diff(indptr))
    mask = indices > rows
    return np.stack([rows[mask], indices[mask]], axis=1)


def cluster_labels(w: Window, sigma: SpinConfiguration) -> np.ndarray:
    """Connected-component labels of the same-spin subgraph (sparse pass);
    used both as a fast path and as the oracle against cluster_at."""
    e = _edge_array(w)
    s = sigma.spins
    keep = s[e[:, 0]] == s[e[:, 1]]
    ek = e[keep]
    m = sp.coo_matrix((np.ones(len(ek)), (ek[:, 0], ek[:, 1])),
                      shape=(w.n, w.n))
    _, labels = connected_components(m, directed=False)
    return labels


# ---------------------------------------------------------------------------
# trajectory reconstruction
# ---------------------------------------------------------------------------

def spins_at(w: Window, sigma0: SpinConfiguration, log: EventLog,
             t: float) -> SpinConfiguration:
    """Configuration at time t (right-continuous: events at t included)."""
    k = int(np.searchsorted(log.times, t, side="right"))
    counts = np.zeros(w.n, dtype=np.int64)
    fl = log.flipped[:k]
    np.add.at(counts, log.vertices[:k][fl], 1)
    spins = sigma0.spins * np.where(counts % 2 == 0, 1, -1).astype(np.int8)
    return SpinConfiguration(spins.astype(np.int8), t)


def first_flip_times(log: EventLog, n: int) -> np.ndarray:
    out = np.full(n, np.inf)
    fl = np.nonzero(log.flipped)[0]
    for i in fl[::-1]:
        out[log.vertices[i]] = log.times[i]
    return out


def flip_counts(log: EventLog, n: int, times: Sequence[float]) -> np.ndarray:
    """Cumulative per-vertex flip counts at the sample times; shape
    (len(times), n)."""
    out = np.zeros((len(times), n), dtype=np.int64)
    order = np.searchsorted(log.times, np.asarray(times, dtype=float),
                            side="right")
    for row, k in enumerate(order):
        fl = log.flipped[:k]
        np.add.at(out[row], log.vertices[:k][fl], 1)
    return out


def flips_in_interval(log: EventLog, n: int, t1: float, t2: float) -> np.ndarray:
    """Per-vertex flip counts inside (t1, t2]."""
    a = int(np.searchsorted(log.times, t1, side="right"))
    b = int(np.searchsorted(log.times, t2, side="right"))
    out = np.zeros(n, dtype=np.int64)
    fl = log.flipped[a:b]
    np.add.at(out, log.vertices[a:b][fl], 1)
    return out


# ---------------------------------------------------------------------------
# series containers
# ---------------------------------------------------------------------------

@dataclass
class ObservableSeries:
    sample_times: np.ndarray
    values: dict                 # name -> array aligned with sample_times
    seed: int
    window_descriptor: str

    def __post_init__(self):
        st = np.asarray(self.sample_times, dtype=float)
        if np.any(np.diff(st) <= 0):
            raise GraphError("sample_times must be strictly increasing")
        self.sample_times = st
        for k, a in self.values.items():
            if len(a) != len(st):
                raise GraphError(f"series {k!r} is not aligned with sample_times")


def _window_descriptor(w: Window) -> str:
    return f"{w.builder or 'graph'}(n={w.n},boundary={w.boundary.kind})"


def _center_vertex(w: Window) -> int:
    pts = w.graph.float_positions()
    return int(np.argmin((pts ** 2).sum(axis=1)))


def cluster_growth_series(w: Window, p: float, seed: int,
                          times: Sequence[float]) -> ObservableSeries:
    """|C at the origin vertex| sampled along one run."""
    sch = HarrisSchedule(seed)
    sigma0 = sample_initial(w, p, sch)
    _, log = run(w, sigma0, sch, max(times))
    v0 = _center_vertex(w)
    sizes = []
    for t in times:
        sig = spins_at(w, sigma0, log, t)
        labels = cluster_labels(w, sig)
        sizes.append(int((labels == labels[v0]).sum()))
    return ObservableSeries(np.asarray(times, dtype=float),
                            {"cluster_size": np.array(sizes)}, seed,
                            _window_descriptor(w))


def cluster_growth_batch(w: Window, p: float, seeds: Sequence[int],
                         times: Sequence[float]) -> dict:
    """Replica aggregate: per-seed origin-cluster sizes plus medians and
    quartiles at each sample time."""
    mat = np.empty((len(seeds), len(times)), dtype=np.int64)
    for i, seed in enumerate(seeds):
        mat[i] = cluster_growth_series(w, p, seed, times).values["cluster_size"]
    return {
        "times": np.asarray(times, dtype=float),
        "sizes": mat,
        "median": np.median(mat, axis=0),
        "q25": np.quantile(mat, 0.25, axis=0),
        "q75": np.quantile(mat, 0.75, axis=0),
    }


# ---------------------------------------------------------------------------
# crossing detection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CrossResult:
    occurred: bool
    witness_i: Optional[int]         # 1-based sector start index
    cluster: frozenset


def detect_L_cross(w: Window, sigma: SpinConfiguration,
                   geom: CrossingGeometry) -> CrossResult:
    """An L-cross occurs when the +1 cluster of the outer-region subgraph
    that contains the central set meets one ball of every rotational sector,
    for some common sector offset i."""
    g = w.graph
    s = sigma.spins
    if any(s[u] != 1 for u in geom.U):
        return CrossResult(False, None, frozenset())
    region_ids = set(int(v) for v in region_vertex_ids(g, geom.region_outer))
    seen = set(u for u in geom.U)
    dq = deque(seen)
    while dq:
        u = dq.popleft()
        for x in w.neighbors(u):
            if x in region_ids and x not in seen and s[x] == 1:
                seen.add(x)
                dq.append(x)
    cluster = np.array(sorted(seen), dtype=np.int64)
    pts = g.float_positions()[cluster]
    a, q = geom.a, geom.q
    Lf = float(geom.L)
    r = float(geom.ball_radius())
    centers = np.array([c.to_float() for c in geom.cover]) * Lf
    d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    hits = (d2 <= r * r + 1e-9).any(axis=0)
    exact_r2 = qs(geom.ball_radius()) * qs(geom.ball_radius())
    for i in range(1, q + 1):
        if all(hits[(i - 1) + k * q] for k in range(a)):
            if _confirm_sector(g, cluster, geom, i, exact_r2):
                return CrossResult(True, i, frozenset(int(v) for v in cluster))
    return CrossResult(False, None, frozenset(int(v) for v in cluster))


def _confirm_sector(g, cluster, geom: CrossingGeometry, i: int, exact_r2) -> bool:
    """Exact confirmation of the float prefilter for one sector offset."""
    for k in range(geom.a):
        c = geom.scaled_center((i - 1) + k * geom.q)
        ok = False
        for v in cluster:
            d = g.position(int(v)) - c
            if (d.norm2() - exact_r2).sign() <= 0:
                ok = True
                break
        if not ok:
            return False
    return True


def crossing_hull_covers_ball(w: Window, geom: CrossingGeometry,
                              cluster: Iterable[int]) -> bool:
    """Check conv_G(cluster ∩ W) ⊇ all vertices within L/3 of the origin."""
    S = set(cluster) & set(geom.W)
    if not S:
        return False
    hull_ids = conv_G(w, S)
    ball = ball_ids(w, Fraction(geom.L, 3))
    return set(int(v) for v in ball) <= hull_ids


# ---------------------------------------------------------------------------
# full-ball events
# ---------------------------------------------------------------------------

def ball_ids(w: Window, radius: Fraction) -> np.ndarray:
    """Vertices within the given distance of the origin (exact borderline)."""
    pts = w.graph.float_positions()
    r = float(radius)
    d2 = (pts ** 2).sum(axis=1)
    sure = d2 < r * r - 1e-9
    border = np.abs(d2 - r * r) <= 1e-9
    out = [int(v) for v in np.nonzero(sure)[0]]
    r2 = qs(radius) * qs(radius)
    for v in np.nonzero(border)[0]:
        if (w.graph.position(int(v)).norm2() - r2).sign() <= 0:
            out.append(int(v))
    return np.array(sorted(out), dtype=np.int64)


def _minus_count_hits_zero(w: Window, sigma0: SpinConfiguration, log: EventLog,
                           ball: np.ndarray, t_start: float, t_end: float) -> bool:
    """True iff the ball is all +1 at t_start or becomes all +1 at an event
    in (t_start, t_end)."""
    ball_set = set(int(v) for v in ball)
    sig = spins_at(w, sigma0, log, t_start)
    spins = {int(v): int(sig.spins[v]) for v in ball}
    count = sum(1 for v in ball if sig.spins[v] == -1)
    if count == 0:
        return True
    a = int(np.searchsorted(log.times, t_start, side="right"))
    b = int(np.searchsorted(log.times, t_end, side="left"))
    for i in range(a, b):
        if not log.flipped[i]:
            continue
        v = int(log.vertices[i])
        if v not in ball_set:
            continue
        spins[v] = -spins[v]
        count += 1 if spins[v] == -1 else -1
        if count == 0:
            return True
    return False


def detect_full_ball(w: Window, sigma0: SpinConfiguration, log: EventLog,
                     L, t: float) -> bool:
    """The event that every vertex within L/3 of the origin is +1 at some
    time in (t, t+1); decided exactly from the event times."""
    ball = ball_ids(w, Fraction(L, 3))
    if len(ball) == 0:
        raise GraphError("no vertices inside the ball; L too small")
    return _minus_count_hits_zero(w, sigma0, log, ball, t, t + 1.0)


def detect_D_event(w: Window, sigma0: SpinConfiguration, log: EventLog,
                   L, t1: float, t2: float) -> bool:
    """Union of the full-ball events over start times in [t1, t2-1]; equals
    "the ball is all +1 at some time in (t1, t2)"."""
    if not t2 > t1 + 1:
        raise GraphError("need t2 > t1 + 1")
    ball = ball_ids(w, Fraction(L, 3))
    if len(ball) == 0:
        raise GraphError("no vertices inside the ball; L too small")
    return _minus_count_hits_zero(w, sigma0, log, ball, t1, t2)


class FullBallTracker:
    """Event-incremental listener: maintains the count of -1 spins in the
    ball and records every time the ball becomes (or starts) all +1."""

    def __init__(self, w: Window, sigma0: SpinConfiguration, L):
        self.ball = set(int(v) for v in ball_ids(w, Fraction(L, 3)))
        self.count = sum(1 for v in self.ball if sigma0.spins[v] == -1)
        self.all_plus_times: list[float] = [] if self.count else [0.0]

    def __call__(self, rec, spins) -> None:
        if rec.flipped and rec.vertex in self.ball:
            self.count += 1 if spins[rec.vertex] == -1 else -1
            if self.count == 0:
                self.all_plus_times.append(rec.time)


# ---------------------------------------------------------------------------
# fixation
# ---------------------------------------------------------------------------

@dataclass
class FixationTally:
    """Fractions of interior class vertices whose spin is constant (+1 and
    -1 separately) on [0, t], per sample time; averaged over replicas."""
    times: np.ndarray
    class_ids: list
    class_sizes: np.ndarray          # interior vertices per class
    per_replica: np.ndarray          # (replicas, times, classes, 2)
    fractions: np.ndarray            # (times, classes, 2) replica mean

    def sigma_mc(self) -> np.ndarray:
        """Monte Carlo standard error of the mean, same shape as fractions."""
        r = self.per_replica.shape[0]
        return self.per_replica.std(axis=0, ddof=1) / np.sqrt(r)


def fixation_fractions(w: Window, runs: Sequence[tuple[SpinConfiguration, EventLog]],
                       classes: Optional[np.ndarray], times: Sequence[float],
                       margin: Optional[float] = None) -> FixationTally:
    """Empirical constant-spin fractions per class, interior vertices only.

    classes defaults to a single class covering the window.  The default
    interior margin is ceil(2*sqrt(horizon)) on windows with a rim and 0 on
    periodic windows.
    """
    times = np.asarray(sorted(times), dtype=float)
    horizon = float(times[-1])
    if margin is None:
        margin = default_interior_margin(w, horizon)
    interior = w.interior_ids(margin)
    if classes is None:
        classes = np.ones(w.n, dtype=np.int64)
    class_ids = sorted(set(int(classes[v]) for v in interior))
    kept = []
    for c in class_ids:
        size = int((classes[interior] == c).sum())
        if size == 0:
            warnings.warn(f"class {c} has no interior vertices; omitted")
        else:
            kept.append(c)
    class_ids = kept
    sizes = np.array([(classes[interior] == c).sum() for c in class_ids])

    per = np.empty((len(runs), len(times), len(class_ids), 2))
    for r, (sigma0, log) in enumerate(runs):
        fft = first_flip_times(log, w.n)
        for ti, t in enumerate(times):
            const = fft[interior] > t
            for ci, c in enumerate(class_ids):
                mask = classes[interior] == c
                plus = const & (sigma0.spins[interior] == 1) & mask
                minus = const & (sigma0.spins[interior] == -1) & mask
                per[r, ti, ci, 0] = plus.sum() / sizes[ci]
                per[r, ti, ci, 1] = minus.sum() / sizes[ci]
    return FixationTally(times, class_ids, sizes, per, per.mean(axis=0))


def default_interior_margin(w: Window, horizon: float) -> float:
    if len(w.rim_ids()) == 0:
        return 0.0
    return float(np.ceil(2.0 * np.sqrt(max(horizon, 0.0))))


# ---------------------------------------------------------------------------
# crossing probability floor
# ---------------------------------------------------------------------------

def estimate_p_cross_bound(a: int, q: int, u_size: int) -> Fraction:
    """Closed-form uniform-in-L floor (aq)^(-a) * (1/2)^(a*|U|) for the
    probability that crossings recur; reported next to empirical crossing
    frequencies as a sanity floor, never a tightness claim."""
    if a not in (3, 4):
        raise GraphError("the bound is defined for rotation orders 3 and 4")
    if q < 24:
        raise GraphError("q must be at least 24")
    if u_size < 1:
        raise GraphError("the central set is non-empty by construction")
    return Fraction(1, (a * q) ** a) * Fraction(1, 2 ** (a * u_size))

"""Crossing geometry: central set, rotation-invariant regions and annuli,
boundary ball covers, and exact convex-hull containment tests.

The region of size L is an equilateral triangle (rotation order 3) or a
square (order 4) with inradius exactly L, centred at the rotation center.
Everything here is exact: regions, covers and annuli are invariant under the
defining rotation with zero tolerance.
"""
from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .exact import (QSqrt3, Rotation, Vec2, convex_hull, point_in_convex_hull,
                    hull_min_edge_distance_at_least, qs, vec)
from .plane_graph import GraphError, PlaneGraph, Window
from . import symmetry as _symmetry


def _rat(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**9)
    raise GraphError(f"expected a rational size, got {type(x).__name__}")


def build_region(a: int, L) -> list[Vec2]:
    """Corner list of the size-L region: P1 = (L*tan(pi/a), L) and its
    rotations.  Rejected for a = 2, where the region degenerates to a segment
    and contains no ball."""
    if a == 2:
        raise GraphError("region for rotation order 2 degenerates to a "
                         "segment; no ball fits inside it")
    if a not in (3, 4):
        raise GraphError("regions are built for rotation orders 3 and 4")
    L = _rat(x=L)
    if L <= 0:
        raise GraphError("region size L must be > 0")
    # tan(theta(a)/2): a=4 -> tan(pi/4) = 1; a=3 -> tan(pi/3) = sqrt(3)
    p1 = vec(qs(L), qs(L)) if a == 4 else vec(qs(0, L), qs(L))
    rot = Rotation(a)
    corners = [p1]
    for _ in range(a - 1):
        corners.append(rot(corners[-1]))
    return corners


def region_contains(corners: Sequence[Vec2], p: Vec2) -> bool:
    """Closed membership, decided exactly."""
    return point_in_convex_hull(list(corners), p)


def region_vertex_ids(g: PlaneGraph, corners: Sequence[Vec2]) -> np.ndarray:
    """All vertex ids inside or on the region (float prefilter, exact on the
    borderline)."""
    pts = g.float_positions()
    eqs = _float_edges(corners)
    d = (pts @ eqs[:, :2].T + eqs[:, 2]).min(axis=1)
    inside = d > 1e-9
    border = np.abs(d) <= 1e-9
    out = [int(v) for v in np.nonzero(inside)[0]]
    for v in np.nonzero(border)[0]:
        if region_contains(corners, g.position(int(v))):
            out.append(int(v))
    return np.array(sorted(out), dtype=np.int64)


def _float_edges(corners: Sequence[Vec2]) -> np.ndarray:
    """Inward edge equations a*x + b*y + c >= 0 (unit normals) as floats."""
    n = len(corners)
    eqs = np.empty((n, 3))
    for i in range(n):
        x1, y1 = corners[i].to_float()
        x2, y2 = corners[(i + 1) % n].to_float()
        a, b = y1 - y2, x2 - x1  # inward for ccw corners
        norm = math.hypot(a, b)
        eqs[i] = (a / norm, b / norm, -(a * x1 + b * y1) / norm)
    return eqs


# ---------------------------------------------------------------------------
# central set U
# ---------------------------------------------------------------------------

def build_U(w: Union[Window, PlaneGraph], a: int) -> set[int]:
    """The rotation-invariant connected core: the origin vertex when the
    origin is occupied, otherwise the union of the rotated copies of a
    shortest path from the nearest vertex to its rotation image."""
    g = w.graph if isinstance(w, Window) else w
    rot = Rotation(a)
    origin_id = g.id_at(vec(0, 0))
    if origin_id is not None:
        return {origin_id}
    vtilde = _nearest_vertex(g, vec(0, 0))
    target = g.id_at(tuple_to_vec(rot(g.position(vtilde))))
    if target is None:
        raise GraphError("rotation image of the nearest vertex is missing; "
                         "check the rotation order or enlarge the window")
    path = _shortest_path(g, vtilde, target)
    U: set[int] = set()
    for k in range(a):
        r = Rotation(a, k)
        for p in path:
            q = r(g.position(p))
            u = g.id_at(q)
            if u is None:
                raise GraphError("rotated path leaves the window")
            U.add(u)
    if not _connected(g, U):
        raise GraphError("central set is not connected")
    if {g.id_at(rot(g.position(u))) for u in U} != U:
        raise GraphError("central set is not rotation invariant")
    return U


def tuple_to_vec(p: Vec2) -> Vec2:
    return p


def _nearest_vertex(g: PlaneGraph, origin: Vec2) -> int:
    best = None
    best_key = None
    for v in range(g.n):
        p = g.position(v)
        key = _Lex3((p - origin).norm2(), p.y, p.x)
        if best_key is None or key < best_key:
            best, best_key = v, key
    return best


class _Lex3:
    __slots__ = ("a", "b", "c")

    def __init__(self, a, b, c):
        self.a, self.b, self.c = a, b, c

    def __lt__(self, other):
        if self.a != other.a:
            return self.a < other.a
        if self.b != other.b:
            return self.b < other.b
        return self.c < other.c


def _shortest_path(g: PlaneGraph, src: int, dst: int) -> list[int]:
    """BFS shortest path with deterministic (sorted-adjacency) tie-breaks."""
    prev = {src: src}
    dq = deque([src])
    while dq:
        u = dq.popleft()
        if u == dst:
            break
        for x in g.adjacency[u]:
            if x not in prev:
                prev[x] = u
                dq.append(x)
    if dst not in prev:
        raise GraphError("no path between the nearest vertex and its image")
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path[::-1]


def _connected(g: PlaneGraph, S: set[int]) -> bool:
    if not S:
        return False
    it = iter(S)
    start = next(it)
    seen = {start}
    dq = deque([start])
    while dq:
        u = dq.popleft()
        for x in g.adjacency[u]:
            if x in S and x not in seen:
                seen.add(x)
                dq.append(x)
    return seen == S


# ---------------------------------------------------------------------------
# rotation-invariant annulus
# ---------------------------------------------------------------------------

@dataclass
class Annulus:
    ids: frozenset
    r1: Fraction
    v0: int
    U0: frozenset
    chain_length: int


def build_annulus(w: Union[Window, PlaneGraph], a: int, L) -> Annulus:
    """Connected rotation-invariant vertex ring W inside
    T(L+2*r1) minus T(L-2*r1): a ball-of-vertices around the topmost class
    representative in T(L), swept along the translation vector and rotated.

    Raises, with the smallest workable L when detectable, if the window or L
    are too small for the construction."""
    g = w.graph if isinstance(w, Window) else w
    if g.declared_symmetry is None or not g.declared_symmetry.translations:
        raise GraphError("annulus construction needs declared translations")
    L = _rat(L)
    report = _symmetry.classify(g)
    if not any(report.translation_ok):
        raise GraphError("no verified translation")
    xbar = [t for t, ok in zip(report.translations, report.translation_ok) if ok][0]
    labels = report.classes
    v1_label = int(labels[_nearest_vertex(g, vec(0, 0))])

    region = build_region(a, L)
    cand = [v for v in region_vertex_ids(g, region) if labels[v] == v1_label]
    if not cand:
        raise GraphError(f"no class vertex inside the size-{L} region; "
                         "increase L")
    v0 = max(cand, key=lambda v: _Lex2(g.position(v).y, -g.position(v).x))

    r0sq = max(qs(4), xbar.norm2())
    ball = {v for v in range(g.n)
            if ((g.position(v) - g.position(v0)).norm2() - r0sq).sign() <= 0
            and labels[v] == v1_label}
    ball.add(v0)
    nxt = g.id_at(g.position(v0) + xbar)
    if nxt is None:
        raise GraphError("window too small: translation image of v0 missing")
    ball.add(nxt)
    U0 = _connect_within(g, ball, g.position(v0), 4 * r0sq)

    maxn2 = max((g.position(u) - g.position(v0)).norm2() for u in U0)
    r1 = Fraction(2)
    while (qs(r1) * qs(r1) - maxn2).sign() < 0:
        r1 += Fraction(1, 4)

    inner = build_region(a, L - 2 * r1) if L - 2 * r1 > 0 else None
    if inner is None:
        raise GraphError(f"L = {L} too small: need L > 2*r1 = {2 * r1}")
    outer = build_region(a, L + 2 * r1)

    chain: set[int] = set()
    k = 0
    while True:
        vk = g.id_at(g.position(v0) + k * xbar)
        if k > 0 and (vk is None or not region_contains(region, g.position(vk))):
            break
        if vk is None:
            raise GraphError("window too small for the chain")
        for u in U0:
            t = g.id_at(g.position(u) + k * xbar)
            if t is None:
                raise GraphError("window too small: chain block leaves it")
            chain.add(t)
        k += 1
    W: set[int] = set()
    idx = g.position_index()
    for i in range(a):
        r = Rotation(a, i)
        for u in chain:
            q = r(g.position(u))
            t = idx.get((q.x, q.y))
            if t is None:
                raise GraphError("window too small: rotated chain leaves it")
            W.add(t)

    if not _connected(g, W):
        raise GraphError(f"annulus is not connected at L = {L}; "
                         "use a larger L (the rotated chains must meet)")
    rot = Rotation(a)
    if {idx.get(tuple(rot(g.position(u)))) for u in W} != W:
        raise GraphError("annulus is not rotation invariant")
    for u in W:
        p = g.position(u)
        if not region_contains(outer, p):
            raise GraphError(f"annulus vertex {u} escapes the outer region")
        if region_contains(inner, p):
            raise GraphError(f"annulus vertex {u} enters the inner region; "
                             f"need L with margin above 2*r1 = {2 * r1}")
    return Annulus(frozenset(W), r1, int(v0), frozenset(U0), k)


class _Lex2:
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a, self.b = a, b

    def __lt__(self, other):
        if self.a != other.a:
            return self.a < other.a
        return self.b < other.b


def _connect_within(g: PlaneGraph, S: set[int], center: Vec2,
                    radius_sq: QSqrt3) -> set[int]:
    """Close S under shortest connecting paths through vertices within the
    given ball until connected."""
    allowed = {v for v in range(g.n)
               if ((g.position(v) - center).norm2() - radius_sq).sign() <= 0}
    S = set(S)
    while True:
        comps = _components(g, S)
        if len(comps) <= 1:
            return S
        base = comps[0]
        others = set().union(*comps[1:])
        prev = {v: v for v in base}
        dq = deque(sorted(base))
        hit = None
        while dq:
            u = dq.popleft()
            if u in others:
                hit = u
                break
            for x in g.adjacency[u]:
                if x in allowed and x not in prev:
                    prev[x] = u
                    dq.append(x)
        if hit is None:
            raise GraphError("cannot connect the central block inside its ball")
        cur = hit
        while True:
            S.add(cur)
            if prev[cur] == cur:
                break
            cur = prev[cur]


def _components(g: PlaneGraph, S: set[int]) -> list[set[int]]:
    left = set(S)
    out = []
    while left:
        start = min(left)
        comp = {start}
        dq = deque([start])
        while dq:
            u = dq.popleft()
            for x in g.adjacency[u]:
                if x in left and x not in comp:
                    comp.add(x)
                    dq.append(x)
        out.append(comp)
        left -= comp
    return out


# ---------------------------------------------------------------------------
# boundary ball cover
# ---------------------------------------------------------------------------

def build_cover(a: int, q: int) -> list[Vec2]:
    """a*q ball centers, equally spaced by arc length along the boundary of
    the size-1 region, starting at its first corner.

    centers[k*q + j] is the j-th center of rotational sector k, so the center
    with index i + k*q is exactly the k-fold rotation of center i; the balls
    have radius 4/q.  One sector spans exactly one side, so the per-sector
    centers are affine in rational parameters and everything stays exact."""
    if a not in (3, 4):
        raise GraphError("covers are built for rotation orders 3 and 4")
    if q < 24:
        raise GraphError("q must be at least 24 (so 1/2 - 4/q >= 1/3)")
    corners = build_region(a, 1)
    p1, p2 = corners[0], corners[1]
    sector = [p1 + Fraction(j, q) * (p2 - p1) for j in range(q)]
    out = list(sector)
    for k in range(1, a):
        r = Rotation(a, k)
        out.extend(r(c) for c in sector)
    return out


def cover_radius(q: int) -> Fraction:
    return Fraction(4, q)


def coverage_delta(q: int) -> Fraction:
    """Annulus half-width used in coverage tests: just under 1/(2q)."""
    return Fraction(1, 2 * q) - Fraction(1, 100 * q)


def check_cover_samples(a: int, q: int, n_samples: int = 10_000,
                        seed: int = 0) -> bool:
    """Sampling check that the balls cover the thin annulus around the
    region boundary."""
    centers = np.array([c.to_float() for c in build_cover(a, q)])
    corners = build_region(a, 1)
    pts_f = [c.to_float() for c in corners]
    rng = random.Random(seed)
    delta = float(coverage_delta(q))
    r = float(cover_radius(q))
    n_sides = len(pts_f)
    for _ in range(n_samples):
        i = rng.randrange(n_sides)
        t = rng.random()
        x1, y1 = pts_f[i]
        x2, y2 = pts_f[(i + 1) % n_sides]
        bx, by = x1 + t * (x2 - x1), y1 + t * (y2 - y1)
        s = 1.0 - delta + 2 * delta * rng.random()
        px, py = s * bx, s * by
        d2 = ((centers[:, 0] - px) ** 2 + (centers[:, 1] - py) ** 2).min()
        if d2 > r * r:
            return False
    return True


# ---------------------------------------------------------------------------
# exact hull-contains-ball and graph convex hull
# ---------------------------------------------------------------------------

def _as_vec(p) -> Vec2:
    if isinstance(p, Vec2):
        return p
    x, y = p
    return vec(Fraction(float(x)) if isinstance(x, float) else Fraction(x),
               Fraction(float(y)) if isinstance(y, float) else Fraction(y))


def hull_contains_ball(points: Iterable, radius) -> bool:
    """Exact decision whether the convex hull of the points contains the
    closed disk of the given radius about the origin.

    Float inputs are taken at face value (binary floats are rationals); the
    decision is then exact for those rationals.  Collinear or degenerate
    hulls contain no ball of positive radius."""
    pts = [_as_vec(p) for p in points]
    if len(pts) < 1:
        return False
    radius = _rat(radius) if not isinstance(radius, QSqrt3) else radius
    hull = convex_hull(pts)
    origin = vec(0, 0)
    if len(hull) < 3:
        if isinstance(radius, Fraction) and radius <= 0:
            return point_in_convex_hull(hull, origin)
        return False
    if not point_in_convex_hull(hull, origin):
        return False
    return hull_min_edge_distance_at_least(hull, origin, radius)


def conv_G(w: Union[Window, PlaneGraph], S: Iterable[int]) -> set[int]:
    """All window vertices inside or on the convex hull of S's positions
    (float prefilter; exact decisions on the borderline)."""
    g = w.graph if isinstance(w, Window) else w
    S = list(S)
    if not S:
        return set()
    hull = convex_hull([g.position(v) for v in S])
    if len(hull) == 1:
        t = g.id_at(hull[0])
        return {t} if t is not None else set()
    pts = g.float_positions()
    if len(hull) == 2:
        out = set()
        for v in range(g.n):
            if point_in_convex_hull(hull, g.position(v)):
                out.add(v)
        return out
    eqs = _float_edges(hull)
    d = (pts @ eqs[:, :2].T + eqs[:, 2]).min(axis=1)
    out = set(int(v) for v in np.nonzero(d > 1e-9)[0])
    for v in np.nonzero(np.abs(d) <= 1e-9)[0]:
        if point_in_convex_hull(hull, g.position(int(v))):
            out.add(int(v))
    return out


# ---------------------------------------------------------------------------
# assembled crossing geometry
# ---------------------------------------------------------------------------

@dataclass
class CrossingGeometry:
    a: int
    L: Fraction
    q: int
    r1: Fraction
    region: list            # corners of T(L)
    region_inner: list      # corners of T(L - 2 r1)
    region_outer: list      # corners of T(L + 2 r1)
    U: frozenset
    W: frozenset
    annulus: Annulus
    cover: list             # aq centers on the boundary of T(1)

    def scaled_center(self, i: int) -> Vec2:
        return self.cover[i] * qs(self.L)

    def ball_radius(self) -> Fraction:
        return 4 * self.L / self.q

    def to_jsonable(self) -> dict:
        return {
            "a": self.a, "L": str(self.L), "q": self.q, "r1": str(self.r1),
            "region": [p.to_float() for p in self.region],
            "region_inner": [p.to_float() for p in self.region_inner],
            "region_outer": [p.to_float() for p in self.region_outer],
            "U": sorted(self.U),
            "W": sorted(self.W),
            "cover": [c.to_float() for c in self.cover],
        }


def build_crossing_geometry(w: Union[Window, PlaneGraph], a: int, L,
                            q: int = 24) -> CrossingGeometry:
    """Build the full crossing apparatus and check its preconditions: the
    inner region must contain the central set."""
    L = _rat(L)
    U = build_U(w, a)
    ann = build_annulus(w, a, L)
    inner = build_region(a, L - 2 * ann.r1)
    outer = build_region(a, L + 2 * ann.r1)
    g = w.graph if isinstance(w, Window) else w
    for u in U:
        if not region_contains(inner, g.position(u)):
            raise GraphError(f"L = {L} too small: central set leaves the "
                             "inner region")
    cover = build_cover(a, q)
    return CrossingGeometry(a, L, q, ann.r1, build_region(a, L), inner, outer,
                            frozenset(U), ann.ids, ann, cover)

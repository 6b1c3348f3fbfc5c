"""Shrink-property deciders and frozen-set search.

A finite vertex set S violates the shrink condition when every u in S has
more neighbours inside S than outside; such a set, once all +1, can never
flip and freezes the dynamics locally.  The planar variant slices S with a
line and demands a qualifying vertex on every finite closed half-plane piece.

Degrees are always taken in the untruncated lattice, so every checked set
must stay off the window rim.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .exact import QSqrt3, Vec2, qs, vec
from .plane_graph import (Arrangement, Boundary, GraphError, Line, PlaneGraph,
                          Window)


def _as_window(g: Union[Window, PlaneGraph]) -> Window:
    if isinstance(g, Window):
        return g
    return Window(g, Boundary.free())


@dataclass(frozen=True)
class ShrinkSetResult:
    qualifier: Optional[int]             # some u with deg_out >= deg_in
    violation: bool
    degrees: dict                        # u -> (deg_S, deg_V_minus_S)


@dataclass(frozen=True)
class PlanarShrinkResult:
    line: Line
    side_qualifiers: tuple               # per non-empty side, qualifying u or None
    side_sets: tuple                     # the two S_i (closed half-planes)
    violation: bool


@dataclass
class SearchStats:
    subsets_examined: int = 0
    max_size: int = 0
    anchors: int = 0
    mode: str = "anchored"
    notes: list = field(default_factory=list)


@dataclass
class ShrinkReport:
    property: str                        # "shrink" | "planar_shrink"
    verdict: str                         # "holds_on_window" | "violated" | "inconclusive(budget)"
    witness: Optional[dict]
    search_stats: SearchStats

    def to_jsonable(self) -> dict:
        return {
            "property": self.property,
            "verdict": self.verdict,
            "witness": self.witness,
            "search_stats": {
                "subsets_examined": self.search_stats.subsets_examined,
                "max_size": self.search_stats.max_size,
                "anchors": self.search_stats.anchors,
                "mode": self.search_stats.mode,
                "notes": self.search_stats.notes,
            },
        }


def _require_off_rim(w: Window, S: Iterable[int]) -> set[int]:
    S = set(S)
    if not S:
        raise GraphError("S must be non-empty")
    rim = set(int(v) for v in w.rim_ids())
    touching = S & rim
    if touching:
        raise GraphError(
            f"S touches the window rim at {sorted(touching)[:4]}; degrees "
            "there are truncated, enlarge the window")
    return S


def check_shrink_set(g: Union[Window, PlaneGraph], S: Iterable[int]) -> ShrinkSetResult:
    """Find u in S with at least as many neighbours outside S as inside,
    or declare S a violation witness."""
    w = _as_window(g)
    S = _require_off_rim(w, S)
    degrees = {}
    qualifier = None
    for u in sorted(S):
        nbrs = w.neighbors(u)
        din = sum(1 for x in nbrs if x in S)
        dout = len(nbrs) - din
        degrees[u] = (din, dout)
        if qualifier is None and dout >= din:
            qualifier = u
    return ShrinkSetResult(qualifier, qualifier is None, degrees)


def check_planar_shrink_set(g: Union[Window, PlaneGraph], S: Iterable[int],
                            line: Line) -> PlanarShrinkResult:
    """Split S by the line into two closed half-plane pieces (a vertex on the
    line belongs to both) and demand, on every non-empty piece, a vertex whose
    degree outside the FULL set S is at least its degree inside S."""
    w = _as_window(g)
    S = _require_off_rim(w, S)
    side1, side2 = [], []
    for u in sorted(S):
        s = line.side(w.graph.position(u))
        if s >= 0:
            side1.append(u)
        if s <= 0:
            side2.append(u)
    deg = {}
    for u in S:
        nbrs = w.neighbors(u)
        din = sum(1 for x in nbrs if x in S)
        deg[u] = (din, len(nbrs) - din)
    quals = []
    violated = False
    for side in (side1, side2):
        if not side:
            quals.append(None)
            continue
        q = next((u for u in side if deg[u][1] >= deg[u][0]), None)
        quals.append(q)
        if q is None:
            violated = True
    return PlanarShrinkResult(line, tuple(quals), (tuple(side1), tuple(side2)),
                              violated)


# ---------------------------------------------------------------------------
# exhaustive frozen-set search
# ---------------------------------------------------------------------------

def _translation_anchors(w: Window, max_size: int) -> list[int]:
    """One representative per translation-residue class, chosen nearest the
    window centre.  Vertex ids are (y, x)-sorted by the builders, so a set
    whose minimum id sits on a representative stands for all its translates."""
    g = w.graph
    decl = g.declared_symmetry
    if decl is None or not decl.translations:
        raise GraphError("anchored search needs declared translations")
    ts = list(decl.translations)
    t1 = ts[0]
    t2 = next((t for t in ts[1:] if t1.cross(t).sign() != 0), None)
    pts = g.float_positions()
    center = pts.mean(axis=0)
    d2 = ((pts - center) ** 2).sum(axis=1)
    best: dict[tuple, int] = {}
    for v in np.argsort(d2):
        v = int(v)
        p = g.position(v)
        if t2 is not None:
            det = t1.cross(t2)
            a = p.cross(t2) / det
            b = t1.cross(p) / det
            key = (a - qs(a.floor()), b - qs(b.floor()))
        else:
            a = (p.x * t1.x + p.y * t1.y) / t1.norm2()
            frac = a - qs(a.floor())
            ortho = p - frac * t1 - qs(a.floor()) * t1
            key = (frac, ortho.x, ortho.y)
        if key not in best:
            best[key] = v
    return sorted(best.values())


def search_frozen_set(g: Union[Window, PlaneGraph], max_size: int,
                      budget: Optional[int] = None,
                      mode: str = "anchored") -> ShrinkReport:
    """Enumerate connected vertex sets up to max_size and report the first
    shrink violation, or holds_on_window.

    mode="anchored" enumerates only sets whose (y, x)-minimal vertex is a
    translation-class representative; by translation invariance this covers
    every windowed shape.  mode="full" enumerates from every off-rim vertex.
    Only connected sets are enumerated in either mode; a violating set need
    not have violating connected components, so this search finds witnesses
    but a holds_on_window verdict is relative to that restriction (recorded
    in the stats).
    """
    if max_size < 1:
        raise GraphError("max_size must be >= 1")
    w = _as_window(g)
    stats = SearchStats(mode=mode, max_size=max_size)
    stats.notes.append("search restricted to connected sets")
    rim_dist = w.rim_distance()
    allowed = rim_dist >= 1

    if mode == "anchored":
        anchors = _translation_anchors(w, max_size)
        for r in anchors:
            if rim_dist[r] < max_size + 1:
                raise GraphError(
                    f"window too small for anchored search at max_size "
                    f"{max_size}: anchor {r} is {rim_dist[r]} from the rim")
        stats.notes.append("sets anchored at translation-class representatives; "
                           "covers all window shapes up to translation")
    elif mode == "full":
        anchors = [int(v) for v in np.nonzero(allowed)[0]]
    else:
        raise GraphError(f"unknown search mode {mode!r}")
    stats.anchors = len(anchors)

    adjacency = [w.neighbors(v) for v in range(w.n)]
    deg = np.array([len(a) for a in adjacency])

    budget_left = [budget if budget is not None else -1]

    def violation_degrees(S: set[int]) -> Optional[dict]:
        # violation iff every u has deg_S(u) > deg_out(u)
        degrees = {}
        for u in S:
            din = sum(1 for x in adjacency[u] if x in S)
            dout = int(deg[u]) - din
            if dout >= din:
                return None
            degrees[u] = (din, dout)
        return degrees

    # exclusive-neighbourhood enumeration: each connected set whose minimal
    # id equals the root is visited exactly once
    def extend(S: set[int], ext: list[int], nbhd: set[int], root: int):
        stats.subsets_examined += 1
        if budget_left[0] == 0:
            return "budget"
        if budget_left[0] > 0:
            budget_left[0] -= 1
        degrees = violation_degrees(S)
        if degrees is not None:
            return {"set": sorted(S), "degrees": degrees}
        if len(S) == max_size:
            return None
        while ext:
            u = ext.pop()
            new = [x for x in adjacency[u]
                   if x > root and allowed[x] and x not in nbhd]
            S.add(u)
            nbhd.update(new)
            res = extend(S, ext + new, nbhd, root)
            nbhd.difference_update(new)
            S.discard(u)
            if res is not None:
                return res
        return None

    for root in anchors:
        if not allowed[root]:
            continue
        ext = [x for x in adjacency[root] if allowed[x] and x > root]
        res = extend({root}, list(ext), {root, *ext}, root)
        if res == "budget":
            return ShrinkReport("shrink", "inconclusive(budget)", None, stats)
        if res is not None:
            return ShrinkReport("shrink", "violated", res, stats)
    return ShrinkReport("shrink", "holds_on_window", None, stats)


# ---------------------------------------------------------------------------
# class built from full line arrangements
# ---------------------------------------------------------------------------

def derive_arrangement(g: PlaneGraph) -> Arrangement:
    """Recover supporting-line metadata from the embedding: group edges by
    their (canonicalized) supporting line and sort each line's vertices."""
    if not g.edges:
        raise GraphError("graph has no edges; no supporting lines to derive")
    line_key_to_idx: dict[tuple, int] = {}
    lines: list[Line] = []
    members: list[set[int]] = []
    edge_line: dict[tuple[int, int], int] = {}
    for (i, j) in sorted(g.edges):
        pa, pb = g.position(i), g.position(j)
        d = pb - pa
        n = Vec2(-d.y, d.x)
        c = n.dot(pa)
        if n.x.sign() != 0:
            key_n = (qs(1), n.y / n.x)
            key_c = c / n.x
        else:
            key_n = (qs(0), qs(1))
            key_c = c / n.y
        key = (key_n[0], key_n[1], key_c)
        idx = line_key_to_idx.get(key)
        if idx is None:
            idx = len(lines)
            line_key_to_idx[key] = idx
            lines.append(Line(Vec2(key_n[0], key_n[1]), key_c))
            members.append(set())
        members[idx].update((i, j))
        edge_line[(i, j)] = idx
    line_vertices = []
    for idx, mem in enumerate(members):
        d = lines[idx].direction()
        ordered = sorted(mem, key=lambda t: _QKey(d.dot(g.position(t))))
        line_vertices.append(ordered)
    return Arrangement(lines, line_vertices, edge_line)


class _QKey:
    __slots__ = ("t",)

    def __init__(self, t: QSqrt3):
        self.t = t

    def __lt__(self, other):
        return self.t < other.t


def _line_neighbors(arr: Arrangement, line_idx: int, u: int) -> tuple[Optional[int], Optional[int]]:
    ids = arr.line_vertices[line_idx]
    k = ids.index(u)
    prev_id = ids[k - 1] if k > 0 else None
    next_id = ids[k + 1] if k + 1 < len(ids) else None
    return prev_id, next_id


@dataclass
class ClassHReport:
    certified: bool
    even_degree_ok: bool
    line_coverage_ok: bool
    witness: Optional[dict]
    samples_checked: int = 0
    sample_failures: int = 0
    notes: list = field(default_factory=list)


def certify_class_H(g: Union[Window, PlaneGraph], samples: int = 200,
                    seed: int = 0) -> ClassHReport:
    """Verify the full-line-arrangement properties on the window interior and
    spot-check the constructive planar-shrink witness on random (S, line)
    pairs.

    Checks, for every off-rim vertex: even degree, and for every supporting
    line through it an incident collinear edge on BOTH sides (full lines leave
    no gaps).  Then, for sampled sets and lines, walks each inside-neighbour
    of the extremal vertex along its line to a distinct outside-neighbour and
    confirms the planar-shrink inequality that walk implies.
    """
    w = _as_window(g)
    graph = w.graph
    arr = graph.arrangement if graph.arrangement is not None else derive_arrangement(graph)
    rim_dist = w.rim_distance()
    notes = []

    even_ok = True
    coverage_ok = True
    witness = None
    incident: list[dict[int, list[int]]] = [dict() for _ in range(graph.n)]
    for e, li in arr.edge_line.items():
        for u in e:
            incident[u].setdefault(li, []).append(e[0] if e[1] == u else e[1])
    for v in range(graph.n):
        if rim_dist[v] < 1:
            continue
        pv = graph.position(v)
        for li, nbrs in incident[v].items():
            d = arr.lines[li].direction()
            signs = {(graph.position(u) - pv).dot(d).sign() for u in nbrs}
            if signs != {-1, 1}:
                coverage_ok = False
                witness = {"kind": "line_gap", "vertex": v, "line": li}
                break
        if witness is None and graph.degree(v) % 2 != 0:
            even_ok = False
            witness = {"kind": "odd_degree", "vertex": v, "degree": graph.degree(v)}
        if witness is not None:
            break

    report = ClassHReport(even_ok and coverage_ok, even_ok, coverage_ok, witness,
                          notes=notes)
    if not report.certified:
        return report

    rng = random.Random(seed)
    pool = [int(v) for v in np.nonzero(rim_dist >= 1)[0]]
    failures = 0
    for _ in range(samples):
        S = random_connected_set(w, rng.randint(1, 8), rng, pool=pool)
        line = random_rational_line(rng)
        if not _theorem_witness_ok(w, arr, S, line):
            failures += 1
            report.witness = {"kind": "sample_failure", "set": sorted(S)}
        if check_planar_shrink_set(w, S, line).violation:
            failures += 1
            report.witness = {"kind": "planar_violation", "set": sorted(S)}
    report.samples_checked = samples
    report.sample_failures = failures
    report.certified = failures == 0
    return report


def _theorem_witness_ok(w: Window, arr: Arrangement, S: set[int],
                        line: Line) -> bool:
    """Constructive witness: on each finite side, the (height, along)-maximal
    vertex maps its inside-neighbours injectively to outside-neighbours along
    their supporting lines."""
    g = w.graph
    d = line.direction()
    n = line.normal
    for sign in (1, -1):
        side = [u for u in S if sign * (n.dot(g.position(u)) - line.offset).sign() >= 0]
        if not side:
            continue
        u = max(side, key=lambda t: _LexKey(sign * n.dot(g.position(t)),
                                            sign * d.dot(g.position(t))))
        mapped = set()
        ok = True
        for x in w.neighbors(u):
            if x not in S:
                continue
            e = (u, x) if u < x else (x, u)
            li = arr.edge_line.get(e)
            if li is None:
                return False
            prev_id, next_id = _line_neighbors(arr, li, u)
            if x == next_id:
                wprime = prev_id
            elif x == prev_id:
                wprime = next_id
            else:
                return False  # edge skips an on-line vertex: not a full line
            if wprime is None or wprime in S or wprime in mapped:
                ok = False
                break
            mapped.add(wprime)
        if not ok:
            return False
    return True


class _LexKey:
    __slots__ = ("a", "b")

    def __init__(self, a: QSqrt3, b: QSqrt3):
        self.a, self.b = a, b

    def __lt__(self, other):
        if self.a != other.a:
            return self.a < other.a
        return self.b < other.b


# ---------------------------------------------------------------------------
# random helpers shared with the test-suite
# ---------------------------------------------------------------------------

def random_connected_set(w: Window, size: int, rng: random.Random,
                         pool: Optional[Sequence[int]] = None) -> set[int]:
    """Random connected off-rim set grown by neighbour expansion."""
    if pool is None:
        pool = [int(v) for v in np.nonzero(w.rim_distance() >= 1)[0]]
    pool_set = set(pool)
    start = rng.choice(pool)
    S = {start}
    frontier = [x for x in w.neighbors(start) if x in pool_set]
    while len(S) < size and frontier:
        u = frontier.pop(rng.randrange(len(frontier)))
        if u in S:
            continue
        S.add(u)
        frontier.extend(x for x in w.neighbors(u) if x in pool_set and x not in S)
    return S


def random_rational_line(rng: random.Random) -> Line:
    """Line with small random rational coefficients (never degenerate)."""
    while True:
        a = rng.randint(-5, 5)
        b = rng.randint(-5, 5)
        if a or b:
            break
    c = Fraction(rng.randint(-48, 48), rng.randint(1, 6))
    return Line(vec(a, b), qs(c))

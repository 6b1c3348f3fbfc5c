"""Verification of translation and rotation invariance on finite windows.

The infinite-graph conditions (a translation vector that maps the graph to
itself; a rotation about a fixed center) are certified on a finite window by
checking every vertex of an interior region whose image, and the image's
whole neighbourhood, provably stay inside the window.  All position matching
is exact; the interior region itself is selected with floats plus a safety
margin, which can only shrink the region, never corrupt a verdict.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull

from .exact import (QSqrt3, Rotation, RotationOrderUnsupported, Vec2, qs, vec)
from .plane_graph import PlaneGraph, GraphError


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one symmetry check on a window interior."""
    ok: bool
    vertex_map_ok: bool    # every interior vertex has an image vertex
    edges_ok: bool         # neighbourhoods map exactly (edges both ways)
    checked: int           # interior vertices examined
    margin: float
    witness: Optional[dict] = None

    def __bool__(self):
        return self.ok


@dataclass
class SymmetryReport:
    margin: float
    translations: tuple[Vec2, ...]
    translation_ok: tuple[bool, ...]
    translation_checks: tuple[CheckResult, ...]
    rotation_order: Optional[int]
    rotation_center: Vec2
    rotation_checks: dict
    classes: np.ndarray
    class_count: int
    g_membership: frozenset
    minimal_translation_norm2: Optional[QSqrt3] = None
    notes: list = field(default_factory=list)

    def to_jsonable(self) -> dict:
        return {
            "margin": self.margin,
            "translations": [[str(t.x), str(t.y)] for t in self.translations],
            "translation_ok": list(self.translation_ok),
            "rotation_order": self.rotation_order,
            "rotation_center": [str(self.rotation_center.x), str(self.rotation_center.y)],
            "class_count": self.class_count,
            "classes": self.classes.tolist(),
            "g_membership": sorted(self.g_membership),
            "minimal_translation_norm2": (str(self.minimal_translation_norm2)
                                          if self.minimal_translation_norm2 is not None else None),
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------------------
# interior selection
# ---------------------------------------------------------------------------

_SAFETY = 1e-7


def _hull_edges(g: PlaneGraph) -> np.ndarray:
    """Convex hull of the vertex positions as (m, 3) inward line equations
    a*x + b*y + c >= 0 with (a, b) unit.  Cached on the graph."""
    cached = getattr(g, "_hull_eqs_cache", None)
    if cached is not None:
        return cached
    pts = g.float_positions()
    hull = ConvexHull(pts)
    eqs = -hull.equations  # qhull gives outward a*x + b*y + c <= 0
    g._hull_eqs_cache = eqs
    return eqs


def _max_edge_length(g: PlaneGraph) -> float:
    pts = g.float_positions()
    if not g.edges:
        return 0.0
    e = np.array(sorted(g.edges))
    d = pts[e[:, 0]] - pts[e[:, 1]]
    return float(np.hypot(d[:, 0], d[:, 1]).max())


def _eroded_interior(g: PlaneGraph, depth: float) -> np.ndarray:
    """Ids at distance >= depth (plus safety) from the hull boundary."""
    eqs = _hull_edges(g)
    pts = g.float_positions()
    dist = (pts @ eqs[:, :2].T + eqs[:, 2]).min(axis=1)
    return np.nonzero(dist >= depth + _SAFETY)[0]


def _disk_interior(g: PlaneGraph, center: Vec2, depth: float) -> tuple[np.ndarray, float]:
    """Ids inside the centred disk of radius inradius(center) - depth."""
    eqs = _hull_edges(g)
    c = np.array(center.to_float())
    inradius = float((eqs[:, :2] @ c + eqs[:, 2]).min())
    r = inradius - depth - _SAFETY
    pts = g.float_positions()
    d2 = ((pts - c) ** 2).sum(axis=1)
    return np.nonzero(d2 <= r * r)[0], inradius


def _neighbor_offsets(g: PlaneGraph, v: int) -> frozenset:
    p = g.position(v)
    return frozenset((g.position(u).x - p.x, g.position(u).y - p.y)
                     for u in g.adjacency[v])


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def check_translation(g: PlaneGraph, xbar: Vec2, margin: float) -> CheckResult:
    """Certify that translating by xbar maps interior vertices to vertices
    and preserves edges in both directions.

    margin must cover the translation length plus one edge length so that the
    image of an interior vertex keeps its full neighbourhood inside the
    window; smaller margins are rejected.
    """
    shift_len = float(xbar.norm2()) ** 0.5
    need = shift_len + _max_edge_length(g)
    if margin < need:
        raise GraphError(
            f"margin {margin} too small for translation check; need >= "
            f"|xbar| + max edge length = {need:.3f}")
    interior = _eroded_interior(g, margin)
    idx = g.position_index()
    vertex_ok = True
    edges_ok = True
    witness = None
    for v in interior:
        p = g.position(int(v))
        img = (p.x + xbar.x, p.y + xbar.y)
        u = idx.get(img)
        if u is None:
            vertex_ok = False
            witness = {"kind": "missing_image", "vertex": int(v),
                       "position": (str(p.x), str(p.y))}
            break
        if _neighbor_offsets(g, int(v)) != _neighbor_offsets(g, u):
            edges_ok = False
            witness = {"kind": "edge_mismatch", "vertex": int(v), "image": u}
            break
    ok = vertex_ok and edges_ok
    return CheckResult(ok, vertex_ok, edges_ok, len(interior), margin, witness)


def check_rotation(g: PlaneGraph, a: int, center: Vec2 = vec(0, 0),
                   margin: float = 2.0) -> CheckResult:
    """Certify invariance under rotation by 2*pi/a about center.

    Orders outside {1, 2, 3, 4, 6, 12} cannot be represented exactly in the
    coordinate field (and are impossible for discrete translation-invariant
    vertex sets); they raise RotationOrderUnsupported.
    """
    rot = Rotation(a, 1, center)  # raises RotationOrderUnsupported
    return _check_rotation_exact(g, rot, margin)


def _check_rotation_exact(g: PlaneGraph, rot: Rotation, margin: float) -> CheckResult:
    need = _max_edge_length(g)
    if margin < need:
        raise GraphError(
            f"margin {margin} too small for rotation check; need >= max edge "
            f"length = {need:.3f}")
    interior, _ = _disk_interior(g, rot.center, margin)
    idx = g.position_index()
    vertex_ok = True
    edges_ok = True
    witness = None
    for v in interior:
        p = g.position(int(v))
        q = rot(p)
        u = idx.get((q.x, q.y))
        if u is None:
            vertex_ok = False
            witness = {"kind": "missing_image", "vertex": int(v),
                       "position": (str(p.x), str(p.y))}
            break
        offs = _neighbor_offsets(g, int(v))
        rotated = frozenset(tuple(rot(Vec2(ox, oy) + p) - q) for ox, oy in offs)
        if rotated != _neighbor_offsets(g, u):
            edges_ok = False
            witness = {"kind": "edge_mismatch", "vertex": int(v), "image": u}
            break
    ok = vertex_ok and edges_ok
    return CheckResult(ok, vertex_ok, edges_ok, len(interior), margin, witness)


def check_rotation_about(g: PlaneGraph, a: int, k: int, center: Vec2,
                         margin: float) -> CheckResult:
    """Invariance under rotation by k*(2*pi/a) about an arbitrary center;
    used by the group-closure tests."""
    return _check_rotation_exact(g, Rotation(a, k, center), margin)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def classify(g: PlaneGraph, margin: float = 4.0) -> SymmetryReport:
    """Verify the declared symmetries, find the maximal rotation order among
    {6, 4, 3, 2}, and partition the window into orbit classes.

    The class count is the number of orbit labels meeting the closed
    fundamental parallelogram spanned by a verified translation and its
    rotation image; when no such parallelogram exists (rotation order 2 with
    a single translation direction) the count covers the whole interior and
    grows with the window, which the report notes.
    """
    if g.declared_symmetry is None:
        raise GraphError("classify requires declared_symmetry on the graph")
    decl = g.declared_symmetry
    maxedge = _max_edge_length(g)

    t_checks = []
    for t in decl.translations:
        m = max(margin, float(t.norm2()) ** 0.5 + maxedge + 0.5)
        t_checks.append(check_translation(g, t, m))
    translation_ok = tuple(c.ok for c in t_checks)

    rotation_order = None
    rot_checks = {}
    for a in (6, 4, 3, 2):
        try:
            c = check_rotation(g, a, decl.center, max(margin, maxedge + 0.5))
        except RotationOrderUnsupported:
            continue
        rot_checks[a] = c
        if c.ok and rotation_order is None:
            rotation_order = a

    notes = []
    if not any(translation_ok):
        return SymmetryReport(margin, decl.translations, translation_ok,
                              tuple(t_checks), rotation_order, decl.center,
                              rot_checks, np.zeros(g.n, dtype=np.int64), 0,
                              frozenset(), notes=["no verified translation"])

    uf = _UnionFind(g.n)
    idx = g.position_index()
    verified_ts = [t for t, ok in zip(decl.translations, translation_ok) if ok]
    for t in verified_ts:
        for v in range(g.n):
            p = g.position(v)
            u = idx.get((p.x + t.x, p.y + t.y))
            if u is not None:
                uf.union(v, u)
    if rotation_order is not None:
        rot = Rotation(rotation_order, 1, decl.center)
        for v in range(g.n):
            q = rot(g.position(v))
            u = idx.get((q.x, q.y))
            if u is not None:
                uf.union(v, u)

    roots = [uf.find(v) for v in range(g.n)]
    label_of_root: dict[int, int] = {}
    labels = np.empty(g.n, dtype=np.int64)
    for v in range(g.n):
        r = roots[v]
        if r not in label_of_root:
            label_of_root[r] = len(label_of_root) + 1
        labels[v] = label_of_root[r]

    xbar = verified_ts[0]
    ybar = None
    if rotation_order is not None and rotation_order != 2:
        cand = Rotation(rotation_order, 1, vec(0, 0))(xbar)
        if xbar.cross(cand).sign() != 0:
            ybar = cand
    if ybar is None and len(verified_ts) > 1:
        for t in verified_ts[1:]:
            if xbar.cross(t).sign() != 0:
                ybar = t
                break

    if ybar is not None:
        class_count = _labels_in_parallelogram(g, labels, xbar, ybar)
    else:
        interior = _eroded_interior(g, min(margin, 2.0))
        class_count = len(set(int(labels[v]) for v in interior))
        notes.append("no independent second translation: class count taken "
                     "over the window interior and grows with the window")

    membership = set()
    if rotation_order == 6:
        membership = {"G(3)", "G(6)"}
    elif rotation_order == 4:
        membership = {"G(4)"}
    elif rotation_order == 3:
        membership = {"G(3)"}
    if rotation_order == 2:
        notes.append("rotation order 2 (angle pi): crossing construction and "
                     "main classification not applicable")

    return SymmetryReport(margin, decl.translations, translation_ok,
                          tuple(t_checks), rotation_order, decl.center,
                          rot_checks, labels, class_count,
                          frozenset(membership), notes=notes)


def _labels_in_parallelogram(g: PlaneGraph, labels: np.ndarray,
                             xbar: Vec2, ybar: Vec2) -> int:
    det = xbar.cross(ybar)
    seen = set()
    zero, one = qs(0), qs(1)
    for v in range(g.n):
        p = g.position(v)
        alpha = p.cross(ybar) / det
        beta = xbar.cross(p) / det
        if zero <= alpha <= one and zero <= beta <= one:
            seen.add(int(labels[v]))
    return len(seen)


def minimal_translation(g: PlaneGraph, margin: float = 4.0) -> Vec2:
    """Shortest verified translation vector, searched among all vertex
    position differences within twice the declared vector norms."""
    if g.declared_symmetry is None or not g.declared_symmetry.translations:
        raise GraphError("minimal_translation requires declared translations")
    decl = g.declared_symmetry
    radius = 2.0 * max(float(t.norm2()) ** 0.5 for t in decl.translations)
    pts = g.float_positions()
    centroid = pts.mean(axis=0)
    v0 = int(np.argmin(((pts - centroid) ** 2).sum(axis=1)))
    p0 = g.position(v0)
    d2 = ((pts - pts[v0]) ** 2).sum(axis=1)
    cand_ids = np.nonzero((d2 > 0) & (d2 <= (radius + 1e-9) ** 2))[0]
    cands = []
    seen = set()
    for u in cand_ids:
        t = g.position(int(u)) - p0
        if t.x.sign() < 0 or (t.x.sign() == 0 and t.y.sign() < 0):
            t = -t  # translations come in +- pairs; keep the canonical sign
        if (t.x, t.y) not in seen:
            seen.add((t.x, t.y))
            cands.append(t)
    cands.sort(key=_NormKey)
    maxedge = _max_edge_length(g)
    for t in cands:
        m = max(margin, float(t.norm2()) ** 0.5 + maxedge + 0.5)
        try:
            if check_translation(g, t, m).ok:
                return t
        except GraphError:
            continue  # window too small for this candidate's margin
    raise GraphError("no translation verified within the search radius")


class _NormKey:
    __slots__ = ("n2", "x", "y")

    def __init__(self, t: Vec2):
        self.n2 = t.norm2()
        self.x, self.y = t.x, t.y

    def __lt__(self, other):
        if self.n2 != other.n2:
            return self.n2 < other.n2
        if self.x != other.x:
            return self.x < other.x
        return self.y < other.y

"""Plane graphs with exact Q[sqrt(3)] embeddings, lattice builders, and IO.

A PlaneGraph is an immutable embedded graph: vertices carry exact positions,
edges are straight closed segments whose interiors avoid all vertices and all
other edges.  Windows wrap a graph with a boundary policy (free, periodic,
fixed spins) and know which vertices have truncated neighbourhoods.
"""
from __future__ import annotations

import json
import math
import os
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .exact import (QSqrt3, Vec2, Rotation, _VecKey, point_on_segment, qs,
                    segments_interiors_intersect, vec)


class GraphError(ValueError):
    """Construction or validation failure; message names the invariant."""


class GraphFormatError(GraphError):
    """Malformed graph file."""


@dataclass(frozen=True)
class Vertex:
    id: int
    position: Vec2
    class_label: Optional[int] = None


@dataclass(frozen=True)
class DeclaredSymmetry:
    translations: tuple[Vec2, ...]
    rotation_order: Optional[int]
    center: Vec2


@dataclass(frozen=True)
class Line:
    """Full line {x : normal . x = offset} with exact coefficients."""
    normal: Vec2
    offset: QSqrt3

    def side(self, p: Vec2) -> int:
        return (self.normal.dot(p) - self.offset).sign()

    def direction(self) -> Vec2:
        return Vec2(self.normal.y, -self.normal.x)


@dataclass
class Arrangement:
    """Supporting-line metadata for graphs built from full line families."""
    lines: list[Line]
    line_vertices: list[list[int]]        # per line, ids sorted along the line
    edge_line: dict[tuple[int, int], int]  # (i, j) i<j -> line index


class PlaneGraph:
    """Immutable plane graph.  Adjacency lists are sorted; edges are (i, j)
    pairs with i < j.  Construction performs the cheap structural checks;
    call validate() for the full embedding check."""

    def __init__(self, positions: Sequence[Vec2], edges: Iterable[tuple[int, int]],
                 declared_symmetry: Optional[DeclaredSymmetry] = None,
                 class_labels: Optional[Sequence[Optional[int]]] = None,
                 arrangement: Optional[Arrangement] = None):
        n = len(positions)
        labels = list(class_labels) if class_labels is not None else [None] * n
        if len(labels) != n:
            raise GraphError("class label list length mismatch")
        self.vertices = [Vertex(i, positions[i], labels[i]) for i in range(n)]
        edge_set: set[tuple[int, int]] = set()
        adjacency: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) references unknown vertex id")
            e = (u, v) if u < v else (v, u)
            if e in edge_set:
                raise GraphError(f"parallel edge {e}")
            edge_set.add(e)
            adjacency[u].append(v)
            adjacency[v].append(u)
        for lst in adjacency:
            lst.sort()
        self.adjacency = adjacency
        self.edges = edge_set
        self.declared_symmetry = declared_symmetry
        self.arrangement = arrangement
        self.max_degree = max((len(a) for a in adjacency), default=0)
        self._pos_index: Optional[dict[tuple, int]] = None
        self._float_pos: Optional[np.ndarray] = None

    # -- basic accessors ----------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.vertices)

    def position(self, v: int) -> Vec2:
        return self.vertices[v].position

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def position_index(self) -> dict[tuple, int]:
        if self._pos_index is None:
            idx = {}
            for vx in self.vertices:
                key = (vx.position.x, vx.position.y)
                if key in idx:
                    raise GraphError(f"duplicate vertex position at id {vx.id}")
                idx[key] = vx.id
            self._pos_index = idx
        return self._pos_index

    def id_at(self, p: Vec2) -> Optional[int]:
        return self.position_index().get((p.x, p.y))

    def float_positions(self) -> np.ndarray:
        if self._float_pos is None:
            self._float_pos = np.array(
                [v.position.to_float() for v in self.vertices], dtype=np.float64)
        return self._float_pos

    def with_class_labels(self, labels: Sequence[Optional[int]]) -> "PlaneGraph":
        g = PlaneGraph.__new__(PlaneGraph)
        g.vertices = [Vertex(v.id, v.position, labels[v.id]) for v in self.vertices]
        g.adjacency = self.adjacency
        g.edges = self.edges
        g.declared_symmetry = self.declared_symmetry
        g.arrangement = self.arrangement
        g.max_degree = self.max_degree
        g._pos_index = self._pos_index
        g._float_pos = self._float_pos
        return g

    # -- spec operations ------------------------------------------------------

    def degree_in(self, v: int, S: Iterable[int]) -> int:
        """|N(v) ∩ S|."""
        if not (0 <= v < self.n):
            raise GraphError(f"unknown vertex id {v}")
        S = S if isinstance(S, (set, frozenset)) else set(S)
        return sum(1 for u in self.adjacency[v] if u in S)

    def external_boundary(self, S: Iterable[int]) -> set[int]:
        """Vertices outside S adjacent to S."""
        S = S if isinstance(S, (set, frozenset)) else set(S)
        out: set[int] = set()
        for v in S:
            for u in self.adjacency[v]:
                if u not in S:
                    out.add(u)
        return out

    # -- validation -----------------------------------------------------------

    def validate(self, level: str = "full") -> None:
        """Check all invariants; raise GraphError naming the first failure.

        level="basic" skips the quadratic embedding checks.  The full check
        uses a uniform grid as broad phase, then exact segment predicates.
        """
        n = self.n
        for v in self.vertices:
            if not isinstance(v.position, Vec2):
                raise GraphError(f"vertex {v.id} position is not exact")
        self.position_index()  # raises on duplicate positions
        for u in range(n):
            for w in self.adjacency[u]:
                if u not in self.adjacency[w]:
                    raise GraphError(f"asymmetric adjacency between {u} and {w}")
        if level == "basic":
            return
        self._validate_embedding()

    def _validate_embedding(self) -> None:
        if not self.edges:
            return
        pos = self.float_positions()
        edges = sorted(self.edges)
        seg = np.array([[pos[i], pos[j]] for i, j in edges])  # (m, 2, 2)
        lo = seg.min(axis=1)
        hi = seg.max(axis=1)
        lengths = np.hypot(*(seg[:, 1] - seg[:, 0]).T)
        cell = max(lengths.max(), 1e-9)
        buckets: dict[tuple[int, int], list[int]] = {}
        for k in range(len(edges)):
            for cx in range(int(lo[k, 0] // cell), int(hi[k, 0] // cell) + 1):
                for cy in range(int(lo[k, 1] // cell), int(hi[k, 1] // cell) + 1):
                    buckets.setdefault((cx, cy), []).append(k)
        vpos_cells: dict[tuple[int, int], list[int]] = {}
        for i in range(self.n):
            vpos_cells.setdefault((int(pos[i, 0] // cell), int(pos[i, 1] // cell)),
                                  []).append(i)
        checked: set[tuple[int, int]] = set()
        for cell_edges in buckets.values():
            for a in range(len(cell_edges)):
                for b in range(a + 1, len(cell_edges)):
                    k1, k2 = cell_edges[a], cell_edges[b]
                    pair = (k1, k2) if k1 < k2 else (k2, k1)
                    if pair in checked:
                        continue
                    checked.add(pair)
                    i1, j1 = edges[k1]
                    i2, j2 = edges[k2]
                    if segments_interiors_intersect(
                            self.position(i1), self.position(j1),
                            self.position(i2), self.position(j2)):
                        raise GraphError(
                            f"edge interiors intersect: {edges[k1]} and {edges[k2]}")
        for k, (i, j) in enumerate(edges):
            a, b = self.position(i), self.position(j)
            cand: set[int] = set()
            for cx in range(int(lo[k, 0] // cell), int(hi[k, 0] // cell) + 1):
                for cy in range(int(lo[k, 1] // cell), int(hi[k, 1] // cell) + 1):
                    cand.update(vpos_cells.get((cx, cy), ()))
            for w in cand:
                if w in (i, j):
                    continue
                if point_on_segment(self.position(w), a, b, closed=False):
                    raise GraphError(f"vertex {w} lies in the interior of edge {(i, j)}")


# ---------------------------------------------------------------------------
# windows and boundaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Boundary:
    kind: str                       # "free" | "periodic" | "fixed"
    value: Optional[int] = None     # +1 / -1 for fixed
    tiles: Optional[tuple[Vec2, ...]] = None  # resolved tile vectors

    @staticmethod
    def free() -> "Boundary":
        return Boundary("free")

    @staticmethod
    def periodic(tiles: Optional[Sequence[Vec2]] = None) -> "Boundary":
        return Boundary("periodic", tiles=tuple(tiles) if tiles else None)

    @staticmethod
    def fixed(value: int) -> "Boundary":
        if value not in (1, -1):
            raise GraphError("fixed boundary value must be +1 or -1")
        return Boundary("fixed", value=value)


def parse_boundary(spec) -> Boundary:
    if isinstance(spec, Boundary):
        return spec
    if spec in ("free", None):
        return Boundary.free()
    if spec == "periodic":
        return Boundary.periodic()
    if spec in ("fixed+", "fixed+1"):
        return Boundary.fixed(+1)
    if spec in ("fixed-", "fixed-1"):
        return Boundary.fixed(-1)
    raise GraphError(f"unknown boundary spec {spec!r}")


class Window:
    """A finite simulation window: graph + boundary rule.

    ``wrap`` holds the extra (non-geometric) adjacency used by periodic
    boundaries.  ``infinite_degree[v]`` is the degree v would have in the
    untruncated lattice; vertices where the window misses neighbours form the
    rim, and statistics should stay ``interior_margin`` away from it.
    """

    def __init__(self, graph: PlaneGraph, boundary: Boundary,
                 wrap: Optional[Sequence[Sequence[int]]] = None,
                 infinite_degree: Optional[Sequence[int]] = None,
                 interior_margin: float = 0.0,
                 builder: Optional[str] = None):
        self.graph = graph
        self.boundary = boundary
        self.wrap = [sorted(w) for w in wrap] if wrap is not None else [[] for _ in range(graph.n)]
        if infinite_degree is not None:
            self.infinite_degree = np.asarray(infinite_degree, dtype=np.int64)
        else:
            self.infinite_degree = np.array(
                [graph.degree(v) + len(self.wrap[v]) for v in range(graph.n)],
                dtype=np.int64)
        if interior_margin < 0:
            raise GraphError("interior_margin must be >= 0")
        self.interior_margin = interior_margin
        self.builder = builder
        self._csr: Optional[tuple[np.ndarray, np.ndarray]] = None
        self._rim: Optional[np.ndarray] = None
        self._rim_distance: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.graph.n

    def neighbors(self, v: int) -> list[int]:
        return self.graph.adjacency[v] + self.wrap[v]

    def phantom_count(self, v: int) -> int:
        missing = int(self.infinite_degree[v]) - len(self.neighbors(v))
        return max(missing, 0)

    def rim_ids(self) -> np.ndarray:
        if self._rim is None:
            self._rim = np.array(
                [v for v in range(self.n) if self.phantom_count(v) > 0], dtype=np.int64)
        return self._rim

    def rim_distance(self) -> np.ndarray:
        """Graph distance from every vertex to the rim (large where no rim)."""
        if self._rim_distance is None:
            dist = np.full(self.n, np.iinfo(np.int64).max // 2, dtype=np.int64)
            dq = deque()
            for v in self.rim_ids():
                dist[v] = 0
                dq.append(int(v))
            while dq:
                u = dq.popleft()
                for w in self.neighbors(u):
                    if dist[w] > dist[u] + 1:
                        dist[w] = dist[u] + 1
                        dq.append(w)
            self._rim_distance = dist
        return self._rim_distance

    def interior_ids(self, margin: Optional[float] = None) -> np.ndarray:
        m = self.interior_margin if margin is None else margin
        return np.nonzero(self.rim_distance() >= m)[0]

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Dynamics adjacency (geometric + wrap) as CSR arrays."""
        if self._csr is None:
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            for v in range(self.n):
                indptr[v + 1] = indptr[v] + len(self.neighbors(v))
            indices = np.empty(indptr[-1], dtype=np.int64)
            for v in range(self.n):
                indices[indptr[v]:indptr[v + 1]] = self.neighbors(v)
            self._csr = (indptr, indices)
        return self._csr

    def phantom_field(self) -> np.ndarray:
        """Per-vertex additive spin contribution of fixed phantom neighbours."""
        out = np.zeros(self.n, dtype=np.int64)
        if self.boundary.kind == "fixed":
            for v in range(self.n):
                out[v] = self.phantom_count(v) * self.boundary.value
        return out


# ---------------------------------------------------------------------------
# lattice builders
# ---------------------------------------------------------------------------

LATTICE_KINDS = ("square", "triangular", "hexagonal", "double_triangular",
                 "modified_double_square", "stripe_pi")


def _index_range(extent: int) -> range:
    lo = -((extent - 1) // 2)
    return range(lo, lo + extent)


def _sorted_ids(positions: list[Vec2]):
    """Assign ids in exact (y, x) lexicographic order; return (sorted positions,
    mapping old->new)."""
    order = sorted(range(len(positions)),
                   key=lambda i: _YXKey(positions[i]))
    remap = [0] * len(positions)
    for new, old in enumerate(order):
        remap[old] = new
    return [positions[i] for i in order], remap


class _YXKey:
    __slots__ = ("v",)

    def __init__(self, v: Vec2):
        self.v = v

    def __lt__(self, other):
        if self.v.y != other.v.y:
            return self.v.y < other.v.y
        return self.v.x < other.v.x


def _basis_lattice(extent: int, basis_offsets: list[tuple[Vec2, list[tuple]]],
                   origin_shift: Vec2, b1: Vec2, b2: Vec2, periodic: bool):
    """Shared core for lattices indexed by (i, j, role).

    basis_offsets: per role, (position offset, neighbour list); each neighbour
    is (di, dj, role).  Returns positions, geometric edges, wrap pairs and the
    infinite degree of every vertex.
    """
    rng = _index_range(extent)
    lo, n = rng.start, extent
    key_to_tmp: dict[tuple[int, int, int], int] = {}
    positions: list[Vec2] = []
    roles: list[int] = []
    cells: list[tuple[int, int]] = []
    for j in rng:
        for i in rng:
            for role, (off, _) in enumerate(basis_offsets):
                key_to_tmp[(i, j, role)] = len(positions)
                positions.append(origin_shift + i * b1 + j * b2 + off)
                roles.append(role)
                cells.append((i, j))
    geo_edges: set[tuple[int, int]] = set()
    wrap_pairs: set[tuple[int, int]] = set()
    inf_deg = [0] * len(positions)
    for (i, j, role), t in key_to_tmp.items():
        for (di, dj, nrole) in basis_offsets[role][1]:
            inf_deg[t] += 1
            ni, nj = i + di, j + dj
            if (ni, nj, nrole) in key_to_tmp:
                u = key_to_tmp[(ni, nj, nrole)]
                geo_edges.add((t, u) if t < u else (u, t))
            elif periodic:
                wi = (ni - lo) % n + lo
                wj = (nj - lo) % n + lo
                u = key_to_tmp[(wi, wj, nrole)]
                if u != t:
                    wrap_pairs.add((t, u) if t < u else (u, t))
    return positions, geo_edges, wrap_pairs, inf_deg


def build_lattice(kind: str, extent: int, boundary="free") -> Window:
    """Build a finite window of one of the named lattices.

    extent is the number of vertices (or unit cells) per side; windows are
    centred so that the lattice's canonical rotation center is the origin.
    Periodic boundaries wrap along the builder's canonical tile vectors and
    are rejected, with an explanation, where the lattice does not tile that
    way.
    """
    if kind not in LATTICE_KINDS:
        raise GraphError(f"unknown lattice kind {kind!r}; choose from {LATTICE_KINDS}")
    if extent < 3:
        raise GraphError("extent must be >= 3")
    b = parse_boundary(boundary)
    periodic = b.kind == "periodic"

    if kind == "square":
        basis = [(vec(0, 0), [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)])]
        b1, b2 = vec(1, 0), vec(0, 1)
        shift = vec(0, 0)
        declared = DeclaredSymmetry((b1, b2), 4, vec(0, 0))
        tiles = (extent * b1, extent * b2)
    elif kind == "triangular":
        b1, b2 = vec(1, 0), vec(Fraction(1, 2), qs(0, Fraction(1, 2)))
        basis = [(vec(0, 0), [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0),
                              (1, -1, 0), (-1, 1, 0)])]
        shift = vec(0, 0)
        declared = DeclaredSymmetry((b1, b2), 6, vec(0, 0))
        tiles = (extent * b1, extent * b2)
    elif kind == "hexagonal":
        # two-site honeycomb with a hexagon face centred at the origin
        b1 = vec(Fraction(3, 2), qs(0, Fraction(1, 2)))
        b2 = vec(0, qs(0, 1))
        a_off = vec(-2, 0)
        b_off = vec(-1, 0)
        basis = [
            (a_off, [(0, 0, 1), (-1, 0, 1), (-1, 1, 1)]),
            (b_off, [(0, 0, 0), (1, 0, 0), (1, -1, 0)]),
        ]
        shift = vec(0, 0)
        declared = DeclaredSymmetry((b1, b2), 6, vec(0, 0))
        tiles = (extent * b1, extent * b2)
    elif kind == "stripe_pi":
        return _build_stripe(extent, b)
    elif kind == "double_triangular":
        return _build_double_triangular(extent, b)
    else:
        return _build_modified_double_square(extent, b)

    if periodic and b.tiles is not None and tuple(b.tiles) != tiles:
        raise GraphError(
            f"{kind}: requested periodic tiles are incompatible with the "
            f"canonical extent-{extent} tiling {tiles}")
    positions, geo_edges, wrap_pairs, inf_deg = _basis_lattice(
        extent, basis, shift, b1, b2, periodic)
    return _finish_window(kind, positions, geo_edges, wrap_pairs, inf_deg,
                          declared, b, tiles if periodic else None)


def _finish_window(kind, positions, geo_edges, wrap_pairs, inf_deg, declared,
                   b: Boundary, tiles) -> Window:
    sorted_pos, remap = _sorted_ids(positions)
    edges = {(min(remap[u], remap[v]), max(remap[u], remap[v])) for u, v in geo_edges}
    graph = PlaneGraph(sorted_pos, edges, declared_symmetry=declared)
    wrap: list[list[int]] = [[] for _ in range(len(sorted_pos))]
    for u, v in wrap_pairs:
        wrap[remap[u]].append(remap[v])
        wrap[remap[v]].append(remap[u])
    inf = [0] * len(sorted_pos)
    for old, d in enumerate(inf_deg):
        inf[remap[old]] = d
    bound = Boundary(b.kind, b.value, tiles) if b.kind == "periodic" else b
    return Window(graph, bound, wrap=wrap, infinite_degree=inf, builder=kind)


def _build_stripe(extent: int, b: Boundary) -> Window:
    """Columns of vertical edges everywhere plus one horizontal row at y = 0.
    Translation invariant along (1, 0) only; rotation order 2."""
    if b.kind == "periodic":
        if b.tiles is not None and any(t.y != qs(0) for t in b.tiles):
            raise GraphError(
                "stripe_pi is translation invariant only along (1, 0); a tile "
                "with a vertical component cannot wrap this graph")
    rng = _index_range(extent)
    positions = []
    index = {}
    for j in rng:
        for i in rng:
            index[(i, j)] = len(positions)
            positions.append(vec(i, j))
    geo, wrapp = set(), set()
    inf = [0] * len(positions)
    lo, n = rng.start, extent
    for (i, j), t in index.items():
        offs = [(0, 1), (0, -1)]
        if j == 0:
            offs += [(1, 0), (-1, 0)]
        for di, dj in offs:
            inf[t] += 1
            if (i + di, j + dj) in index:
                u = index[(i + di, j + dj)]
                geo.add((min(t, u), max(t, u)))
            elif b.kind == "periodic" and dj == 0:
                u = index[((i + di - lo) % n + lo, j)]
                if u != t:
                    wrapp.add((min(t, u), max(t, u)))
    declared = DeclaredSymmetry((vec(1, 0),), 2, vec(0, 0))
    tiles = (vec(extent, 0),) if b.kind == "periodic" else None
    return _finish_window("stripe_pi", positions, geo, wrapp, inf, declared, b, tiles)


def _build_double_triangular(extent: int, b: Boundary) -> Window:
    """Triangular line arrangement with paired lines (gaps 1, 2 repeating):
    invariant under rotation by 2*pi/3 about the origin but not by pi/3."""
    if b.kind == "periodic":
        raise GraphError(
            "double_triangular windows are boxes; its oblique translation "
            "tile does not wrap a box, use a free boundary")
    h = Fraction(1, 2)
    fams = [
        LineFamily(vec(1, 0), 3, 0), LineFamily(vec(1, 0), 3, 1),
        LineFamily(vec(h, qs(0, h)), 3, 0), LineFamily(vec(h, qs(0, h)), 3, -1),
        LineFamily(vec(-h, qs(0, h)), 3, 0), LineFamily(vec(-h, qs(0, h)), 3, 1),
    ]
    declared = DeclaredSymmetry((vec(qs(0, 2), 0), vec(qs(0, 1), 3)), 3, vec(0, 0))
    return _arrangement_window("double_triangular", fams, extent, declared, b)


def _build_modified_double_square(extent: int, b: Boundary) -> Window:
    """Axis-aligned grid whose line offsets are {2k+1} U {4m} in both
    directions (consecutive spacings 1, 2, 1 repeating); rotation order 4."""
    if b.kind == "periodic" and extent % 4 != 0:
        raise GraphError(
            f"modified_double_square tiles with period 4; extent {extent} is "
            "incompatible with the tile (use a multiple of 4)")
    if b.kind == "periodic":
        raise GraphError(
            "modified_double_square periodic windows are not supported; the "
            "free window covers every use in this package")
    fams = [
        LineFamily(vec(1, 0), 2, 1), LineFamily(vec(1, 0), 4, 0),
        LineFamily(vec(0, 1), 2, 1), LineFamily(vec(0, 1), 4, 0),
    ]
    declared = DeclaredSymmetry((vec(4, 0), vec(0, 4)), 4, vec(0, 0))
    return _arrangement_window("modified_double_square", fams, extent, declared, b)


# ---------------------------------------------------------------------------
# line-arrangement builder (class of graphs made of full lines)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LineFamily:
    """Parallel lines {normal . x = phase + k*spacing, k integer}.

    direction is any exact non-zero vector; spacing > 0 and phase are exact
    (rationals or Q[sqrt(3)] elements).
    """
    direction: Vec2
    spacing: QSqrt3
    phase: QSqrt3

    def __init__(self, direction: Vec2, spacing, phase):
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "spacing",
                           spacing if isinstance(spacing, QSqrt3) else qs(Fraction(spacing)))
        object.__setattr__(self, "phase",
                           phase if isinstance(phase, QSqrt3) else qs(Fraction(phase)))

    def normal(self) -> Vec2:
        return Vec2(-self.direction.y, self.direction.x)


def build_class_H(line_families: Sequence[LineFamily], extent: int) -> Window:
    """Intersection graph of a full line arrangement inside [-extent, extent]^2.

    Vertices are all pairwise intersection points, edges join consecutive
    intersections along each line.  The output keeps per-edge supporting-line
    metadata so the planar-shrink certifier can walk collinear extensions.
    """
    if len(line_families) < 2:
        raise GraphError("need at least 2 non-parallel line families")
    for f in line_families:
        if f.direction.norm2().sign() == 0:
            raise GraphError("line family with zero direction")
        if f.spacing.sign() <= 0:
            raise GraphError("line family spacing must be > 0")
    d0 = line_families[0].direction
    if all(d0.cross(f.direction).sign() == 0 for f in line_families[1:]):
        raise GraphError("need at least 2 non-parallel line families")
    return _arrangement_window("class_H", list(line_families), extent, None,
                               Boundary.free())


def _arrangement_window(kind: str, fams: list[LineFamily], extent: int,
                        declared: Optional[DeclaredSymmetry], b: Boundary) -> Window:
    if extent < 3:
        raise GraphError("extent must be >= 3")
    E = qs(extent)
    lines: list[Line] = []
    for f in fams:
        nrm = f.normal()
        # |normal . x| <= |n|_1 * extent inside the box, bound offsets by that
        reach = (abs(nrm.x) + abs(nrm.y)) * E
        k_lo = ((-reach - f.phase) / f.spacing).floor()
        k_hi = ((reach - f.phase) / f.spacing).floor() + 1
        for k in range(k_lo, k_hi + 1):
            off = f.phase + k * f.spacing
            ln = Line(nrm, off)
            if not any(_same_line(ln, other) for other in lines):
                lines.append(ln)
    pos_index: dict[tuple, int] = {}
    positions: list[Vec2] = []
    on_line: list[list[int]] = [[] for _ in lines]
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            p = _line_intersection(lines[i], lines[j])
            if p is None:
                continue
            if abs(p.x) > E or abs(p.y) > E:
                continue
            key = (p.x, p.y)
            t = pos_index.get(key)
            if t is None:
                t = len(positions)
                pos_index[key] = t
                positions.append(p)
            if t not in on_line[i]:
                on_line[i].append(t)
            if t not in on_line[j]:
                on_line[j].append(t)
    sorted_pos, remap = _sorted_ids(positions)
    geo: set[tuple[int, int]] = set()
    edge_line: dict[tuple[int, int], int] = {}
    line_vertices: list[list[int]] = []
    inf = [0] * len(sorted_pos)
    kept_lines: list[Line] = []
    for li, ids in enumerate(on_line):
        if not ids:
            continue
        d = lines[li].direction()
        ids_sorted = sorted(ids, key=lambda t: _ParamKey(d.dot(positions[t])))
        new_ids = [remap[t] for t in ids_sorted]
        kept_lines.append(lines[li])
        line_vertices.append(new_ids)
        lidx = len(kept_lines) - 1
        for a, bb in zip(new_ids, new_ids[1:]):
            e = (a, bb) if a < bb else (bb, a)
            geo.add(e)
            edge_line[e] = lidx
        for t in new_ids:
            inf[t] += 2  # a full line always has two neighbours off-window
    arrangement = Arrangement(kept_lines, line_vertices, edge_line)
    graph = PlaneGraph(sorted_pos, geo, declared_symmetry=declared,
                       arrangement=arrangement)
    win = Window(graph, b, wrap=None, infinite_degree=inf, builder=kind)
    return win


class _ParamKey:
    __slots__ = ("t",)

    def __init__(self, t: QSqrt3):
        self.t = t

    def __lt__(self, other):
        return self.t < other.t


def _same_line(a: Line, b: Line) -> bool:
    if a.normal.cross(b.normal).sign() != 0:
        return False
    # parallel: same line iff offsets match after scaling normals
    # a: n1.x = c1 ; b: n2.x = c2 with n2 = s*n1 -> same iff c2 = s*c1
    if b.normal.x.sign() != 0 or a.normal.x.sign() != 0:
        if a.normal.x.sign() == 0 or b.normal.x.sign() == 0:
            return False
        s = b.normal.x / a.normal.x
    else:
        if a.normal.y.sign() == 0 or b.normal.y.sign() == 0:
            return False
        s = b.normal.y / a.normal.y
    return (b.offset - s * a.offset).sign() == 0


def _line_intersection(a: Line, b: Line) -> Optional[Vec2]:
    det = a.normal.x * b.normal.y - a.normal.y * b.normal.x
    if det.sign() == 0:
        return None
    x = (a.offset * b.normal.y - b.offset * a.normal.y) / det
    y = (a.normal.x * b.offset - b.normal.x * a.offset) / det
    return Vec2(x, y)


# ---------------------------------------------------------------------------
# module-level spec operations
# ---------------------------------------------------------------------------

def degree_in(g: PlaneGraph, v: int, S: Iterable[int]) -> int:
    return g.degree_in(v, S)


def external_boundary(g: PlaneGraph, S: Iterable[int]) -> set[int]:
    return g.external_boundary(S)


# ---------------------------------------------------------------------------
# graph file IO (format_version 1)
# ---------------------------------------------------------------------------

def _enc_q(x: QSqrt3) -> list[int]:
    return [x.p.numerator, x.p.denominator, x.q.numerator, x.q.denominator]


def _dec_q(arr) -> QSqrt3:
    if (not isinstance(arr, list) or len(arr) != 4
            or not all(isinstance(t, int) for t in arr)):
        raise GraphFormatError(f"bad coordinate encoding {arr!r}")
    if arr[1] == 0 or arr[3] == 0:
        raise GraphFormatError("zero denominator in coordinate")
    return QSqrt3(Fraction(arr[0], arr[1]), Fraction(arr[2], arr[3]))


def write_graph(g: PlaneGraph, path: str) -> None:
    doc = {
        "format_version": 1,
        "vertices": [
            {"id": v.id, "x": _enc_q(v.position.x), "y": _enc_q(v.position.y),
             "class": v.class_label}
            for v in g.vertices
        ],
        "edges": [list(e) for e in sorted(g.edges)],
        "symmetry": None,
    }
    if g.declared_symmetry is not None:
        s = g.declared_symmetry
        doc["symmetry"] = {
            "translations": [[_enc_q(t.x), _enc_q(t.y)] for t in s.translations],
            "rotation_order": s.rotation_order,
            "center": [_enc_q(s.center.x), _enc_q(s.center.y)],
        }
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"))
        fh.write("\n")
    os.replace(tmp, path)


def read_graph(path: str) -> PlaneGraph:
    """Read and fully validate a graph file; all invariants are re-checked."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise GraphFormatError(f"not valid JSON: {e}") from e
    if doc.get("format_version") != 1:
        raise GraphFormatError(f"unsupported format_version {doc.get('format_version')!r}")
    vrecs = doc.get("vertices")
    erecs = doc.get("edges")
    if not isinstance(vrecs, list) or not isinstance(erecs, list):
        raise GraphFormatError("missing vertices or edges array")
    ids = [r.get("id") for r in vrecs]
    if sorted(ids) != list(range(len(vrecs))):
        raise GraphFormatError("vertex ids are not dense 0..n-1")
    positions: list[Optional[Vec2]] = [None] * len(vrecs)
    labels: list[Optional[int]] = [None] * len(vrecs)
    for r in vrecs:
        positions[r["id"]] = Vec2(_dec_q(r["x"]), _dec_q(r["y"]))
        labels[r["id"]] = r.get("class")
    edges = []
    seen = set()
    for e in erecs:
        if (not isinstance(e, list) or len(e) != 2
                or not all(isinstance(t, int) for t in e) or not e[0] < e[1]):
            raise GraphFormatError(f"bad edge record {e!r} (need [i, j] with i < j)")
        if tuple(e) in seen:
            raise GraphFormatError(f"duplicated edge {e}")
        seen.add(tuple(e))
        edges.append((e[0], e[1]))
    declared = None
    if doc.get("symmetry") is not None:
        s = doc["symmetry"]
        declared = DeclaredSymmetry(
            tuple(Vec2(_dec_q(t[0]), _dec_q(t[1])) for t in s["translations"]),
            s.get("rotation_order"),
            Vec2(_dec_q(s["center"][0]), _dec_q(s["center"][1])),
        )
    try:
        g = PlaneGraph(positions, edges, declared_symmetry=declared,
                       class_labels=labels)
        g.validate("full")
    except GraphError as e:
        raise GraphFormatError(str(e)) from e
    return g

"""Configuration-driven batch experiments with deterministic outputs.

A config fully describes the graph, the initial density, the seeds and the
observables; running it writes CSV files plus a manifest that echoes every
resolved setting.  Outputs are written temp-then-rename and contain no
timestamps, so re-running a config reproduces byte-identical files.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .geometry import CrossingGeometry, build_crossing_geometry
from .harris import HarrisSchedule, SpinConfiguration, run, sample_initial
from .observables import (cluster_labels, default_interior_margin,
                          detect_L_cross, first_flip_times, flip_counts,
                          spins_at, _center_vertex)
from .plane_graph import (Boundary, GraphError, PlaneGraph, Window,
                          build_lattice, parse_boundary, read_graph)

KNOWN_OBSERVABLES = ("cluster_size", "magnetization", "flip_fraction",
                     "fixation", "crossings", "events")


@dataclass
class ExperimentConfig:
    graph: dict                      # {"builder":, "extent":} or {"path":}
    p: float
    seeds: list
    horizon: float
    boundary: str = "free"
    sample_times: list = field(default_factory=list)
    observables: list = field(default_factory=lambda: ["cluster_size"])
    geometry: Optional[dict] = None  # {"a":, "L":, "q":} for crossings
    out_dir: str = "results"

    def __post_init__(self):
        if isinstance(self.seeds, dict):
            base, count = int(self.seeds["base"]), int(self.seeds["count"])
            self.seeds = [base + i for i in range(count)]
        self.seeds = [int(s) for s in self.seeds]
        if len(set(self.seeds)) != len(self.seeds):
            raise GraphError("seeds must be distinct")
        if not 0.0 <= self.p <= 1.0:
            raise GraphError("p must lie in [0, 1]")
        if self.horizon <= 0:
            raise GraphError("horizon must be > 0")
        unknown = [o for o in self.observables if o not in KNOWN_OBSERVABLES]
        if unknown:
            raise GraphError(f"unknown observables {unknown}; known: "
                             f"{KNOWN_OBSERVABLES}")
        if "crossings" in self.observables and not self.geometry:
            raise GraphError("crossings requested but no geometry params given")
        if not self.sample_times:
            self.sample_times = [self.horizon]
        self.sample_times = sorted(float(t) for t in self.sample_times)
        if self.sample_times[-1] > self.horizon:
            raise GraphError("sample times exceed the horizon")

    @staticmethod
    def from_json(path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return ExperimentConfig(**json.load(fh))

    def to_jsonable(self) -> dict:
        return {
            "graph": self.graph, "p": self.p, "seeds": self.seeds,
            "horizon": self.horizon, "boundary": self.boundary,
            "sample_times": self.sample_times, "observables": self.observables,
            "geometry": self.geometry, "out_dir": self.out_dir,
        }


def resolve_window(graph_spec: dict, boundary: str) -> Window:
    if "builder" in graph_spec:
        return build_lattice(graph_spec["builder"], int(graph_spec["extent"]),
                             boundary)
    if "path" in graph_spec:
        b = parse_boundary(boundary)
        if b.kind == "periodic":
            raise GraphError("periodic boundaries need a builder graph "
                             "(file graphs carry no tile metadata)")
        g = read_graph(graph_spec["path"])
        return Window(g, b)
    raise GraphError("graph spec needs a 'builder' or a 'path' key")


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _replica_rows(cfg_dict: dict, seed: int) -> dict:
    """One replica's contribution to every output table."""
    cfg = ExperimentConfig(**cfg_dict)
    w = resolve_window(cfg.graph, cfg.boundary)
    sch = HarrisSchedule(seed)
    sigma0 = sample_initial(w, cfg.p, sch)
    _, log = run(w, sigma0, sch, cfg.horizon)
    out: dict = {"seed": seed, "series": [], "crossings": [], "events": None,
                 "fixation_raw": None}

    margin = default_interior_margin(w, cfg.horizon)
    interior = w.interior_ids(margin)
    v0 = _center_vertex(w)
    geom = None
    if "crossings" in cfg.observables:
        gp = cfg.geometry
        geom = build_crossing_geometry(w, int(gp["a"]), Fraction(gp["L"]),
                                       int(gp.get("q", 24)))
    flips_mat = None
    if "flip_fraction" in cfg.observables:
        flips_mat = flip_counts(log, w.n, cfg.sample_times)
    for ti, t in enumerate(cfg.sample_times):
        sig = None
        if "cluster_size" in cfg.observables or "magnetization" in cfg.observables \
                or "crossings" in cfg.observables:
            sig = spins_at(w, sigma0, log, t)
        if "cluster_size" in cfg.observables:
            labels = cluster_labels(w, sig)
            out["series"].append((t, seed, "cluster_size",
                                  float((labels == labels[v0]).sum())))
        if "magnetization" in cfg.observables:
            out["series"].append((t, seed, "magnetization",
                                  float(sig.spins.mean())))
        if "flip_fraction" in cfg.observables:
            frac = float((flips_mat[ti][interior] > 0).mean())
            out["series"].append((t, seed, "flip_fraction", frac))
        if "crossings" in cfg.observables:
            res = detect_L_cross(w, sig, geom)
            out["crossings"].append((t, seed, int(res.occurred),
                                     res.witness_i if res.occurred else ""))
    if "fixation" in cfg.observables:
        fft = first_flip_times(log, w.n)
        out["fixation_raw"] = {
            "interior": interior.tolist(),
            "first_flip": fft[interior].tolist(),
            "init": sigma0.spins[interior].tolist(),
        }
    if "events" in cfg.observables:
        lines = ["time,vertex,uniform,rate,delta_H,flipped"]
        rates = log.rates()
        for i in range(len(log)):
            lines.append(f"{log.times[i]!r},{int(log.vertices[i])},"
                         f"{log.uniforms[i]!r},{rates[i]!r},"
                         f"{int(log.delta_h[i])},{int(log.flipped[i])}")
        out["events"] = "\n".join(lines) + "\n"
    return out


def run_experiment(config: ExperimentConfig, workers: int = 1) -> str:
    """Run every replica, merge deterministically in seed order, and write
    the result bundle; returns the output directory."""
    os.makedirs(config.out_dir, exist_ok=True)
    cfg_dict = config.to_jsonable()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replica_rows_star,
                                    [(cfg_dict, s) for s in config.seeds]))
    else:
        results = [_replica_rows(cfg_dict, s) for s in config.seeds]
    results.sort(key=lambda r: config.seeds.index(r["seed"]))

    series_lines = ["# columns: time, replica (seed), observable, value",
                    "time,replica,observable,value"]
    for r in results:
        for t, seed, name, value in r["series"]:
            series_lines.append(f"{t!r},{seed},{name},{value!r}")
    _atomic_write(os.path.join(config.out_dir, "series.csv"),
                  "\n".join(series_lines) + "\n")

    if "crossings" in config.observables:
        lines = ["# columns: time, replica (seed), occurred (0/1), "
                 "witness_i (sector offset, empty when no cross)",
                 "time,replica,occurred,witness_i"]
        for r in results:
            for t, seed, occ, wi in r["crossings"]:
                lines.append(f"{t!r},{seed},{occ},{wi}")
        _atomic_write(os.path.join(config.out_dir, "crossings.csv"),
                      "\n".join(lines) + "\n")

    if "fixation" in config.observables:
        lines = ["# columns: time, class, sign (+1/-1), fraction of interior "
                 "class vertices with constant spin of that sign on [0, t], "
                 "averaged over replicas",
                 "time,class,sign,fraction"]
        per = []
        for r in results:
            raw = r["fixation_raw"]
            fft = np.array(raw["first_flip"])
            init = np.array(raw["init"])
            per.append((fft, init))
        for t in config.sample_times:
            for sign in (1, -1):
                vals = [float(((fft > t) & (init == sign)).mean())
                        for fft, init in per]
                lines.append(f"{t!r},1,{sign:+d},{float(np.mean(vals))!r}")
        _atomic_write(os.path.join(config.out_dir, "fixation.csv"),
                      "\n".join(lines) + "\n")

    if "events" in config.observables:
        for r in results:
            _atomic_write(os.path.join(config.out_dir,
                                       f"events-{r['seed']}.csv"), r["events"])

    manifest = {
        "config": cfg_dict,
        "package_version": __version__,
        "vertices": resolve_window(config.graph, config.boundary).n,
        "outputs": sorted(f for f in os.listdir(config.out_dir)
                          if not f.endswith(".tmp")),
    }
    _atomic_write(os.path.join(config.out_dir, "manifest.json"),
                  json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return config.out_dir


def _replica_rows_star(args):
    return _replica_rows(*args)


# ---------------------------------------------------------------------------
# static snapshot rendering
# ---------------------------------------------------------------------------

PLUS_COLOR = "#d95f02"
MINUS_COLOR = "#1b5e9e"


def render_snapshot(w: Window, sigma: SpinConfiguration, path: str,
                    geometry: Optional[CrossingGeometry] = None) -> None:
    """Write an SVG with one filled disk per vertex (+1 orange, -1 blue) and,
    when a crossing geometry is given, the region outline, the annulus
    vertices and the boundary balls."""
    pts = w.graph.float_positions()
    lo = pts.min(axis=0) - 1.0
    hi = pts.max(axis=0) + 1.0
    span = max(hi[0] - lo[0], hi[1] - lo[1])
    scale = 800.0 / span
    r = max(2.0, 0.3 * scale * _min_edge(w))

    def sx(x):
        return (x - lo[0]) * scale + 10

    def sy(y):
        return (hi[1] - y) * scale + 10

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" '
             f'width="{span * scale + 20:.0f}" height="{span * scale + 20:.0f}">',
             '<rect width="100%" height="100%" fill="white"/>']
    for (i, j) in sorted(w.graph.edges):
        parts.append(f'<line x1="{sx(pts[i, 0]):.1f}" y1="{sy(pts[i, 1]):.1f}" '
                     f'x2="{sx(pts[j, 0]):.1f}" y2="{sy(pts[j, 1]):.1f}" '
                     f'stroke="#cccccc" stroke-width="1"/>')
    if geometry is not None:
        for corners, color in ((geometry.region, "#444444"),
                               (geometry.region_outer, "#999999"),
                               (geometry.region_inner, "#999999")):
            seq = " ".join(f"{sx(float(p.x)):.1f},{sy(float(p.y)):.1f}"
                           for p in corners)
            parts.append(f'<polygon points="{seq}" fill="none" '
                         f'stroke="{color}" stroke-dasharray="6 4"/>')
        br = float(geometry.ball_radius()) * scale
        for k in range(len(geometry.cover)):
            c = geometry.scaled_center(k)
            parts.append(f'<circle cx="{sx(float(c.x)):.1f}" '
                         f'cy="{sy(float(c.y)):.1f}" r="{br:.1f}" fill="none" '
                         f'stroke="#88aa88" stroke-width="0.7"/>')
        for v in sorted(geometry.W):
            parts.append(f'<circle cx="{sx(pts[v, 0]):.1f}" '
                         f'cy="{sy(pts[v, 1]):.1f}" r="{r * 1.6:.1f}" '
                         f'fill="none" stroke="#2ca02c" stroke-width="1.2"/>')
    for v in range(w.n):
        color = PLUS_COLOR if sigma.spins[v] == 1 else MINUS_COLOR
        parts.append(f'<circle cx="{sx(pts[v, 0]):.1f}" cy="{sy(pts[v, 1]):.1f}" '
                     f'r="{r:.1f}" fill="{color}"/>')
    parts.append("</svg>")
    _atomic_write(path, "\n".join(parts) + "\n")


def _min_edge(w: Window) -> float:
    pts = w.graph.float_positions()
    best = 1.0
    for (i, j) in list(sorted(w.graph.edges))[:200]:
        d = math.hypot(pts[i, 0] - pts[j, 0], pts[i, 1] - pts[j, 1])
        best = min(best, d)
    return best

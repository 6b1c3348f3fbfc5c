"""Command-line interface.

Subcommands: build-graph, check-symmetry, check-shrink, geometry, simulate,
experiment, render.  Exit codes: 0 success, 1 validation/user error,
2 internal assertion failure (e.g. a coupling-order violation).
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .experiment import (ExperimentConfig, render_snapshot, resolve_window,
                         run_experiment)
from .geometry import build_crossing_geometry
from .harris import (HarrisSchedule, OrderingViolation, run, sample_initial)
from .observables import detect_L_cross
from .plane_graph import (GraphError, LATTICE_KINDS, Window, build_lattice,
                          parse_boundary, read_graph, write_graph)
from .shrink import (check_planar_shrink_set, random_connected_set,
                     random_rational_line, search_frozen_set)
from .symmetry import classify


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                        help="suppress progress chatter")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="default seed")
    common.add_argument("--out", default=argparse.SUPPRESS,
                        help="output directory or file")
    ap = argparse.ArgumentParser(prog="zeroising", parents=[common])
    ap.set_defaults(quiet=False, seed=0, out=None)
    sub = ap.add_subparsers(dest="command", required=True)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    b = add_parser("build-graph", help="build a lattice window and save it")
    b.add_argument("--kind", required=True, choices=LATTICE_KINDS)
    b.add_argument("--extent", type=int, required=True)

    s = add_parser("check-symmetry", help="verify symmetries of a graph file")
    s.add_argument("--graph", required=True)
    s.add_argument("--margin", type=float, default=4.0)

    sh = add_parser("check-shrink", help="search for frozen-set witnesses")
    sh.add_argument("--graph", required=True)
    sh.add_argument("--max-size", type=int, required=True)
    sh.add_argument("--budget", type=int, default=None)
    sh.add_argument("--planar", action="store_true",
                    help="also run random planar-shrink checks")
    sh.add_argument("--lines", type=int, default=1000,
                    help="random (set, line) pairs for --planar")

    g = add_parser("geometry", help="emit the crossing geometry as JSON")
    g.add_argument("--graph", required=True)
    g.add_argument("--a", type=int, required=True)
    g.add_argument("--L", required=True)
    g.add_argument("--q", type=int, default=24)

    si = add_parser("simulate", help="run the dynamics once")
    si.add_argument("--graph", default=None, help="graph file (free boundary)")
    si.add_argument("--builder", default=None, choices=LATTICE_KINDS)
    si.add_argument("--extent", type=int, default=None)
    si.add_argument("--boundary", default="free")
    si.add_argument("--p", type=float, required=True)
    si.add_argument("--horizon", type=float, required=True)
    si.add_argument("--log", default=None, help="write the event log CSV here")

    e = add_parser("experiment", help="run a config-driven batch")
    e.add_argument("--config", required=True)
    e.add_argument("--workers", type=int, default=1)

    r = add_parser("render", help="render a configuration snapshot to SVG")
    r.add_argument("--graph", default=None)
    r.add_argument("--builder", default=None, choices=LATTICE_KINDS)
    r.add_argument("--extent", type=int, default=None)
    r.add_argument("--boundary", default="free")
    r.add_argument("--p", type=float, required=True)
    r.add_argument("--horizon", type=float, default=0.0)
    r.add_argument("--overlay-a", type=int, default=None)
    r.add_argument("--overlay-L", default=None)
    r.add_argument("--overlay-q", type=int, default=24)
    return ap


def _window_from_args(args) -> Window:
    if args.builder is not None:
        if args.extent is None:
            raise GraphError("--builder needs --extent")
        return build_lattice(args.builder, args.extent, args.boundary)
    if args.graph is not None:
        b = parse_boundary(args.boundary)
        if b.kind == "periodic":
            raise GraphError("periodic boundaries need --builder")
        return Window(read_graph(args.graph), b)
    raise GraphError("give either --graph FILE or --builder KIND --extent N")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except OrderingViolation as e:
        print(f"internal assertion failed: {e}", file=sys.stderr)
        return 2
    except AssertionError as e:
        print(f"internal assertion failed: {e}", file=sys.stderr)
        return 2
    except (GraphError, FileNotFoundError, json.JSONDecodeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "build-graph":
        w = build_lattice(args.kind, args.extent, "free")
        out = args.out or f"{args.kind}-{args.extent}.json"
        write_graph(w.graph, out)
        if not args.quiet:
            print(f"wrote {out} ({w.n} vertices, {len(w.graph.edges)} edges)")
        return 0

    if args.command == "check-symmetry":
        g = read_graph(args.graph)
        report = classify(g, args.margin)
        print(json.dumps(report.to_jsonable(), indent=2))
        return 0

    if args.command == "check-shrink":
        g = read_graph(args.graph)
        report = search_frozen_set(g, args.max_size, budget=args.budget)
        doc = report.to_jsonable()
        if args.planar:
            import random as _random
            w = Window(g, parse_boundary("free"))
            rng = _random.Random(args.seed)
            violations = 0
            for _ in range(args.lines):
                S = random_connected_set(w, rng.randint(1, args.max_size), rng)
                if check_planar_shrink_set(w, S, random_rational_line(rng)).violation:
                    violations += 1
            doc["planar_random_checks"] = {"pairs": args.lines,
                                           "violations": violations}
        print(json.dumps(doc, indent=2))
        return 0

    if args.command == "geometry":
        g = read_graph(args.graph)
        geom = build_crossing_geometry(g, args.a, Fraction(args.L), args.q)
        print(json.dumps(geom.to_jsonable(), indent=2))
        return 0

    if args.command == "simulate":
        w = _window_from_args(args)
        sch = HarrisSchedule(args.seed)
        sigma0 = sample_initial(w, args.p, sch)
        final, log = run(w, sigma0, sch, args.horizon)
        if args.log:
            log.to_csv(args.log)
        summary = {
            "vertices": w.n, "seed": args.seed, "horizon": args.horizon,
            "events": len(log), "flips": int(log.flipped.sum()),
            "initial_magnetization": float(sigma0.spins.mean()),
            "final_magnetization": float(final.spins.mean()),
        }
        print(json.dumps(summary, indent=2))
        return 0

    if args.command == "experiment":
        cfg = ExperimentConfig.from_json(args.config)
        if args.out:
            cfg.out_dir = args.out
        out = run_experiment(cfg, workers=args.workers)
        if not args.quiet:
            print(f"experiment written to {out}")
        return 0

    if args.command == "render":
        w = _window_from_args(args)
        sch = HarrisSchedule(args.seed)
        sigma = sample_initial(w, args.p, sch)
        if args.horizon > 0:
            sigma, _ = run(w, sigma, sch, args.horizon)
        geom = None
        if args.overlay_a is not None:
            if args.overlay_L is None:
                raise GraphError("--overlay-a needs --overlay-L")
            geom = build_crossing_geometry(w, args.overlay_a,
                                           Fraction(args.overlay_L),
                                           args.overlay_q)
        out = args.out or "snapshot.svg"
        render_snapshot(w, sigma, out, geometry=geom)
        if not args.quiet:
            print(f"wrote {out}")
        return 0

    raise GraphError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: ``gen``, ``run`` and ``bench``.

Exit codes
----------
0  success
2  usage or configuration error
3  file could not be read or written
4  a variable has zero variance
5  two variables are perfectly correlated
6  singular predecessor design in strength estimation
7  threshold overflow (non-finite scores)
8  a bench cell disagrees with the serial reference
9  pair ledger left incomplete
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import _backend, datagen, report
from .errors import CellMismatch, LingamError, PerfectCorrelation, ZeroVariance
from .numerics import normalize_with_scale
from .parallel import MODES, ThresholdPolicy, run_para_lingam
from .serial import direct_lingam

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3


class UsageError(Exception):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return v


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _policy(args):
    try:
        return ThresholdPolicy(gamma0=args.gamma0, c=args.c)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def discover(data, engine="serial", mode="stepped", threads=1, policy=None):
    """Run one engine on a ``(p, n)`` matrix."""
    if engine == "serial":
        return direct_lingam(data)
    if engine == "parallel":
        return run_para_lingam(data, policy=policy, workers=threads, mode=mode)
    raise UsageError(f"unknown engine {engine!r}")


def _named(exc, names):
    """Re-raise data errors with the offending column headers attached."""
    if isinstance(exc, ZeroVariance):
        return ZeroVariance(exc.row, names[exc.row])
    if isinstance(exc, PerfectCorrelation):
        return PerfectCorrelation(exc.i, exc.j, exc.cov, names)
    return exc


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# -- gen ----------------------------------------------------------------------

def cmd_gen(args):
    try:
        cfg = datagen.GeneratorConfig(
            p=args.p, n=args.n, density=args.density, seed=args.seed,
            topology=args.topology, parent_scaling=args.parent_scaling,
            noise=args.noise, weight=args.weight,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data, truth = datagen.generate(cfg)
    csv_path = args.output
    truth_path = args.truth or os.path.splitext(csv_path)[0] + ".truth.json"
    datagen.write_csv(csv_path, data)
    datagen.write_truth(truth_path, truth)
    edges = sum(len(pa) for pa in truth.parents)
    print(f"wrote {csv_path} ({cfg.p} variables x {cfg.n} samples, {edges} edges)"
          f" and {truth_path}")
    return EXIT_OK


# -- run ----------------------------------------------------------------------

def _load(path):
    names, data = datagen.read_csv(path)
    if data.shape[1] < 3:
        raise UsageError(f"{path}: need at least 3 samples, got {data.shape[1]}")
    return names, data


def cmd_run(args):
    if args.backend:
        _backend.set_backend(args.backend)
    policy = _policy(args)
    try:
        names, data = _load(args.input)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        _, mean, std = normalize_with_scale(data)
        result = discover(data, args.engine, args.mode, args.threads, policy)
    except LingamError as exc:
        raise _named(exc, names) from None
    parallel = args.engine == "parallel"
    rep = report.build_report(
        result, names, data.shape[1], mean, std, args.engine,
        mode=args.mode if parallel else None, policy=policy if parallel else None,
        timing=args.timing, stats=not args.no_stats,
    )
    text = report.dumps(rep) if args.format == "json" else report.render_text(rep)
    _write(args.output, text)
    return EXIT_OK


# -- bench --------------------------------------------------------------------

def parse_cell(text):
    """``serial`` or ``parallel[:mode[:threads]]``."""
    parts = text.split(":")
    engine = parts[0]
    if engine == "serial" and len(parts) == 1:
        return {"engine": "serial", "mode": None, "threads": 1}
    if engine != "parallel" or len(parts) > 3:
        raise UsageError(f"bad cell {text!r}; use serial or parallel[:mode[:threads]]")
    mode = parts[1] if len(parts) > 1 else "stepped"
    if mode not in MODES:
        raise UsageError(f"bad mode in cell {text!r}")
    try:
        threads = int(parts[2]) if len(parts) > 2 else 1
    except ValueError:
        raise UsageError(f"bad thread count in cell {text!r}") from None
    if threads < 1:
        raise UsageError(f"bad thread count in cell {text!r}")
    return {"engine": "parallel", "mode": mode, "threads": threads}


def cell_label(cell):
    if cell["engine"] == "serial":
        return "serial"
    return f"parallel:{cell['mode']}:{cell['threads']}"


def bench_dataset(data, cells, policy, repeat=1, label=""):
    """Time every cell on ``data``; the serial cell is always run first.

    Raises
    ------
    CellMismatch
        If a cell's order or strengths differ from the serial cell's.
    """
    cells = [c for c in cells if c["engine"] != "serial"]
    cells.insert(0, {"engine": "serial", "mode": None, "threads": 1})
    rows = []
    ref = None
    for cell in cells:
        best = None
        for _ in range(repeat):
            t0 = time.perf_counter()
            res = discover(data, cell["engine"], cell["mode"], cell["threads"], policy)
            dt = time.perf_counter() - t0
            best = dt if best is None else min(best, dt)
        if ref is None:
            ref = (res, best)
        else:
            if list(res.order) != list(ref[0].order):
                raise CellMismatch(f"{label}{cell_label(cell)}", "order")
            if not np.array_equal(res.B, ref[0].B):
                raise CellMismatch(f"{label}{cell_label(cell)}", "B")
        rows.append({
            "cell": cell_label(cell),
            "engine": cell["engine"],
            "mode": cell["mode"],
            "threads": cell["threads"],
            "wall_time": best,
            "speedup": ref[1] / best if best > 0 else float("inf"),
            "comparisons_performed": res.stats.comparisons_performed,
            "comparisons_possible": res.stats.comparisons_possible,
            "saved_fraction": res.stats.saved_fraction,
            "order": [int(k) for k in res.order],
        })
    return rows


def cmd_bench(args):
    if args.backend:
        _backend.set_backend(args.backend)
    policy = _policy(args)
    cells = [parse_cell(c) for c in args.cells]
    datasets = []
    if args.input:
        try:
            names, data = _load(args.input)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        datasets.append(({"input": args.input, "p": data.shape[0], "n": data.shape[1]}, data))
    else:
        for p in args.p:
            try:
                cfg = datagen.GeneratorConfig(p=p, n=args.n, density=args.density, seed=args.seed)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            datasets.append(({"p": p, "n": args.n, "density": args.density, "seed": args.seed},
                             datagen.generate(cfg)[0]))
    out = {"schema_version": report.SCHEMA_VERSION, "backend": _backend.kernels.NAME,
           "cpu_count": os.cpu_count(), "policy": {"gamma0": policy.gamma0, "c": policy.c},
           "datasets": []}
    for meta, data in datasets:
        rows = bench_dataset(data, cells, policy, repeat=args.repeat,
                             label=f"p={meta['p']} ")
        out["datasets"].append({**meta, "cells": rows})
        if args.format == "text":
            print(f"p={meta['p']} n={meta['n']}")
            for row in rows:
                print(f"  {row['cell']:<22} {row['wall_time']:9.3f} s  "
                      f"speedup {row['speedup']:6.2f}  saved {row['saved_fraction']:.3f}")
    if args.format == "json" or args.output not in (None, "-"):
        _write(args.output, json.dumps(out, indent=2) + "\n")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _add_policy(p):
    p.add_argument("--gamma0", type=float, default=1e-3, help="initial threshold (default 1e-3)")
    p.add_argument("--c", type=float, default=2.0, help="threshold growth factor (default 2)")
    p.add_argument("--backend", choices=("compiled", "python"),
                   help="kernel backend (default: compiled when available)")


def build_parser():
    ap = argparse.ArgumentParser(prog="paralingam",
                                 description="Causal order discovery for linear non-Gaussian models.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic dataset and its ground truth")
    g.add_argument("--p", type=int, required=True, help="number of variables (>= 2)")
    g.add_argument("--n", type=int, default=1024, help="number of samples (>= 10)")
    g.add_argument("--density", choices=datagen.DENSITIES, default="sparse")
    g.add_argument("--seed", type=_seed, default=0)
    g.add_argument("--topology", choices=datagen.TOPOLOGIES, default="random")
    g.add_argument("--parent-scaling", choices=datagen.SCALINGS, default="standardized")
    g.add_argument("--noise", choices=datagen.NOISES, default="power")
    g.add_argument("--weight", type=float, default=None, help="fixed edge weight")
    g.add_argument("--output", "-o", default="data.csv", help="CSV path (default data.csv)")
    g.add_argument("--truth", default=None, help="ground-truth JSON path")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="discover the causal order of a CSV dataset")
    r.add_argument("input", help="CSV with a header row, one sample per row")
    r.add_argument("--engine", choices=("serial", "parallel"), default="serial")
    r.add_argument("--mode", choices=MODES, default="stepped")
    r.add_argument("--threads", type=_positive_int, default=1)
    _add_policy(r)
    r.add_argument("--output", "-o", default="-", help="report path (default stdout)")
    r.add_argument("--format", choices=("json", "text"), default="json")
    r.add_argument("--timing", action="store_true", help="include wall time in the report")
    r.add_argument("--no-stats", action="store_true",
                   help="omit comparison statistics (they vary with scheduling in relaxed mode)")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="time engines on the same data and check agreement")
    b.add_argument("--input", help="CSV dataset; otherwise datasets are generated")
    b.add_argument("--p", type=_positive_int, nargs="+", default=[100])
    b.add_argument("--n", type=int, default=1024)
    b.add_argument("--density", choices=datagen.DENSITIES, default="sparse")
    b.add_argument("--seed", type=_seed, default=0)
    b.add_argument("--cells", nargs="+", default=["serial", "parallel:relaxed:8"],
                   help="serial or parallel[:mode[:threads]]; serial is always included")
    b.add_argument("--repeat", type=_positive_int, default=1, help="keep the best of k runs")
    _add_policy(b)
    b.add_argument("--output", "-o", default="-")
    b.add_argument("--format", choices=("json", "text"), default="text")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"paralingam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"paralingam: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except LingamError as exc:
        print(f"paralingam: error: {exc}", file=sys.stderr)
        return exc.exit_code

"""Compare the compiled and pure-Python kernel backends.

Times the pairwise measure kernel, one serial root search and a full
serial / relaxed-parallel discovery under each available backend, and
checks that the backends agree on the causal order.

Usage::

    python benchmarks/bench_backends.py [--p 40] [--n 1024] [--repeat 3]
"""

import argparse
import json
import time

import numpy as np

from paralingam import (
    available_backends,
    compute_cov_mat,
    direct_lingam,
    find_root,
    normalize_data,
    run_para_lingam,
    use_backend,
)
from paralingam.datagen import GeneratorConfig, generate


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(name, X, repeat, threads):
    Z = normalize_data(X)
    S = compute_cov_mat(Z)
    p = Z.shape[0]
    with use_backend(name) as k:
        hx = k.entropy_rows(Z, np.arange(p, dtype=np.int64))
        t_pair, _ = best_of(lambda: [k.pair_measure(Z, 0, j, S[0, j], hx[0], hx[j])
                                     for j in range(1, p)], repeat)
        t_root, _ = best_of(lambda: find_root(Z, range(p), S), repeat)
        t_serial, ser = best_of(lambda: direct_lingam(X), repeat)
        t_par, par = best_of(lambda: run_para_lingam(X, workers=threads, mode="relaxed"),
                             repeat)
    return {
        "backend": name,
        "pair_measure_us": 1e6 * t_pair / (p - 1),
        "find_root_s": t_root,
        "serial_s": t_serial,
        "relaxed_s": t_par,
        "saved_fraction": par.stats.saved_fraction,
        "order": ser.order,
        "orders_agree": ser.order == par.order,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=40)
    ap.add_argument("--n", type=int, default=1024)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    args = ap.parse_args(argv)

    X, _ = generate(GeneratorConfig(p=args.p, n=args.n, seed=args.seed))
    rows = [bench(name, X, args.repeat, args.threads) for name in available_backends()]
    if len({json.dumps(r["order"]) for r in rows}) != 1:
        raise SystemExit("backends disagree on the causal order")
    if args.json:
        print(json.dumps([{k: v for k, v in r.items() if k != "order"} for r in rows],
                         indent=2))
        return
    base = rows[0]
    print(f"p={args.p} n={args.n} repeat={args.repeat} threads={args.threads}")
    print(f"{'backend':<10}{'pair (us)':>12}{'root (s)':>11}{'serial (s)':>12}"
          f"{'relaxed (s)':>13}{'saved':>8}{'vs first':>10}")
    for r in rows:
        print(f"{r['backend']:<10}{r['pair_measure_us']:>12.1f}{r['find_root_s']:>11.3f}"
              f"{r['serial_s']:>12.3f}{r['relaxed_s']:>13.3f}{r['saved_fraction']:>8.3f}"
              f"{r['serial_s'] / base['serial_s']:>10.2f}")


if __name__ == "__main__":
    main()

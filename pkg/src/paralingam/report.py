"""Versioned JSON run reports.

Floats are written with Python's shortest round-trip ``repr`` so a report
parses back to exactly the values that produced it.  Wall time is volatile
and only included on request, which keeps default reports byte-identical
across runs and thread counts.
"""

import json

import numpy as np

SCHEMA_VERSION = 1


def build_report(result, names, n_samples, mean, std, engine, mode=None, policy=None,
                 timing=False, stats=True):
    """Assemble the report dictionary for one discovery run."""
    rep = {
        "schema_version": SCHEMA_VERSION,
        "engine": engine,
        "mode": mode,
        "policy": None if policy is None else {"gamma0": float(policy.gamma0),
                                               "c": float(policy.c)},
        "n_samples": int(n_samples),
        "variables": list(names),
        "order": [int(k) for k in result.order],
        "order_names": [names[k] for k in result.order],
        "B": np.asarray(result.B, dtype=np.float64).tolist(),
        "scale": {"mean": [float(v) for v in mean], "std": [float(v) for v in std]},
    }
    if stats:
        rep["stats"] = result.stats.to_dict()
    if timing:
        rep["timing"] = {"wall_time": float(result.stats.wall_time)}
    return rep


def dumps(report):
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def loads(text):
    rep = json.loads(text)
    version = rep.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema_version {version!r}")
    return rep


def render_text(report):
    """Short human-readable summary."""
    lines = [
        f"engine: {report['engine']}" + (f" ({report['mode']})" if report["mode"] else ""),
        f"variables: {len(report['variables'])}, samples: {report['n_samples']}",
        "order: " + " -> ".join(report["order_names"]),
    ]
    st = report.get("stats")
    if st is not None:
        lines.append(
            f"comparisons: {st['comparisons_performed']} / {st['comparisons_possible']}"
            f" (saved {st['saved_fraction']:.4f})"
        )
    if "timing" in report:
        lines.append(f"wall time: {report['timing']['wall_time']:.3f} s")
    names = report["variables"]
    B = report["B"]
    pairs = [(abs(B[i][j]), i, j) for i in range(len(names))
             for j in range(len(names)) if B[i][j] != 0.0]
    pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
    if pairs:
        lines.append(f"largest strengths (normalized scale, {min(len(pairs), 20)} of {len(pairs)}):")
        lines.extend(f"  {names[j]} -> {names[i]}: {B[i][j]:+.4f}" for _, i, j in pairs[:20])
    return "\n".join(lines) + "\n"

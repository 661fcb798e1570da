"""Synthetic linear non-Gaussian acyclic datasets and ground-truth metrics.

All randomness comes from numpy's counter-based Philox generator.  The
structure (parents, weights, exponents, permutation) is drawn from
``Philox(seed)``; the noise of the k-th generated variable from
``Philox(seed).jumped(k + 1)``, so each stream is independent of ``p`` and of
every other variable's draws.
"""

import csv
import json
from dataclasses import asdict, dataclass
from math import ceil, floor
from typing import List, Optional

import numpy as np

DENSITIES = ("sparse", "dense")
TOPOLOGIES = ("random", "chain")
SCALINGS = ("standardized", "raw")
NOISES = ("power", "uniform")

WEIGHT_RANGE = (0.5, 0.95)
EXPONENT_RANGES = ((0.5, 0.8), (1.2, 2.0))


@dataclass(frozen=True)
class GeneratorConfig:
    """Dataset recipe.

    ``parent_scaling="standardized"`` feeds each child unit-variance copies
    of its parents, so drawn weights act on a common scale and variance does
    not compound along deep paths.  ``"raw"`` uses the parents as generated.
    """

    p: int
    n: int
    density: str = "sparse"
    seed: int = 0
    topology: str = "random"
    parent_scaling: str = "standardized"
    noise: str = "power"
    weight: Optional[float] = None

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.n < 10:
            raise ValueError(f"n must be >= 10, got {self.n}")
        for name, val, allowed in (("density", self.density, DENSITIES),
                                   ("topology", self.topology, TOPOLOGIES),
                                   ("parent_scaling", self.parent_scaling, SCALINGS),
                                   ("noise", self.noise, NOISES)):
            if val not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {val!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def parent_interval(self):
        if self.density == "sparse":
            lo, hi = 1, floor(0.2 * self.p)
        else:
            lo, hi = ceil(0.25 * self.p), floor(0.5 * self.p)
        lo = max(lo, 1)
        return lo, max(hi, lo)


@dataclass
class GroundTruth:
    """Generating model, indexed by variable id.

    ``b[i, j]`` is the coefficient of ``x_j`` in ``x_i`` on the data scale;
    ``weights[i, j]`` the drawn weight, which equals ``b`` for raw scaling and
    ``b * std(x_j)`` for standardized scaling.
    """

    b: np.ndarray
    weights: np.ndarray
    order: List[int]
    parents: List[List[int]]
    exponents: np.ndarray
    config: GeneratorConfig

    def to_dict(self):
        return {
            "order": list(self.order),
            "b": self.b.tolist(),
            "weights": self.weights.tolist(),
            "parents": [list(pa) for pa in self.parents],
            "exponents": self.exponents.tolist(),
            "seed": self.config.seed,
            "config": asdict(self.config),
        }


def _exponent(u):
    (a0, a1), (b0, b1) = EXPONENT_RANGES
    first = a1 - a0
    return a0 + u if u < first else b0 + (u - first)


def _noise(config, k, exponent):
    g = np.random.Generator(np.random.Philox(config.seed).jumped(k + 1))
    if config.noise == "uniform":
        return g.uniform(-np.sqrt(3.0), np.sqrt(3.0), config.n)
    z = g.standard_normal(config.n)
    return np.sign(z) * np.abs(z) ** exponent


def generate(config):
    """Draw a dataset; returns ``(data, truth)`` with ``data`` of shape ``(p, n)``."""
    p, n = config.p, config.n
    rng = np.random.Generator(np.random.Philox(config.seed))
    lo, hi = config.parent_interval()
    (w0, w1) = WEIGHT_RANGE
    span = sum(b - a for a, b in EXPONENT_RANGES)

    # structure, in generation order
    parents_g = []
    weights_g = []
    exps = np.empty(p)
    for k in range(p):
        if config.topology == "chain":
            pa = [k - 1] if k else []
        else:
            count = min(int(rng.integers(lo, hi, endpoint=True)), k)
            pa = sorted(int(j) for j in rng.choice(k, size=count, replace=False)) if count else []
        if config.weight is not None:
            ws = [float(config.weight)] * len(pa)
        else:
            ws = [float(rng.uniform(w0, w1) * rng.choice((-1.0, 1.0))) for _ in pa]
        parents_g.append(pa)
        weights_g.append(ws)
        exps[k] = _exponent(float(rng.uniform(0.0, span)))
    perm = rng.permutation(p)  # generation position -> variable id

    Xg = np.empty((p, n))
    sd = np.empty(p)
    b_g = np.zeros((p, p))
    for k in range(p):
        x = _noise(config, k, exps[k])
        for j, w in zip(parents_g[k], weights_g[k]):
            coef = w / sd[j] if config.parent_scaling == "standardized" else w
            b_g[k, j] = coef
            x = x + coef * Xg[j]
        Xg[k] = x
        sd[k] = np.std(x, ddof=1)

    data = np.empty((p, n))
    data[perm] = Xg
    b = np.zeros((p, p))
    weights = np.zeros((p, p))
    parents = [[] for _ in range(p)]
    exponents = np.empty(p)
    for k in range(p):
        i = int(perm[k])
        exponents[i] = exps[k]
        parents[i] = sorted(int(perm[j]) for j in parents_g[k])
        for j, w in zip(parents_g[k], weights_g[k]):
            b[i, perm[j]] = b_g[k, j]
            weights[i, perm[j]] = w
    truth = GroundTruth(b, weights, [int(v) for v in perm], parents, exponents, config)
    return data, truth


def ancestors(parents):
    """Boolean matrix ``A[i, j]`` = variable ``i`` is an ancestor of ``j``."""
    p = len(parents)
    A = np.zeros((p, p), dtype=bool)
    for j in range(p):
        A[parents[j], j] = True
    # transitive closure by repeated squaring
    while True:
        nxt = A | ((A.astype(np.int64) @ A.astype(np.int64)) > 0)
        if np.array_equal(nxt, A):
            return A
        A = nxt


def order_violations(order, truth):
    """Count ancestor pairs placed after their descendant.

    Returns
    -------
    (violations, constrained_pairs)
    """
    p = len(truth.parents)
    if sorted(order) != list(range(p)):
        raise ValueError("order must be a permutation of the truth's variables")
    pos = np.empty(p, dtype=np.int64)
    pos[np.asarray(order)] = np.arange(p)
    A = ancestors(truth.parents)
    anc, desc = np.nonzero(A)
    return int(np.sum(pos[desc] < pos[anc])), int(anc.size)


def strength_error(b_est, truth, scale_std):
    """RMSE on the true support after rescaling a normalized-scale estimate."""
    std = np.asarray(scale_std, dtype=np.float64)
    b_orig = np.asarray(b_est, dtype=np.float64) * std[:, None] / std[None, :]
    support = truth.b != 0.0
    if not support.any():
        return 0.0
    d = b_orig[support] - truth.b[support]
    return float(np.sqrt(np.mean(d * d)))


def variable_names(p):
    return [f"x{i}" for i in range(p)]


def write_csv(path, data, names=None):
    """One header row, then one sample per row with round-trip float text."""
    X = np.asarray(data, dtype=np.float64)
    names = names or variable_names(X.shape[0])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in X.T:
            w.writerow([repr(float(v)) for v in row])


def read_csv(path):
    """Return ``(names, data)`` with ``data`` shaped ``(variables, samples)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    names = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    if not names or any(not h for h in names):
        raise ValueError(f"{path}: header row has empty names")
    for k, r in enumerate(body, start=2):
        if len(r) != len(names):
            raise ValueError(f"{path}:{k}: expected {len(names)} fields, got {len(r)}")
    try:
        data = np.array(body, dtype=np.float64).reshape(len(body), len(names)).T
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric field ({exc})") from None
    return names, np.ascontiguousarray(data)


def write_truth(path, truth):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(truth.to_dict(), fh, indent=2)
        fh.write("\n")

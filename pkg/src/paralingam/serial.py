"""Sequential causal-order search and second-step strength estimation.

This engine is the reference the parallel engine is tested against: it
evaluates every unordered pair once per iteration and reduces scores with the
same fixed-order ledger summation.
"""

import time
from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from . import _backend
from .errors import PerfectCorrelation, SingularDesign
from .incremental import update_cov_mat, update_data
from .numerics import PERFECT_CORRELATION_TOL, as_data_matrix, compute_cov_mat, normalize_data

PIVOT_FLOOR = 1e-10


@dataclass
class IterationStats:
    r: int
    comparisons: int
    threshold_final: Optional[float] = None
    rounds: int = 0
    thresholds: List[float] = field(default_factory=list)

    @property
    def possible(self):
        return self.r * (self.r - 1) // 2


@dataclass
class RunStats:
    comparisons_performed: int = 0
    comparisons_possible: int = 0
    wall_time: float = 0.0
    per_iteration: List[IterationStats] = field(default_factory=list)

    @property
    def saved_fraction(self):
        if self.comparisons_possible == 0:
            return 0.0
        return 1.0 - self.comparisons_performed / self.comparisons_possible

    def add(self, it):
        self.per_iteration.append(it)
        self.comparisons_performed += it.comparisons
        self.comparisons_possible += it.possible

    def to_dict(self, timing=False):
        d = {
            "comparisons_performed": self.comparisons_performed,
            "comparisons_possible": self.comparisons_possible,
            "saved_fraction": self.saved_fraction,
            "per_iteration": [asdict(it) for it in self.per_iteration],
        }
        if timing:
            d["wall_time"] = self.wall_time
        return d


class LingamResult(NamedTuple):
    order: List[int]
    B: np.ndarray
    stats: RunStats


def local_cov(sigma, remaining):
    """Contiguous ``r x r`` block of ``sigma``; raises on near-unit entries."""
    rem = np.asarray(remaining, dtype=np.int64)
    cov = np.ascontiguousarray(sigma[np.ix_(rem, rem)])
    off = np.abs(cov)
    np.fill_diagonal(off, 0.0)
    bad = np.argwhere(~(off < 1.0 - PERFECT_CORRELATION_TOL))
    if bad.size:
        a, c = bad[0]
        raise PerfectCorrelation(int(rem[a]), int(rem[c]), float(cov[a, c]))
    return rem, cov


def argmin_lowest(scores):
    """Position of the minimum; the first position wins ties."""
    return int(np.argmin(scores))


def find_root(data, remaining, sigma):
    """Most independent variable of ``remaining`` and the score vector.

    Scores are indexed by position in ``remaining``.  Each unordered pair is
    compared once and both directions are credited.
    """
    rem = np.asarray(remaining, dtype=np.int64)
    if rem.size == 1:
        return int(rem[0]), np.zeros(0)
    X = as_data_matrix(data)
    rem, cov = local_cov(sigma, rem)
    k = _backend.kernels
    hx = k.entropy_rows(X, rem)
    contrib = np.zeros((rem.size, rem.size))
    k.all_pairs_contrib(X, rem, cov, hx, contrib)
    scores = k.settle_rows(contrib)
    return int(rem[argmin_lowest(scores)]), scores


def regress_root(data, remaining, sigma, root):
    """Remove ``root``; returns updated data, covariance and the new active list."""
    rem = [int(w) for w in remaining if int(w) != root]
    if not rem:
        return data, sigma, rem
    return update_data(data, rem, sigma, root), update_cov_mat(sigma, rem, root), rem


def _cholesky_or_none(S):
    try:
        return cholesky(S, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError):
        return None


def _first_bad_pivot(S, piv):
    """Index and value of the first pivot below the floor."""
    if piv is not None:
        a = int(np.flatnonzero(~(piv >= PIVOT_FLOOR))[0])
        return a, float(piv[a])
    # leading minors stay factorable up to the first failure: binary search it
    lo, hi = 1, S.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        L = _cholesky_or_none(S[:mid, :mid])
        if L is not None and np.all(np.diag(L) ** 2 >= PIVOT_FLOOR):
            lo = mid + 1
        else:
            hi = mid
    a = lo - 1
    if a == 0:
        return 0, float(S[0, 0])
    A = S[:a, :a]
    s = S[:a, a]
    return a, float(S[a, a] - s @ np.linalg.solve(A, s))


def estimate_strengths(data, order, sigma=None):
    """OLS of every variable on all of its causal-order predecessors.

    Solved through a Cholesky factor of the covariance in causal order: with
    ``T = L^{-1}``, row ``a`` of ``-T / diag(T)`` holds the regression of
    ``order[a]`` on ``order[:a]``.

    Parameters
    ----------
    data : ndarray
        Normalized ``(p, n)`` data before any regression.
    order : sequence of int
        A permutation of ``range(p)``.
    sigma : ndarray, optional
        Covariance of ``data``; computed when omitted.

    Raises
    ------
    SingularDesign
        If a predecessor design has pivot below 1e-10.
    """
    order = np.asarray(order, dtype=np.int64)
    p = order.size
    if sorted(order.tolist()) != list(range(p)):
        raise ValueError("order must be a permutation of range(p)")
    B = np.zeros((p, p))
    if p == 1:
        return B
    if sigma is None:
        sigma = compute_cov_mat(data)
    S = sigma[np.ix_(order, order)]
    S = 0.5 * (S + S.T)
    L = _cholesky_or_none(S)
    piv = None if L is None else np.diag(L) ** 2
    if piv is None or np.any(~(piv >= PIVOT_FLOOR)):
        a, pivot = _first_bad_pivot(S, piv)
        raise SingularDesign(int(order[a]), pivot)
    T = solve_triangular(L, np.eye(p), lower=True)
    Bp = np.tril(-T / np.diag(T)[:, None], -1)
    B[np.ix_(order, order)] = Bp
    return B


def direct_lingam(data):
    """Serial causal discovery on a ``(p, n)`` data matrix (rows = variables).

    Returns
    -------
    LingamResult
        ``order`` (variable indices, causes first), ``B`` on the normalized
        scale and :class:`RunStats`.
    """
    t0 = time.perf_counter()
    raw = as_data_matrix(data, min_samples=3)
    X0 = normalize_data(raw)
    p = X0.shape[0]
    stats = RunStats()
    if p == 1:
        stats.wall_time = time.perf_counter() - t0
        return LingamResult([0], np.zeros((1, 1)), stats)
    sigma0 = compute_cov_mat(X0)
    X, sigma, U = X0, sigma0, list(range(p))
    order = []
    while U:
        root, _ = find_root(X, U, sigma)
        r = len(U)
        stats.add(IterationStats(r=r, comparisons=r * (r - 1) // 2, rounds=1 if r > 1 else 0))
        order.append(root)
        X, sigma, U = regress_root(X, U, sigma, root)
    B = estimate_strengths(X0, order, sigma0)
    stats.wall_time = time.perf_counter() - t0
    return LingamResult(order, B, stats)

"""Normalization, regression residuals and the pairwise independence measure.

Data matrices are ``(p, n)`` float64 arrays: one row per variable, one
column per sample.  Every function here is pure and safe to call from any
number of threads.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _backend
from .errors import PerfectCorrelation, ZeroVariance

ZERO_VARIANCE_TOL = 1e-14
PERFECT_CORRELATION_TOL = 1e-12


@dataclass(frozen=True)
class EntropyConstants:
    k1: float = 79.047
    k2: float = 7.4129
    beta: float = 0.37457
    h_gauss: float = 0.5 * (1.0 + float(np.log(2.0 * np.pi)))


DEFAULT_CONSTANTS = EntropyConstants()


class Residual(NamedTuple):
    samples: np.ndarray
    variance: float


def as_data_matrix(data, min_samples=2):
    """Validate and return ``data`` as a C-contiguous float64 ``(p, n)`` array."""
    X = np.ascontiguousarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"data must be 2-D (variables x samples), got shape {X.shape}")
    p, n = X.shape
    if p < 1:
        raise ValueError("data has no variables")
    if n < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {n}")
    if not np.all(np.isfinite(X)):
        raise ValueError("data contains non-finite entries")
    return X


def normalize_with_scale(data):
    """Normalize rows and also return the per-row mean and standard deviation.

    Returns
    -------
    X : ndarray
        Rows with zero mean and unit adjusted (n - 1) variance.
    mean, std : ndarray
        Ingest scale, so ``data[w] == X[w] * std[w] + mean[w]`` up to rounding.

    Raises
    ------
    ZeroVariance
        If a row is constant (adjusted variance below 1e-14).
    """
    X = as_data_matrix(data).copy()
    p, n = X.shape
    mean = np.empty(p)
    std = np.empty(p)
    for w in range(p):
        row = X[w]
        mean[w] = np.add.reduce(row) / n
        row -= mean[w]
        var = np.add.reduce(row * row) / (n - 1)
        if var < ZERO_VARIANCE_TOL:
            raise ZeroVariance(w)
        std[w] = np.sqrt(var)
        row /= std[w]
    return X, mean, std


def normalize_data(data):
    """Shift each row to zero mean and scale to unit adjusted variance."""
    return normalize_with_scale(data)[0]


def compute_cov_mat(data):
    """Covariance of normalized rows, ``X X^T / (n - 1)``, exactly symmetric."""
    X = as_data_matrix(data)
    return _backend.kernels.cov_mat(X)


def _coefficient(sigma, i, j):
    b = float(sigma[i, j])
    if not abs(b) < 1.0 - PERFECT_CORRELATION_TOL:
        raise PerfectCorrelation(i, j, b)
    return b


def regress_residual(i, j, data, sigma):
    """Residual of row ``i`` regressed on row ``j`` (unit variance for ``j``)."""
    if i == j:
        raise ValueError("cannot regress a variable on itself")
    b = _coefficient(sigma, i, j)
    return Residual(data[i] - b * data[j], 1.0 - b * b)


def _entropy_from_moments(m1, m2, consts):
    d = m1 - consts.beta
    return consts.h_gauss - consts.k1 * (d * d) - consts.k2 * (m2 * m2)


def entropy_approx(u, consts=DEFAULT_CONSTANTS):
    """Maximum-entropy approximation of differential entropy for a normalized vector."""
    m1, m2 = _backend.kernels.entropy_moments(np.ascontiguousarray(u, dtype=np.float64))
    return _entropy_from_moments(m1, m2, consts)


def pairwise_measure(x_i, x_j, r_i, r_j, consts=DEFAULT_CONSTANTS):
    """Likelihood-ratio statistic; positive values favour ``x_i -> x_j``.

    Grouped as two differences so swapping the pair negates the result exactly.
    """
    h = lambda v: entropy_approx(v, consts)  # noqa: E731
    return (h(x_j) - h(x_i)) + (h(r_i) - h(r_j))


def score_contributions(I):
    """``(min(0, I)^2, min(0, -I)^2)``: the penalties credited to i and j."""
    lo = I if I < 0.0 else 0.0
    hi = -I if -I < 0.0 else 0.0
    return lo * lo, hi * hi


def compare_pair(i, j, data, sigma):
    """Evaluate the measure for one pair and both score contributions.

    Residuals are renormalized with the closed-form variance ``1 - b^2``
    rather than re-estimated from samples.

    Returns
    -------
    tuple
        ``(score_i, score_j, I)``.
    """
    if i == j:
        raise ValueError("cannot compare a variable with itself")
    X = as_data_matrix(data)
    b = _coefficient(sigma, i, j)
    k = _backend.kernels
    hx = k.entropy_rows(X, np.array([i, j], dtype=np.int64))
    I = k.pair_measure(X, i, j, b, hx[0], hx[1])
    s_i, s_j = score_contributions(I)
    return s_i, s_j, I

"""Closed-form data and covariance updates after a root variable is removed.

Both updates keep the full ``(p, n)`` / ``(p, p)`` shapes and only touch the
rows (and columns) listed in ``remaining``, so variable indices stay stable
across iterations.
"""

import numpy as np

from .errors import PerfectCorrelation
from .numerics import PERFECT_CORRELATION_TOL


def _root_coefficients(sigma, remaining, root):
    rem = np.asarray(remaining, dtype=np.int64)
    if np.any(rem == root):
        raise ValueError("root must not be listed in remaining")
    b = sigma[rem, root].astype(np.float64)
    bad = np.flatnonzero(~(np.abs(b) < 1.0 - PERFECT_CORRELATION_TOL))
    if bad.size:
        w = int(rem[bad[0]])
        raise PerfectCorrelation(w, root, float(sigma[w, root]))
    return rem, b, np.sqrt(1.0 - b * b)


def update_data(data, remaining, sigma, root):
    """Replace each remaining row by its renormalized residual against ``root``.

    Returns a new array; the root row and rows outside ``remaining`` are
    copied unchanged.
    """
    rem, b, s = _root_coefficients(sigma, remaining, root)
    out = np.array(data, dtype=np.float64, order="C", copy=True)
    x_root = out[root]
    for k, w in enumerate(rem):
        out[w] = (out[w] - b[k] * x_root) / s[k]
    return out


def update_cov_mat(sigma, remaining, root):
    """Covariance of :func:`update_data`'s output, computed from ``sigma`` alone.

    All reads come from the input snapshot, so entries referencing the root
    column are never overwritten before use.
    """
    rem, b, s = _root_coefficients(sigma, remaining, root)
    out = np.array(sigma, dtype=np.float64, order="C", copy=True)
    block = sigma[np.ix_(rem, rem)]
    new = (block - np.outer(b, b)) / np.outer(s, s)
    # single upper triangle mirrored so the result is exactly symmetric
    new = np.triu(new, 1)
    new = new + new.T
    np.fill_diagonal(new, 1.0)
    out[np.ix_(rem, rem)] = new
    return out

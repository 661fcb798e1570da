# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Mirrors :mod:`paralingam._pykernels` function for function.  Every loop that
touches samples runs without the GIL so the parallel engine's threads run
concurrently.
"""

import numpy as np

from libc.stdint cimport int64_t
from libc.stdlib cimport malloc, free

cdef extern from "_kernels_impl.h" nogil:
    double PL_H_GAUSS
    double pl_pairwise_sum(const double *a, Py_ssize_t n)
    double pl_entropy(double m1, double m2)
    void pl_moments(const double *u, Py_ssize_t n, double *buf, double *m1, double *m2)
    double pl_pair_measure(const double *xi, const double *xj, Py_ssize_t n,
                           double b, double hxi, double hxj, double *work)
    double pl_exp(double x)
    double pl_log1p_unit(double t)
    double pl_logcosh(double u)
    int pl_cas_int(int *p, int expected, int desired)
    int pl_load_acquire(const int *p)
    void pl_store_release(int *p, int v)
    int64_t pl_fetch_add(int64_t *p, int64_t v)
    void pl_yield()

NAME = "compiled"

cdef enum:
    UNCLAIMED = 0
    DONE = -1
    REACHED_THRESHOLD = 0
    FINISHED = 1


# -- elementwise helpers (exposed for accuracy tests) -------------------------

def exp_array(double[::1] x):
    out = np.empty(x.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t k
    for k in range(x.shape[0]):
        o[k] = pl_exp(x[k])
    return out


def log1p_array(double[::1] t):
    out = np.empty(t.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t k
    for k in range(t.shape[0]):
        o[k] = pl_log1p_unit(t[k])
    return out


def logcosh_array(double[::1] u):
    out = np.empty(u.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t k
    for k in range(u.shape[0]):
        o[k] = pl_logcosh(u[k])
    return out


# -- reductions and entropy ---------------------------------------------------

def pairwise_sum(double[::1] a):
    cdef double res
    with nogil:
        res = pl_pairwise_sum(&a[0], a.shape[0]) if a.shape[0] else 0.0
    return res


def entropy_moments(double[::1] u):
    """Return (mean log cosh u, mean u exp(-u^2/2))."""
    cdef Py_ssize_t n = u.shape[0]
    cdef double m1, m2
    cdef double *buf = <double *> malloc(2 * n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    with nogil:
        pl_moments(&u[0], n, buf, &m1, &m2)
    free(buf)
    return m1, m2


def entropy_rows(double[:, ::1] X, int64_t[::1] rows):
    cdef Py_ssize_t r = rows.shape[0], n = X.shape[1], a
    cdef double m1, m2
    out = np.empty(r)
    cdef double[::1] o = out
    cdef double *buf = <double *> malloc(2 * n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    with nogil:
        for a in range(r):
            pl_moments(&X[rows[a], 0], n, buf, &m1, &m2)
            o[a] = pl_entropy(m1, m2)
    free(buf)
    return out


def pair_measure(double[:, ::1] X, Py_ssize_t i, Py_ssize_t j, double b,
                 double hxi, double hxj):
    """I(x_i, x_j, r_i, r_j) for rows i and j of X."""
    cdef Py_ssize_t n = X.shape[1]
    cdef double res
    cdef double *work = <double *> malloc(4 * n * sizeof(double))
    if work == NULL:
        raise MemoryError()
    with nogil:
        res = pl_pair_measure(&X[i, 0], &X[j, 0], n, b, hxi, hxj, work)
    free(work)
    return res


def cov_mat(double[:, ::1] X):
    cdef Py_ssize_t p = X.shape[0], n = X.shape[1], i, j, k
    cdef double v
    out = np.empty((p, p))
    cdef double[:, ::1] S = out
    cdef double *buf = <double *> malloc(n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    with nogil:
        for i in range(p):
            for j in range(i, p):
                for k in range(n):
                    buf[k] = X[i, k] * X[j, k]
                v = pl_pairwise_sum(buf, n) / <double>(n - 1)
                S[i, j] = v
                S[j, i] = v
    free(buf)
    return out


def settle_rows(double[:, ::1] contrib):
    """Pairwise row sums in ascending partner order."""
    cdef Py_ssize_t r = contrib.shape[0], a
    out = np.zeros(r)
    cdef double[::1] o = out
    with nogil:
        for a in range(r):
            o[a] = pl_pairwise_sum(&contrib[a, 0], r)
    return out


def all_pairs_contrib(double[:, ::1] X, int64_t[::1] active, double[:, ::1] cov,
                      double[::1] hx, double[:, ::1] contrib):
    """Serial sweep: every unordered pair once, both directions credited."""
    cdef Py_ssize_t r = active.shape[0], n = X.shape[1], a, c
    cdef double I, lo
    cdef int64_t count = 0
    cdef double *work = <double *> malloc(4 * n * sizeof(double))
    if work == NULL:
        raise MemoryError()
    with nogil:
        for a in range(r):
            contrib[a, a] = 0.0
            for c in range(a + 1, r):
                I = pl_pair_measure(&X[active[a], 0], &X[active[c], 0], n,
                                    cov[a, c], hx[a], hx[c], work)
                lo = I if I < 0.0 else 0.0
                contrib[a, c] = lo * lo
                lo = -I if -I < 0.0 else 0.0
                contrib[c, a] = lo * lo
                count += 1
    free(work)
    return count


# -- iteration-state primitives ----------------------------------------------

cdef struct CState:
    const double *X
    Py_ssize_t n
    Py_ssize_t r
    const int64_t *active
    const double *cov
    const double *hx
    double *S
    double *msg_value
    int *msg_flag
    unsigned char *D
    int64_t *done_count
    int64_t *C
    int *claim
    double *contrib
    int *writes
    int64_t *comparisons
    int64_t *consumed


cdef int _fill(CState *cs, object st) except -1:
    cdef double[:, ::1] X = st.data
    cdef int64_t[::1] active = st.remaining
    cdef double[:, ::1] cov = st.cov
    cdef double[::1] hx = st.hx
    cdef double[::1] S = st.scores
    cdef double[:, ::1] mv = st.msg_value
    cdef int[:, ::1] mf = st.msg_flag
    cdef unsigned char[:, ::1] D = st.done
    cdef int64_t[::1] dc = st.done_count
    cdef int64_t[::1] C = st.targets
    cdef int[:, ::1] claim = st.ledger.claim
    cdef double[:, ::1] contrib = st.ledger.contrib
    cdef int[:, ::1] writes = st.ledger.writes
    cdef int64_t[::1] comps = st.comparisons
    cdef int64_t[::1] cons = st.consumed
    cs.X = &X[0, 0]
    cs.n = X.shape[1]
    cs.r = active.shape[0]
    cs.active = &active[0]
    cs.cov = &cov[0, 0]
    cs.hx = &hx[0]
    cs.S = &S[0]
    cs.msg_value = &mv[0, 0]
    cs.msg_flag = &mf[0, 0]
    cs.D = &D[0, 0]
    cs.done_count = &dc[0]
    cs.C = &C[0]
    cs.claim = &claim[0, 0]
    cs.contrib = &contrib[0, 0]
    cs.writes = &writes[0, 0]
    cs.comparisons = &comps[0]
    cs.consumed = &cons[0]
    return 0


cdef double _drain(CState *cs, Py_ssize_t w) noexcept nogil:
    cdef Py_ssize_t i, r = cs.r
    cdef double score = 0.0
    for i in range(r):
        if pl_load_acquire(&cs.msg_flag[w * r + i]):
            score += cs.msg_value[w * r + i]
            cs.D[w * r + i] = 1
            cs.done_count[w] += 1
            cs.consumed[w] += 1
            cs.msg_flag[w * r + i] = 0
    return score


cdef int _compare_publish(CState *cs, Py_ssize_t w, Py_ssize_t t,
                          double *work) noexcept nogil:
    """Claim pair (w, t); on success compare, credit w, message t."""
    cdef Py_ssize_t r = cs.r, lo_i, hi_i
    cdef double I, own, other, v
    lo_i = w if w < t else t
    hi_i = t if w < t else w
    if not pl_cas_int(&cs.claim[lo_i * r + hi_i], UNCLAIMED, <int>(w + 1)):
        return 0
    # canonical orientation keeps both directions bit-identical to the serial sweep
    I = pl_pair_measure(cs.X + cs.active[lo_i] * cs.n, cs.X + cs.active[hi_i] * cs.n,
                        cs.n, cs.cov[lo_i * r + hi_i], cs.hx[lo_i], cs.hx[hi_i], work)
    v = I if I < 0.0 else 0.0
    own = v * v
    v = -I if -I < 0.0 else 0.0
    other = v * v
    if w != lo_i:
        own, other = other, own
    cs.contrib[w * r + t] = own
    cs.contrib[t * r + w] = other
    cs.writes[w * r + t] += 1
    cs.writes[t * r + w] += 1
    cs.S[w] += own
    cs.D[w * r + t] = 1
    cs.done_count[w] += 1
    cs.comparisons[w] += 1
    cs.msg_value[t * r + w] = other
    pl_store_release(&cs.msg_flag[t * r + w], 1)
    pl_store_release(&cs.claim[lo_i * r + hi_i], DONE)
    return 1


cdef int _relaxed_worker(CState *cs, Py_ssize_t w, double gamma,
                         double *work) noexcept nogil:
    cdef Py_ssize_t r = cs.r, c
    while True:
        cs.S[w] += _drain(cs, w)
        if cs.S[w] > gamma:
            return REACHED_THRESHOLD
        if cs.done_count[w] == r:
            return FINISHED
        c = cs.C[w]
        while True:
            c = (c + 1) % r
            if not cs.D[w * r + c]:
                break
        cs.C[w] = c
        if not _compare_publish(cs, w, c, work):
            if pl_load_acquire(&cs.claim[(w if w < c else c) * r + (c if w < c else w)]) != DONE:
                pl_yield()


def check_messages(st, Py_ssize_t w):
    cdef CState cs
    _fill(&cs, st)
    cdef double res
    with nogil:
        res = _drain(&cs, w)
    return res


def drain_all(st):
    """Host-side drain at a quiescent point; returns nothing, updates S."""
    cdef CState cs
    _fill(&cs, st)
    cdef Py_ssize_t w
    with nogil:
        for w in range(cs.r):
            cs.S[w] += _drain(&cs, w)


def compare_batch(st, int64_t[::1] ws, int64_t[::1] ts):
    cdef CState cs
    _fill(&cs, st)
    cdef Py_ssize_t k, m = ws.shape[0]
    cdef int64_t done = 0
    cdef double *work = <double *> malloc(4 * cs.n * sizeof(double))
    if work == NULL:
        raise MemoryError()
    with nogil:
        for k in range(m):
            done += _compare_publish(&cs, ws[k], ts[k], work)
    free(work)
    return done


def relaxed_worker(st, Py_ssize_t w, double gamma):
    cdef CState cs
    _fill(&cs, st)
    cdef int res
    cdef double *work = <double *> malloc(4 * cs.n * sizeof(double))
    if work == NULL:
        raise MemoryError()
    with nogil:
        res = _relaxed_worker(&cs, w, gamma, work)
    free(work)
    return res


def relaxed_pool_task(st, double gamma, int64_t[::1] counter, int64_t[::1] outcome):
    """One OS thread's share of an epoch: pull logical workers until none left."""
    cdef CState cs
    _fill(&cs, st)
    cdef int64_t w
    cdef double *work = <double *> malloc(4 * cs.n * sizeof(double))
    if work == NULL:
        raise MemoryError()
    with nogil:
        while True:
            w = pl_fetch_add(&counter[0], 1)
            if w >= cs.r:
                break
            outcome[w] = _relaxed_worker(&cs, w, gamma, work)
    free(work)


def try_claim(int[:, ::1] claim, Py_ssize_t a, Py_ssize_t b, Py_ssize_t owner):
    cdef Py_ssize_t lo_i = a if a < b else b, hi_i = b if a < b else a
    return bool(pl_cas_int(&claim[lo_i, hi_i], UNCLAIMED, <int>(owner + 1)))

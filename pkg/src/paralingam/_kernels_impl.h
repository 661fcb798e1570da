/*
 * Hot numerical kernels for the compiled backend.
 *
 * exp and log1p are written branch-free so the per-sample loops vectorize;
 * accuracy is within a few ulp of libm on the ranges used here.  Sums use
 * the blocked pairwise scheme (8 accumulators, 128-element leaves) so the
 * reduction order is fixed and independent of the calling thread.
 */
#ifndef PARALINGAM_KERNELS_IMPL_H
#define PARALINGAM_KERNELS_IMPL_H

#include <math.h>
#include <stdint.h>
#include <string.h>
#include <sched.h>

#define PL_K1 79.047
#define PL_K2 7.4129
#define PL_BETA 0.37457
#define PL_LN2 0.6931471805599453
#define PL_SQRT2 1.4142135623730951

/*
 * Explicit fused multiply-add keeps rounding identical between the vector body
 * and scalar remainder of every loop (contraction is disabled at compile time).
 */
#ifdef __FMA__
#define PL_MADD(a, b, c) fma((a), (b), (c))
#else
#define PL_MADD(a, b, c) ((a) * (b) + (c))
#endif

static const double PL_H_GAUSS = 1.4189385332046727; /* (1 + log(2 pi)) / 2 */

static inline double pl_exp(double x)
{
    const double shift = 6755399441055744.0; /* 1.5 * 2**52 */
    const double log2e = 1.4426950408889634;
    const double ln2_hi = 6.93147180369123816490e-01;
    const double ln2_lo = 1.90821492927058770002e-10;
    double kf, r, p, scale;
    int64_t ki;
    uint64_t bits;

    x = x < -700.0 ? -700.0 : x;
    x = x > 700.0 ? 700.0 : x;
    kf = PL_MADD(x, log2e, shift);
    kf = kf - shift;
    r = PL_MADD(-kf, ln2_hi, x);
    r = PL_MADD(-kf, ln2_lo, r);
    p = 1.0 / 6227020800.0;
    p = PL_MADD(p, r, 1.0 / 479001600.0);
    p = PL_MADD(p, r, 1.0 / 39916800.0);
    p = PL_MADD(p, r, 1.0 / 3628800.0);
    p = PL_MADD(p, r, 1.0 / 362880.0);
    p = PL_MADD(p, r, 1.0 / 40320.0);
    p = PL_MADD(p, r, 1.0 / 5040.0);
    p = PL_MADD(p, r, 1.0 / 720.0);
    p = PL_MADD(p, r, 1.0 / 120.0);
    p = PL_MADD(p, r, 1.0 / 24.0);
    p = PL_MADD(p, r, 1.0 / 6.0);
    p = PL_MADD(p, r, 0.5);
    p = PL_MADD(p, r, 1.0);
    p = PL_MADD(p, r, 1.0);
    ki = (int64_t)kf;
    bits = (uint64_t)(ki + 1023) << 52;
    memcpy(&scale, &bits, sizeof(scale));
    return p * scale;
}

/* log(1 + t) for t in [0, 1]. */
static inline double pl_log1p_unit(double t)
{
    double f, s, z, p;
    int big = (1.0 + t) > PL_SQRT2;

    f = big ? (t - 1.0) * 0.5 : t;
    s = f / (2.0 + f);
    z = s * s;
    p = 1.0 / 23.0;
    p = PL_MADD(p, z, 1.0 / 21.0);
    p = PL_MADD(p, z, 1.0 / 19.0);
    p = PL_MADD(p, z, 1.0 / 17.0);
    p = PL_MADD(p, z, 1.0 / 15.0);
    p = PL_MADD(p, z, 1.0 / 13.0);
    p = PL_MADD(p, z, 1.0 / 11.0);
    p = PL_MADD(p, z, 1.0 / 9.0);
    p = PL_MADD(p, z, 1.0 / 7.0);
    p = PL_MADD(p, z, 1.0 / 5.0);
    p = PL_MADD(p, z, 1.0 / 3.0);
    p = PL_MADD(p, z, 1.0);
    return 2.0 * s * p + (big ? PL_LN2 : 0.0);
}

static inline double pl_logcosh(double u)
{
    double a = fabs(u);
    return (a + pl_log1p_unit(pl_exp(-2.0 * a))) - PL_LN2;
}

static inline double pl_gterm(double u)
{
    double t = u * u;
    return u * pl_exp(-0.5 * t);
}

static double pl_pairwise_sum(const double *a, Py_ssize_t n)
{
    Py_ssize_t i, j;
    double res;

    if (n < 8) {
        res = 0.0;
        for (i = 0; i < n; i++) {
            res += a[i];
        }
        return res;
    }
    else if (n <= 128) {
        double r[8];
        for (j = 0; j < 8; j++) {
            r[j] = a[j];
        }
        for (i = 8; i < n - (n % 8); i += 8) {
            for (j = 0; j < 8; j++) {
                r[j] += a[i + j];
            }
        }
        res = ((r[0] + r[1]) + (r[2] + r[3])) + ((r[4] + r[5]) + (r[6] + r[7]));
        for (; i < n; i++) {
            res += a[i];
        }
        return res;
    }
    else {
        Py_ssize_t n2 = n / 2;
        n2 -= n2 % 8;
        return pl_pairwise_sum(a, n2) + pl_pairwise_sum(a + n2, n - n2);
    }
}

static inline double pl_entropy(double m1, double m2)
{
    double d = m1 - PL_BETA;
    return PL_H_GAUSS - PL_K1 * (d * d) - PL_K2 * (m2 * m2);
}

/* Sample means of log cosh(u) and u exp(-u^2/2); buf holds 2n doubles. */
static void pl_moments(const double *restrict u, Py_ssize_t n, double *restrict buf,
                       double *m1, double *m2)
{
    Py_ssize_t k;
    double *restrict lc = buf;
    double *restrict g = buf + n;

    for (k = 0; k < n; k++) {
        lc[k] = pl_logcosh(u[k]);
        g[k] = pl_gterm(u[k]);
    }
    *m1 = pl_pairwise_sum(lc, n) / (double)n;
    *m2 = pl_pairwise_sum(g, n) / (double)n;
}

/*
 * Likelihood-ratio measure for the pair (i, j) of normalized rows.
 * Residuals are renormalized by the closed-form 1 / sqrt(1 - b^2).
 * work holds 4n doubles.
 */
static double pl_pair_measure(const double *restrict xi, const double *restrict xj,
                              Py_ssize_t n, double b, double hxi, double hxj,
                              double *restrict work)
{
    Py_ssize_t k;
    double inv_s = 1.0 / sqrt(1.0 - b * b);
    double *restrict lci = work;
    double *restrict gi = work + n;
    double *restrict lcj = work + 2 * n;
    double *restrict gj = work + 3 * n;
    double ui, uj, hri, hrj, dn = (double)n;

    for (k = 0; k < n; k++) {
        ui = (xi[k] - b * xj[k]) * inv_s;
        uj = (xj[k] - b * xi[k]) * inv_s;
        lci[k] = pl_logcosh(ui);
        gi[k] = pl_gterm(ui);
        lcj[k] = pl_logcosh(uj);
        gj[k] = pl_gterm(uj);
    }
    hri = pl_entropy(pl_pairwise_sum(lci, n) / dn, pl_pairwise_sum(gi, n) / dn);
    hrj = pl_entropy(pl_pairwise_sum(lcj, n) / dn, pl_pairwise_sum(gj, n) / dn);
    return (hxj - hxi) + (hri - hrj);
}

/* Atomics for claim flags, message cells and the work-distribution counter. */
static inline int pl_cas_int(int *p, int expected, int desired)
{
    return __atomic_compare_exchange_n(p, &expected, desired, 0,
                                       __ATOMIC_ACQ_REL, __ATOMIC_ACQUIRE);
}

static inline int pl_load_acquire(const int *p)
{
    return __atomic_load_n(p, __ATOMIC_ACQUIRE);
}

static inline void pl_store_release(int *p, int v)
{
    __atomic_store_n(p, v, __ATOMIC_RELEASE);
}

static inline int64_t pl_fetch_add(int64_t *p, int64_t v)
{
    return __atomic_fetch_add(p, v, __ATOMIC_RELAXED);
}

static inline void pl_yield(void)
{
    sched_yield();
}

#endif

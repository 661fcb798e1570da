"""Pure numpy fallback for :mod:`paralingam._ckernels`.

Same functions, same state layout, same claim/message protocol.  Claims and
the work counter go through a lock because Python has no user-level CAS.
Threads still interleave correctly but do not run concurrently.
"""

import threading
import time

import numpy as np

NAME = "python"

K1 = 79.047
K2 = 7.4129
BETA = 0.37457
H_GAUSS = 0.5 * (1.0 + np.log(2.0 * np.pi))
LN2 = float(np.log(2.0))

UNCLAIMED = 0
DONE = -1
REACHED_THRESHOLD = 0
FINISHED = 1

_claim_lock = threading.Lock()
_counter_lock = threading.Lock()


def pairwise_sum(a):
    # numpy's add.reduce on contiguous float64 is blocked pairwise summation
    return float(np.add.reduce(np.ascontiguousarray(a, dtype=np.float64)))


def _logcosh(u):
    a = np.abs(u)
    return (a + np.log1p(np.exp(-2.0 * a))) - LN2


def _moments(u):
    n = u.shape[0]
    lc = _logcosh(u)
    g = u * np.exp(-0.5 * (u * u))
    return float(np.add.reduce(lc)) / n, float(np.add.reduce(g)) / n


def _entropy(m1, m2):
    d = m1 - BETA
    return H_GAUSS - K1 * (d * d) - K2 * (m2 * m2)


def entropy_moments(u):
    return _moments(np.ascontiguousarray(u, dtype=np.float64))


def entropy_rows(X, rows):
    return np.array([_entropy(*_moments(X[w])) for w in rows], dtype=np.float64)


def pair_measure(X, i, j, b, hxi, hxj):
    inv_s = 1.0 / np.sqrt(1.0 - b * b)
    ri = (X[i] - b * X[j]) * inv_s
    rj = (X[j] - b * X[i]) * inv_s
    return (hxj - hxi) + (_entropy(*_moments(ri)) - _entropy(*_moments(rj)))


def cov_mat(X):
    n = X.shape[1]
    S = (X @ X.T) / (n - 1)
    upper = np.triu(S)
    return upper + np.triu(S, 1).T


def settle_rows(contrib):
    return np.add.reduce(contrib, axis=1)


def _contribs(I):
    lo = I if I < 0.0 else 0.0
    hi = -I if -I < 0.0 else 0.0
    return lo * lo, hi * hi


def all_pairs_contrib(X, active, cov, hx, contrib):
    r = active.shape[0]
    count = 0
    for a in range(r):
        contrib[a, a] = 0.0
        for c in range(a + 1, r):
            I = pair_measure(X, active[a], active[c], cov[a, c], hx[a], hx[c])
            contrib[a, c], contrib[c, a] = _contribs(I)
            count += 1
    return count


def try_claim(claim, a, b, owner):
    lo, hi = (a, b) if a < b else (b, a)
    with _claim_lock:
        if claim[lo, hi] != UNCLAIMED:
            return False
        claim[lo, hi] = owner + 1
        return True


def _drain(st, w):
    flags = st.msg_flag[w]
    idx = np.flatnonzero(flags)
    if idx.size == 0:
        return 0.0
    score = 0.0
    for i in idx:
        score += st.msg_value[w, i]
    st.done[w, idx] = 1
    st.done_count[w] += idx.size
    st.consumed[w] += idx.size
    flags[idx] = 0
    return float(score)


def check_messages(st, w):
    return _drain(st, w)


def drain_all(st):
    for w in range(st.remaining.shape[0]):
        st.scores[w] += _drain(st, w)


def _compare_publish(st, w, t):
    led = st.ledger
    lo, hi = (w, t) if w < t else (t, w)
    if not try_claim(led.claim, lo, hi, w):
        return 0
    I = pair_measure(st.data, st.remaining[lo], st.remaining[hi], st.cov[lo, hi],
                     st.hx[lo], st.hx[hi])
    own, other = _contribs(I)
    if w != lo:
        own, other = other, own
    led.contrib[w, t] = own
    led.contrib[t, w] = other
    led.writes[w, t] += 1
    led.writes[t, w] += 1
    st.scores[w] += own
    st.done[w, t] = 1
    st.done_count[w] += 1
    st.comparisons[w] += 1
    st.msg_value[t, w] = other
    st.msg_flag[t, w] = 1
    led.claim[lo, hi] = DONE
    return 1


def compare_batch(st, ws, ts):
    done = 0
    for w, t in zip(ws, ts):
        done += _compare_publish(st, int(w), int(t))
    return done


def _relaxed_worker(st, w, gamma):
    r = st.remaining.shape[0]
    row = st.done[w]
    while True:
        st.scores[w] += _drain(st, w)
        if st.scores[w] > gamma:
            return REACHED_THRESHOLD
        if st.done_count[w] == r:
            return FINISHED
        c = int(st.targets[w])
        while True:
            c = (c + 1) % r
            if not row[c]:
                break
        st.targets[w] = c
        if not _compare_publish(st, w, c):
            time.sleep(0)


def relaxed_worker(st, w, gamma):
    return _relaxed_worker(st, w, gamma)


def relaxed_pool_task(st, gamma, counter, outcome):
    r = st.remaining.shape[0]
    while True:
        with _counter_lock:
            w = int(counter[0])
            counter[0] += 1
        if w >= r:
            return
        outcome[w] = _relaxed_worker(st, w, gamma)

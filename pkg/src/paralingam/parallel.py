"""Threshold-pruned parallel root finding.

Each remaining variable is a logical *worker* that accumulates the penalties
of its own pairwise comparisons.  A comparison is computed once, by whichever
worker claims the unordered pair first; the partner receives its share through
a single-producer/single-consumer message cell.  Workers whose running score
exceeds the threshold ``gamma`` stop early, and ``gamma`` grows geometrically
until some worker completes every comparison while still below it.

Two execution modes are provided:

``stepped``
    Lock-step rounds.  A scheduler picks one target per active worker, all
    selected comparisons run, a barrier follows, then every worker drains its
    messages.  Fully deterministic, including comparison counts.
``relaxed``
    One barrier per threshold epoch.  Inside an epoch, workers loop
    independently over their unfinished pairs and race for claims.

The returned root never depends on the schedule: final scores are settled
from the pair ledger in a fixed order, and any incomplete worker that could
still tie or beat the best complete worker is completed before the argmin.
"""

import concurrent.futures
import enum
import time
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import IncompleteLedger, ThresholdOverflow
from .numerics import as_data_matrix, compute_cov_mat, normalize_data
from .serial import (
    IterationStats,
    LingamResult,
    RunStats,
    estimate_strengths,
    local_cov,
    regress_root,
)

MODES = ("stepped", "relaxed")


@dataclass(frozen=True)
class ThresholdPolicy:
    """Geometric threshold schedule ``gamma0 * c**k``, capped at ``cap``."""

    gamma0: float = 1e-3
    c: float = 2.0
    cap: float = 1e12

    def __post_init__(self):
        if not self.gamma0 > 0.0:
            raise ValueError(f"gamma0 must be > 0, got {self.gamma0}")
        if not self.c > 1.0:
            raise ValueError(f"c must be > 1, got {self.c}")
        if not self.cap >= self.gamma0:
            raise ValueError("cap must be at least gamma0")

    def grow(self, gamma):
        g = gamma * self.c
        if g > self.cap:
            raise ThresholdOverflow(g, self.cap)
        return g


class WorkerOutcome(enum.IntEnum):
    REACHED_THRESHOLD = 0
    FINISHED = 1


@dataclass
class PairLedger:
    """Per-ordered-pair penalties plus the per-unordered-pair claim word.

    ``claim[lo, hi]`` (upper triangle) is 0 while unclaimed, ``owner + 1``
    while a worker computes the pair and -1 once published.  ``writes``
    counts stores into each ``contrib`` cell.
    """

    contrib: np.ndarray
    claim: np.ndarray
    writes: np.ndarray

    @classmethod
    def empty(cls, r):
        return cls(
            np.zeros((r, r)),
            np.zeros((r, r), dtype=np.intc),
            np.zeros((r, r), dtype=np.intc),
        )


class IterationState:
    """Mutable state of one root-finding iteration.

    Arrays are indexed by position in ``remaining`` and laid out for the
    kernel backends (C-contiguous, fixed dtypes).
    """

    def __init__(self, data, remaining, cov, hx, gamma):
        r = len(remaining)
        self.data = data
        self.remaining = np.ascontiguousarray(remaining, dtype=np.int64)
        self.cov = np.ascontiguousarray(cov, dtype=np.float64)
        self.hx = np.ascontiguousarray(hx, dtype=np.float64)
        self.scores = np.zeros(r)
        self.msg_value = np.zeros((r, r))
        self.msg_flag = np.zeros((r, r), dtype=np.intc)
        self.done = np.eye(r, dtype=np.uint8)
        self.done_count = np.ones(r, dtype=np.int64)
        self.targets = np.zeros(r, dtype=np.int64)
        self.ledger = PairLedger.empty(r)
        self.comparisons = np.zeros(r, dtype=np.int64)
        self.consumed = np.zeros(r, dtype=np.int64)
        self.gamma = float(gamma)
        self.thresholds = [self.gamma]
        self.active = list(range(r))
        self.rounds = 0

    @property
    def r(self):
        return self.remaining.shape[0]

    def complete(self):
        return self.done_count == self.r

    @classmethod
    def build(cls, data, remaining, sigma, gamma):
        X = as_data_matrix(data)
        rem, cov = local_cov(sigma, remaining)
        hx = _backend.kernels.entropy_rows(X, rem)
        return cls(X, rem, cov, hx, gamma)


def check_messages(w, state):
    """Consume worker ``w``'s published messages; returns their summed penalty.

    Marks each sender as compared in ``done[w]`` and clears the cells.  The
    caller adds the result to ``state.scores[w]``.
    """
    return _backend.kernels.check_messages(state, w)


def _raise_threshold(state, policy):
    state.gamma = policy.grow(state.gamma)
    state.thresholds.append(state.gamma)


def _finished(state):
    below = state.scores < state.gamma
    return bool(below.any() and state.complete()[below].all())


def scheduler_step(state, policy):
    """Decide termination, else pick the next round's workers and targets.

    Returns
    -------
    finish : bool
        True when at least one worker is below the threshold and every such
        worker has compared against all others.
    active : list of int
        Workers that compare this round (ascending).
    targets : ndarray
        ``targets[w]`` is the partner of each active worker.
    """
    if _finished(state):
        state.active = []
        return True, [], state.targets
    while not (state.scores < state.gamma).any():
        _raise_threshold(state, policy)
    if _finished(state):
        state.active = []
        return True, [], state.targets

    r = state.r
    done = state.done
    complete = state.complete()
    partner = np.full(r, -1, dtype=np.int64)
    active = []
    for w in np.flatnonzero((state.scores < state.gamma) & ~complete):
        start = int(state.targets[w])
        c = -1
        for step in range(r):
            # skip finished pairs and pairs already picked from the other side
            cc = (start + step) % r
            if not done[w, cc] and partner[cc] != w:
                c = cc
                break
        if c < 0:
            continue
        partner[w] = c
        state.targets[w] = c
        active.append(int(w))
    state.active = active
    return False, active, state.targets


def worker_loop_relaxed(w, state, gamma):
    """Run worker ``w`` until its score exceeds ``gamma`` or it has no pairs left."""
    return WorkerOutcome(_backend.kernels.relaxed_worker(state, w, gamma))


def settle_ledger(state):
    """Definitive scores: each ledger row summed in ascending partner order.

    Raises
    ------
    IncompleteLedger
        If some pair is still owned by a worker.
    """
    led = state.ledger
    owned = np.argwhere(np.triu(led.claim, 1) > 0)
    if owned.size:
        raise IncompleteLedger([tuple(int(v) for v in pr) for pr in owned])
    return _backend.kernels.settle_rows(led.contrib)


def _run_batch(state, ws, ts, pool, threads):
    k = _backend.kernels
    ws = np.ascontiguousarray(ws, dtype=np.int64)
    ts = np.ascontiguousarray(ts, dtype=np.int64)
    if pool is None or threads <= 1 or ws.size < 2:
        return k.compare_batch(state, ws, ts)
    parts = min(threads, ws.size)
    futs = [
        pool.submit(k.compare_batch, state, a, b)
        for a, b in zip(np.array_split(ws, parts), np.array_split(ts, parts))
    ]
    return sum(f.result() for f in futs)


def _complete_worker(state, w):
    ts = np.flatnonzero(state.done[w] == 0).astype(np.int64)
    ts = ts[ts != w]
    if ts.size:
        _backend.kernels.compare_batch(state, np.full(ts.size, w, dtype=np.int64), ts)


def _reconcile(state):
    """Complete any worker whose partial score could still win; return argmin.

    Partial scores never exceed final ones (non-negative terms, fixed
    reduction tree, zero padding), so once no incomplete worker is below the
    best complete worker or ``gamma`` the argmin over complete workers is the
    argmin over all of them.
    """
    kernels = _backend.kernels
    idx = np.arange(state.r)
    while True:
        scores = settle_ledger(state)
        complete = state.complete()
        pool = np.flatnonzero(complete)
        cand = int(pool[np.argmin(scores[pool])])
        best = scores[cand]
        late = ~complete & ((scores < best) | ((scores == best) & (idx < cand))
                            | (scores < state.gamma))
        if not late.any():
            return cand, scores
        for w in np.flatnonzero(late):
            _complete_worker(state, int(w))
        kernels.drain_all(state)


def _stepped(state, policy, pool, threads):
    kernels = _backend.kernels
    while True:
        finish, active, targets = scheduler_step(state, policy)
        if finish:
            return
        _run_batch(state, active, targets[active], pool, threads)
        state.rounds += 1
        kernels.drain_all(state)


def _relaxed(state, policy, pool, threads):
    kernels = _backend.kernels
    r = state.r
    state.targets[:] = np.arange(r)
    while True:
        counter = np.zeros(1, dtype=np.int64)
        outcome = np.full(r, -1, dtype=np.int64)
        if pool is None or threads <= 1:
            kernels.relaxed_pool_task(state, state.gamma, counter, outcome)
        else:
            futs = [pool.submit(kernels.relaxed_pool_task, state, state.gamma, counter, outcome)
                    for _ in range(min(threads, r))]
            for f in futs:
                f.result()
        state.rounds += 1
        kernels.drain_all(state)
        if (state.complete() & (state.scores < state.gamma)).any():
            return
        _raise_threshold(state, policy)
        while not (state.scores < state.gamma).any():
            _raise_threshold(state, policy)


def para_find_root(data, remaining, sigma, policy=None, workers=1, mode="stepped",
                   pool=None, return_state=False):
    """Parallel counterpart of :func:`paralingam.serial.find_root`.

    Parameters
    ----------
    data, remaining, sigma
        As for the serial engine.
    policy : ThresholdPolicy, optional
    workers : int
        Number of OS threads.
    mode : {"stepped", "relaxed"}
    pool : concurrent.futures.Executor, optional
        Reused across iterations by :func:`run_para_lingam`.
    return_state : bool
        Also return the final :class:`IterationState`.

    Returns
    -------
    root : int
    stats : IterationStats
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    policy = policy or ThresholdPolicy()
    rem = np.asarray(remaining, dtype=np.int64)
    if rem.size == 1:
        stats = IterationStats(r=1, comparisons=0, threshold_final=policy.gamma0,
                               thresholds=[policy.gamma0])
        return (int(rem[0]), stats, None) if return_state else (int(rem[0]), stats)

    state = IterationState.build(data, rem, sigma, policy.gamma0)
    own_pool = None
    if workers > 1 and pool is None:
        pool = own_pool = concurrent.futures.ThreadPoolExecutor(max_workers=workers)
    try:
        if mode == "stepped":
            _stepped(state, policy, pool, workers)
        else:
            _relaxed(state, policy, pool, workers)
        cand, _ = _reconcile(state)
    finally:
        if own_pool is not None:
            own_pool.shutdown()
    stats = IterationStats(
        r=state.r,
        comparisons=int(state.comparisons.sum()),
        threshold_final=state.gamma,
        rounds=state.rounds,
        thresholds=list(state.thresholds),
    )
    root = int(state.remaining[cand])
    return (root, stats, state) if return_state else (root, stats)


def run_para_lingam(data, policy=None, workers=1, mode="stepped"):
    """Parallel causal discovery; output matches :func:`paralingam.serial.direct_lingam`."""
    t0 = time.perf_counter()
    policy = policy or ThresholdPolicy()
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
    pool = concurrent.futures.ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while U:
            root, it = para_find_root(X, U, sigma, policy, workers, mode, pool=pool)
            stats.add(it)
            order.append(root)
            X, sigma, U = regress_root(X, U, sigma, root)
    finally:
        if pool is not None:
            pool.shutdown()
    B = estimate_strengths(X0, order, sigma0)
    stats.wall_time = time.perf_counter() - t0
    return LingamResult(order, B, stats)

"""Claim races between two workers on a single pair."""

import sys
import threading

import numpy as np
import pytest

from conftest import random_normalized
from paralingam import IterationState, compute_cov_mat, find_root, settle_ledger
from paralingam import _backend


@pytest.fixture
def fast_switching():
    old = sys.getswitchinterval()
    sys.setswitchinterval(1e-6)
    yield
    sys.setswitchinterval(old)


def test_two_workers_one_pair(backend, fast_switching):
    X = random_normalized(0, 2, 16)
    S = compute_cov_mat(X)
    _, serial_scores = find_root(X, [0, 1], S)
    reps = 10_000
    start = threading.Barrier(3)
    end = threading.Barrier(3)
    box = {}
    stop = False

    def racer(w):
        while True:
            start.wait()
            if stop:
                return
            _backend.kernels.relaxed_worker(box["st"], w, 1e12)
            end.wait()

    threads = [threading.Thread(target=racer, args=(w,)) for w in (0, 1)]
    for t in threads:
        t.start()
    try:
        for _ in range(reps):
            st = IterationState.build(X, [0, 1], S, 1e12)
            box["st"] = st
            start.wait()
            end.wait()
            led = st.ledger
            assert led.writes[0, 1] == 1 and led.writes[1, 0] == 1
            assert led.claim[0, 1] == -1
            assert st.comparisons.sum() == 1
            # the losing worker is credited through its message cell
            assert st.consumed.sum() == 1 and not st.msg_flag.any()
            assert st.done.all()
            assert np.array_equal(settle_ledger(st), serial_scores)
    finally:
        stop = True
        start.wait()
        for t in threads:
            t.join()

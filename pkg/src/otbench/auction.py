"""Bertsekas auction for the assignment problem, plain and with eps-scaling.

Bidders are rows with reward ``R = -C``; objects are columns with prices
``p``.  Bidding is Gauss-Seidel: the lowest-index unassigned bidder bids
next, raising the price of its best object by ``best - second + eps``.
"""

from __future__ import annotations

import time

import numpy as np
from numba import njit

from .core import Flow, OTInstance, make_result, require_assignment

DEFAULT_BID_BUDGET = 10**9


@njit(cache=True, inline="always")
def _heap_push(heap, size, x):
    k = size
    heap[k] = x
    while k > 0:
        parent = (k - 1) >> 1
        if heap[parent] <= heap[k]:
            break
        heap[parent], heap[k] = heap[k], heap[parent]
        k = parent
    return size + 1


@njit(cache=True, inline="always")
def _heap_pop(heap, size):
    top = heap[0]
    size -= 1
    heap[0] = heap[size]
    k = 0
    while True:
        left = 2 * k + 1
        if left >= size:
            break
        child = left
        if left + 1 < size and heap[left + 1] < heap[left]:
            child = left + 1
        if heap[k] <= heap[child]:
            break
        heap[k], heap[child] = heap[child], heap[k]
        k = child
    return top, size


@njit(cache=True)
def _bid_loop(C, prices, match_row, match_col, eps, heap, state, max_bids,
              stop_at):
    """Run bids until at most ``stop_at`` bidders remain unassigned or the
    bid budget is spent.  ``state = [heap size, bids]``."""
    n = C.shape[0]
    size = state[0]
    bids = state[1]
    limit = bids + max_bids
    while size > stop_at and bids < limit:
        i, size = _heap_pop(heap, size)
        best = -np.inf
        second = -np.inf
        jbest = -1
        for j in range(n):
            val = -C[i, j] - prices[j]
            if val > best:
                second = best
                best = val
                jbest = j
            elif val > second:
                second = val
        if n == 1:
            second = best
        prices[jbest] = -C[i, jbest] - second + eps
        old = match_col[jbest]
        match_col[jbest] = i
        match_row[i] = jbest
        if old >= 0:
            match_row[old] = -1
            size = _heap_push(heap, size, old)
        bids += 1
    state[0] = size
    state[1] = bids
    return size <= stop_at


class _Round:
    def __init__(self, n, prices):
        self.prices = prices
        self.match_row = np.full(n, -1, dtype=np.int64)
        self.match_col = np.full(n, -1, dtype=np.int64)
        self.heap = np.arange(n, dtype=np.int64)
        self.state = np.array([n, 0], dtype=np.int64)


def _complete_last_two(C, match_row, match_col):
    rows = np.flatnonzero(match_row < 0)
    cols = np.flatnonzero(match_col < 0)
    if rows.size != 2:
        return
    a, b = rows
    x, y = cols
    if C[a, x] + C[b, y] <= C[a, y] + C[b, x]:
        pairs = ((a, x), (b, y))
    else:
        pairs = ((a, y), (b, x))
    for i, j in pairs:
        match_row[i] = j
        match_col[j] = i


def _auction_round(C, prices, eps, deadline, bids_left, complete_last_two,
                   chunk=1_000_000):
    n = C.shape[0]
    rnd = _Round(n, prices)
    stop_at = 2 if complete_last_two and n >= 2 else 0
    finished = False
    while not finished:
        step = min(chunk, bids_left - int(rnd.state[1]))
        if step <= 0:
            break
        finished = _bid_loop(C, prices, rnd.match_row, rnd.match_col,
                             float(eps), rnd.heap, rnd.state, step, stop_at)
        if (not finished and deadline is not None
                and time.perf_counter() > deadline):
            break
    if finished and stop_at:
        _complete_last_two(C, rnd.match_row, rnd.match_col)
    return rnd, finished


def _result(inst, rnd, *, bids, rounds, wall, finished, solver, eps, **info):
    flow = Flow.from_matching(rnd.match_row, inst.n)
    return make_result(inst, flow, iterations=bids, wall_time=wall,
                       exact=False, converged=finished, solver=solver,
                       epsilon=float(eps), prices=rnd.prices.copy(),
                       match_of_row=rnd.match_row.copy(), rounds=rounds,
                       timeout=not finished, **info)


def solve_auction(inst: OTInstance, epsilon: float, *,
                  bid_budget: int = DEFAULT_BID_BUDGET,
                  time_limit: float | None = None,
                  complete_last_two: bool = False):
    """Auction at a fixed ``epsilon``; cost is within ``n * epsilon`` of the
    optimum, so integral costs with ``epsilon < 1/n`` give an exact answer.

    ``complete_last_two`` stops bidding once two bidders are left and pairs
    them with the two free objects in the cheaper of the two ways.  The
    ``n * epsilon`` bound is not guaranteed in that mode.

    A run that exhausts ``bid_budget`` or ``time_limit`` is returned with
    ``converged=False`` and a partial matching.
    """
    require_assignment(inst)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    t0 = time.perf_counter()
    deadline = None if time_limit is None else t0 + time_limit
    prices = np.zeros(inst.n, dtype=np.float64)
    rnd, finished = _auction_round(inst.cost, prices, epsilon, deadline,
                                   bid_budget, complete_last_two)
    wall = time.perf_counter() - t0
    return _result(inst, rnd, bids=int(rnd.state[1]), rounds=1, wall=wall,
                   finished=finished, solver="auction", eps=epsilon)


def epsilon_schedule(epsilon0: float, theta: float, epsilon_final: float):
    if theta <= 1:
        raise ValueError("theta must exceed 1")
    if epsilon_final <= 0 or epsilon0 < epsilon_final:
        raise ValueError("need epsilon0 >= epsilon_final > 0")
    eps = [float(epsilon0)]
    while eps[-1] > epsilon_final:
        eps.append(max(eps[-1] / theta, float(epsilon_final)))
    return eps


def solve_auction_scaled(inst: OTInstance, epsilon0: float | None = None,
                         theta: float = 4.0,
                         epsilon_final: float | None = None, *,
                         bid_budget: int = DEFAULT_BID_BUDGET,
                         time_limit: float | None = None,
                         complete_last_two: bool = False):
    """Auction over ``epsilon0, epsilon0/theta, ...`` down to
    ``epsilon_final``, keeping prices and unassigning everyone between
    rounds.  Defaults: ``epsilon0 = N/2``, ``epsilon_final = 1/(n+1)``."""
    require_assignment(inst)
    n = inst.n
    if epsilon_final is None:
        epsilon_final = 1.0 / (n + 1)
    if epsilon0 is None:
        epsilon0 = max(inst.max_cost / 2.0, epsilon_final)
    schedule = epsilon_schedule(epsilon0, theta, epsilon_final)
    t0 = time.perf_counter()
    deadline = None if time_limit is None else t0 + time_limit
    prices = np.zeros(n, dtype=np.float64)
    bids = 0
    for k, eps in enumerate(schedule):
        rnd, finished = _auction_round(inst.cost, prices, eps, deadline,
                                       bid_budget - bids, complete_last_two)
        bids += int(rnd.state[1])
        if not finished:
            break
    wall = time.perf_counter() - t0
    return _result(inst, rnd, bids=bids, rounds=k + 1, wall=wall,
                   finished=finished, solver="auction_scaled",
                   eps=schedule[k], epsilon0=float(epsilon0),
                   theta=float(theta))


def eps_cs_violation(C, prices, match_of_row, epsilon) -> float:
    """Largest violation of eps-complementary slackness over assigned rows
    (<= 0 means the condition holds)."""
    C = np.asarray(C, dtype=np.float64)
    rows = np.flatnonzero(match_of_row >= 0)
    if rows.size == 0:
        return 0.0
    values = -C[rows] - prices[None, :]
    own = values[np.arange(rows.size), match_of_row[rows]]
    return float(np.max(values.max(axis=1) - epsilon - own))

"""Kuhn-Munkres for the assignment problem and the batched variant.

Both solvers keep dual potentials ``u`` (rows) and ``v`` (columns) with
``u[i] + v[j] <= cost[i, j]`` and every matched edge tight.

Batched KM works on costs quantized to ``{0, ..., B}``.  Each phase finds a
maximal set of vertex-disjoint shortest augmenting paths in the subgraph of
tight edges (layered BFS, then DFS extraction) and augments them all at once.
When the tight subgraph has no augmenting path, the duals are raised across
the cut between the rows reachable from free rows and the rest.
"""

from __future__ import annotations

import time

import numpy as np
from numba import njit

from .core import Flow, OTInstance, make_result, require_assignment

_INF = np.int64(1) << 62


@njit(cache=True)
def _km_rows(a, u, v, p, way, minv, used, start, stop):
    """e-maxx Hungarian: insert rows ``start+1 .. stop`` (1-based arrays)."""
    m = a.shape[1]
    for i in range(start + 1, stop + 1):
        p[0] = i
        j0 = 0
        for j in range(m + 1):
            minv[j] = _INF
            used[j] = False
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = _INF
            j1 = 0
            ui0 = u[i0]
            for j in range(1, m + 1):
                if not used[j]:
                    cur = a[i0 - 1, j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break


def solve_km(inst: OTInstance, *, time_limit: float | None = None,
             chunk: int = 256):
    """Exact minimum-cost perfect matching in O(n^3).

    ``info['u']``/``info['v']`` are the optimal duals; their sum equals the
    objective.
    """
    require_assignment(inst)
    t0 = time.perf_counter()
    n = inst.n
    a = inst.cost
    u = np.zeros(n + 1, dtype=np.int64)
    v = np.zeros(n + 1, dtype=np.int64)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    minv = np.zeros(n + 1, dtype=np.int64)
    used = np.zeros(n + 1, dtype=np.bool_)
    done = 0
    while done < n:
        stop = min(n, done + chunk)
        _km_rows(a, u, v, p, way, minv, used, done, stop)
        done = stop
        if (done < n and time_limit is not None
                and time.perf_counter() - t0 > time_limit):
            break
    wall = time.perf_counter() - t0
    match_of_row = np.full(n, -1, dtype=np.int64)
    cols = np.flatnonzero(p[1:] > 0)
    match_of_row[p[1:][cols] - 1] = cols
    flow = Flow.from_matching(match_of_row, n)
    return make_result(inst, flow, iterations=done, wall_time=wall,
                       exact=done == n, converged=done == n, solver="km",
                       u=u[1:].copy(), v=v[1:].copy(),
                       match_of_row=match_of_row)


def quantize_costs(C: np.ndarray, B: int):
    """Map costs to ``floor(C * B / N)`` where ``N = max(C)``.

    Returns the quantized matrix and the scale ``N / B``.  Every entry's
    rounding error is below that scale.  An all-zero matrix is returned as is
    with scale 1.
    """
    if B < 1:
        raise ValueError("quantization level must be >= 1")
    C = np.asarray(C, dtype=np.int64)
    N = int(C.max()) if C.size else 0
    if N <= 0:
        return C.copy(), 1.0
    B = int(B)
    if B == N:
        return C.copy(), 1.0
    if N * B < 2**63:
        Q = (C * np.int64(B)) // np.int64(N)
    else:
        Q = np.floor(C.astype(np.float64) * (B / N)).astype(np.int64)
    return Q, N / B


@njit(cache=True)
def _tight_bfs(Q, u, v, match_row, match_col, dist, col_seen, queue):
    """Layered BFS from free rows over tight edges.

    Returns the layer of the first free column reached (as a row distance +
    1), or -1 if no free column is reachable.  ``col_seen`` marks reached
    columns.
    """
    n = Q.shape[0]
    head = 0
    tail = 0
    for i in range(n):
        col_seen[i] = False
        if match_row[i] < 0:
            dist[i] = 0
            queue[tail] = i
            tail += 1
        else:
            dist[i] = _INF
    limit = _INF
    while head < tail:
        i = queue[head]
        head += 1
        if dist[i] + 1 > limit:
            break
        ui = u[i]
        for j in range(n):
            if Q[i, j] - ui - v[j] != 0:
                continue
            col_seen[j] = True
            mate = match_col[j]
            if mate < 0:
                if limit == _INF:
                    limit = dist[i] + 1
            elif dist[mate] == _INF:
                dist[mate] = dist[i] + 1
                queue[tail] = mate
                tail += 1
    return -1 if limit == _INF else limit


@njit(cache=True)
def _augment_maximal(Q, u, v, match_row, match_col, dist, limit, it, stack):
    """DFS extraction of a maximal set of disjoint shortest augmenting
    paths in the layered tight graph."""
    n = Q.shape[0]
    for i in range(n):
        it[i] = 0
    found = 0
    for s in range(n):
        if match_row[s] >= 0 or dist[s] != 0:
            continue
        top = 0
        stack[0] = s
        while top >= 0:
            i = stack[top]
            advanced = False
            ui = u[i]
            while it[i] < n:
                j = it[i]
                it[i] += 1
                if Q[i, j] - ui - v[j] != 0 or match_row[i] == j:
                    continue
                mate = match_col[j]
                if mate < 0:
                    if dist[i] + 1 != limit:
                        continue
                    jc = j
                    for k in range(top, -1, -1):
                        r = stack[k]
                        old = match_row[r]
                        match_row[r] = jc
                        match_col[jc] = r
                        jc = old
                    found += 1
                    top = -1
                    advanced = True
                    break
                if dist[mate] == dist[i] + 1 and dist[mate] < limit:
                    top += 1
                    stack[top] = mate
                    advanced = True
                    break
            if not advanced:
                dist[i] = _INF
                top -= 1
    return found


@njit(cache=True)
def _raise_duals(Q, u, v, match_row, match_col, dist, col_seen, slack,
                 row_in):
    """Hungarian search from the current forest: raise duals on reached rows
    (and lower them on reached columns) until a free column becomes tight.
    Returns the number of dual adjustments."""
    n = Q.shape[0]
    for i in range(n):
        row_in[i] = dist[i] != _INF
    for j in range(n):
        slack[j] = _INF
    for i in range(n):
        if row_in[i]:
            ui = u[i]
            for j in range(n):
                if not col_seen[j]:
                    s = Q[i, j] - ui - v[j]
                    if s < slack[j]:
                        slack[j] = s
    steps = 0
    while True:
        delta = _INF
        jmin = -1
        for j in range(n):
            if not col_seen[j] and slack[j] < delta:
                delta = slack[j]
                jmin = j
        if delta > 0:
            steps += 1
            for i in range(n):
                if row_in[i]:
                    u[i] += delta
            for j in range(n):
                if col_seen[j]:
                    v[j] -= delta
                else:
                    slack[j] -= delta
        col_seen[jmin] = True
        mate = match_col[jmin]
        if mate < 0:
            return steps
        row_in[mate] = True
        um = u[mate]
        for j in range(n):
            if not col_seen[j]:
                s = Q[mate, j] - um - v[j]
                if s < slack[j]:
                    slack[j] = s


@njit(cache=True)
def _batched_phases(Q, u, v, match_row, match_col, dist, col_seen, queue, it,
                    stack, slack, row_in, counters, max_phases, history):
    n = Q.shape[0]
    phases = counters[0]
    budget = phases + max_phases
    while counters[2] < n and phases < budget:
        limit = _tight_bfs(Q, u, v, match_row, match_col, dist, col_seen,
                           queue)
        if limit < 0:
            counters[1] += _raise_duals(Q, u, v, match_row, match_col, dist,
                                        col_seen, slack, row_in)
            continue
        counters[2] += _augment_maximal(Q, u, v, match_row, match_col, dist,
                                        limit, it, stack)
        if phases < history.shape[0]:
            history[phases, 0] = counters[2]
            history[phases, 1] = u.sum() + v.sum()
        phases += 1
    counters[0] = phases
    return counters[2] == n


def _initial_duals(Q):
    u = Q.min(axis=1)
    v = (Q - u[:, None]).min(axis=0)
    return u.astype(np.int64), v.astype(np.int64)


def solve_batched_km(inst: OTInstance, B: int = 100, *,
                     time_limit: float | None = None, chunk: int = 64,
                     history: np.ndarray | None = None):
    """Approximate assignment via KM on costs quantized to ``{0..B}``.

    The matching is exactly optimal for the quantized costs, so its original
    cost exceeds the optimum by less than ``n * N / B``.  ``info`` carries
    the quantized duals ``u``/``v``, the quantized matrix scale and the
    number of dual adjustments.  ``history`` (optional ``(k, 2)`` int64)
    receives matching size and dual sum after each augmenting phase.
    """
    require_assignment(inst)
    t0 = time.perf_counter()
    n = inst.n
    Q, scale = quantize_costs(inst.cost, B)
    u, v = _initial_duals(Q)
    match_row = np.full(n, -1, dtype=np.int64)
    match_col = np.full(n, -1, dtype=np.int64)
    dist = np.empty(n, dtype=np.int64)
    col_seen = np.empty(n, dtype=np.bool_)
    row_in = np.empty(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    it = np.empty(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    slack = np.empty(n, dtype=np.int64)
    counters = np.zeros(3, dtype=np.int64)  # phases, dual steps, matched
    if history is None:
        history = np.empty((0, 2), dtype=np.int64)
    done = False
    while not done:
        done = _batched_phases(Q, u, v, match_row, match_col, dist, col_seen,
                               queue, it, stack, slack, row_in, counters,
                               chunk, history)
        if (not done and time_limit is not None
                and time.perf_counter() - t0 > time_limit):
            break
    wall = time.perf_counter() - t0
    flow = Flow.from_matching(match_row, n)
    return make_result(inst, flow, iterations=int(counters[0]),
                       wall_time=wall, exact=False, converged=done,
                       solver="batched_km", B=int(B), scale=scale,
                       u=u, v=v, quantized=Q, match_of_row=match_row,
                       dual_steps=int(counters[1]))


def check_dual_certificate(C, u, v, match_of_row) -> bool:
    """Dual feasibility plus tightness of every matched edge."""
    C = np.asarray(C)
    if np.any(u[:, None] + v[None, :] > C):
        return False
    rows = np.flatnonzero(match_of_row >= 0)
    return bool(np.all(u[rows] + v[match_of_row[rows]]
                       == C[rows, match_of_row[rows]]))

"""Exact optimal transport by the primal network simplex method.

The flow network has one node per supply and demand plus an artificial root.
Arcs are the ``n*m`` transport arcs ``i -> j`` followed by ``n + m``
artificial arcs (``i -> root`` for supplies, ``root -> j`` for demands) with
big-M cost ``1 + N*(n+m)``.  Arcs are uncapacitated, so every non-tree arc sits
at flow zero and a tree arc's flow is stored on its child node.

Potentials follow the convention ``reduced(i, j) = cost[i, j] + pi[i] - pi[j]``.
Tree arcs have reduced cost zero and the basis is optimal once every arc has
nonnegative reduced cost.
"""

from __future__ import annotations

import time

import numpy as np
from numba import njit

from .core import Flow, OTInstance, make_result, validate_instance

_OPTIMAL = 1
_BUDGET = 0


@njit(cache=True, inline="always")
def _arc_src(e, n, m, root):
    nm = n * m
    if e < nm:
        return e // m
    k = e - nm
    return k if k < n else root


@njit(cache=True, inline="always")
def _arc_tgt(e, n, m, root):
    nm = n * m
    if e < nm:
        return n + e % m
    k = e - nm
    return root if k < n else k


@njit(cache=True, inline="always")
def _detach(x, p, first_child, next_sib, prev_sib):
    ps = prev_sib[x]
    ns = next_sib[x]
    if ps != -1:
        next_sib[ps] = ns
    else:
        first_child[p] = ns
    if ns != -1:
        prev_sib[ns] = ps


@njit(cache=True, inline="always")
def _attach(x, p, first_child, next_sib, prev_sib):
    f = first_child[p]
    next_sib[x] = f
    prev_sib[x] = -1
    if f != -1:
        prev_sib[f] = x
    first_child[p] = x


@njit(cache=True, inline="always")
def _scan_arcs(cost, pi, pi_d, n, m, big_m, start, stop, best, e_best):
    """Most negative reduced cost among arcs ``start..stop-1``, row by row
    so the inner loop is branch-light."""
    nm = n * m
    root = n + m
    e = start
    if e < nm:
        i = e // m
        lim = min(stop, nm)
        while e < lim:
            base = pi[i]
            off = i * m
            row_end = min(off + m, lim)
            for k in range(e, row_end):
                rc = cost[k] + base - pi_d[k - off]
                if rc < best:
                    best = rc
                    e_best = k
            e = row_end
            i += 1
    while e < stop:
        if e < nm + n:
            rc = big_m + pi[e - nm] - pi[root]
        else:
            rc = big_m + pi[root] - pi[e - nm]
        if rc < best:
            best = rc
            e_best = e
        e += 1
    return best, e_best


@njit(cache=True)
def _simplex_loop(cost, n, m, big_m, block, parent, pred, up, depth, pi,
                  flow, first_child, next_sib, prev_sib, stack, counters,
                  max_pivots, trace):
    root = n + m
    nm = n * m
    n_arcs = nm + n + m
    pi_d = pi[n:root]
    next_arc = counters[0]
    pivots = counters[1]
    budget = pivots + max_pivots
    while pivots < budget:
        # block search pricing
        best = np.int64(0)
        e_in = -1
        e = next_arc
        scanned = 0
        while scanned < n_arcs:
            stop = min(e + block, n_arcs)
            best, e_in = _scan_arcs(cost, pi, pi_d, n, m, big_m, e, stop,
                                    best, e_in)
            scanned += stop - e
            e = stop if stop < n_arcs else 0
            if e_in >= 0:
                break
        if e_in < 0:
            counters[0] = next_arc
            counters[1] = pivots
            return _OPTIMAL
        next_arc = e

        u = _arc_src(e_in, n, m, root)
        v = _arc_tgt(e_in, n, m, root)
        sigma = best

        a = u
        b = v
        while a != b:
            if depth[a] > depth[b]:
                a = parent[a]
            elif depth[b] > depth[a]:
                b = parent[b]
            else:
                a = parent[a]
                b = parent[b]
        join = a

        # leaving arc: last blocking arc along the cycle oriented from join
        delta = np.int64(1) << 62
        u_out = -1
        side = 0
        w = u
        while w != join:
            if up[w]:
                if flow[w] < delta:
                    delta = flow[w]
                    u_out = w
                    side = 1
            w = parent[w]
        w = v
        while w != join:
            if not up[w]:
                if flow[w] <= delta:
                    delta = flow[w]
                    u_out = w
                    side = 2
            w = parent[w]

        if delta > 0:
            w = u
            while w != join:
                if up[w]:
                    flow[w] -= delta
                else:
                    flow[w] += delta
                w = parent[w]
            w = v
            while w != join:
                if up[w]:
                    flow[w] += delta
                else:
                    flow[w] -= delta
                w = parent[w]

        if side == 1:
            q = u
            newp = v
            shift = -sigma
        else:
            q = v
            newp = u
            shift = sigma

        # reverse the tree path q .. u_out and hang q below newp
        x = q
        prev_node = newp
        prev_arc = e_in
        prev_flow = delta
        prev_up = _arc_src(e_in, n, m, root) == q
        while True:
            nxt = parent[x]
            x_arc = pred[x]
            x_flow = flow[x]
            x_up = up[x]
            _detach(x, nxt, first_child, next_sib, prev_sib)
            parent[x] = prev_node
            pred[x] = prev_arc
            flow[x] = prev_flow
            up[x] = prev_up
            _attach(x, prev_node, first_child, next_sib, prev_sib)
            if x == u_out:
                break
            prev_node = x
            prev_arc = x_arc
            prev_flow = x_flow
            prev_up = not x_up
            x = nxt

        top = 0
        stack[0] = q
        top = 1
        while top > 0:
            top -= 1
            x = stack[top]
            depth[x] = depth[parent[x]] + 1
            pi[x] += shift
            c = first_child[x]
            while c != -1:
                stack[top] = c
                top += 1
                c = next_sib[c]

        if pivots < trace.size:
            trace[pivots] = delta * sigma
        pivots += 1

    counters[0] = next_arc
    counters[1] = pivots
    return _BUDGET


class NetworkSimplexState:
    """Spanning-tree basis of the bipartite network (artificial root last)."""

    def __init__(self, inst: OTInstance):
        n, m = inst.n, inst.m
        self.n, self.m = n, m
        self.root = root = n + m
        nodes = n + m + 1
        self.cost = inst.cost.ravel()
        self.big_m = np.int64(1 + inst.max_cost * (n + m))
        self.block = max(int(np.sqrt(n * m + n + m)), 10)
        self.parent = np.full(nodes, root, dtype=np.int64)
        self.parent[root] = -1
        self.pred = np.full(nodes, -1, dtype=np.int64)
        self.pred[:root] = n * m + np.arange(n + m)
        # tree arc of node w points w -> parent[w] (supplies start so)
        self.up = np.zeros(nodes, dtype=np.bool_)
        self.up[:n] = True
        self.depth = np.ones(nodes, dtype=np.int64)
        self.depth[root] = 0
        self.pi = np.zeros(nodes, dtype=np.int64)
        self.pi[:n] = -self.big_m
        self.pi[n:root] = self.big_m
        self.flow = np.zeros(nodes, dtype=np.int64)
        self.flow[:n] = inst.supplies
        self.flow[n:root] = inst.demands
        self.first_child = np.full(nodes, -1, dtype=np.int64)
        self.next_sib = np.full(nodes, -1, dtype=np.int64)
        self.prev_sib = np.full(nodes, -1, dtype=np.int64)
        self.first_child[root] = 0
        self.next_sib[:root - 1] = np.arange(1, root)
        self.prev_sib[1:root] = np.arange(0, root - 1)
        self.stack = np.empty(nodes, dtype=np.int64)
        self.counters = np.zeros(2, dtype=np.int64)

    @property
    def pivots(self) -> int:
        return int(self.counters[1])

    def run(self, max_pivots: int, trace=None) -> bool:
        if trace is None:
            trace = np.empty(0, dtype=np.int64)
        status = _simplex_loop(
            self.cost, self.n, self.m, self.big_m, self.block, self.parent,
            self.pred, self.up, self.depth, self.pi, self.flow, self.first_child,
            self.next_sib, self.prev_sib, self.stack, self.counters,
            max_pivots, trace)
        return status == _OPTIMAL

    def tree_arcs(self):
        """(child node, arc id, flow) for every tree arc."""
        nodes = np.arange(self.root)
        return nodes, self.pred[:self.root], self.flow[:self.root]

    def extract_flow(self) -> Flow:
        _, arcs, amounts = self.tree_arcs()
        nm = self.n * self.m
        artificial = arcs >= nm
        if np.any(amounts[artificial] != 0):
            raise AssertionError("artificial arcs carry flow at optimality")
        real = ~artificial
        arcs = arcs[real]
        return Flow(arcs // self.m, arcs % self.m, amounts[real],
                    self.n, self.m)

    def potentials(self):
        """Supply-side and demand-side potentials (root fixed at zero)."""
        return self.pi[:self.n].copy(), self.pi[self.n:self.root].copy()


def solve_network_simplex(inst: OTInstance, *, time_limit: float | None = None,
                          chunk: int = 200_000, trace: np.ndarray | None = None):
    """Solve ``inst`` exactly.

    ``info['pi_supply']`` and ``info['pi_demand']`` hold the terminal node
    potentials; ``cost[i, j] + pi_supply[i] - pi_demand[j] >= 0`` for every
    pair.  ``trace`` (optional int64 array) receives the objective change
    of each pivot, which is never positive.
    """
    problem = validate_instance(inst)
    if problem is not None:
        raise ValueError(problem)
    t0 = time.perf_counter()
    state = NetworkSimplexState(inst)
    done = False
    while not done:
        done = state.run(chunk, trace)
        if (not done and time_limit is not None
                and time.perf_counter() - t0 > time_limit):
            break
    wall = time.perf_counter() - t0
    if not done:
        return make_result(inst, Flow([], [], [], inst.n, inst.m),
                           iterations=state.pivots, wall_time=wall,
                           exact=False, converged=False,
                           solver="network_simplex")
    flow = state.extract_flow()
    pi_s, pi_d = state.potentials()
    return make_result(inst, flow, iterations=state.pivots, wall_time=wall,
                       exact=True, solver="network_simplex",
                       pi_supply=pi_s, pi_demand=pi_d)


def reduced_costs(inst: OTInstance, pi_supply, pi_demand) -> np.ndarray:
    return inst.cost + pi_supply[:, None] - pi_demand[None, :]

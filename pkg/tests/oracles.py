"""Independent reference answers for small instances."""

from __future__ import annotations

import itertools

import numpy as np


def _compositions(total, caps):
    """All nonnegative integer vectors summing to ``total`` with entry j at
    most ``caps[j]``."""
    if len(caps) == 1:
        if total <= caps[0]:
            yield (total,)
        return
    for x in range(min(total, caps[0]) + 1):
        for rest in _compositions(total - x, caps[1:]):
            yield (x,) + rest


def enumerate_flows(supplies, demands):
    """Every integral feasible flow, as an ``n x m`` array."""
    supplies = [int(s) for s in supplies]
    demands = [int(d) for d in demands]
    n, m = len(supplies), len(demands)

    def rec(i, remaining):
        if i == n:
            if all(x == 0 for x in remaining):
                yield []
            return
        for row in _compositions(supplies[i], remaining):
            left = [a - b for a, b in zip(remaining, row)]
            for tail in rec(i + 1, left):
                yield [row] + tail

    for rows in rec(0, demands):
        yield np.array(rows, dtype=np.int64).reshape(n, m)


def brute_force_optimum(cost, supplies, demands) -> int:
    cost = np.asarray(cost, dtype=np.int64)
    return min(int((cost * X).sum()) for X in enumerate_flows(supplies,
                                                             demands))


def brute_force_assignment(cost) -> int:
    cost = np.asarray(cost, dtype=np.int64)
    n = cost.shape[0]
    return min(int(cost[np.arange(n), list(p)].sum())
               for p in itertools.permutations(range(n)))


def random_instance(rng, n, m, max_cost=9, max_supply=3):
    """Random balanced instance with every capacity at least one."""
    from otbench import OTInstance
    r = rng.integers(1, max_supply + 1, size=n)
    total = int(r.sum())
    if total < m:
        r[0] += m - total
        total = m
    # random composition of total into m positive parts
    cuts = np.sort(rng.choice(np.arange(1, total), size=m - 1, replace=False))
    c = np.diff(np.concatenate([[0], cuts, [total]]))
    C = rng.integers(0, max_cost + 1, size=(n, m))
    return OTInstance(C, r, c)


def random_assignment(rng, n, max_cost=9):
    from otbench import OTInstance
    C = rng.integers(0, max_cost + 1, size=(n, n))
    return OTInstance(C, np.ones(n, int), np.ones(n, int))

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_force_optimum, random_instance
from otbench import OTInstance, objective, residue, solve_network_simplex
from otbench.netsimplex import reduced_costs


def test_identity_matching():
    res = solve_network_simplex(OTInstance([[0, 5], [5, 0]], [1, 1], [1, 1]))
    assert res.objective == 0 and res.exact


def test_single_supply_splits():
    inst = OTInstance([[3, 7]], [4], [1, 3])
    res = solve_network_simplex(inst)
    assert res.objective == 3 + 21
    np.testing.assert_array_equal(res.flow.to_dense(), [[1, 3]])


def test_transportation_example():
    # crossing is cheaper than going straight
    inst = OTInstance([[4, 1], [1, 4]], [2, 3], [3, 2])
    res = solve_network_simplex(inst)
    assert res.objective == brute_force_optimum(inst.cost, [2, 3], [3, 2])
    assert residue(inst, res.flow) == 0


def test_rejects_invalid():
    with pytest.raises(ValueError, match="totals"):
        solve_network_simplex(OTInstance([[1]], [1], [2]))


@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 4))
def test_matches_enumeration(seed, n, m):
    inst = random_instance(np.random.default_rng(seed), n, m)
    res = solve_network_simplex(inst)
    assert res.objective == brute_force_optimum(inst.cost, inst.supplies,
                                                inst.demands)
    assert res.flow.is_integral and residue(inst, res.flow) == 0
    assert objective(inst, res.flow) == res.objective


@given(st.integers(0, 10_000))
def test_reduced_costs_nonnegative(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, int(rng.integers(1, 30)),
                           int(rng.integers(1, 30)), max_cost=1000,
                           max_supply=20)
    res = solve_network_simplex(inst)
    rc = reduced_costs(inst, res.info["pi_supply"], res.info["pi_demand"])
    assert rc.min() >= 0
    # complementary slackness on arcs carrying flow
    assert np.all(rc[res.flow.rows, res.flow.cols] == 0)


def test_pivot_trace_never_increases_objective():
    rng = np.random.default_rng(3)
    inst = random_instance(rng, 40, 30, max_cost=500, max_supply=10)
    trace = np.full(100_000, 7, dtype=np.int64)
    res = solve_network_simplex(inst, trace=trace)
    used = trace[:res.iterations]
    assert res.iterations > 0 and np.all(used <= 0)


def test_matches_linprog_on_larger_instances():
    from scipy.optimize import linprog
    rng = np.random.default_rng(11)
    for _ in range(5):
        inst = random_instance(rng, 12, 9, max_cost=100, max_supply=6)
        n, m = inst.n, inst.m
        A_eq = np.zeros((n + m, n * m))
        for i in range(n):
            A_eq[i, i * m:(i + 1) * m] = 1
        for j in range(m):
            A_eq[n + j, j::m] = 1
        b = np.concatenate([inst.supplies, inst.demands])
        lp = linprog(inst.cost.ravel(), A_eq=A_eq, b_eq=b, method="highs")
        assert solve_network_simplex(inst).objective == round(lp.fun)


def test_time_limit_returns_unconverged():
    rng = np.random.default_rng(0)
    inst = random_instance(rng, 300, 300, max_cost=10_000, max_supply=50)
    res = solve_network_simplex(inst, time_limit=0.0, chunk=5)
    assert not res.converged and not res.exact

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_force_assignment, random_assignment
from otbench import (OTInstance, solve_auction, solve_auction_scaled,
                     solve_network_simplex)
from otbench.auction import eps_cs_violation, epsilon_schedule
from otbench.bench import calibrate_auction_eps, median_time
from otbench.datasets import cifar_style_instance


def unit(C):
    n = len(C)
    return OTInstance(C, np.ones(n, int), np.ones(n, int))


def test_small_exact():
    res = solve_auction(unit([[1, 3], [2, 1]]), 0.4)
    assert res.objective == 2 and res.converged


def test_constant_costs():
    assert solve_auction(unit(np.full((6, 6), 3)), 0.1).objective == 18


def test_scaled_small_exact():
    res = solve_auction_scaled(unit([[1, 3], [2, 1]]), 4.0, 4.0, 0.4)
    assert res.objective == 2
    assert res.info["rounds"] == 3  # 4 -> 1 -> 0.4


def test_one_round_schedule_equals_plain():
    inst = random_assignment(np.random.default_rng(1), 20, 100)
    a = solve_auction(inst, 0.5)
    b = solve_auction_scaled(inst, 0.5, 4.0, 0.5)
    assert a.objective == b.objective
    np.testing.assert_array_equal(a.info["match_of_row"],
                                  b.info["match_of_row"])


def test_schedule():
    assert epsilon_schedule(8, 2, 1) == [8, 4, 2, 1]
    assert epsilon_schedule(10, 4, 1) == [10, 2.5, 1]
    with pytest.raises(ValueError):
        epsilon_schedule(1, 1, 0.5)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        solve_auction(unit([[1]]), 0.0)
    with pytest.raises(ValueError, match="unit square"):
        solve_auction(OTInstance([[1, 2]], [2], [1, 1]), 0.1)


@given(st.integers(0, 10_000), st.integers(1, 4),
       st.floats(0.01, 5.0))
def test_within_n_eps(seed, n, eps):
    inst = random_assignment(np.random.default_rng(seed), n)
    opt = brute_force_assignment(inst.cost)
    res = solve_auction(inst, eps)
    assert opt <= res.objective <= opt + n * eps + 1e-9
    assert eps_cs_violation(inst.cost, res.info["prices"],
                            res.info["match_of_row"], eps) <= 1e-9


@given(st.integers(0, 10_000), st.integers(1, 4))
def test_exact_below_one_over_n(seed, n):
    inst = random_assignment(np.random.default_rng(seed), n)
    opt = brute_force_assignment(inst.cost)
    assert solve_auction(inst, 1.0 / (n + 1)).objective == opt
    assert solve_auction_scaled(inst).objective == opt


@given(st.integers(0, 10_000))
def test_exact_against_network_simplex(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 120))
    inst = random_assignment(rng, n, max_cost=1000)
    exact = solve_network_simplex(inst).objective
    res = solve_auction_scaled(inst)
    assert res.objective == exact
    assert eps_cs_violation(inst.cost, res.info["prices"],
                            res.info["match_of_row"],
                            res.info["epsilon"]) <= 1e-9


def test_last_two_completion_gives_perfect_matching():
    inst = random_assignment(np.random.default_rng(2), 30, 100)
    res = solve_auction(inst, 0.01, complete_last_two=True)
    assert res.converged
    assert sorted(res.info["match_of_row"].tolist()) == list(range(30))


def test_bid_budget_timeout():
    inst = random_assignment(np.random.default_rng(4), 50, 10**6)
    res = solve_auction(inst, 0.01, bid_budget=10)
    assert not res.converged and res.info["timeout"]
    assert res.iterations <= 10


def test_scaled_not_slower_than_plain_on_cifar_style():
    inst = cifar_style_instance(5)
    exact = solve_network_simplex(inst).objective
    eps = calibrate_auction_eps(inst, exact)
    assert eps is not None
    t_plain, r1, _ = median_time(lambda: solve_auction(inst, eps))
    t_scaled, r2, _ = median_time(
        lambda: solve_auction_scaled(inst, epsilon_final=eps))
    assert r1.objective == exact
    assert t_scaled <= t_plain

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_force_assignment, random_assignment
from otbench import (OTInstance, gen_circle_square, quantize_costs,
                     solve_batched_km, solve_km, solve_network_simplex)
from otbench.bench import median_time
from otbench.datasets import cifar_style_instance
from otbench.hungarian import check_dual_certificate


def unit(C):
    n = len(C)
    return OTInstance(C, np.ones(n, int), np.ones(n, int))


def test_zero_diagonal_gives_identity():
    C = np.array([[0, 4, 5], [3, 0, 2], [7, 1, 0]])
    res = solve_km(unit(C))
    assert res.objective == 0
    assert res.info["match_of_row"].tolist() == [0, 1, 2]


def test_two_by_two():
    res = solve_km(unit([[1, 3], [2, 1]]))
    assert res.objective == 2
    assert res.info["match_of_row"].tolist() == [0, 1]
    assert res.info["u"].sum() + res.info["v"].sum() == 2


def test_rejects_non_unit():
    with pytest.raises(ValueError, match="unit square"):
        solve_km(OTInstance([[1, 2]], [2], [1, 1]))
    with pytest.raises(ValueError, match="unit square"):
        solve_batched_km(OTInstance([[1, 2]], [2], [1, 1]))


@pytest.mark.parametrize("C,B,expected", [
    ([[100, 200], [300, 400]], 4, [[1, 2], [3, 4]]),
    ([[7]], 2, [[2]]),
])
def test_quantize_examples(C, B, expected):
    Q, _ = quantize_costs(np.array(C), B)
    np.testing.assert_array_equal(Q, expected)


def test_quantize_identity_and_zero():
    C = np.array([[3, 9], [0, 5]])
    Q, s = quantize_costs(C, 9)
    np.testing.assert_array_equal(Q, C)
    assert s == 1.0
    Z = np.zeros((2, 2), dtype=np.int64)
    Q, s = quantize_costs(Z, 5)
    np.testing.assert_array_equal(Q, Z)
    assert s == 1.0


@given(st.integers(0, 10_000), st.integers(1, 50))
def test_quantize_error_bound(seed, B):
    rng = np.random.default_rng(seed)
    C = rng.integers(0, 10_000, size=(6, 6))
    Q, scale = quantize_costs(C, B)
    assert Q.min() >= 0 and Q.max() <= B
    err = C - Q * scale
    assert np.all(err >= -1e-9) and np.all(err < scale + 1e-9)


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_km_matches_permutations(seed, n):
    inst = random_assignment(np.random.default_rng(seed), n)
    res = solve_km(inst)
    assert res.objective == brute_force_assignment(inst.cost)
    assert check_dual_certificate(inst.cost, res.info["u"], res.info["v"],
                                  res.info["match_of_row"])


def test_batched_identity_quantization():
    inst = unit([[1, 3], [2, 1]])
    assert solve_batched_km(inst, B=inst.max_cost).objective == 2


def test_batched_constant_costs_one_phase():
    inst = unit(np.full((5, 5), 4))
    res = solve_batched_km(inst, B=10)
    assert res.objective == 20
    assert res.iterations == 1


@given(st.integers(0, 10_000), st.integers(1, 40), st.integers(1, 64))
def test_batched_error_bound_and_certificate(seed, n, B):
    rng = np.random.default_rng(seed)
    inst = random_assignment(rng, n, max_cost=1000)
    opt = solve_km(inst).objective
    res = solve_batched_km(inst, B)
    scale = res.info["scale"]
    assert opt <= res.objective < opt + n * scale + 1e-9
    assert check_dual_certificate(res.info["quantized"], res.info["u"],
                                  res.info["v"], res.info["match_of_row"])


@given(st.integers(0, 10_000), st.integers(1, 30))
def test_batched_exact_at_fine_quantization(seed, n):
    inst = random_assignment(np.random.default_rng(seed), n, max_cost=500)
    B = max(inst.max_cost, 1) * n
    assert solve_batched_km(inst, B).objective == solve_km(inst).objective


def test_phase_history_monotone():
    inst = random_assignment(np.random.default_rng(5), 150, max_cost=10_000)
    hist = np.full((10_000, 2), -1, dtype=np.int64)
    res = solve_batched_km(inst, B=200, history=hist)
    h = hist[:res.iterations]
    assert h[-1, 0] == inst.n
    assert np.all(np.diff(h[:, 0]) >= 0)
    assert np.all(np.diff(h[:, 1]) >= 0)


def test_km_agrees_with_network_simplex_on_cifar_style():
    inst = cifar_style_instance(1)
    assert solve_km(inst).objective == solve_network_simplex(inst).objective


def test_batched_faster_than_km_on_cs900():
    inst = gen_circle_square(900)
    exact = solve_network_simplex(inst).objective
    from otbench.bench import calibrate_batched_km
    B, ratio = calibrate_batched_km(inst, exact)
    assert ratio <= 1.1
    t_bkm, _, _ = median_time(lambda: solve_batched_km(inst, B))
    t_km, _, _ = median_time(lambda: solve_km(inst))
    assert t_bkm < t_km


def test_km_time_limit():
    inst = random_assignment(np.random.default_rng(0), 600, max_cost=10**6)
    res = solve_km(inst, time_limit=0.0, chunk=1)
    assert not res.converged and not res.exact

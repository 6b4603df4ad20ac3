"""Entropy-regularized OT by matrix scaling, computed in the log domain.

The plan is ``X[i, j] = exp(f[i] - eta * C[i, j] / N + g[j])``: ``eta`` is
always stated for costs normalized to a maximum of one.  Scaling stops once
the residue ``|r - X 1|_1 + |c - X^T 1|_1`` falls to ``eps_fraction * S``.
Outputs are not rounded unless ``round_output`` is set.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .core import Flow, OTInstance, make_result, validate_instance


@dataclass(frozen=True)
class ScalingConfig:
    eta: float
    eps_fraction: float = 1e-3
    max_iterations: int = 100_000
    round_output: bool = False
    time_limit: float | None = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not 0 < self.eps_fraction < 1:
            raise ValueError("eps_fraction must lie in (0, 1)")


class LogScalingState:
    """Log-domain scalings ``f`` (rows) and ``g`` (columns) for one instance."""

    def __init__(self, inst: OTInstance, eta: float):
        self.inst = inst
        self.eta = float(eta)
        N = inst.max_cost
        self.cost_scale = float(N) if N > 0 else 1.0
        # log-kernel -eta * C / N, never exponentiated on its own
        self.log_kernel = inst.cost * (-self.eta / self.cost_scale)
        self.f = np.zeros(inst.n)
        self.g = np.zeros(inst.m)
        self.log_r = np.log(inst.supplies.astype(np.float64))
        self.log_c = np.log(inst.demands.astype(np.float64))
        self._buf = np.empty((inst.n, inst.m))

    def log_flow(self) -> np.ndarray:
        return self.log_kernel + self.f[:, None] + self.g[None, :]

    def flow_dense(self) -> np.ndarray:
        return np.exp(self.log_flow())

    def row_lse(self) -> np.ndarray:
        """``log sum_j exp(log_kernel[i, j] + g[j])`` for every row."""
        buf = self._buf
        np.add(self.log_kernel, self.g[None, :], out=buf)
        mx = buf.max(axis=1)
        buf -= mx[:, None]
        np.exp(buf, out=buf)
        return mx + np.log(buf.sum(axis=1))

    def col_lse(self) -> np.ndarray:
        buf = self._buf
        np.add(self.log_kernel, self.f[:, None], out=buf)
        mx = buf.max(axis=0)
        buf -= mx[None, :]
        np.exp(buf, out=buf)
        return mx + np.log(buf.sum(axis=0))

    def marginals(self):
        X = self.flow_dense()
        return X.sum(axis=1), X.sum(axis=0)

    def residue(self) -> float:
        rs, cs = self.marginals()
        return float(np.abs(self.inst.supplies - rs).sum()
                     + np.abs(self.inst.demands - cs).sum())

    def entropy(self) -> float:
        """``-sum X log X`` of the current plan."""
        L = self.log_flow()
        return float(-(np.exp(L) * L).sum())


def _finish(inst, state, cfg, *, solver, iterations, wall_start, converged,
            **info):
    X = state.flow_dense()
    flow = Flow.from_dense(X)
    if cfg.round_output:
        flow = round_flow(inst, flow)
    wall = time.perf_counter() - wall_start
    return make_result(inst, flow, iterations=iterations, wall_time=wall,
                       exact=False, converged=converged, solver=solver,
                       eta=cfg.eta, f=state.f.copy(), g=state.g.copy(),
                       **info)


def sinkhorn(inst: OTInstance, cfg: ScalingConfig):
    """Alternate full row and column rescaling until the residue drops to
    ``cfg.eps_fraction * S``.  One iteration is a row pass plus a column
    pass; the residue is checked before every row pass."""
    problem = validate_instance(inst)
    if problem is not None:
        raise ValueError(problem)
    t0 = time.perf_counter()
    state = LogScalingState(inst, cfg.eta)
    threshold = cfg.eps_fraction * inst.total
    r = inst.supplies.astype(np.float64)
    it = 0
    converged = False
    res = math.inf
    while True:
        L = state.row_lse()
        if it > 0:
            res = float(np.abs(r - np.exp(state.f + L)).sum())
            if res <= threshold:
                converged = True
                break
        if not np.all(np.isfinite(L)):
            raise FloatingPointError("non-finite log-sum-exp in sinkhorn")
        if it >= cfg.max_iterations or (
                cfg.time_limit is not None
                and time.perf_counter() - t0 > cfg.time_limit):
            break
        state.f = state.log_r - L
        state.g = state.log_c - state.col_lse()
        it += 1
    return _finish(inst, state, cfg, solver="sinkhorn", iterations=it,
                   wall_start=t0, converged=converged, row_residue=res)


@njit(cache=True)
def _greenkhorn_updates(A, AT, f, g, rsum, csum, r, c, log_r, log_c, count,
                        floor, buf):
    """Perform up to ``count`` greedy single row/column rescalings.
    Returns the number performed (fewer only if every discrepancy is below
    ``floor``)."""
    n, m = A.shape
    tiny = 1e-280
    for step in range(count):
        best = floor
        kind = -1
        idx = -1
        for i in range(n):
            d = abs(r[i] - rsum[i])
            if d > best:
                best = d
                kind = 0
                idx = i
        for j in range(m):
            d = abs(c[j] - csum[j])
            if d > best:
                best = d
                kind = 1
                idx = j
        if kind < 0:
            return step
        if kind == 0:
            i = idx
            fi = f[i]
            s = 0.0
            for j in range(m):
                buf[j] = math.exp(fi + A[i, j] + g[j])
                s += buf[j]
            if s > tiny:
                ratio = r[i] / s
                for j in range(m):
                    csum[j] += buf[j] * ratio - buf[j]
                f[i] = fi + log_r[i] - math.log(s)
            else:
                mx = -np.inf
                for j in range(m):
                    v = fi + A[i, j] + g[j]
                    if v > mx:
                        mx = v
                t = 0.0
                for j in range(m):
                    t += math.exp(fi + A[i, j] + g[j] - mx)
                shift = log_r[i] - mx - math.log(t)
                for j in range(m):
                    a = fi + A[i, j] + g[j]
                    csum[j] += math.exp(a + shift) - math.exp(a)
                f[i] = fi + shift
            rsum[i] = r[i]
        else:
            j = idx
            gj = g[j]
            s = 0.0
            for i in range(n):
                buf[i] = math.exp(f[i] + AT[j, i] + gj)
                s += buf[i]
            if s > tiny:
                ratio = c[j] / s
                for i in range(n):
                    rsum[i] += buf[i] * ratio - buf[i]
                g[j] = gj + log_c[j] - math.log(s)
            else:
                mx = -np.inf
                for i in range(n):
                    v = f[i] + AT[j, i] + gj
                    if v > mx:
                        mx = v
                t = 0.0
                for i in range(n):
                    t += math.exp(f[i] + AT[j, i] + gj - mx)
                shift = log_c[j] - mx - math.log(t)
                for i in range(n):
                    a = f[i] + AT[j, i] + gj
                    rsum[i] += math.exp(a + shift) - math.exp(a)
                g[j] = gj + shift
            csum[j] = c[j]
    return count


def greenkhorn(inst: OTInstance, cfg: ScalingConfig):
    """Greedy scaling: each update rescales the single row or column whose
    marginal is furthest from its target.

    Plans start row-normalized (counted as ``n`` updates).  Marginals are
    recomputed and the stopping rule checked every ``ceil((n+m)/2)``
    updates.  ``iterations`` counts single updates; ``info['sweeps']`` is
    the same count in ``(n+m)/2`` units.
    """
    problem = validate_instance(inst)
    if problem is not None:
        raise ValueError(problem)
    t0 = time.perf_counter()
    state = LogScalingState(inst, cfg.eta)
    n, m = inst.n, inst.m
    S = inst.total
    threshold = cfg.eps_fraction * S
    block = (n + m + 1) // 2
    r = inst.supplies.astype(np.float64)
    c = inst.demands.astype(np.float64)
    A = state.log_kernel
    AT = np.ascontiguousarray(A.T)
    L = state.row_lse()
    if not np.all(np.isfinite(L)):
        raise FloatingPointError("non-finite log-sum-exp in greenkhorn")
    state.f = state.log_r - L
    buf = np.empty(max(n, m))
    updates = n
    converged = False
    max_updates = cfg.max_iterations * block
    while True:
        rsum, csum = state.marginals()
        res = float(np.abs(r - rsum).sum() + np.abs(c - csum).sum())
        if not math.isfinite(res):
            raise FloatingPointError("non-finite residue in greenkhorn")
        if res <= threshold:
            converged = True
            break
        if updates >= max_updates or (
                cfg.time_limit is not None
                and time.perf_counter() - t0 > cfg.time_limit):
            break
        done = _greenkhorn_updates(A, AT, state.f, state.g, rsum, csum, r, c,
                                   state.log_r, state.log_c, block,
                                   1e-12 * S, buf)
        updates += done
        if done < block:
            rsum, csum = state.marginals()
            res = float(np.abs(r - rsum).sum() + np.abs(c - csum).sum())
            converged = res <= threshold
            break
    return _finish(inst, state, cfg, solver="greenkhorn", iterations=updates,
                   wall_start=t0, converged=converged,
                   sweeps=updates / block, check_residue=res)


def round_flow(inst: OTInstance, X: Flow) -> Flow:
    """Project a near-feasible plan onto the feasible set.

    Rows and then columns are scaled down to at most their targets; the
    remaining row deficits are then spread over the column deficits in
    proportion (a rank-one correction).  With nonnegative costs the
    objective moves by at most ``residue * max(C)``.
    """
    r = inst.supplies.astype(np.float64)
    c = inst.demands.astype(np.float64)
    if _marginal_gap(inst, X) == 0.0:
        return X
    D = X.to_dense().astype(np.float64)
    rs = D.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(rs > r, r / rs, 1.0)
    D *= x[:, None]
    cs = D.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(cs > c, c / cs, 1.0)
    D *= y[None, :]
    err_r = r - D.sum(axis=1)
    err_c = c - D.sum(axis=0)
    np.maximum(err_r, 0.0, out=err_r)
    np.maximum(err_c, 0.0, out=err_c)
    total = err_r.sum()
    if total > 0:
        D += np.outer(err_r, err_c) / total
    return Flow.from_dense(D)


def _marginal_gap(inst, X: Flow) -> float:
    return float(np.abs(inst.supplies - X.row_sums).sum()
                 + np.abs(inst.demands - X.col_sums).sum())


def approximation_ratio(objective: float, exact_objective: float) -> float:
    if exact_objective == 0:
        return 1.0 if objective == 0 else math.inf
    return objective / exact_objective


@dataclass
class EtaCalibration:
    eta: float | None
    ratio: float
    predecessor: float | None = None
    predecessor_ratio: float | None = None
    success: bool = True
    evaluations: list = field(default_factory=list)


def calibrate_eta(inst: OTInstance, exact_objective, target_ratio=1.1,
                  cfg: ScalingConfig | None = None, eta_min: float = 1.0,
                  eta_cap: float = 1e5, resolution: float = 1.1,
                  solver=None):
    """Smallest ``eta`` on a doubling-then-bisection grid whose scaling run
    converges to a plan with ``objective <= target_ratio * exact``.

    Returns an :class:`EtaCalibration`; ``predecessor`` is the failing grid
    point within factor ``resolution`` below the answer.
    """
    if target_ratio <= 1:
        raise ValueError("target_ratio must exceed 1")
    cfg = cfg or ScalingConfig(eta=1.0)
    solver = solver or sinkhorn
    evals = []

    def attempt(eta):
        res = solver(inst, ScalingConfig(eta, cfg.eps_fraction,
                                          cfg.max_iterations, False,
                                          cfg.time_limit))
        ratio = approximation_ratio(res.objective, exact_objective)
        ok = res.converged and ratio <= target_ratio
        evals.append((eta, ratio, res.iterations, res.converged))
        return ok, (ratio if res.converged else math.inf)

    lo = None
    lo_ratio = None
    eta = eta_min
    ok, ratio = attempt(eta)
    best = ratio
    while not ok:
        lo, lo_ratio = eta, ratio
        if eta >= eta_cap:
            return EtaCalibration(None, best, success=False,
                                  evaluations=evals)
        eta = min(2 * eta, eta_cap)
        ok, ratio = attempt(eta)
        best = min(best, ratio)
    hi, hi_ratio = eta, ratio
    if lo is None:
        return EtaCalibration(hi, hi_ratio, evaluations=evals)
    while hi / lo > resolution:
        mid = math.sqrt(lo * hi)
        ok, ratio = attempt(mid)
        if ok:
            hi, hi_ratio = mid, ratio
        else:
            lo, lo_ratio = mid, ratio
    return EtaCalibration(hi, hi_ratio, lo, lo_ratio, evaluations=evals)

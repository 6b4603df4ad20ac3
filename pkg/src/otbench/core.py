"""Problem and solution data model shared by every solver.

An optimal transport instance is a dense integer cost matrix together with
integer supply and demand vectors whose totals agree.  Solutions are sparse
flows (coordinate lists) so that combinatorial solvers never materialize an
``n x m`` plan.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Optional

import numpy as np

# Dense cost matrices are materialized; 4900 x 4900 int64 is ~192 MB.
MAX_DENSE_ENTRIES = 64_000_000


@dataclass(frozen=True, eq=False)
class OTInstance:
    """Cost matrix ``cost`` (n x m, int64) with ``supplies`` and ``demands``."""

    cost: np.ndarray
    supplies: np.ndarray
    demands: np.ndarray
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        cost = np.ascontiguousarray(self.cost, dtype=np.int64)
        r = np.ascontiguousarray(self.supplies, dtype=np.int64)
        c = np.ascontiguousarray(self.demands, dtype=np.int64)
        if cost.ndim != 2 or cost.shape != (r.size, c.size):
            raise ValueError(
                f"cost shape {cost.shape} does not match supplies/demands "
                f"({r.size}, {c.size})")
        if cost.size > MAX_DENSE_ENTRIES:
            raise ValueError(f"cost matrix with {cost.size} entries exceeds "
                             f"the dense limit of {MAX_DENSE_ENTRIES}")
        for arr in (cost, r, c):
            arr.flags.writeable = False
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "supplies", r)
        object.__setattr__(self, "demands", c)

    @property
    def n(self) -> int:
        return self.cost.shape[0]

    @property
    def m(self) -> int:
        return self.cost.shape[1]

    @property
    def total(self) -> int:
        """Total demand S."""
        return int(self.demands.sum())

    @property
    def max_cost(self) -> int:
        """Largest cost N."""
        return int(self.cost.max()) if self.cost.size else 0

    @property
    def is_unit(self) -> bool:
        """True for assignment instances (square, all capacities one)."""
        return (self.n == self.m and bool(np.all(self.supplies == 1))
                and bool(np.all(self.demands == 1)))

    @cached_property
    def content_hash(self) -> str:
        h = hashlib.sha1()
        for arr in (self.cost, self.supplies, self.demands):
            h.update(np.asarray(arr.shape, dtype=np.int64).tobytes())
            h.update(arr.tobytes())
        return h.hexdigest()[:16]


class Flow:
    """Sparse transport plan stored as parallel ``rows``/``cols``/``amounts``.

    Entries with zero amount are dropped on construction.  Duplicate
    coordinates are allowed and simply add up.
    """

    def __init__(self, rows, cols, amounts, n: int, m: int):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        amounts = np.asarray(amounts).ravel()
        if not (rows.size == cols.size == amounts.size):
            raise ValueError("rows, cols and amounts must have equal length")
        if amounts.dtype.kind not in "iuf":
            amounts = amounts.astype(np.float64)
        if np.any(amounts < 0):
            raise ValueError("flow amounts must be nonnegative")
        keep = amounts > 0
        self.rows = rows[keep]
        self.cols = cols[keep]
        self.amounts = amounts[keep]
        self.n = int(n)
        self.m = int(m)
        if self.rows.size and (self.rows.min() < 0 or self.rows.max() >= n
                               or self.cols.min() < 0 or self.cols.max() >= m):
            raise IndexError("flow entry index out of bounds")

    @classmethod
    def from_dense(cls, X: np.ndarray) -> "Flow":
        X = np.asarray(X)
        rows, cols = np.nonzero(X)
        return cls(rows, cols, X[rows, cols], *X.shape)

    @classmethod
    def from_matching(cls, match_of_row: np.ndarray, m: int) -> "Flow":
        match_of_row = np.asarray(match_of_row, dtype=np.int64)
        rows = np.flatnonzero(match_of_row >= 0)
        return cls(rows, match_of_row[rows], np.ones(rows.size, np.int64),
                   match_of_row.size, m)

    @property
    def is_integral(self) -> bool:
        if self.amounts.dtype.kind in "iu":
            return True
        return bool(np.all(self.amounts == np.round(self.amounts)))

    @cached_property
    def row_sums(self) -> np.ndarray:
        return np.bincount(self.rows, weights=self.amounts, minlength=self.n) \
            if self.amounts.dtype.kind == "f" else \
            _int_bincount(self.rows, self.amounts, self.n)

    @cached_property
    def col_sums(self) -> np.ndarray:
        return np.bincount(self.cols, weights=self.amounts, minlength=self.m) \
            if self.amounts.dtype.kind == "f" else \
            _int_bincount(self.cols, self.amounts, self.m)

    def to_dense(self) -> np.ndarray:
        X = np.zeros((self.n, self.m), dtype=self.amounts.dtype)
        np.add.at(X, (self.rows, self.cols), self.amounts)
        return X

    def __len__(self):
        return self.rows.size

    def __repr__(self):
        return f"Flow(n={self.n}, m={self.m}, entries={len(self)})"


def _int_bincount(idx, weights, size):
    out = np.zeros(size, dtype=np.int64)
    np.add.at(out, idx, weights.astype(np.int64))
    return out


@dataclass(frozen=True)
class SolveResult:
    objective: float
    flow: Flow
    iterations: int
    wall_time: float
    residue: float
    exact: bool
    converged: bool = True
    solver: str = ""
    info: dict[str, Any] = field(default_factory=dict)


def validate_instance(inst: OTInstance) -> Optional[str]:
    """Return ``None`` if ``inst`` is a valid instance, else a description of
    the first violated invariant."""
    if inst.n == 0 or inst.m == 0:
        return "instance has no supply or no demand nodes"
    if np.any(inst.cost < 0):
        return "negative cost entry"
    if np.any(inst.supplies < 1):
        return "supply below 1"
    if np.any(inst.demands < 1):
        return "demand below 1"
    if int(inst.supplies.sum()) != int(inst.demands.sum()):
        return "supply/demand totals differ"
    if inst.max_cost * inst.total >= 2**62:
        return "total demand times max cost overflows 64-bit objectives"
    return None


def _check_bounds(inst: OTInstance, flow: Flow):
    if flow.n != inst.n or flow.m != inst.m:
        raise IndexError(f"flow shape ({flow.n}, {flow.m}) does not match "
                         f"instance ({inst.n}, {inst.m})")


def objective(inst: OTInstance, flow: Flow):
    """Total cost of ``flow``; integer when the flow is integer-valued."""
    _check_bounds(inst, flow)
    c = inst.cost[flow.rows, flow.cols]
    if flow.amounts.dtype.kind in "iu":
        return int(np.dot(c, flow.amounts.astype(np.int64)))
    return float(np.dot(c.astype(np.float64), flow.amounts))


def residue(inst: OTInstance, flow: Flow) -> float:
    """L1 distance of the flow's marginals from the supplies and demands."""
    _check_bounds(inst, flow)
    return float(np.abs(inst.supplies - flow.row_sums).sum()
                 + np.abs(inst.demands - flow.col_sums).sum())


def matching_objective(cost: np.ndarray, match_of_row: np.ndarray) -> int:
    rows = np.flatnonzero(match_of_row >= 0)
    return int(cost[rows, match_of_row[rows]].sum())


def require_assignment(inst: OTInstance):
    if not inst.is_unit:
        raise ValueError("assignment solvers require unit square instances")


def make_result(inst, flow, *, iterations, wall_time, exact, solver,
                converged=True, objective_value=None, **info) -> SolveResult:
    obj = objective(inst, flow) if objective_value is None else objective_value
    return SolveResult(objective=obj, flow=flow, iterations=int(iterations),
                       wall_time=float(wall_time), residue=residue(inst, flow),
                       exact=exact, converged=converged, solver=solver,
                       info=info)

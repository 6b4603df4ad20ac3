"""Benchmark protocol: calibration, timed suites, profiles and eta sweeps.

Every timing is a median over repeated runs, taken with a monotonic clock
around the solver call only, strictly one solve at a time.  The exact
objective of each instance comes from network simplex and is attached to
every record.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import platform
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import auction, hungarian, netsimplex, scaling
from .core import OTInstance, SolveResult
from .scaling import ScalingConfig, approximation_ratio

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 3600.0
TARGET_RATIO = 1.1


# -- solver registry ---------------------------------------------------------

@dataclass(frozen=True)
class SolverSpec:
    name: str
    run: Callable[..., SolveResult]
    unit_only: bool
    exact: bool


def _run_ns(inst, params, time_limit):
    return netsimplex.solve_network_simplex(inst, time_limit=time_limit)


def _run_km(inst, params, time_limit):
    return hungarian.solve_km(inst, time_limit=time_limit)


def _run_bkm(inst, params, time_limit):
    return hungarian.solve_batched_km(inst, int(params.get("B", 100)),
                                      time_limit=time_limit)


def _run_auction(inst, params, time_limit):
    eps = params.get("epsilon") or 1.0 / (inst.n + 1)
    return auction.solve_auction(inst, float(eps), time_limit=time_limit)


def _run_auction_scaled(inst, params, time_limit):
    return auction.solve_auction_scaled(
        inst, params.get("epsilon0"), float(params.get("theta", 4.0)),
        params.get("epsilon_final"), time_limit=time_limit)


def _scaling_runner(fn):
    def run(inst, params, time_limit):
        cfg = ScalingConfig(float(params.get("eta", 100.0)),
                            float(params.get("eps_fraction", 1e-3)),
                            int(params.get("max_iterations", 100_000)),
                            bool(params.get("round_output", False)),
                            time_limit)
        return fn(inst, cfg)
    return run


SOLVERS = {
    "network_simplex": SolverSpec("network_simplex", _run_ns, False, True),
    "km": SolverSpec("km", _run_km, True, True),
    "batched_km": SolverSpec("batched_km", _run_bkm, True, False),
    "auction": SolverSpec("auction", _run_auction, True, False),
    "auction_scaled": SolverSpec("auction_scaled", _run_auction_scaled, True,
                                 False),
    "sinkhorn": SolverSpec("sinkhorn", _scaling_runner(scaling.sinkhorn),
                           False, False),
    "greenkhorn": SolverSpec("greenkhorn",
                             _scaling_runner(scaling.greenkhorn), False,
                             False),
}


def solve(inst: OTInstance, solver: str, time_limit=None, **params):
    """Run a registered solver by name."""
    try:
        spec = SOLVERS[solver]
    except KeyError:
        raise ValueError(f"unknown solver {solver!r}; choose from "
                         f"{sorted(SOLVERS)}") from None
    return spec.run(inst, params, time_limit)


def warm_up():
    """Trigger JIT compilation of every kernel on a tiny instance."""
    C = np.array([[1, 3], [2, 1]])
    tiny = OTInstance(C, [1, 1], [1, 1], name="warmup")
    for name in SOLVERS:
        solve(tiny, name, eta=10.0, epsilon=0.3, B=3)


# -- calibrated parameters ---------------------------------------------------

@dataclass
class CalibratedParams:
    dataset: str
    hash: str
    exact_objective: int
    eta: float | None = None
    eta_ratio: float | None = None
    B: int | None = None
    B_ratio: float | None = None
    auction_eps: float | None = None
    auction_scaled_eps: float | None = None
    auction_scaled_ratio: float | None = None
    status: str = "ok"

    def solver_params(self, solver: str) -> dict:
        if solver in ("sinkhorn", "greenkhorn") and self.eta:
            return {"eta": self.eta}
        if solver == "batched_km" and self.B:
            return {"B": self.B}
        if solver == "auction" and self.auction_eps:
            return {"epsilon": self.auction_eps}
        if solver == "auction_scaled" and self.auction_scaled_eps:
            return {"epsilon_final": self.auction_scaled_eps}
        return {}


_PARAM_FIELDS = ["dataset", "hash", "exact_objective", "eta", "eta_ratio",
                 "B", "B_ratio", "auction_eps", "auction_scaled_eps",
                 "auction_scaled_ratio", "status"]


class ParamCache(dict):
    """Calibrated parameters keyed by ``(dataset name, content hash)``."""

    def lookup(self, inst: OTInstance) -> CalibratedParams | None:
        return self.get((inst.name, inst.content_hash))

    def save(self, path):
        with open(path, "w", newline="") as fh:
            _write_env_header(fh)
            w = csv.writer(fh)
            w.writerow(_PARAM_FIELDS)
            for key in sorted(self):
                p = self[key]
                w.writerow([_fmt(getattr(p, f)) for f in _PARAM_FIELDS])

    @classmethod
    def load(cls, path) -> "ParamCache":
        cache = cls()
        if not os.path.exists(path):
            return cache
        for row in _read_csv(path):
            p = CalibratedParams(
                dataset=row["dataset"], hash=row["hash"],
                exact_objective=int(float(row["exact_objective"])),
                eta=_num(row["eta"]), eta_ratio=_num(row["eta_ratio"]),
                B=_int(row["B"]), B_ratio=_num(row["B_ratio"]),
                auction_eps=_num(row["auction_eps"]),
                auction_scaled_eps=_num(row["auction_scaled_eps"]),
                auction_scaled_ratio=_num(row["auction_scaled_ratio"]),
                status=row["status"])
            cache[(p.dataset, p.hash)] = p
        return cache


def epsilon_grid(inst: OTInstance):
    """Powers of two times ``1/(n+1)`` up to the largest cost, descending.
    The last point guarantees exactness for integral costs."""
    base = 1.0 / (inst.n + 1)
    top = max(inst.max_cost, 1)
    grid = [base]
    while grid[-1] * 2 <= top:
        grid.append(grid[-1] * 2)
    return grid[::-1]


def calibrate_auction_eps(inst, exact_objective, time_limit=None):
    """Largest grid epsilon whose plain auction returns the exact optimum."""
    for eps in epsilon_grid(inst):
        res = auction.solve_auction(inst, eps, time_limit=time_limit)
        if res.converged and res.objective == exact_objective:
            return eps
    return None


def calibrate_auction_scaled_eps(inst, exact_objective, target=TARGET_RATIO,
                                 time_limit=None):
    for eps in epsilon_grid(inst):
        res = auction.solve_auction_scaled(inst, epsilon_final=eps,
                                           time_limit=time_limit)
        ratio = approximation_ratio(res.objective, exact_objective)
        if res.converged and ratio <= target:
            return eps, ratio
    return None, None


def calibrate_batched_km(inst, exact_objective, target=TARGET_RATIO,
                         time_limit=None):
    """Smallest power-of-two quantization level meeting ``target``."""
    cap = max(inst.max_cost, 1) * inst.n
    B = 1
    while True:
        B_eff = min(B, cap)
        res = hungarian.solve_batched_km(inst, B_eff, time_limit=time_limit)
        ratio = approximation_ratio(res.objective, exact_objective)
        if res.converged and ratio <= target:
            return B_eff, ratio
        if B_eff == cap:
            return None, ratio
        B *= 2


def calibrate_instance(inst: OTInstance, exact_objective=None,
                       target=TARGET_RATIO, time_limit=None,
                       scaling_cfg: ScalingConfig | None = None):
    if exact_objective is None:
        exact_objective = netsimplex.solve_network_simplex(inst).objective
    p = CalibratedParams(inst.name, inst.content_hash, int(exact_objective))
    problems = []
    cfg = scaling_cfg or ScalingConfig(1.0, time_limit=time_limit)
    cal = scaling.calibrate_eta(inst, exact_objective, target, cfg)
    if cal.success:
        p.eta, p.eta_ratio = cal.eta, cal.ratio
    else:
        problems.append(f"eta(best ratio {cal.ratio:.4g})")
    if inst.is_unit:
        p.B, p.B_ratio = calibrate_batched_km(inst, exact_objective, target,
                                              time_limit)
        if p.B is None:
            problems.append("B")
        p.auction_eps = calibrate_auction_eps(inst, exact_objective,
                                              time_limit)
        if p.auction_eps is None:
            problems.append("auction_eps")
        p.auction_scaled_eps, p.auction_scaled_ratio = \
            calibrate_auction_scaled_eps(inst, exact_objective, target,
                                         time_limit)
        if p.auction_scaled_eps is None:
            problems.append("auction_scaled_eps")
    if problems:
        p.status = "failed:" + ",".join(problems)
    return p


def calibrate_all(instances: Iterable[OTInstance], cache_path=None,
                  cache: ParamCache | None = None, target=TARGET_RATIO,
                  time_limit=None) -> ParamCache:
    """Calibrate every instance not already in the cache (keyed by name and
    content hash); the cache is written back when ``cache_path`` is set."""
    if cache is None:
        cache = ParamCache.load(cache_path) if cache_path else ParamCache()
    changed = False
    for inst in instances:
        if cache.lookup(inst) is not None:
            continue
        log.info("calibrating %s", inst.name)
        cache[(inst.name, inst.content_hash)] = calibrate_instance(
            inst, target=target, time_limit=time_limit)
        changed = True
    if cache_path and changed:
        cache.save(cache_path)
    return cache


# -- timed suites ------------------------------------------------------------

@dataclass
class BenchConfig:
    repeats: int = 3
    timeout: float = DEFAULT_TIMEOUT
    params: ParamCache | None = None
    overrides: dict = field(default_factory=dict)


@dataclass
class BenchRecord:
    dataset: str
    solver: str
    status: str
    wall_time: float | None
    objective: float | None
    exact_objective: int | None
    ratio: float | None
    iterations: int | None
    params: dict = field(default_factory=dict)
    times: list = field(default_factory=list)

    @property
    def finished(self) -> bool:
        return self.status == "ok"


def _time_call(fn):
    t0 = time.perf_counter()
    res = fn()
    return time.perf_counter() - t0, res


def median_time(fn, repeats=3):
    """Median wall time over ``repeats`` calls and the last result."""
    times = []
    res = None
    for _ in range(repeats):
        t, res = _time_call(fn)
        times.append(t)
    return statistics.median(times), res, times


def run_suite(instances, solvers, config: BenchConfig | None = None,
              exact_cache: dict | None = None):
    """Time every applicable ``(instance, solver)`` pair.

    Unit-only solvers on non-unit instances yield ``not_applicable``
    records; runs that exceed ``config.timeout`` yield ``timeout`` records
    without an objective.
    """
    config = config or BenchConfig()
    exact_cache = {} if exact_cache is None else exact_cache
    for s in solvers:
        if s not in SOLVERS:
            raise ValueError(f"unknown solver {s!r}")
    warm_up()
    records = []
    for inst in instances:
        key = (inst.name, inst.content_hash)
        cached = config.params.lookup(inst) if config.params else None
        if key not in exact_cache:
            exact_cache[key] = (cached.exact_objective if cached else
                                netsimplex.solve_network_simplex(inst)
                                .objective)
        exact = exact_cache[key]
        for name in solvers:
            spec = SOLVERS[name]
            params = dict(cached.solver_params(name)) if cached else {}
            params.update(config.overrides.get(name, {}))
            if spec.unit_only and not inst.is_unit:
                records.append(BenchRecord(inst.name, name, "not_applicable",
                                           None, None, exact, None, None,
                                           params))
                continue
            wall, res, times = median_time(
                lambda: spec.run(inst, params, config.timeout),
                config.repeats)
            if res.converged:
                status = "ok"
            elif wall >= config.timeout:
                status = "timeout"
            else:
                status = "nonconverged"
            obj = res.objective if status == "ok" else None
            ratio = (approximation_ratio(obj, exact)
                     if obj is not None else None)
            records.append(BenchRecord(inst.name, name, status, wall, obj,
                                       exact, ratio, res.iterations, params,
                                       times))
            log.info("%s %s %s %.4gs", inst.name, name, status, wall)
    return records


# -- performance profiles ----------------------------------------------------

@dataclass
class ProfileCurve:
    solver: str
    points: list  # (factor, datasets with factor <= it)
    finished: int


def performance_profile(records) -> list[ProfileCurve]:
    """Dolan-More profile: factor = time / fastest time on each dataset;
    unfinished runs count as infinitely slow."""
    records = [r for r in records if r.status != "not_applicable"]
    if not records:
        raise ValueError("no records to profile")
    by_ds: dict[str, dict[str, float]] = {}
    for r in records:
        t = r.wall_time if r.finished else math.inf
        by_ds.setdefault(r.dataset, {})[r.solver] = t
    solvers = sorted({r.solver for r in records})
    factors = {s: [] for s in solvers}
    for times in by_ds.values():
        best = min(times.values())
        for s, t in times.items():
            if math.isinf(t):
                factors[s].append(math.inf)
            else:
                factors[s].append(t / best if best > 0 else 1.0)
    curves = []
    for s in solvers:
        fs = np.array(factors[s], dtype=float)
        finite = np.unique(fs[np.isfinite(fs)])
        grid = np.union1d([1.0], finite)
        points = [(float(f), int(np.sum(fs <= f))) for f in grid]
        curves.append(ProfileCurve(s, points, int(np.isfinite(fs).sum())))
    return curves


# -- eta sweeps --------------------------------------------------------------

@dataclass
class SweepRow:
    solver: str
    eta: float
    ratio: float
    iterations: int
    converged: bool
    objective: float


def eta_sweep(inst: OTInstance, etas, exact_objective=None,
              cfg: ScalingConfig | None = None,
              solvers=("sinkhorn", "greenkhorn")):
    """Approximation ratio and iteration count of each scaling solver at
    every ``eta`` (normalized-cost convention)."""
    if exact_objective is None:
        exact_objective = netsimplex.solve_network_simplex(inst).objective
    base = cfg or ScalingConfig(1.0)
    rows = []
    for name in solvers:
        fn = {"sinkhorn": scaling.sinkhorn,
              "greenkhorn": scaling.greenkhorn}[name]
        for eta in etas:
            c = ScalingConfig(float(eta), base.eps_fraction,
                              base.max_iterations, False, base.time_limit)
            res = fn(inst, c)
            rows.append(SweepRow(name, float(eta),
                                 approximation_ratio(res.objective,
                                                     exact_objective),
                                 res.iterations, res.converged,
                                 res.objective))
    return rows


# -- CSV output --------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return "inf" if math.isinf(v) else f"{float(v):.6g}"
    if isinstance(v, dict):
        return ";".join(f"{k}={_fmt(x)}" for k, x in sorted(v.items()))
    return str(v)


def _num(s):
    return None if s in ("", None) else float(s)


def _int(s):
    return None if s in ("", None) else int(float(s))


def environment() -> dict:
    import numba
    cpu = platform.processor() or platform.machine()
    try:
        with open("/proc/cpuinfo") as fh:
            for line in fh:
                if line.startswith("model name"):
                    cpu = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    return {"cpu": cpu, "python": platform.python_version(),
            "numpy": np.__version__, "numba": numba.__version__,
            "threads": "1"}


def _write_env_header(fh):
    for k, v in environment().items():
        fh.write(f"# {k}={v}\n")


def _read_csv(path):
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


RECORD_FIELDS = ["dataset", "solver", "status", "wall_time", "objective",
                 "exact_objective", "ratio", "iterations", "params", "times"]


def write_records(records, path):
    with open(path, "w", newline="") as fh:
        _write_env_header(fh)
        w = csv.writer(fh)
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow([r.dataset, r.solver, r.status, _fmt(r.wall_time),
                        _fmt(r.objective), _fmt(r.exact_objective),
                        _fmt(r.ratio), _fmt(r.iterations), _fmt(r.params),
                        " ".join(_fmt(t) for t in r.times)])


def read_records(path):
    out = []
    for row in _read_csv(path):
        params = {}
        for kv in filter(None, row["params"].split(";")):
            k, v = kv.split("=", 1)
            params[k] = float(v)
        out.append(BenchRecord(
            row["dataset"], row["solver"], row["status"],
            _num(row["wall_time"]), _num(row["objective"]),
            _int(row["exact_objective"]), _num(row["ratio"]),
            _int(row["iterations"]), params,
            [float(t) for t in row["times"].split()]))
    return out


def write_profile(curves, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["solver", "factor", "count"])
        for c in curves:
            for f, n in c.points:
                w.writerow([c.solver, _fmt(f), n])


def write_sweep(rows, path):
    with open(path, "w", newline="") as fh:
        _write_env_header(fh)
        w = csv.writer(fh)
        w.writerow(["solver", "eta", "ratio", "iterations", "converged",
                    "objective"])
        for r in rows:
            w.writerow([r.solver, _fmt(r.eta), _fmt(r.ratio), r.iterations,
                        _fmt(r.converged), _fmt(r.objective)])

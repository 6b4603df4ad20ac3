"""Command line entry point: ``python -m otbench <command> ...``."""

from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys

from . import bench, datasets, formats
from .datasets import QuantizationPolicy


def _floats(text):
    return [float(x) for x in text.replace(",", " ").split()]


def _load_suite(directory):
    paths = sorted(glob.glob(os.path.join(directory, "*.txt")))
    if not paths:
        raise SystemExit(f"no *.txt instances in {directory}")
    return [formats.read_instance(p) for p in paths]


def cmd_gen(args):
    kind = args.kind
    if kind == "circlesquare":
        inst = datasets.gen_circle_square(
            args.k, args.scale or datasets.DEFAULT_SCALES["circlesquare"])
    elif kind == "image":
        a_img = formats.read_pnm(args.a)
        b_img = formats.read_pnm(args.b)
        if a_img.ndim == 3:
            scale = args.scale or datasets.DEFAULT_SCALES["cifar"]
            a = datasets.color_image_to_points(a_img)
            b = datasets.color_image_to_points(b_img)
        else:
            scale = args.scale or datasets.DEFAULT_SCALES["mnist"]
            pol = QuantizationPolicy(scale, args.total_mass)
            a = datasets.image_to_distribution(a_img, pol)
            b = datasets.image_to_distribution(b_img, pol)
            a, b = datasets.balance_pair(a, b)
        inst = datasets.build_instance(a, b, QuantizationPolicy(scale),
                                       args.name or "image")
    elif kind == "cloud":
        scale = args.scale or datasets.DEFAULT_SCALES["nlp"]
        a, b = datasets.balance_pair(formats.read_embeddings(args.a),
                                     formats.read_embeddings(args.b))
        inst = datasets.build_instance(a, b, QuantizationPolicy(scale),
                                       args.name or "cloud")
    else:  # suite
        os.makedirs(args.out, exist_ok=True)
        for inst in _standard_suite(args.families.split(","), args.count):
            formats.write_instance(inst, os.path.join(args.out,
                                                      inst.name + ".txt"))
        return 0
    if args.name:
        inst = datasets.OTInstance(inst.cost, inst.supplies, inst.demands,
                                   name=args.name, meta=inst.meta)
    formats.write_instance(inst, args.out)
    print(f"wrote {inst.name}: n={inst.n} m={inst.m} S={inst.total} "
          f"N={inst.max_cost}")
    return 0


def _standard_suite(families, count):
    for fam in families:
        if fam == "cs":
            for k in (100, 900, 2500, 4900)[:count]:
                yield datasets.gen_circle_square(k)
        elif fam == "mnist":
            for s in range(count):
                yield datasets.mnist_style_instance(s)
        elif fam == "cifar":
            for s in range(1, count + 1):
                yield datasets.cifar_style_instance(s)
        elif fam == "nlp":
            for s in range(1, count + 1):
                yield datasets.nlp_style_instance(s)
        else:
            raise SystemExit(f"unknown family {fam!r}")


def cmd_solve(args):
    inst = formats.read_instance(args.instance)
    params = {k: v for k, v in {
        "eta": args.eta, "epsilon": args.epsilon, "B": args.B,
        "epsilon0": args.epsilon0, "theta": args.theta,
        "epsilon_final": args.epsilon_final,
        "round_output": args.round or None}.items() if v is not None}
    res = bench.solve(inst, args.solver, time_limit=args.timeout, **params)
    out = {"dataset": inst.name, "solver": args.solver,
           "objective": res.objective, "residue": res.residue,
           "iterations": res.iterations, "wall_time": res.wall_time,
           "exact": res.exact, "converged": res.converged}
    print(json.dumps(out, default=float))
    return 0


def cmd_bench(args):
    instances = _load_suite(args.suite)
    params = bench.ParamCache.load(args.params) if args.params else None
    cfg = bench.BenchConfig(repeats=args.repeats, timeout=args.timeout,
                            params=params)
    records = bench.run_suite(instances, args.solvers.split(","), cfg)
    bench.write_records(records, args.out)
    return 0


def cmd_profile(args):
    curves = bench.performance_profile(bench.read_records(args.inp))
    bench.write_profile(curves, args.out)
    return 0


def cmd_sweep(args):
    inst = formats.read_instance(args.instance)
    rows = bench.eta_sweep(inst, _floats(args.etas))
    bench.write_sweep(rows, args.out)
    return 0


def cmd_calibrate(args):
    bench.calibrate_all(_load_suite(args.suite), cache_path=args.out,
                        time_limit=args.timeout)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="otbench", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate or ingest an instance")
    g.add_argument("kind", choices=["circlesquare", "image", "cloud",
                                    "suite"])
    g.add_argument("--k", type=int, default=100)
    g.add_argument("--a")
    g.add_argument("--b")
    g.add_argument("--scale", type=int)
    g.add_argument("--total-mass", type=int,
                   default=datasets.DEFAULT_TOTAL_MASS)
    g.add_argument("--name")
    g.add_argument("--families", default="cs,mnist,cifar,nlp")
    g.add_argument("--count", type=int, default=2)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve one instance file")
    s.add_argument("instance")
    s.add_argument("--solver", required=True, choices=sorted(bench.SOLVERS))
    s.add_argument("--eta", type=float)
    s.add_argument("--epsilon", type=float)
    s.add_argument("--B", type=int)
    s.add_argument("--epsilon0", type=float)
    s.add_argument("--theta", type=float)
    s.add_argument("--epsilon-final", type=float)
    s.add_argument("--round", action="store_true")
    s.add_argument("--timeout", type=float)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="time solvers on a directory suite")
    b.add_argument("--suite", required=True)
    b.add_argument("--solvers", required=True)
    b.add_argument("--params")
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--timeout", type=float, default=bench.DEFAULT_TIMEOUT)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bench)

    pr = sub.add_parser("profile", help="performance profile from records")
    pr.add_argument("--in", dest="inp", required=True)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_profile)

    sw = sub.add_parser("sweep", help="eta sweep for the scaling solvers")
    sw.add_argument("--instance", required=True)
    sw.add_argument("--etas", required=True)
    sw.add_argument("--out", required=True)
    sw.set_defaults(func=cmd_sweep)

    ca = sub.add_parser("calibrate", help="calibrate approximation params")
    ca.add_argument("--suite", required=True)
    ca.add_argument("--timeout", type=float)
    ca.add_argument("--out", required=True)
    ca.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else
                        logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

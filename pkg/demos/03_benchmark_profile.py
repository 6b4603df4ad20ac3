"""A miniature benchmark run, from calibration to performance profile.

Writes params.csv, records.csv and profile.csv into a scratch directory.
"""

import os
import tempfile

from otbench import gen_circle_square
from otbench.bench import (BenchConfig, calibrate_all, performance_profile,
                           run_suite, write_profile, write_records)
from otbench.datasets import cifar_style_instance, mnist_style_instance

out = tempfile.mkdtemp(prefix="otbench-")
suite = [gen_circle_square(100), gen_circle_square(400),
         cifar_style_instance(1), mnist_style_instance(0)]
solvers = ["network_simplex", "km", "batched_km", "auction_scaled",
           "sinkhorn", "greenkhorn"]

params = calibrate_all(suite, cache_path=os.path.join(out, "params.csv"))
records = run_suite(suite, solvers, BenchConfig(repeats=3, params=params))
write_records(records, os.path.join(out, "records.csv"))

for r in records:
    t = "-" if r.wall_time is None else f"{r.wall_time:.4f}s"
    ratio = "-" if r.ratio is None else f"{r.ratio:.4f}"
    print(f"{r.dataset:<8}{r.solver:<16}{r.status:<15}{t:>10}{ratio:>9}")

curves = performance_profile(records)
write_profile(curves, os.path.join(out, "profile.csv"))
print()
for c in curves:
    print(f"{c.solver:<16} fastest on {c.points[0][1]} of {c.finished} "
          f"finished datasets")
print(f"\nCSV files in {out}")

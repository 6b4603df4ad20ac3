"""Four exact routes to the same optimum.

Builds the 100-point CircleSquare matching instance and solves it with
network simplex, Kuhn-Munkres, batched KM at a lossless quantization level
and eps-scaled auction below the 1/n exactness threshold.
"""

from otbench import (gen_circle_square, solve_auction_scaled,
                     solve_batched_km, solve_km, solve_network_simplex)
from otbench.bench import warm_up

warm_up()
inst = gen_circle_square(100)
print(f"{inst.name}: n={inst.n}, largest cost N={inst.max_cost}")

runs = {
    "network simplex": solve_network_simplex(inst),
    "Kuhn-Munkres": solve_km(inst),
    "batched KM, B=N*n": solve_batched_km(inst, inst.max_cost * inst.n),
    "auction, eps=1/(n+1)": solve_auction_scaled(inst),
}
for name, res in runs.items():
    print(f"{name:>22}: objective {res.objective}  "
          f"({res.wall_time * 1e3:.1f} ms, {res.iterations} iterations)")

# Coarser quantization trades accuracy for speed.
exact = runs["network simplex"].objective
for B in (4, 16, 64, 256):
    res = solve_batched_km(inst, B)
    print(f"batched KM B={B:<4} ratio {res.objective / exact:.4f}")

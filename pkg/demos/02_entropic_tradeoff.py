"""How the regularization strength eta shapes Sinkhorn and Greenkhorn.

Larger eta gives plans closer to optimal but needs more scaling
iterations.  The last step calibrates the smallest eta that reaches a
1.1-approximation.
"""

from otbench import gen_circle_square, solve_network_simplex
from otbench.bench import eta_sweep, warm_up
from otbench.scaling import calibrate_eta

warm_up()
inst = gen_circle_square(100)
exact = solve_network_simplex(inst).objective

print(f"{'solver':<11}{'eta':>7}{'ratio':>9}{'iterations':>12}")
for row in eta_sweep(inst, [25, 50, 100, 200, 400, 800], exact):
    print(f"{row.solver:<11}{row.eta:>7g}{row.ratio:>9.4f}"
          f"{row.iterations:>12}")

cal = calibrate_eta(inst, exact)
print(f"\nsmallest eta for 1.1x: {cal.eta:.1f} (ratio {cal.ratio:.4f}); "
      f"eta {cal.predecessor:.1f} gives {cal.predecessor_ratio:.4f}")

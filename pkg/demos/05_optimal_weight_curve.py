"""
Choosing the weight curve
=========================

If we know how much time the log price ratio is expected to spend at each
level (the weight w), the best state-dependent weight q maximizes a concave
quadratic pointwise. Two reference weights: exp(-gamma |y|) and exp(-gamma y^2).
"""

import numpy as np

from energy_entropy.two_asset import constant_curve
from energy_entropy.variational import ConstraintSet, WeightFunction, lambda_functional, optimal_q

half = constant_curve(0.5)
for gamma in (0.5, 1.0, 2.0):
    bb = WeightFunction.bang_bang(gamma)
    opt = optimal_q(bb)
    sup = (1 + gamma**2) / (2 * gamma) if gamma < 1 else 1.0
    print(f"exp(-{gamma}|y|): equal weight {lambda_functional(half, bb):.6f}, optimum {opt.value:.6f} (sup {sup:.6f}, gap <= {opt.gap_bound:.1e})")

for gamma in (0.5, 1.0, 2.0):
    ou = WeightFunction.ou(gamma)
    opt = optimal_q(ou)
    print(f"exp(-{gamma} y^2): equal weight {lambda_functional(half, ou):.6f}, optimum {opt.value:.6f}")

# The optimal curve leans against the ratio: above 0 it underweights asset 1.
q = optimal_q(WeightFunction.ou(1.0)).curve
ys = np.linspace(-1, 1, 9)
print("q*(y):", "  ".join(f"{y:+.2f}:{v:.3f}" for y, v in zip(ys, q(ys))))

# A floor on either weight caps how far it can lean.
cons = ConstraintSet(q_floor=0.3)
opt = optimal_q(WeightFunction.bang_bang(0.8), cons)
print(f"with a 0.3 floor: q*(1) = {float(opt.curve(1.0)):.3f}, value {opt.value:.6f}")

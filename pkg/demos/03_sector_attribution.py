"""
Splitting drift between sector and stock selection
==================================================

A portfolio built as sector weights times within-sector portfolios has
relative entropy and free energy that split exactly into a between-sector part
and a weighted average of within-sector parts.
"""

import numpy as np

from energy_entropy import HierarchicalPortfolio, check_mixing_conditions, energy_chain_rule, entropy_chain_rule, flatten
from energy_entropy.hierarchy import sector_market
from energy_entropy.simplex import relative_entropy

rng = np.random.default_rng(7)
members = [[0, 1, 2], [3, 4], [5, 6, 7, 8]]

h = HierarchicalPortfolio([0.5, 0.2, 0.3], [[0.5, 0.3, 0.2], [0.6, 0.4], [0.25, 0.25, 0.25, 0.25]], members)
mu0 = rng.dirichlet(np.full(9, 4.0))
mu1 = mu0 * np.exp(rng.normal(0, 0.05, 9))
mu1 /= mu1.sum()

print("flat weights:", np.round(flatten(h), 3))

alpha, within = sector_market(mu0, members)
market = HierarchicalPortfolio(alpha, within, members)
total, between, inner = entropy_chain_rule(h, market)
print(f"H(pi|mu) = {total:.6f} = between {between:.6f} + sum lambda_i H_i {np.dot(h.sector_weights, inner):.6f}")
print(f"flat check: {relative_entropy(flatten(h), mu0):.6f}")

g, g_sector, g_within = energy_chain_rule(h, mu0, mu1)
print(f"free energy {g:.3e} = sector {g_sector:.3e} + within {np.dot(h.sector_weights, g_within):.3e}")

# Does the drift of the whole increase when each sector portfolio is
# rebalanced sensibly? Only under conditions on how sector weights move.
h_next = h.with_weights([0.5, 0.2, 0.3])
res = check_mixing_conditions(h, h_next, mu0, mu1)
print(f"case: {res.case.name}, delta drift {res.delta_drift:.3e}")

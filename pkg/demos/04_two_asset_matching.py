"""
Matched moves in a two-asset market
===================================

On a binary tree the log price ratio moves by +/- sigma. Every up-crossing of
a level band that is later undone by a down-crossing earns the constant-weight
portfolio a fixed factor; moves left unmatched carry the trend.
"""

import math

import numpy as np

from energy_entropy.two_asset import (
    BinaryPath,
    check_reversion,
    concavity_violations,
    constant_weight_decomposition,
    discretize_to_grid,
    logistic_curve,
    market_curve,
    match_factor,
    tally_matches,
)

path = BinaryPath.from_moves("uuduudddudddud", sigma=0.1)
tally = tally_matches(path)
print(f"path {path.to_string().split()[1]}: N = {tally.N} matched pairs, {tally.unmatched_count} unmatched")
print("pairs per band:", tally.matched_per_level)

mf = match_factor(0.5, 0.1)
print(f"match factor at q = 1/2, sigma = 0.1: {mf:.7f}  (premium per pair {math.log(mf):.2e})")

m, u, c, total = constant_weight_decomposition(path, 0.5)
print(f"log V/S = matches {m:+.5f} + unmatched {u:+.5f} + concentration {c:+.5f} = {total:+.5f}")

# Real data: discretize a series to the grid first.
rng = np.random.default_rng(1)
y = np.cumsum(rng.normal(0, 0.05, 500))
grid_path = discretize_to_grid(y, 0.1)
t = tally_matches(grid_path)
print(f"random walk: {len(grid_path)} grid moves, N = {t.N}, unmatched = {t.unmatched_count}")

# A state-dependent weight earns a premium on every match only if it reverts:
# q' <= q (1 - q). The market itself sits exactly on the boundary.
for name, curve in (("market", market_curve()), ("logistic(0.5)", logistic_curve(0.5)), ("logistic(2)", logistic_curve(2.0))):
    rev = check_reversion(curve, -4, 4, 1e-4)
    bad = concavity_violations(curve)
    print(f"{name:14s} reversion={rev!s:5s}  generating function concave on grid: {bad.size == 0}")

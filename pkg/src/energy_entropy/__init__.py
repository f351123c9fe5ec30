"""Energy-entropy decompositions of portfolio relative value.

Submodules:

- ``simplex``: weight vectors, relative and Shannon entropy
- ``ledger``: free energy and the per-period decomposition of relative value
- ``strategies``: flows on the simplex and lambda-strategies
- ``hierarchy``: sector/stock chain rules and attribution
- ``two_asset``: binary-tree matching, weight curves, reversion test
- ``variational``: optimal two-asset weight curves
- ``diffusion``: Monte Carlo local times
- ``data``, ``experiment``, ``cli``: ingestion, runs and the command line
"""

from .hierarchy import (
    AttributionCase,
    HierarchicalPortfolio,
    check_mixing_conditions,
    energy_chain_rule,
    entropy_chain_rule,
    flatten,
)
from .ledger import (
    DecompositionLedger,
    MarketPath,
    build_ledger,
    free_energy,
    outperformance_horizon,
    relative_value_step,
)
from .simplex import (
    DimensionError,
    InfiniteEntropyError,
    SimplexVector,
    generating_function_value,
    relative_entropy,
    shannon_entropy,
)
from .strategies import (
    FLOW_IN,
    FLOW_OUT,
    GRADIENT,
    StrategySpec,
    flow_step,
    lambda_step,
    reverse_flow_with_budget,
    run_lambda_strategy,
    run_strategy,
)
from .two_asset import (
    BinaryPath,
    WeightCurve,
    check_reversion,
    logistic_curve,
    market_curve,
    match_factor,
    tally_matches,
)
from .variational import ConstraintSet, WeightFunction, lambda_functional, optimal_q

__version__ = "0.1.0"

__all__ = [
    "AttributionCase",
    "BinaryPath",
    "ConstraintSet",
    "DecompositionLedger",
    "DimensionError",
    "FLOW_IN",
    "FLOW_OUT",
    "GRADIENT",
    "HierarchicalPortfolio",
    "InfiniteEntropyError",
    "MarketPath",
    "SimplexVector",
    "StrategySpec",
    "WeightCurve",
    "WeightFunction",
    "build_ledger",
    "check_mixing_conditions",
    "check_reversion",
    "energy_chain_rule",
    "entropy_chain_rule",
    "flatten",
    "flow_step",
    "free_energy",
    "generating_function_value",
    "lambda_functional",
    "lambda_step",
    "logistic_curve",
    "market_curve",
    "match_factor",
    "optimal_q",
    "outperformance_horizon",
    "relative_entropy",
    "relative_value_step",
    "reverse_flow_with_budget",
    "run_lambda_strategy",
    "run_strategy",
    "shannon_entropy",
    "tally_matches",
]

"""Synthetic market fixtures for tests and demos.

All generators are deterministic given ``seed``.
"""

from __future__ import annotations

import math

import numpy as np

from .data import PriceTable
from .ledger import MarketPath

__all__ = [
    "mean_reverting_pair",
    "trending_then_concentrating",
    "random_market",
    "smooth_market",
    "emerging_markets_table",
    "EM_LEADING_WEIGHTS",
    "FIXTURES",
    "fixture",
]

EM_LEADING_WEIGHTS = (0.138, 0.044, 0.073)


def _pair_from_log_ratio(y: np.ndarray, common: np.ndarray | None = None) -> MarketPath:
    # X1 = e^{y/2}, X2 = e^{-y/2}, times a common level that cancels from the weights
    c = np.ones_like(y) if common is None else np.exp(common)
    caps = np.column_stack([np.exp(0.5 * y), np.exp(-0.5 * y)]) * c[:, None]
    return MarketPath(caps=caps)


def mean_reverting_pair(T: int = 240, seed: int = 0, kappa: float = 0.15, vol: float = 0.08) -> MarketPath:
    """Two assets whose log price ratio is a discretized Ornstein-Uhlenbeck process around 0."""
    rng = np.random.default_rng(seed)
    y = np.zeros(T + 1)
    z = rng.standard_normal(T)
    for t in range(T):
        y[t + 1] = (1.0 - kappa) * y[t] + vol * z[t]
    common = np.cumsum(np.concatenate([[0.0], 0.01 * rng.standard_normal(T)]))
    return _pair_from_log_ratio(y, common)


def trending_then_concentrating(
    T: int = 240, seed: int = 0, switch: int = 120, trend: float = 0.04, vol: float = 0.05
) -> MarketPath:
    """Mean reversion for ``switch`` periods, then a steady trend that lets asset 1 dominate."""
    rng = np.random.default_rng(seed)
    y = np.zeros(T + 1)
    z = rng.standard_normal(T)
    for t in range(T):
        if t < switch:
            y[t + 1] = 0.85 * y[t] + vol * z[t]
        else:
            y[t + 1] = y[t] + trend + 0.5 * vol * z[t]
    return _pair_from_log_ratio(y)


def random_market(n: int, T: int, seed: int = 0, vol: float = 0.05, drift_spread: float = 0.0) -> MarketPath:
    """Independent Gaussian log-return caps for ``n`` assets, random initial caps."""
    rng = np.random.default_rng(seed)
    x0 = np.log(rng.uniform(0.5, 2.0, n))
    drifts = drift_spread * rng.standard_normal(n)
    steps = drifts + vol * rng.standard_normal((T, n))
    logx = np.vstack([x0, x0 + np.cumsum(steps, axis=0)])
    return MarketPath(caps=np.exp(logx))


def smooth_market(n: int, T: int, seed: int = 0, amplitude: float = 0.3, period: float = 200.0) -> MarketPath:
    """Slowly varying caps: phase-shifted sinusoids in log space."""
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0, 2 * math.pi, n)
    t = np.arange(T + 1)[:, None]
    logx = amplitude * np.sin(2 * math.pi * t / period + phases)
    return MarketPath(caps=np.exp(logx))


def _em_weights(seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    rest = rng.dirichlet(np.ones(15)) * (1.0 - sum(EM_LEADING_WEIGHTS))
    w = np.concatenate([EM_LEADING_WEIGHTS, rest])
    # nudge one trailing entry by a few ulps until the float sum is exactly 1
    for k in 3 + np.argsort(rest)[::-1]:
        base = w[k]
        ulp = np.spacing(base)
        for d in sorted(range(-64, 65), key=abs):
            w[k] = base + d * ulp
            if float(np.sum(w)) == 1.0:
                return w
        w[k] = base
    raise RuntimeError("could not make the weights sum exactly to 1")


def emerging_markets_table(T: int = 240, seed: int = 0) -> tuple[PriceTable, np.ndarray]:
    """Eighteen synthetic country price series with prescribed initial weights.

    Returns the price table and the initial weights, whose first three entries
    are ``EM_LEADING_WEIGHTS``.
    """
    rng = np.random.default_rng(seed)
    steps = 0.003 + 0.06 * rng.standard_normal((T, 18))
    prices = 100.0 * np.exp(np.vstack([np.zeros(18), np.cumsum(steps, axis=0)]))
    tickers = [f"C{i:02d}" for i in range(18)]
    dates = [f"m{t:04d}" for t in range(T + 1)]
    return PriceTable(tickers, dates, prices, "price"), _em_weights(seed)


def _em_path(T: int = 240, seed: int = 0) -> MarketPath:
    from .data import to_market_path

    table, w0 = emerging_markets_table(T, seed)
    return to_market_path(table, w0)


FIXTURES = {
    "mean_reverting_pair": mean_reverting_pair,
    "trending_then_concentrating": trending_then_concentrating,
    "emerging_markets": _em_path,
}


def fixture(name: str, seed: int = 0) -> MarketPath:
    """Market path for a named fixture."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    return FIXTURES[name](seed=seed)

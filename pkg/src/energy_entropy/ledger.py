"""Energy / entropy / control decomposition of log relative value.

For a portfolio ``pi(t)`` held against market weights ``mu(t)``, each period
splits exactly as::

    delta log V = free energy + (H(pi(t)|mu(t)) - H(pi(t+1)|mu(t+1)))
                  + (H(pi(t+1)|mu(t+1)) - H(pi(t)|mu(t+1)))

and the drift increment is ``free energy + control``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy.special import rel_entr

from .simplex import DimensionError, InfiniteEntropyError, SimplexVector, as_weights

__all__ = [
    "MarketPath",
    "LedgerRow",
    "DecompositionLedger",
    "relative_value_step",
    "free_energy",
    "free_energy_from_log_returns",
    "build_ledger",
    "outperformance_horizon",
    "LEDGER_COLUMNS",
]

LEDGER_COLUMNS = (
    "t",
    "gamma_star",
    "entropy_change",
    "control",
    "delta_drift",
    "log_v_cum",
    "entropy_level",
)

# classification slack, so strategies built to make the drift increment exactly 0 don't flip on rounding
CLASSIFY_TOL = 1e-12


@dataclass(frozen=True)
class MarketPath:
    """Capitalizations ``X(t)`` on a strictly increasing time index.

    ``weights`` (the market weights ``mu(t)``) are derived from ``caps`` unless
    passed explicitly.
    """

    caps: np.ndarray
    times: np.ndarray | None = None
    weights: np.ndarray | None = None
    tickers: tuple[str, ...] | None = None

    def __post_init__(self):
        caps = np.array(self.caps, dtype=float)
        if caps.ndim != 2 or caps.shape[1] < 2:
            raise ValueError("caps must be a (T+1, n) array with n >= 2")
        if not np.all(caps > 0) or not np.all(np.isfinite(caps)):
            raise ValueError("capitalizations must be finite and strictly positive")
        times = np.arange(caps.shape[0]) if self.times is None else np.asarray(self.times)
        if times.shape != (caps.shape[0],):
            raise DimensionError("times and caps disagree in length")
        if times.size > 1 and times.dtype.kind in "iuf" and not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly increasing")
        if self.weights is None:
            weights = caps / caps.sum(axis=1, keepdims=True)
        else:
            weights = np.array(self.weights, dtype=float)
            if weights.shape != caps.shape:
                raise DimensionError("weights and caps disagree in shape")
        for arr in (caps, weights):
            arr.setflags(write=False)
        object.__setattr__(self, "caps", caps)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_weights(cls, weights, times=None) -> "MarketPath":
        """Market path whose capitalizations equal its weights (total cap 1)."""
        w = np.asarray(weights, dtype=float)
        return cls(caps=w, times=times, weights=w / w.sum(axis=1, keepdims=True))

    @property
    def n_assets(self) -> int:
        return self.caps.shape[1]

    @property
    def horizon(self) -> int:
        """Number of periods ``T`` (one fewer than the number of dates)."""
        return self.caps.shape[0] - 1

    def mu(self, t: int) -> SimplexVector:
        return SimplexVector(self.weights[t])

    def rescaled(self, factors) -> "MarketPath":
        """Multiply every capitalization at time ``t`` by ``factors[t]`` (a change of numeraire)."""
        f = np.asarray(factors, dtype=float).reshape(-1, 1)
        return MarketPath(caps=self.caps * f, times=self.times, tickers=self.tickers)


def _check_support(p: np.ndarray, m: np.ndarray, what: str) -> None:
    bad = np.flatnonzero((p > 0) & (m <= 0))
    if bad.size:
        raise InfiniteEntropyError(
            f"portfolio holds asset {bad[0]} where {what} market weight is zero", asset=int(bad[0])
        )


def relative_value_step(pi_t, mu_t, mu_next) -> float:
    """``V(t+1)/V(t) = sum pi_i(t) mu_i(t+1)/mu_i(t)``."""
    p, m0, m1 = as_weights(pi_t), as_weights(mu_t), as_weights(mu_next)
    if not (p.shape == m0.shape == m1.shape):
        raise DimensionError("dimension mismatch")
    _check_support(p, m0, "current")
    s = p > 0
    return float(np.dot(p[s], m1[s] / m0[s]))


def free_energy_from_log_returns(pi, log_returns) -> float:
    """Free energy of ``pi`` given per-asset log growth over one period.

    ``log E_pi exp(Y - E_pi Y)`` with ``Y = log_returns``. The result is the
    same for any numeraire, since a common shift of ``Y`` cancels.
    """
    p = as_weights(pi)
    y = np.asarray(log_returns, dtype=float)
    s = p > 0
    p, y = p[s], y[s]
    if not np.all(np.isfinite(y)):
        raise InfiniteEntropyError("non-finite log return on the portfolio's support")
    centered = y - np.dot(p, y)
    # log1p/expm1 keep precision when fluctuations are tiny
    value = math.log1p(float(np.dot(p, np.expm1(centered))))
    # Jensen: exact value is >= 0, negatives here are rounding noise
    return max(value, 0.0)


def free_energy(pi_t, mu_t, mu_next) -> float:
    """Free energy (excess growth rate) of ``pi_t`` over one period of market weights."""
    p, m0, m1 = as_weights(pi_t), as_weights(mu_t), as_weights(mu_next)
    if not (p.shape == m0.shape == m1.shape):
        raise DimensionError("dimension mismatch")
    _check_support(p, m0, "current")
    _check_support(p, m1, "next")
    s = p > 0
    dy = np.zeros_like(p)
    dy[s] = np.log(m1[s] / m0[s])
    return free_energy_from_log_returns(p, dy)


class LedgerRow(NamedTuple):
    t: int
    free_energy: float
    entropy_change: float
    control: float
    delta_log_v: float
    delta_drift: float


@dataclass(frozen=True)
class DecompositionLedger:
    """Per-period decomposition; arrays are indexed by period ``t = 0..T-1``.

    ``entropy_levels`` has ``T+1`` entries, ``H(pi(t)|mu(t))`` for every date.
    """

    gamma_star: np.ndarray
    entropy_change: np.ndarray
    control: np.ndarray
    delta_log_v: np.ndarray
    entropy_levels: np.ndarray
    times: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.times is None:
            object.__setattr__(self, "times", np.arange(self.gamma_star.size))

    @property
    def delta_drift(self) -> np.ndarray:
        return self.gamma_star + self.control

    @property
    def drift(self) -> np.ndarray:
        """Cumulative drift ``D(t)`` for ``t = 0..T`` (``D(0) = 0``)."""
        return np.concatenate([[0.0], np.cumsum(self.delta_drift)])

    @property
    def log_v(self) -> np.ndarray:
        """Cumulative ``log V(t)`` for ``t = 0..T``."""
        return np.concatenate([[0.0], np.cumsum(self.delta_log_v)])

    @property
    def initial_entropy(self) -> float:
        return float(self.entropy_levels[0])

    @property
    def final_entropy(self) -> float:
        return float(self.entropy_levels[-1])

    @property
    def log_v_final(self) -> float:
        return float(np.sum(self.delta_log_v))

    @property
    def drift_final(self) -> float:
        return float(np.sum(self.delta_drift))

    @property
    def is_energy_entropy(self) -> bool:
        return bool(np.all(self.delta_drift >= -CLASSIFY_TOL))

    @property
    def is_greedy_entropy(self) -> bool:
        return bool(np.all(self.control >= -CLASSIFY_TOL))

    def identity_residuals(self) -> np.ndarray:
        """Per-period ``delta log V - (free energy + entropy change + control)``."""
        return self.delta_log_v - (self.gamma_star + self.entropy_change + self.control)

    def summary_residual(self) -> float:
        """``log V(T) - D(T) - H(pi(0)|mu(0)) + H(pi(T)|mu(T))``."""
        return self.log_v_final - self.drift_final - self.initial_entropy + self.final_entropy

    def __len__(self) -> int:
        return self.gamma_star.size

    def rows(self) -> Iterator[LedgerRow]:
        dd = self.delta_drift
        for t in range(len(self)):
            yield LedgerRow(
                int(self.times[t]),
                float(self.gamma_star[t]),
                float(self.entropy_change[t]),
                float(self.control[t]),
                float(self.delta_log_v[t]),
                float(dd[t]),
            )

    def table(self) -> list[dict]:
        """Export records with the public column names, one per period."""
        log_v = self.log_v
        dd = self.delta_drift
        out = []
        for t in range(len(self)):
            out.append(
                {
                    "t": int(self.times[t]),
                    "gamma_star": float(self.gamma_star[t]),
                    "entropy_change": float(self.entropy_change[t]),
                    "control": float(self.control[t]),
                    "delta_drift": float(dd[t]),
                    "log_v_cum": float(log_v[t + 1]),
                    "entropy_level": float(self.entropy_levels[t + 1]),
                }
            )
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(LEDGER_COLUMNS)
            for rec in self.table():
                writer.writerow([rec["t"]] + [_fmt(rec[c]) for c in LEDGER_COLUMNS[1:]])

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.table():
                fh.write(json.dumps(rec) + "\n")


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _entropy_rows(p: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Row-wise relative entropy of ``p`` w.r.t. ``m``; raises on infinite rows."""
    terms = rel_entr(p, m)
    if np.isinf(terms).any():
        t, i = np.argwhere(np.isinf(terms))[0]
        raise InfiniteEntropyError(
            f"infinite relative entropy at row {t}: asset {i} held with zero market weight",
            asset=int(i),
        )
    return terms.sum(axis=1)


def build_ledger(path: MarketPath, pi_series: Sequence) -> DecompositionLedger:
    """Decompose the relative value of a weight series against ``path``.

    Parameters
    ----------
    path : MarketPath
    pi_series : sequence of SimplexVector or (T+1, n) array
        Portfolio weights for every date of ``path``. Adaptedness is the
        caller's concern; the ledger only consumes the given series.
    """
    pis = np.array([as_weights(p) for p in pi_series], dtype=float)
    mu = path.weights
    if pis.shape != mu.shape:
        raise DimensionError(f"pi series shape {pis.shape} does not match market {mu.shape}")
    mu_t, mu_next = mu[:-1], mu[1:]
    pi_t = pis[:-1]

    levels = _entropy_rows(pis, mu)  # H(pi(t)|mu(t)), t = 0..T
    cross = _entropy_rows(pi_t, mu_next)  # H(pi(t)|mu(t+1))
    entropy_change = levels[:-1] - levels[1:]
    control = levels[1:] - cross

    T = pi_t.shape[0]
    gamma = np.empty(T)
    dlogv = np.empty(T)
    for t in range(T):
        p = pi_t[t]
        s = p > 0
        dy = np.log(mu_next[t, s] / mu_t[t, s])
        gamma[t] = free_energy_from_log_returns(p[s], dy)
        dlogv[t] = math.log(float(np.dot(p[s], np.exp(dy))))
    return DecompositionLedger(
        gamma_star=gamma,
        entropy_change=entropy_change,
        control=control,
        delta_log_v=dlogv,
        entropy_levels=levels,
        times=np.asarray(path.times[:-1]),
    )


def outperformance_horizon(r: float, delta: float, epsilon: float) -> float:
    """Horizon ``(r - log delta) / epsilon`` after which ``V(T) >= r`` is guaranteed.

    Applies when every market weight stays above ``delta`` and the drift grows
    at rate at least ``epsilon``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if r <= 0:
        raise ValueError("r must be positive")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    return (r - math.log(delta)) / epsilon

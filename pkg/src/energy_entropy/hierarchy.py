"""Portfolios of sector portfolios and level-by-level attribution.

A two-level portfolio is ``pi = sum_i lambda_i pi_i`` where each ``pi_i``
lives on a disjoint block of the stock universe. Relative entropy and free
energy both split into a between-sector part plus a ``lambda``-weighted
average of within-sector parts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .ledger import free_energy, free_energy_from_log_returns
from .simplex import SimplexVector, as_weights, relative_entropy

__all__ = [
    "HierarchicalPortfolio",
    "flatten",
    "sector_market",
    "entropy_chain_rule",
    "energy_chain_rule",
    "AttributionCase",
    "AttributionCheck",
    "check_mixing_conditions",
    "load_hierarchy",
]

TOL = 1e-10


@dataclass(frozen=True)
class HierarchicalPortfolio:
    """Sector weights plus one portfolio per sector.

    Parameters
    ----------
    sector_weights : array_like
        Weight of each of the ``m`` sectors.
    sector_portfolios : sequence of array_like
        Portfolio within sector ``i``, over ``len(members[i])`` stocks.
    members : sequence of index sequences
        ``members[i][j]`` is the position in the flat universe of the ``j``-th
        stock of sector ``i``. Sectors must be disjoint.
    n : int, optional
        Size of the flat universe; defaults to the total number of members.
    """

    sector_weights: np.ndarray
    sector_portfolios: tuple
    members: tuple
    n: int | None = None

    def __post_init__(self):
        lam = _simplex_array(self.sector_weights)
        ports = tuple(_simplex_array(p) for p in self.sector_portfolios)
        members = tuple(tuple(int(j) for j in block) for block in self.members)
        if not (len(lam) == len(ports) == len(members)):
            raise ValueError("sector weights, portfolios and members disagree in length")
        for p, block in zip(ports, members):
            if len(p) != len(block):
                raise ValueError("sector portfolio length does not match its member list")
        flat = [j for block in members for j in block]
        if len(set(flat)) != len(flat):
            raise ValueError("sectors overlap; only disjoint sectors are supported")
        n = len(flat) if self.n is None else int(self.n)
        if flat and max(flat) >= n:
            raise ValueError("member index outside the universe")
        object.__setattr__(self, "sector_weights", lam)
        object.__setattr__(self, "sector_portfolios", ports)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "n", n)

    @property
    def m(self) -> int:
        return len(self.members)

    def same_structure(self, other: "HierarchicalPortfolio") -> bool:
        return self.members == other.members and self.n == other.n

    def with_weights(self, sector_weights, sector_portfolios=None) -> "HierarchicalPortfolio":
        ports = self.sector_portfolios if sector_portfolios is None else sector_portfolios
        return HierarchicalPortfolio(sector_weights, ports, self.members, self.n)


def _simplex_array(x) -> np.ndarray:
    """Validated weight array; length-1 blocks (single stock or single sector) are allowed."""
    w = np.array(as_weights(x), dtype=float).ravel()
    if w.size == 1:
        if abs(w[0] - 1.0) > 1e-9:
            raise ValueError("a one-element weight vector must be (1,)")
        w = np.ones(1)
    else:
        w = np.array(SimplexVector(w).weights)
    w.setflags(write=False)
    return w


def flatten(h: HierarchicalPortfolio) -> np.ndarray:
    """Flat-universe weights ``sum_i lambda_i pi_i`` (zero-padded)."""
    out = np.zeros(h.n)
    lam = h.sector_weights
    for li, p, block in zip(lam, h.sector_portfolios, h.members):
        out[list(block)] += li * p
    return out


def sector_market(mu, members) -> tuple[np.ndarray, list[np.ndarray]]:
    """Split flat market weights into sector weights and within-sector weights."""
    mu = as_weights(mu)
    alpha = np.array([mu[list(b)].sum() for b in members])
    within = [mu[list(b)] / a for b, a in zip(members, alpha)]
    return alpha, within


def _rel(p, q) -> float:
    return relative_entropy(p, np.asarray(q, dtype=float))


def entropy_chain_rule(h_pi: HierarchicalPortfolio, h_nu: HierarchicalPortfolio):
    """Split ``H(pi|nu)`` into between-sector and within-sector parts.

    Returns
    -------
    total : float
        ``H(pi|nu)`` computed on the flattened portfolios.
    between : float
        ``H(lambda|alpha)``.
    within : list of float
        ``H(pi_i|nu_i)`` for each sector.
    """
    if not h_pi.same_structure(h_nu):
        raise ValueError("hierarchies have different sector structures")
    total = _rel(flatten(h_pi), flatten(h_nu))
    between = _rel(h_pi.sector_weights, h_nu.sector_weights)
    within = [_rel(p, q) for p, q in zip(h_pi.sector_portfolios, h_nu.sector_portfolios)]
    return total, between, within


def _sector_log_growth(h: HierarchicalPortfolio, ratio: np.ndarray) -> np.ndarray:
    """Log growth of each sector portfolio when stock ``j`` grows by ``ratio[j]``."""
    return np.array(
        [math.log(float(np.dot(p, ratio[list(b)]))) for p, b in zip(h.sector_portfolios, h.members)]
    )


def energy_chain_rule(h: HierarchicalPortfolio, mu_t, mu_next):
    """Split the free energy of the flattened portfolio across levels.

    The sector level treats each sector portfolio as a single asset; the stock
    level computes each sector portfolio's free energy on its own stocks.

    Returns
    -------
    total, sector_level : float
    stock_level : list of float
    """
    m0, m1 = as_weights(mu_t), as_weights(mu_next)
    if np.any(m0 <= 0) or np.any(m1 <= 0):
        raise ValueError("market weights must be strictly positive")
    total = free_energy(flatten(h), m0, m1)
    ratio = m1 / m0
    log_ratio = np.log(ratio)
    lam = h.sector_weights
    sector_level = free_energy_from_log_returns(lam, _sector_log_growth(h, ratio))
    stock_level = [
        free_energy_from_log_returns(p, log_ratio[list(b)])
        for p, b in zip(h.sector_portfolios, h.members)
    ]
    return total, sector_level, stock_level


class AttributionCase(str, Enum):
    CONSTANT_WEIGHTED = "constant_weighted_case"
    MONOTONE = "monotone_case"
    NEITHER = "neither"


@dataclass(frozen=True)
class AttributionCheck:
    case: AttributionCase
    delta_drift: float
    sector_delta_drift: float
    stock_delta_drifts: tuple
    covariance_term: float
    sectors_energy_entropy: bool


def _delta_drift(p_t, p_next, m_t, m_next, gamma) -> float:
    return gamma + _rel(p_next, m_next) - _rel(p_t, m_next)


def check_mixing_conditions(
    h_t: HierarchicalPortfolio, h_next: HierarchicalPortfolio, mu_t, mu_next, tol: float = TOL
) -> AttributionCheck:
    """Report which sufficient condition makes the total portfolio energy-entropy over one period.

    The cases are: constant sector weights, or sector weights that are
    themselves energy-entropy and grow faster for sectors further (in
    relative entropy) from their sector market. When either case holds the
    total drift increment is checked to be nonnegative, and a violation
    raises ``RuntimeError``.
    """
    if not h_t.same_structure(h_next):
        raise ValueError("hierarchies have different sector structures")
    m0, m1 = as_weights(mu_t), as_weights(mu_next)
    members = h_t.members
    alpha0, within0 = sector_market(m0, members)
    alpha1, within1 = sector_market(m1, members)
    lam0, lam1 = h_t.sector_weights, h_next.sector_weights

    total_gamma, sector_gamma, stock_gamma = energy_chain_rule(h_t, m0, m1)
    total_dd = _delta_drift(flatten(h_t), flatten(h_next), m0, m1, total_gamma)
    sector_dd = _delta_drift(lam0, lam1, alpha0, alpha1, sector_gamma)
    stock_dd = tuple(
        _delta_drift(p0, p1, w0, w1, g)
        for p0, p1, w0, w1, g in zip(h_t.sector_portfolios, h_next.sector_portfolios, within0, within1, stock_gamma)
    )
    ent_next = np.array([_rel(p, w) for p, w in zip(h_next.sector_portfolios, within1)])
    cov = float(np.dot(lam1 - lam0, ent_next))
    sectors_ok = all(d >= -tol for d in stock_dd)

    if np.allclose(lam0, lam1, rtol=0, atol=1e-12):
        case = AttributionCase.CONSTANT_WEIGHTED
    elif sector_dd >= -tol and _monotone(lam0, lam1, ent_next):
        case = AttributionCase.MONOTONE
    else:
        case = AttributionCase.NEITHER
    if case is not AttributionCase.NEITHER and sectors_ok and total_dd < -tol:
        raise RuntimeError(f"{case.value} holds but total drift increment is {total_dd!r}")
    return AttributionCheck(case, total_dd, sector_dd, stock_dd, cov, sectors_ok)


def _monotone(lam0, lam1, ent_next) -> bool:
    growth = lam1 / lam0
    m = len(growth)
    for i in range(m):
        for j in range(m):
            if ent_next[i] > ent_next[j] and growth[i] < growth[j] - 1e-15:
                return False
    return True


def load_hierarchy(path) -> tuple[HierarchicalPortfolio, list[str]]:
    """Read a hierarchy description (JSON).

    Format::

        {"sectors": [{"name": "tech", "weight": 0.6,
                      "members": {"AAPL": 0.5, "MSFT": 0.5}}, ...]}

    Returns the portfolio and the flat ticker order.
    """
    spec = json.loads(Path(path).read_text())
    tickers: list[str] = []
    weights, ports, members = [], [], []
    for sector in spec["sectors"]:
        weights.append(float(sector["weight"]))
        block = []
        pw = []
        for ticker, w in sector["members"].items():
            block.append(len(tickers))
            tickers.append(ticker)
            pw.append(float(w))
        members.append(block)
        ports.append(pw)
    return HierarchicalPortfolio(weights, ports, members), tickers

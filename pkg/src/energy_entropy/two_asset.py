"""Two assets on a binary tree: matched moves, rebalancing premium, weight curves.

The log relative price ``Y = log(X1/X2)`` moves by ``+sigma`` or ``-sigma``
each period. A portfolio ``(q, 1-q)`` multiplies its relative value by
``1 + q (exp(dY) - 1)``. Pairing every up-crossing of a level band with the
next down-crossing of the same band splits the growth into a premium per
match and a trend term for the moves left unmatched.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import expit

__all__ = [
    "BinaryPath",
    "MatchTally",
    "WeightCurve",
    "constant_curve",
    "market_curve",
    "logistic_curve",
    "one_step_factor",
    "match_factor",
    "tally_matches",
    "constant_weight_decomposition",
    "state_dependent_match_factor",
    "check_reversion",
    "generating_function",
    "concavity_violations",
    "discretize_to_grid",
    "excess_growth_riemann",
]


@dataclass(frozen=True)
class BinaryPath:
    """Start level ``y0``, step size ``sigma`` and a sequence of +1/-1 moves."""

    y0: float
    steps: np.ndarray
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        steps = np.asarray(self.steps, dtype=np.int8).ravel()
        if steps.size and not np.all(np.abs(steps) == 1):
            raise ValueError("steps must be +1 or -1")
        steps.setflags(write=False)
        object.__setattr__(self, "steps", steps)

    @classmethod
    def from_moves(cls, moves: str, y0: float = 0.0, sigma: float = 0.1) -> "BinaryPath":
        """Build from a string of ``+``/``-`` (or ``u``/``d``) characters."""
        table = {"+": 1, "u": 1, "U": 1, "-": -1, "d": -1, "D": -1}
        return cls(y0, np.array([table[c] for c in moves if not c.isspace()], dtype=np.int8), sigma)

    def __len__(self) -> int:
        return self.steps.size

    @property
    def level_index(self) -> np.ndarray:
        """Integer level ``k`` (``Y = y0 + k sigma``) at every date, starting at 0."""
        return np.concatenate([[0], np.cumsum(self.steps, dtype=np.int64)])

    @property
    def values(self) -> np.ndarray:
        return self.y0 + self.sigma * self.level_index

    @property
    def net_levels(self) -> int:
        return int(self.steps.sum(dtype=np.int64))

    def to_string(self) -> str:
        """Header line ``y0,sigma`` followed by the moves as ``+``/``-``."""
        moves = "".join("+" if s > 0 else "-" for s in self.steps)
        return f"{self.y0!r},{self.sigma!r}\n{moves}\n"

    @classmethod
    def from_string(cls, text: str) -> "BinaryPath":
        lines = text.strip().splitlines()
        y0, sigma = (float(x) for x in lines[0].split(","))
        moves = lines[1] if len(lines) > 1 else ""
        return cls.from_moves(moves, y0=y0, sigma=sigma)


@dataclass(frozen=True)
class MatchTally:
    """Matched pairs per level band and the count of unmatched moves.

    ``matched_per_level[k]`` counts pairs crossing the band between
    ``y0 + k sigma`` and ``y0 + (k+1) sigma``.
    """

    matched_per_level: dict
    unmatched_count: int
    n_steps: int

    @property
    def N(self) -> int:
        return int(sum(self.matched_per_level.values()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["level", "matched_count"])
            for k in sorted(self.matched_per_level):
                w.writerow([k, self.matched_per_level[k]])
            w.writerow(["N", self.N])
            w.writerow(["unmatched", self.unmatched_count])


def tally_matches(path: BinaryPath) -> MatchTally:
    """Pair each move with the most recent unmatched opposite move across the same band.

    Crossings of a band alternate in direction, so a per-band stack only
    ever holds one pending move and matching is order independent.
    """
    pending: dict[int, list[int]] = defaultdict(list)
    matched: dict[int, int] = defaultdict(int)
    k = 0
    for s in path.steps:
        band = k if s > 0 else k - 1
        stack = pending[band]
        if stack and stack[-1] == -s:
            stack.pop()
            matched[band] += 1
        else:
            stack.append(int(s))
        k += int(s)
    unmatched = sum(len(v) for v in pending.values())
    return MatchTally(dict(sorted((b, c) for b, c in matched.items() if c)), unmatched, len(path))


def one_step_factor(q: float, dy: float) -> float:
    """Relative value multiplier ``1 + q (exp(dy) - 1)`` for one move."""
    return 1.0 + q * math.expm1(dy)


def match_factor(q: float, sigma: float) -> float:
    """Gain ``1 + q (1-q) (e^(sigma/2) - e^(-sigma/2))^2`` from one matched up/down pair."""
    return 1.0 + q * (1.0 - q) * (2.0 * math.sinh(0.5 * sigma)) ** 2


def constant_weight_decomposition(path: BinaryPath, q: float):
    """Split ``log(V(T)/S(T))`` for constant weight ``q`` into matched, unmatched and concentration parts.

    Returns
    -------
    match_term, unmatched_term, concentration_term, log_rel_value : float
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    tally = tally_matches(path)
    sigma = path.sigma
    net = path.net_levels
    match_term = tally.N * math.log(match_factor(q, sigma))
    sign = 1.0 if net >= 0 else -1.0
    unmatched_term = abs(net) * math.log(one_step_factor(q, sign * sigma))
    y_start, y_end = path.y0, path.y0 + sigma * net
    concentration_term = -(np.logaddexp(y_end, 0.0) - np.logaddexp(y_start, 0.0))
    concentration_term = float(concentration_term)
    return match_term, unmatched_term, concentration_term, match_term + unmatched_term + concentration_term


@dataclass(frozen=True)
class WeightCurve:
    """Weight on asset 1 as a function of the log relative price.

    Parameters
    ----------
    q : callable
        Vectorized map from ``y`` to ``[0, 1]``.
    smoothness : {"C1", "finite_variation"}
    derivative : callable, optional
        ``q'``; needed for exact Stieltjes integrals against ``q``.
    antiderivative : callable, optional
        ``F`` with ``F' = q``. Computed by quadrature from ``F(0) = 0`` if absent.
    breakpoints : tuple of float
        Points where ``q`` or ``q'`` is not smooth (hints for quadrature).
    """

    q: Callable
    smoothness: str = "C1"
    derivative: Callable | None = None
    antiderivative: Callable | None = None
    breakpoints: tuple = field(default=())
    name: str = ""

    def __call__(self, y):
        return self.q(y)

    def F(self, y) -> np.ndarray:
        if self.antiderivative is not None:
            return np.asarray(self.antiderivative(y), dtype=float) - float(self.antiderivative(0.0))
        ys = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.array([integrate.quad(lambda u: float(self.q(u)), 0.0, v, limit=200)[0] for v in ys])
        return out if np.ndim(y) else float(out[0])


def constant_curve(c: float) -> WeightCurve:
    return WeightCurve(
        q=lambda y: np.full(np.shape(y), c, dtype=float) if np.ndim(y) else float(c),
        derivative=lambda y: np.zeros(np.shape(y)) if np.ndim(y) else 0.0,
        antiderivative=lambda y: c * np.asarray(y, dtype=float),
        name=f"constant({c})",
    )


def logistic_curve(slope: float = 1.0) -> WeightCurve:
    """``q(y) = e^(slope y) / (1 + e^(slope y))``; ``slope = 1`` is the market portfolio."""

    def d(y):
        e = expit(slope * np.asarray(y, dtype=float))
        return slope * e * (1.0 - e)

    return WeightCurve(
        q=lambda y: expit(slope * np.asarray(y, dtype=float)),
        derivative=d,
        antiderivative=lambda y: np.logaddexp(0.0, slope * np.asarray(y, dtype=float)) / slope,
        name=f"logistic({slope})",
    )


def market_curve() -> WeightCurve:
    return logistic_curve(1.0)


def state_dependent_match_factor(q_curve, k: int, sigma: float, y0: float = 0.0) -> float:
    """Gain from an up move at ``y0 + k sigma`` paired with the down move back from ``y0 + (k+1) sigma``."""
    lo = float(q_curve(y0 + k * sigma))
    hi = float(q_curve(y0 + (k + 1) * sigma))
    return (1.0 + lo * math.expm1(sigma)) * (1.0 + hi * math.expm1(-sigma))


def check_reversion(q_curve, lo: float, hi: float, resolution: float, tol: float = 1e-10) -> bool:
    """True iff ``q' <= q (1 - q)`` at every grid point of ``[lo, hi]``.

    ``q'`` is a central difference with step ``resolution``.
    """
    ys = np.arange(lo, hi + 0.5 * resolution, resolution)
    h = resolution
    qv = np.asarray(q_curve(ys), dtype=float)
    dq = (np.asarray(q_curve(ys + h), dtype=float) - np.asarray(q_curve(ys - h), dtype=float)) / (2 * h)
    return bool(np.all(dq <= qv * (1.0 - qv) + tol))


def generating_function(q_curve: WeightCurve) -> Callable:
    """Generating function ``S(mu1, mu2) = exp(F(log(mu1/mu2)) - log(1/mu2))`` of ``(q, 1-q)``.

    ``F`` is anchored at ``F(0) = 0``, fixing the free multiplicative constant.
    """

    def S(mu1, mu2):
        m1 = np.asarray(mu1, dtype=float)
        m2 = np.asarray(mu2, dtype=float)
        if np.any(m1 <= 0) or np.any(m2 <= 0):
            raise ValueError("generating function is defined on the open simplex only")
        return np.exp(np.asarray(q_curve.F(np.log(m1 / m2)), dtype=float) + np.log(m2))

    return S


def concavity_violations(q_curve: WeightCurve, n: int = 200, lo: float = 0.01, hi: float = 0.99, tol: float = 1e-12):
    """Points ``mu1`` where ``S(mu1, 1 - mu1)`` has a positive second difference.

    An empty result certifies concavity on the grid; each returned point is a
    certificate that the generating function is not concave.
    """
    S = generating_function(q_curve)
    x = np.linspace(lo, hi, n)
    v = np.asarray(S(x, 1.0 - x), dtype=float)
    d2 = v[2:] - 2.0 * v[1:-1] + v[:-2]
    scale = tol * np.maximum(1.0, np.abs(v[1:-1]))
    return x[1:-1][d2 > scale]


def discretize_to_grid(series, sigma: float, tol: float = 1e-12) -> BinaryPath:
    """Turn a real series into +/-sigma moves on the grid anchored at its first value.

    A move is emitted whenever the series reaches the level one above or one
    below the current discretized level; a jump across several levels emits
    one move per level.
    """
    x = np.asarray(series, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty series")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    y0 = float(x[0])
    k = 0
    moves: list[int] = []
    for v in x[1:]:
        u = (v - y0) / sigma
        while u >= k + 1 - tol:
            moves.append(1)
            k += 1
        while u <= k - 1 + tol:
            moves.append(-1)
            k -= 1
    return BinaryPath(y0, np.array(moves, dtype=np.int8), sigma)


def excess_growth_riemann(q_series, y_series) -> float:
    """``1/2 sum q(t) (1 - q(t)) (dY(t))^2``.

    ``q_series[t]`` is the weight held over ``[t, t+1]``; a trailing entry
    beyond ``len(y_series) - 1`` is ignored.
    """
    y = np.asarray(y_series, dtype=float)
    dy = np.diff(y)
    q = np.asarray(q_series, dtype=float)[: dy.size]
    if q.size != dy.size:
        raise ValueError("q_series is shorter than the number of increments")
    return float(0.5 * np.sum(q * (1.0 - q) * dy * dy))

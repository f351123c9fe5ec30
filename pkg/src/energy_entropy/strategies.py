"""Portfolio-weight constructors: constant, market, entropy flows and the lambda-strategy.

Flows move a portfolio along a vector field ``U_mu(pi)`` that is tangent to the
simplex and never decreases ``H(.|mu)``. Running a field forward gives a
greedy-entropy portfolio; running it backwards with an entropy budget gives
an energy-entropy portfolio.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .ledger import MarketPath, free_energy
from .simplex import DimensionError, SimplexVector, as_weights, relative_entropy

__all__ = [
    "VectorField",
    "GRADIENT",
    "FLOW_IN",
    "FLOW_OUT",
    "functional_gradient",
    "flow_step",
    "reverse_flow_with_budget",
    "lambda_step",
    "run_lambda_strategy",
    "run_flow_strategy",
    "make_constant",
    "make_market",
    "StrategySpec",
    "run_strategy",
]

log = logging.getLogger(__name__)

DEFAULT_SUBSTEPS = 64
BISECTION_ITERS = 30


def _log_ratio(p: np.ndarray, m: np.ndarray, support: np.ndarray) -> np.ndarray:
    g = np.zeros_like(p)
    g[support] = np.log(p[support] / m[support])
    return g


def _entropy_gradient(p: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Tangential Euclidean gradient of ``H(.|m)`` on the face spanned by ``supp(p)``."""
    s = p > 0
    g = _log_ratio(p, m, s)
    out = np.zeros_like(p)
    out[s] = g[s] - g[s].mean()
    return out


def _gradient_field(p: np.ndarray, m: np.ndarray) -> np.ndarray:
    return _entropy_gradient(p, m)


def _flow_in_field(p: np.ndarray, m: np.ndarray) -> np.ndarray:
    # corner with the largest log(p_i/m_i): guarantees U . grad H = max g - H >= 0
    s = p > 0
    g = np.where(s, _log_ratio(p, m, s), -np.inf)
    k = int(np.argmax(g))  # argmax returns the lowest index on ties
    corner = np.zeros_like(p)
    corner[k] = 1.0
    return corner - p


def _flow_out_field(p: np.ndarray, m: np.ndarray) -> np.ndarray:
    # U = 0 at p = m by convention
    return p - m


@dataclass(frozen=True)
class VectorField:
    """Direction field ``U_mu(pi)`` used by the entropy flows.

    ``kind`` names the construction; ``rule(pi, mu)`` evaluates it on raw
    coordinate arrays.
    """

    kind: str
    rule: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(repr=False, compare=False)

    def __call__(self, pi, mu) -> np.ndarray:
        p, m = as_weights(pi), as_weights(mu)
        if p.shape != m.shape:
            raise DimensionError("dimension mismatch")
        return self.rule(p, m)


GRADIENT = VectorField("gradient", _gradient_field)
FLOW_IN = VectorField("flow_in", _flow_in_field)
FLOW_OUT = VectorField("flow_out", _flow_out_field)


def functional_gradient(transform_derivative: Callable[[float], float]) -> VectorField:
    """Field ``R'(H_mu(pi)) grad H_mu(pi)`` for an increasing transform ``R``.

    ``transform_derivative`` is ``R'`` and must be nonnegative on ``[0, inf)``.
    """

    def rule(p, m):
        h = relative_entropy(p, m)
        scale = float(transform_derivative(h))
        if scale < 0:
            raise ValueError("transform derivative must be nonnegative")
        return scale * _entropy_gradient(p, m)

    return VectorField("functional_gradient", rule)


FIELDS = {"gradient": GRADIENT, "flow_in": FLOW_IN, "flow_out": FLOW_OUT}


def _clip_to_simplex(p: np.ndarray, step: np.ndarray) -> tuple[np.ndarray, bool]:
    """Take ``p + step``, shortening the step so no coordinate goes negative."""
    q = p + step
    if np.all(q >= 0):
        return q, False
    neg = step < 0
    frac = np.min(np.where(neg, p / np.where(neg, -step, 1.0), np.inf))
    frac = min(max(frac, 0.0), 1.0)
    q = p + frac * step
    q[q < 1e-15] = 0.0
    return q / q.sum(), True


def _substep(field: VectorField, p: np.ndarray, m: np.ndarray, dt: float, sign: float):
    """One midpoint substep; returns (new point, clipped)."""
    k1 = sign * field.rule(p, m)
    mid, _ = _clip_to_simplex(p, 0.5 * dt * k1)
    k2 = sign * field.rule(mid, m)
    return _clip_to_simplex(p, dt * k2)


def _n_substeps(duration: float, substeps: int) -> int:
    return max(1, int(math.ceil(duration * substeps)))


def flow_step(field: VectorField, pi, mu_next, duration: float, substeps: int = DEFAULT_SUBSTEPS) -> SimplexVector:
    """Follow ``pi' = U_mu(pi)`` from ``pi`` for ``duration`` units of flow time.

    Midpoint rule with ``substeps`` substeps per unit duration. A midpoint
    substep that would lower ``H(.|mu_next)`` is replaced by an Euler substep,
    which cannot lower it because ``H`` is convex and ``U . grad H >= 0``.
    Steps that would leave the simplex are shortened to the boundary and logged.
    """
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    p = np.array(as_weights(pi), dtype=float)
    m = as_weights(mu_next)
    if duration == 0:
        return SimplexVector(p)
    n = _n_substeps(duration, substeps)
    dt = duration / n
    h = relative_entropy(p, m)
    clipped = 0
    for _ in range(n):
        q, c = _substep(field, p, m, dt, 1.0)
        hq = relative_entropy(q, m)
        if hq < h:
            q, c = _clip_to_simplex(p, dt * field.rule(p, m))
            hq = relative_entropy(q, m)
        clipped += c
        p, h = q, hq
    if clipped:
        log.info("flow_step(%s): %d substeps clipped at the simplex boundary", field.kind, clipped)
    return SimplexVector(p)


def reverse_flow_with_budget(
    field: VectorField,
    pi,
    mu_next,
    budget: float,
    duration: float,
    substeps: int = DEFAULT_SUBSTEPS,
) -> SimplexVector:
    """Follow ``pi' = -U_mu(pi)`` until ``duration`` or until the entropy drop reaches ``budget``.

    The crossing substep is refined by bisection on its length, keeping the
    side whose drop does not exceed the budget.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    p = np.array(as_weights(pi), dtype=float)
    m = as_weights(mu_next)
    if duration == 0 or budget == 0:
        return SimplexVector(p)
    h0 = relative_entropy(p, m)
    n = _n_substeps(duration, substeps)
    dt = duration / n
    clipped = 0
    for _ in range(n):
        q, c = _substep(field, p, m, dt, -1.0)
        if h0 - relative_entropy(q, m) > budget:
            lo, hi = 0.0, dt
            best = p
            for _ in range(BISECTION_ITERS):
                mid = 0.5 * (lo + hi)
                r, _ = _substep(field, p, m, mid, -1.0)
                if h0 - relative_entropy(r, m) > budget:
                    hi = mid
                else:
                    lo, best = mid, r
            p = best
            break
        clipped += c
        p = q
    if clipped:
        log.info("reverse_flow(%s): %d substeps clipped at the simplex boundary", field.kind, clipped)
    return SimplexVector(p)


def lambda_step(pi_t, mu_next, gamma: float, lam: float, exact: bool = False) -> np.ndarray:
    """Move ``pi_t`` toward ``mu_next`` spending about ``lam * gamma`` of entropy.

    By default the step fraction uses the first-order change of
    ``H(.|mu_next)`` along the segment and is capped at 1. Because ``H`` is
    convex along the segment the entropy spent never exceeds ``lam * gamma``;
    near the target the linear rate overstates the cost (by about a factor
    of two) so the step falls short. With ``exact=True`` the fraction is the
    root of ``H(pi_t|mu) - H(pi_t + s d|mu) = lam * gamma`` instead.
    """
    p, m = as_weights(pi_t), as_weights(mu_next)
    d = m - p
    if lam == 0 or gamma == 0 or not np.any(d):
        return p.copy()
    s = p > 0
    slope = float(np.dot(_log_ratio(p, m, s)[s], d[s]))
    if np.any(~s & (d > 0)):
        # leaving a face: H drops with infinite initial slope
        return p.copy()
    if slope >= 0:
        return p.copy()
    budget = lam * gamma
    if not exact:
        return p + min(1.0, budget / -slope) * d
    h0 = relative_entropy(p, m)
    if budget >= h0:
        return m.copy()
    spent = lambda frac: h0 - relative_entropy(p + frac * d, m)
    # spent is increasing on [0, 1]; bisect keeping the side within budget
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if spent(mid) <= budget:
            lo = mid
        else:
            hi = mid
    frac = lo
    return p + frac * d


def run_lambda_strategy(path: MarketPath, lam: float, pi0=None, exact: bool = False) -> list[SimplexVector]:
    """Weights of the lambda-strategy on ``path``, one per date.

    ``pi0`` defaults to the initial market weights; ``exact`` selects the
    exact entropy budget in :func:`lambda_step`.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    mu = path.weights
    p = mu[0].copy() if pi0 is None else np.array(as_weights(pi0), dtype=float)
    if p.shape != mu[0].shape:
        raise DimensionError("pi0 dimension does not match the market")
    if np.any(mu <= 0):
        raise ValueError("lambda-strategy requires strictly positive market weights")
    out = [SimplexVector(p)]
    for t in range(path.horizon):
        g = free_energy(p, mu[t], mu[t + 1])
        if not math.isfinite(g):
            raise ValueError(f"free energy undefined at t={t}")
        p = lambda_step(p, mu[t + 1], g, lam, exact)
        out.append(SimplexVector(p))
    return out


def run_flow_strategy(
    path: MarketPath,
    field: VectorField,
    pi0,
    direction: str = "forward",
    lam: float = 1.0,
    duration: float = 1.0,
    substeps: int = DEFAULT_SUBSTEPS,
) -> list[SimplexVector]:
    """Rebalance along ``field`` at every date.

    ``forward`` flows for ``duration`` (greedy-entropy); ``reverse`` flows
    back for at most ``duration`` spending at most ``lam`` times the free
    energy just earned (energy-entropy).
    """
    if direction not in ("forward", "reverse"):
        raise ValueError("direction must be 'forward' or 'reverse'")
    mu = path.weights
    p = SimplexVector(pi0)
    out = [p]
    for t in range(path.horizon):
        if direction == "forward":
            p = flow_step(field, p, mu[t + 1], duration, substeps)
        else:
            budget = lam * free_energy(p, mu[t], mu[t + 1])
            p = reverse_flow_with_budget(field, p, mu[t + 1], budget, duration, substeps)
        out.append(p)
    return out


def make_constant(pi, length: int) -> list[SimplexVector]:
    """``length`` copies of ``pi``."""
    v = pi if isinstance(pi, SimplexVector) else SimplexVector(pi)
    return [v] * length


def make_market(path: MarketPath) -> list[SimplexVector]:
    return [SimplexVector(row) for row in path.weights]


@dataclass
class StrategySpec:
    """Replayable description of a rebalancing rule.

    kind: ``constant``, ``market``, ``flow`` or ``lambda_strategy``.
    """

    kind: str
    pi0: list[float] | None = None
    lam: float = 0.0
    field: str = "flow_out"
    direction: str = "forward"
    duration: float = 1.0
    substeps: int = DEFAULT_SUBSTEPS
    exact_budget: bool = False

    KINDS = ("constant", "market", "flow", "lambda_strategy")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        if self.pi0 is not None:
            self.pi0 = [float(x) for x in SimplexVector(self.pi0)]
        if self.kind == "flow" and self.field not in FIELDS:
            raise ValueError(f"unknown field {self.field!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StrategySpec":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        return cls(**d)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "StrategySpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def run_strategy(path: MarketPath, spec: StrategySpec) -> list[SimplexVector]:
    pi0 = path.weights[0] if spec.pi0 is None else spec.pi0
    if spec.kind == "constant":
        return make_constant(pi0, path.horizon + 1)
    if spec.kind == "market":
        return make_market(path)
    if spec.kind == "lambda_strategy":
        return run_lambda_strategy(path, spec.lam, pi0, exact=spec.exact_budget)
    return run_flow_strategy(
        path,
        FIELDS[spec.field],
        pi0,
        direction=spec.direction,
        lam=spec.lam,
        duration=spec.duration,
        substeps=spec.substeps,
    )

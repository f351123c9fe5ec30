"""Choosing the two-asset weight curve against an expected-local-time weight.

For a weight ``w(y) >= 0`` (expected local time of the log relative price at
level ``y`` over a batch of excursions) the objective is::

    Lambda(q) = int q (1 - q) w dy + int w d(-q)

over continuous, finite-variation ``q`` with ``q(0) = 1/2``. For continuous
``q`` and ``w`` vanishing at infinity, ``int w d(-q) = int q w' dy`` so the
integrand is a concave quadratic in ``q(y)`` and the optimum is pointwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .two_asset import WeightCurve

__all__ = [
    "WeightFunction",
    "ConstraintSet",
    "OptimalCurve",
    "lambda_functional",
    "lambda_by_parts",
    "optimal_q",
    "growth_rate_weight",
    "optimization_report",
]

TAIL_MASS = 1e-10
QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-12, limit=500)


@dataclass(frozen=True)
class WeightFunction:
    """Weight ``w(y)`` for the variational problem.

    Use the constructors :meth:`bang_bang`, :meth:`ou`, :meth:`general` and
    :meth:`tabulated` rather than building instances directly.
    """

    kind: str
    gamma: float | None = None
    phi: Callable | None = field(default=None, repr=False)
    dphi: Callable | None = field(default=None, repr=False)
    table: tuple | None = field(default=None, repr=False)

    @classmethod
    def bang_bang(cls, gamma: float) -> "WeightFunction":
        """``w(y) = exp(-gamma |y|)``."""
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        return cls("bang_bang", float(gamma))

    @classmethod
    def ou(cls, gamma: float) -> "WeightFunction":
        """``w(y) = exp(-gamma y^2)``."""
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        return cls("ou", float(gamma))

    @classmethod
    def general(cls, phi: Callable, dphi: Callable) -> "WeightFunction":
        """``w = exp(phi)`` with ``phi`` continuously differentiable (``dphi = phi'``)."""
        return cls("general", phi=phi, dphi=dphi)

    @classmethod
    def tabulated(cls, ys, ws) -> "WeightFunction":
        """Piecewise-linear ``w`` through ``(ys, ws)``, zero outside the table.

        Nonzero end values get an extra knot at zero one spacing further out.
        """
        ys = np.asarray(ys, dtype=float)
        ws = np.asarray(ws, dtype=float)
        if ys.ndim != 1 or ys.shape != ws.shape or ys.size < 3:
            raise ValueError("need at least 3 tabulated points")
        if not np.all(np.diff(ys) > 0):
            raise ValueError("tabulated levels must be increasing")
        if np.any(ws < 0):
            raise ValueError("weights must be nonnegative")
        # ramp to zero one spacing beyond each end so that w stays continuous
        if ws[0] > 0:
            ys = np.concatenate([[2 * ys[0] - ys[1]], ys])
            ws = np.concatenate([[0.0], ws])
        if ws[-1] > 0:
            ys = np.concatenate([ys, [2 * ys[-1] - ys[-2]]])
            ws = np.concatenate([ws, [0.0]])
        ys.setflags(write=False)
        ws.setflags(write=False)
        return cls("tabulated", table=(ys, ws))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "bang_bang":
            return np.exp(-self.gamma * np.abs(y))
        if self.kind == "ou":
            return np.exp(-self.gamma * y * y)
        if self.kind == "general":
            return np.exp(self.phi(y))
        ys, ws = self.table
        return np.interp(y, ys, ws, left=0.0, right=0.0)

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "tabulated":
            ys, ws = self.table
            slopes = np.diff(ws) / np.diff(ys)
            idx = np.searchsorted(ys, y, side="right") - 1
            inside = (idx >= 0) & (idx < slopes.size)
            return np.where(inside, slopes[np.clip(idx, 0, slopes.size - 1)], 0.0)
        return self.log_derivative(y) * self(y)

    def log_derivative(self, y):
        """``phi' = w'/w`` (zero where ``w`` vanishes)."""
        y = np.asarray(y, dtype=float)
        if self.kind == "bang_bang":
            return -self.gamma * np.sign(y)
        if self.kind == "ou":
            return -2.0 * self.gamma * y
        if self.kind == "general":
            return np.asarray(self.dphi(y), dtype=float)
        w = self(y)
        dw = self.derivative(y)
        return np.divide(dw, w, out=np.zeros_like(w, dtype=float), where=w > 0)

    @property
    def breakpoints(self) -> tuple:
        if self.kind == "bang_bang":
            return (0.0,)
        if self.kind == "tabulated":
            return tuple(self.table[0])
        return ()

    def bounds(self) -> tuple[float, float]:
        """Interval outside which the mass of ``w`` is below ``1e-10``."""
        if self.kind == "bang_bang":
            r = math.log(2.0 / (self.gamma * TAIL_MASS)) / self.gamma
            return -r, r
        if self.kind == "ou":
            # tail of exp(-g y^2) beyond R is below exp(-g R^2) / (2 g R) once R >= 1
            g = self.gamma
            f = lambda r: -g * r * r - math.log(2 * g * r) - math.log(TAIL_MASS / 2)
            r = optimize.brentq(f, max(1.0, 1.0 / g), 1e4)
            return -r, r
        if self.kind == "tabulated":
            ys = self.table[0]
            return float(ys[0]), float(ys[-1])
        return _general_bounds(self)

    def mass(self) -> float:
        lo, hi = self.bounds()
        pts = [p for p in self.breakpoints if lo < p < hi] or None
        return integrate.quad(lambda y: float(self(y)), lo, hi, points=pts, **QUAD_OPTS)[0]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma": self.gamma}


def _general_bounds(w: WeightFunction) -> tuple[float, float]:
    def side(sign):
        r = 1.0
        while r < 1e4:
            tail = integrate.quad(lambda y: float(w(sign * y)), r, 2 * r, limit=200)[0]
            if tail < TAIL_MASS * 1e-2:
                return r
            r *= 2
        raise ValueError("weight function has a non-integrable (or too heavy) tail")

    return -side(-1.0), side(1.0)


@dataclass(frozen=True)
class ConstraintSet:
    """Pointwise box constraints on the weight curve.

    ``q_floor`` bounds the weight of either asset below (``delta <= q <= 1 - delta``).
    ``ratio_bounds = (A, B)`` keeps both ``q/mu1`` and ``(1-q)/mu2`` in ``[A, B]``
    where ``mu1 = e^y / (1 + e^y)`` is the market weight of asset 1.
    Far in the tails the two can conflict (the floor caps ``q`` at ``1 - delta``
    while the ratio bounds push it toward the market); there the ratio bounds win.
    """

    q_floor: float = 0.0
    ratio_bounds: tuple | None = None

    def __post_init__(self):
        if not 0.0 <= self.q_floor <= 0.5:
            raise ValueError("q_floor must lie in [0, 1/2]")
        if self.ratio_bounds is not None:
            A, B = self.ratio_bounds
            if not 0 < A < 1 < B:
                raise ValueError("ratio bounds need 0 < A < 1 < B")

    def lower(self, y):
        y = np.asarray(y, dtype=float)
        lo = np.full(y.shape, self.q_floor)
        if self.ratio_bounds is not None:
            r_lo, r_hi = self._ratio_box(y)
            lo = np.minimum(np.maximum(lo, r_lo), r_hi)
        return lo

    def upper(self, y):
        y = np.asarray(y, dtype=float)
        hi = np.full(y.shape, 1.0 - self.q_floor)
        if self.ratio_bounds is not None:
            r_lo, r_hi = self._ratio_box(y)
            hi = np.maximum(np.minimum(hi, r_hi), r_lo)
        return hi

    def _ratio_box(self, y):
        # always nonempty for A < 1 < B
        A, B = self.ratio_bounds
        mu1 = _expit(y)
        return np.maximum(A * mu1, 1.0 - B * (1.0 - mu1)), np.minimum(B * mu1, 1.0 - A * (1.0 - mu1))

    def to_dict(self) -> dict:
        return {"q_floor": self.q_floor, "ratio_bounds": list(self.ratio_bounds) if self.ratio_bounds else None}


def _expit(y):
    return 0.5 * (1.0 + np.tanh(0.5 * y))


def _points(q_curve, w: WeightFunction, lo: float, hi: float):
    pts = sorted({p for p in tuple(w.breakpoints) + tuple(getattr(q_curve, "breakpoints", ())) if lo < p < hi})
    return pts or None


def _quad(f, lo, hi, pts):
    # integrate piece by piece between break points so kinks never sit inside a panel
    edges = [lo] + list(pts or ()) + [hi]
    return math.fsum(integrate.quad(f, a, b, **QUAD_OPTS)[0] for a, b in zip(edges[:-1], edges[1:]))


def lambda_functional(q_curve, w: WeightFunction, bounds=None, n_stieltjes: int = 200_001) -> float:
    """``int q (1-q) w dy + int w d(-q)``.

    The Stieltjes part uses ``q'`` by quadrature when the curve carries a
    derivative, and a midpoint Riemann-Stieltjes sum on ``n_stieltjes`` points
    otherwise.
    """
    lo, hi = w.bounds() if bounds is None else bounds
    pts = _points(q_curve, w, lo, hi)

    def mix(y):
        qv = float(q_curve(y))
        return qv * (1.0 - qv) * float(w(y))

    first = _quad(mix, lo, hi, pts)
    deriv = getattr(q_curve, "derivative", None)
    if deriv is not None:
        second = -_quad(lambda y: float(w(y)) * float(deriv(y)), lo, hi, pts)
    else:
        ys = np.linspace(lo, hi, n_stieltjes)
        qv = np.asarray(q_curve(ys), dtype=float)
        mids = 0.5 * (ys[1:] + ys[:-1])
        second = float(np.sum(w(mids) * (qv[:-1] - qv[1:])))
    return first + second


def lambda_by_parts(q_curve, w: WeightFunction, bounds=None) -> float:
    """``int (q (1-q) w + q w') dy``, equal to :func:`lambda_functional` for continuous ``q``."""
    lo, hi = w.bounds() if bounds is None else bounds
    pts = _points(q_curve, w, lo, hi)

    def integrand(y):
        qv = float(q_curve(y))
        return qv * (1.0 - qv) * float(w(y)) + qv * float(w.derivative(y))

    return _quad(integrand, lo, hi, pts)


@dataclass(frozen=True)
class OptimalCurve:
    curve: WeightCurve
    value: float
    eta: float
    gap_bound: float
    interpolated: bool


def optimal_q(w: WeightFunction, constraints: ConstraintSet | None = None, eta: float = 1e-3) -> OptimalCurve:
    """Pointwise maximizer of the objective, clipped to the constraint box.

    The unconstrained maximizer is ``clip((1 + w'/w) / 2, 0, 1)``. When it is
    not continuous through ``q(0) = 1/2`` (bang-bang weights, for instance)
    there is no maximizer; the returned curve interpolates linearly on
    ``[-eta, eta]`` and its value is within ``gap_bound`` of the supremum,
    where ``gap_bound = jump * (w(0) - min w) + eta w(0) / 2`` over that window.
    """
    cons = constraints or ConstraintSet()

    def raw(y):
        y = np.asarray(y, dtype=float)
        q = np.clip(0.5 * (1.0 + w.log_derivative(y)), 0.0, 1.0)
        return np.clip(q, cons.lower(y), cons.upper(y))

    tiny = 1e-12
    jump = max(abs(float(raw(-tiny)) - 0.5), abs(float(raw(tiny)) - 0.5)) > 1e-9
    if jump:
        q_left, q_right = float(raw(-eta)), float(raw(eta))

        def q(y):
            y = np.asarray(y, dtype=float)
            inner_left = 0.5 + (0.5 - q_left) * (y / eta)
            inner_right = 0.5 + (q_right - 0.5) * (y / eta)
            inner = np.where(y < 0, inner_left, inner_right)
            return np.where(np.abs(y) < eta, inner, raw(y))

        bps = (-eta, 0.0, eta)
    else:
        q = raw
        bps = (0.0,)
    if w.kind == "ou":
        r = 1.0 / (2.0 * w.gamma)
        bps = tuple(sorted(set(bps) | {-r, r}))

    h = 1e-7

    def dq(y):
        return (q(np.asarray(y) + h) - q(np.asarray(y) - h)) / (2 * h)

    curve = WeightCurve(q=q, smoothness="finite_variation", derivative=dq, breakpoints=bps, name=f"optimal[{w.kind}]")
    value = lambda_by_parts(curve, w)
    gap = 0.0
    if jump:
        # Stieltjes mass lost by spreading the jump over [-eta, eta], plus the q(1-q)w term there
        size = abs(float(raw(-tiny)) - float(raw(tiny)))
        w_min = float(np.min(w(np.linspace(-eta, eta, 201))))
        gap = size * (float(w(0.0)) - w_min) + 0.5 * eta * float(w(0.0))
    return OptimalCurve(curve, value, eta, gap, jump)


def growth_rate_weight(a: float, b: float) -> float:
    """Weight ``(1 + 2a/b^2)/2`` maximizing ``q a + q (1-q) b^2 / 2`` for drift ``a`` and volatility ``b``."""
    if b == 0:
        raise ValueError("volatility must be nonzero")
    return 0.5 * (1.0 + 2.0 * a / (b * b))


def optimization_report(
    w: WeightFunction,
    constraints: ConstraintSet | None = None,
    eta: float = 1e-3,
    n_samples: int = 41,
) -> dict:
    """JSON-ready summary of the optimum for ``w``."""
    from .two_asset import constant_curve

    opt = optimal_q(w, constraints, eta)
    lo, hi = w.bounds()
    span = min(hi, 5.0)
    ys = np.linspace(-span, span, n_samples)
    return {
        "w_kind": w.kind,
        "gamma": w.gamma,
        "constraints": (constraints or ConstraintSet()).to_dict(),
        "lambda_eq_weight": lambda_functional(constant_curve(0.5), w),
        "lambda_optimal": opt.value,
        "q_samples": [[float(y), float(v)] for y, v in zip(ys, opt.curve(ys))],
    }


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)

"""Independent reference computations used by the tests.

Nothing here calls into the package's optimizer or quadrature code.
"""

import math

import numpy as np

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def ou_sup_closed_form(gamma: float) -> float:
    """Supremum of the objective for w = exp(-gamma y^2), derived by hand.

    With breakpoints at |y| = 1/(2 gamma) the optimal curve is 1/2 (1 - 2 gamma y)
    inside and 0/1 outside; integrating gives this expression.
    """
    g = gamma
    return 0.5 * math.exp(-1.0 / (4 * g)) + (math.sqrt(math.pi) / (4 * math.sqrt(g)) + math.sqrt(math.pi * g) / 2) * math.erf(
        1.0 / (2 * math.sqrt(g))
    )


class PiecewiseLinearObjective:
    """Objective for piecewise-linear q on a knot grid, by Gauss-Legendre per segment.

    On a segment where q is linear with slope s, the Stieltjes term is
    ``-s * int w``, so the whole objective is quadratic in the knot values.
    """

    def __init__(self, w, knots):
        self.knots = np.asarray(knots, dtype=float)
        a, b = self.knots[:-1], self.knots[1:]
        half = 0.5 * (b - a)
        # nodes[j, g], weights[j, g] for each segment j
        self.t = 0.5 * (_GL_X + 1.0)
        self.nodes = a[:, None] + half[:, None] * (_GL_X[None, :] + 1.0)
        self.wq = half[:, None] * _GL_W[None, :] * w(self.nodes)
        # mean of w over each segment, so that -slope * int w = -(v1 - v0) * mean
        self.seg_mean = self.wq.sum(axis=1) / (b - a)

    def segment_values(self, v):
        v0, v1 = v[:-1], v[1:]
        q = v0[:, None] + (v1 - v0)[:, None] * self.t[None, :]
        mix = np.sum(self.wq * q * (1.0 - q), axis=1)
        return mix - (v1 - v0) * self.seg_mean

    def __call__(self, v):
        return float(np.sum(self.segment_values(np.asarray(v, dtype=float))))


def grid_search_optimum(w, lo=-3.0, hi=3.0, spacing=0.1, sweeps=400, tol=1e-13):
    """Coordinate ascent over knot values in [0, 1], with q(0) = 1/2 held fixed.

    Each coordinate update maximizes the exact parabola in that coordinate.
    Returns (value, knots, values).
    """
    n = int(round((hi - lo) / spacing))
    knots = lo + spacing * np.arange(n + 1)
    obj = PiecewiseLinearObjective(w, knots)
    v = np.full(knots.size, 0.5)
    fixed = int(np.argmin(np.abs(knots)))
    best = obj(v)
    for _ in range(sweeps):
        for j in range(knots.size):
            if j == fixed:
                continue
            segs = slice(max(j - 1, 0), min(j + 1, knots.size - 1))

            def local(x):
                v[j] = x
                return float(np.sum(obj.segment_values(v)[segs]))

            f0, fh, f1 = local(0.0), local(0.5), local(1.0)
            # parabola through (0, f0), (1/2, fh), (1, f1)
            a = 2 * f0 - 4 * fh + 2 * f1
            b = -3 * f0 + 4 * fh - f1
            if a < 0:
                x = min(max(-b / (2 * a), 0.0), 1.0)
            else:
                x = 0.0 if f0 >= f1 else 1.0
            local(x)
        value = obj(v)
        if value - best < tol:
            best = value
            break
        best = value
    return best, knots, v.copy()

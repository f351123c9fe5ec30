"""Points of the unit simplex and the entropy functionals defined on them."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import entr, rel_entr

__all__ = [
    "SimplexVector",
    "DimensionError",
    "InfiniteEntropyError",
    "as_weights",
    "relative_entropy",
    "shannon_entropy",
    "generating_function_value",
]

# sums within this distance of 1 are accepted as-is
SUM_TOL = 1e-12
# sums within this distance are silently renormalized; anything further is rejected
RENORMALIZE_TOL = 1e-9


class DimensionError(ValueError):
    """Two simplex vectors (or a vector and a path) disagree in dimension."""


class InfiniteEntropyError(ValueError):
    """A portfolio puts mass on an asset whose market weight is zero."""

    def __init__(self, message: str, asset: int | None = None):
        super().__init__(message)
        self.asset = asset


class SimplexVector:
    """Immutable point of the closed unit simplex.

    Parameters
    ----------
    weights : array_like
        Nonnegative coordinates, length ``n >= 2``. Sums within ``1e-9`` of one
        are renormalized, anything further off raises ``ValueError``.
    """

    __slots__ = ("_w",)

    def __init__(self, weights):
        w = np.array(weights, dtype=float).ravel()
        if w.size < 2:
            raise ValueError(f"simplex vectors need at least 2 coordinates, got {w.size}")
        if not np.all(np.isfinite(w)):
            raise ValueError("simplex coordinates must be finite")
        if np.any(w < 0):
            raise ValueError(f"negative simplex coordinate: {w.min()!r}")
        total = w.sum()
        gap = abs(total - 1.0)
        if gap > RENORMALIZE_TOL:
            raise ValueError(f"coordinates sum to {total!r}, not 1")
        if gap > SUM_TOL:
            w = w / total
        w.setflags(write=False)
        self._w = w

    @classmethod
    def uniform(cls, n: int) -> "SimplexVector":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def from_positive(cls, values) -> "SimplexVector":
        """Normalize a vector of nonnegative masses (e.g. capitalizations)."""
        v = np.asarray(values, dtype=float)
        return cls(v / v.sum())

    @property
    def weights(self) -> np.ndarray:
        return self._w

    @property
    def n(self) -> int:
        return self._w.size

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._w
        return self._w.astype(dtype)

    def __len__(self) -> int:
        return self._w.size

    def __getitem__(self, i):
        return self._w[i]

    def __iter__(self):
        return iter(self._w)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimplexVector):
            return NotImplemented
        return bool(np.array_equal(self._w, other._w))

    def __hash__(self) -> int:
        return hash(self._w.tobytes())

    def __repr__(self) -> str:
        return f"SimplexVector({np.array2string(self._w, precision=6, separator=', ')})"


def as_weights(x) -> np.ndarray:
    """Return the coordinate array of a SimplexVector or array-like (no validation)."""
    if isinstance(x, SimplexVector):
        return x.weights
    return np.asarray(x, dtype=float)


def _pair(nu, mu) -> tuple[np.ndarray, np.ndarray]:
    a, b = as_weights(nu), as_weights(mu)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def relative_entropy(nu, mu) -> float:
    """Kullback-Leibler divergence ``sum nu_i log(nu_i / mu_i)``.

    Uses ``0 log(0/x) = 0`` and returns ``math.inf`` when ``nu`` charges an
    atom that ``mu`` does not.
    """
    a, b = _pair(nu, mu)
    terms = rel_entr(a, b)
    if np.isinf(terms).any():
        return math.inf
    return float(terms.sum())


def shannon_entropy(pi) -> float:
    """``-sum pi_i log pi_i``, in nats."""
    return float(entr(as_weights(pi)).sum())


def generating_function_value(pi, mu) -> float:
    """``prod mu_i ** pi_i``, the generating function of the constant-weighted portfolio ``pi``."""
    p, m = _pair(pi, mu)
    if np.any(m <= 0):
        raise ValueError("market weights must be strictly positive")
    return float(np.exp(np.dot(p, np.log(m))))

"""Monte Carlo local times of one-dimensional diffusions started at 0.

Paths of ``dY = b(Y) dt + s(Y) dB`` are run until their local time at 0
reaches one; the expected local time accrued at level ``y`` by then is
``s'(0)/s'(y)`` where ``s'`` is the scale density. The estimates feed the
weight function of the variational problem.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numba
import numpy as np
from scipy import integrate
from scipy.special import erfi

from .variational import WeightFunction

__all__ = [
    "DiffusionSpec",
    "LocalTimeProfile",
    "scale_density",
    "scale_function",
    "expected_local_time",
    "simulate_local_time_profile",
    "empirical_weight_export",
]

MAX_TIME = 1e3
_CHUNK = 1 << 15
_KINDS = {"bang_bang": 0, "ou": 1}


@dataclass(frozen=True)
class DiffusionSpec:
    """Diffusion and discretization settings.

    ``kind`` is ``bang_bang`` (drift ``-alpha sgn(y)``), ``ou`` (drift
    ``-alpha y``) or ``general`` (callables ``drift`` and ``vol``). ``h`` is
    the Euler step and ``eps`` the half-width of the occupation window.
    """

    kind: str
    alpha: float = 1.0
    sigma: float = 1.0
    h: float = 1e-4
    eps: float = 0.02
    drift: Callable | None = field(default=None, repr=False, compare=False)
    vol: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("bang_bang", "ou", "general"):
            raise ValueError(f"unknown diffusion kind {self.kind!r}")
        if self.kind == "general":
            if self.drift is None or self.vol is None:
                raise ValueError("general diffusions need drift and vol callables")
        elif not (self.alpha > 0 and self.sigma > 0):
            raise ValueError("alpha and sigma must be positive")
        if not (self.h > 0 and self.eps > 0):
            raise ValueError("h and eps must be positive")

    @classmethod
    def bang_bang(cls, alpha: float, sigma: float, **kw) -> "DiffusionSpec":
        return cls("bang_bang", alpha, sigma, **kw)

    @classmethod
    def ou(cls, alpha: float, sigma: float, **kw) -> "DiffusionSpec":
        return cls("ou", alpha, sigma, **kw)

    def b(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "bang_bang":
            return -self.alpha * np.sign(y)
        if self.kind == "ou":
            return -self.alpha * y
        return np.asarray(self.drift(y), dtype=float)

    def s(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "general":
            return np.asarray(self.vol(y), dtype=float)
        return np.full(y.shape, self.sigma)

    def to_dict(self) -> dict:
        if self.kind == "general":
            raise ValueError("general diffusions carry callables and cannot be serialized")
        d = asdict(self)
        d.pop("drift")
        d.pop("vol")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DiffusionSpec":
        return cls(**d)


def scale_density(spec: DiffusionSpec, y: float) -> float:
    """``s'(y) = exp(-int_0^y 2 b / sigma^2)``, anchored so that ``s'(0) = 1``."""
    if spec.kind == "bang_bang":
        return math.exp(2.0 * spec.alpha * abs(y) / spec.sigma**2)
    if spec.kind == "ou":
        return math.exp(spec.alpha * y * y / spec.sigma**2)
    val = integrate.quad(lambda u: 2.0 * float(spec.b(u)) / float(spec.s(u)) ** 2, 0.0, y, limit=200)[0]
    return math.exp(-val)


def expected_local_time(spec: DiffusionSpec, y):
    """``s'(0)/s'(y)``, vectorized over ``y``."""
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.array([1.0 / scale_density(spec, v) for v in ys])
    return out if np.ndim(y) else float(out[0])


def scale_function(spec: DiffusionSpec, y):
    """Scale function ``s(y) = int_0^y s'``, which makes ``s(Y)`` a local martingale."""
    y = np.asarray(y, dtype=float)
    if spec.kind == "bang_bang":
        c = 2.0 * spec.alpha / spec.sigma**2
        return np.sign(y) * np.expm1(c * np.abs(y)) / c
    if spec.kind == "ou":
        k = math.sqrt(spec.alpha) / spec.sigma
        return 0.5 * math.sqrt(math.pi) * erfi(k * y) / k
    ys = np.atleast_1d(y)
    out = np.array([integrate.quad(lambda u: scale_density(spec, u), 0.0, v, limit=200)[0] for v in ys])
    return out.reshape(y.shape)


@dataclass(frozen=True)
class LocalTimeProfile:
    """Per-level mean local time (and its standard error) over kept paths."""

    levels: np.ndarray
    estimates: np.ndarray
    stderr: np.ndarray
    n_paths: int
    n_discarded: int = 0
    per_path: np.ndarray | None = field(default=None, repr=False)
    stopped_states: np.ndarray | None = field(default=None, repr=False)
    checkpoints: np.ndarray | None = field(default=None, repr=False)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y", "estimate", "stderr", "n_paths"])
            for y, e, s in zip(self.levels, self.estimates, self.stderr):
                w.writerow([format(y, ".17g"), format(e, ".17g"), format(s, ".17g"), self.n_paths])

    def same_as(self, other: "LocalTimeProfile") -> bool:
        return (
            np.array_equal(self.levels, other.levels)
            and np.array_equal(self.estimates, other.estimates)
            and np.array_equal(self.stderr, other.stderr)
            and self.n_paths == other.n_paths
        )


@numba.njit(cache=True)
def _advance(kind, alpha, sig, h, eps, levels, zero_idx, z, y0, step0, max_steps, lt, ckpt_steps, ckpt_vals, ckpt_pos):
    """Run one path over the normals ``z``; returns (y, steps, status, ckpt_pos).

    status: 0 = needs more normals, 1 = stopped, 2 = time budget exceeded.
    """
    y = y0
    steps = step0
    scale = h * sig * sig / (2.0 * eps)
    drift_step = alpha * h
    noise = sig * math.sqrt(h)
    n_lv = levels.size
    n_ck = ckpt_steps.size
    for i in range(z.size):
        while ckpt_pos < n_ck and ckpt_steps[ckpt_pos] <= steps:
            ckpt_vals[ckpt_pos] = y
            ckpt_pos += 1
        j = np.searchsorted(levels, y - eps)
        while j < n_lv and levels[j] < y + eps:
            if abs(y - levels[j]) < eps:
                lt[j] += scale
            j += 1
        if lt[zero_idx] >= 1.0 - 1e-12:
            return y, steps, 1, ckpt_pos
        if steps >= max_steps:
            return y, steps, 2, ckpt_pos
        if kind == 0:
            if y > 0.0:
                y -= drift_step
            elif y < 0.0:
                y += drift_step
        else:
            y -= drift_step * y
        y += noise * z[i]
        steps += 1
    return y, steps, 0, ckpt_pos


def _path_rng(seed: int, index: int) -> np.random.Generator:
    # counter-based stream keyed by (seed, path index)
    return np.random.Generator(np.random.Philox(key=np.array([index, seed], dtype=np.uint64)))


def _run_builtin(spec, levels, zero_idx, n_paths, seed, max_steps, ckpt_steps):
    kind = _KINDS[spec.kind]
    lt_all = np.zeros((n_paths, levels.size))
    ck_all = np.zeros((n_paths, ckpt_steps.size))
    kept = np.ones(n_paths, dtype=bool)
    for i in range(n_paths):
        rng = _path_rng(seed, i)
        lt = lt_all[i]
        ck = ck_all[i]
        y, steps, pos = 0.0, 0, 0
        chunk = _CHUNK
        while True:
            z = rng.standard_normal(chunk)
            y, steps, status, pos = _advance(
                kind, spec.alpha, spec.sigma, spec.h, spec.eps, levels, zero_idx, z, y, steps, max_steps, lt, ckpt_steps, ck, pos
            )
            if status == 1:
                ck[pos:] = y
                break
            if status == 2:
                kept[i] = False
                break
            chunk = min(chunk * 2, 1 << 20)
    return lt_all, ck_all, kept


def _run_general(spec, levels, zero_idx, n_paths, seed, max_steps, ckpt_steps):
    """Vectorized over paths; each path draws from its own stream in fixed-size blocks."""
    block = 4096
    rngs = [_path_rng(seed, i) for i in range(n_paths)]
    y = np.zeros(n_paths)
    lt = np.zeros((n_paths, levels.size))
    ck = np.zeros((n_paths, ckpt_steps.size))
    active = np.ones(n_paths, dtype=bool)
    kept = np.ones(n_paths, dtype=bool)
    sqh = math.sqrt(spec.h)
    steps = 0
    z = None
    while active.any():
        if steps % block == 0:
            z = np.stack([r.standard_normal(block) for r in rngs])
        for c, s_ck in enumerate(ckpt_steps):
            if s_ck == steps:
                ck[active, c] = y[active]
        idx = np.flatnonzero(active)
        ya = y[idx]
        sig = spec.s(ya)
        near = np.abs(ya[:, None] - levels[None, :]) < spec.eps
        lt[idx] += near * (spec.h * sig * sig / (2 * spec.eps))[:, None]
        done = lt[idx, zero_idx] >= 1.0 - 1e-12
        if done.any():
            stopped = idx[done]
            for c, s_ck in enumerate(ckpt_steps):
                if s_ck > steps:
                    ck[stopped, c] = y[stopped]
            active[stopped] = False
        if steps >= max_steps:
            kept[active] = False
            active[:] = False
            break
        idx = np.flatnonzero(active)
        ya = y[idx]
        y[idx] = ya + spec.b(ya) * spec.h + spec.s(ya) * sqh * z[idx, steps % block]
        steps += 1
    return lt, ck, kept


def simulate_local_time_profile(
    spec: DiffusionSpec,
    n_paths: int,
    seed: int,
    levels=None,
    max_time: float = MAX_TIME,
    checkpoints=None,
    keep_paths: bool = False,
) -> LocalTimeProfile:
    """Estimate expected local time per level until local time at 0 reaches one.

    Each Euler step at ``Y`` adds ``h sigma(Y)^2 / (2 eps)`` to every level
    within ``eps`` of ``Y``; the path stops once the level-0 total reaches one.
    Paths exceeding ``max_time`` are discarded and counted.

    Parameters
    ----------
    levels : array_like, optional
        Levels to estimate; 0 is always added. Defaults to 41 points on [-2, 2].
    checkpoints : array_like, optional
        Times at which to record the stopped state ``Y(t ^ tau)`` of every path.
    keep_paths : bool
        Keep the per-path local times in ``profile.per_path``.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    lv = np.linspace(-2.0, 2.0, 41) if levels is None else np.asarray(levels, dtype=float)
    lv = np.unique(np.concatenate([lv, [0.0]]))
    zero_idx = int(np.flatnonzero(lv == 0.0)[0])
    max_steps = int(math.ceil(max_time / spec.h))
    ck_times = np.asarray([] if checkpoints is None else checkpoints, dtype=float)
    ckpt_steps = np.round(ck_times / spec.h).astype(np.int64)
    runner = _run_general if spec.kind == "general" else _run_builtin
    lt, ck, kept = runner(spec, lv, zero_idx, n_paths, seed, max_steps, ckpt_steps)
    n_kept = int(kept.sum())
    good = lt[kept]
    if n_kept:
        est = good.mean(axis=0)
        se = good.std(axis=0, ddof=1) / math.sqrt(n_kept) if n_kept > 1 else np.full(lv.size, np.nan)
    else:
        est = se = np.full(lv.size, np.nan)
    return LocalTimeProfile(
        levels=lv,
        estimates=est,
        stderr=se,
        n_paths=n_kept,
        n_discarded=n_paths - n_kept,
        per_path=good if keep_paths else None,
        stopped_states=ck[kept] if ck_times.size else None,
        checkpoints=ck_times if ck_times.size else None,
    )


def empirical_weight_export(profile: LocalTimeProfile) -> WeightFunction:
    """Piecewise-linear weight function through the profile's estimates."""
    if profile.levels.size < 3:
        raise ValueError("need at least 3 levels")
    return WeightFunction.tabulated(profile.levels, np.maximum(profile.estimates, 0.0))


def profile_to_json(profile: LocalTimeProfile) -> str:
    return json.dumps(
        {
            "levels": profile.levels.tolist(),
            "estimates": profile.estimates.tolist(),
            "stderr": profile.stderr.tolist(),
            "n_paths": profile.n_paths,
            "n_discarded": profile.n_discarded,
        }
    )

"""Run configurations and artifact bundles.

A run reads a market (CSV or named synthetic fixture), applies a strategy,
and writes the ledger, the weights over time, a match tally for two-asset
markets, and a summary with the energy-entropy identity residual.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import DataError, ingest_csv, read_weights, to_market_path
from .ledger import DecompositionLedger, MarketPath, build_ledger
from .strategies import StrategySpec, run_strategy
from .synthetic import fixture
from .two_asset import MatchTally, discretize_to_grid, tally_matches

__all__ = ["IdentityCheckError", "RunConfig", "ArtifactBundle", "load_market", "run_experiment", "match_tally_for"]

SUMMARY_TOL = 1e-9
FIXTURE_PREFIX = "fixture:"


class IdentityCheckError(RuntimeError):
    """The ledger failed its summary identity."""


@dataclass
class RunConfig:
    """Everything needed to replay a run.

    ``input`` is a long-format CSV path or ``fixture:<name>``. ``lam``
    overrides the strategy's ``lambda`` when given; a strategy of kind
    ``lambda_strategy`` is used if none is specified.
    """

    input: str
    out: str = "out"
    strategy: StrategySpec = field(default_factory=lambda: StrategySpec("lambda_strategy"))
    lam: float | None = None
    sigma: float | None = None
    seed: int = 0
    mode: str = "price"
    initial_weights: list | str | None = None

    def __post_init__(self):
        if isinstance(self.strategy, dict):
            self.strategy = StrategySpec.from_dict(self.strategy)
        if self.lam is not None:
            if not 0.0 <= self.lam <= 1.0:
                raise ValueError("lambda must lie in [0, 1]")
            self.strategy = StrategySpec.from_dict({**self.strategy.to_dict(), "lambda": self.lam})
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not str(self.input).startswith(FIXTURE_PREFIX) and not Path(self.input).is_file():
            raise FileNotFoundError(f"input file {self.input} does not exist")
        if isinstance(self.initial_weights, str) and not Path(self.initial_weights).is_file():
            raise FileNotFoundError(f"initial weights file {self.initial_weights} does not exist")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        return cls(**d)

    @classmethod
    def load(cls, path, **overrides) -> "RunConfig":
        d = json.loads(Path(path).read_text())
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return {
            "input": str(self.input),
            "out": str(self.out),
            "strategy": self.strategy.to_dict(),
            "lambda": self.lam,
            "sigma": self.sigma,
            "seed": self.seed,
            "mode": self.mode,
            "initial_weights": self.initial_weights,
        }


@dataclass(frozen=True)
class ArtifactBundle:
    ledger: DecompositionLedger
    summary: dict
    paths: dict
    tally: MatchTally | None = None


def load_market(source: str, seed: int = 0, mode: str = "price", initial_weights=None) -> MarketPath:
    if str(source).startswith(FIXTURE_PREFIX):
        return fixture(str(source)[len(FIXTURE_PREFIX):], seed=seed)
    table = ingest_csv(source, mode=mode)
    if isinstance(initial_weights, str):
        initial_weights = read_weights(initial_weights)
    return to_market_path(table, initial_weights)


def match_tally_for(path: MarketPath, sigma: float) -> MatchTally:
    """Tally of the log relative price of a two-asset market on a ``sigma`` grid."""
    if path.n_assets != 2:
        raise DataError("match tallies need exactly two assets")
    y = np.log(path.weights[:, 0] / path.weights[:, 1])
    return tally_matches(discretize_to_grid(y, sigma))


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _labels(path: MarketPath) -> list[str]:
    return list(path.tickers) if path.tickers else [f"a{i}" for i in range(path.n_assets)]


def write_weights_csv(path: MarketPath, pis, file) -> None:
    labels = _labels(path)
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"pi_{a}" for a in labels] + [f"mu_{a}" for a in labels])
        for t, (p, m) in enumerate(zip(pis, path.weights)):
            w.writerow([t] + [_fmt(v) for v in np.asarray(p)] + [_fmt(v) for v in m])


def summarize(ledger: DecompositionLedger) -> dict:
    return {
        "log_v_final": float(ledger.log_v_final),
        "drift_final": float(ledger.drift_final),
        "initial_entropy": float(ledger.initial_entropy),
        "final_entropy": float(ledger.final_entropy),
        "identity_residual": float(ledger.summary_residual()),
        "energy_entropy": bool(ledger.is_energy_entropy),
        "greedy_entropy": bool(ledger.is_greedy_entropy),
        "periods": len(ledger),
    }


def run_experiment(config: RunConfig, ledger_only: bool = False) -> ArtifactBundle:
    """Execute ``config`` and write its artifacts under ``config.out``.

    Raises ``IdentityCheckError`` if the summary identity residual exceeds
    ``SUMMARY_TOL``; artifacts are still written for inspection.
    """
    path = load_market(config.input, config.seed, config.mode, config.initial_weights)
    pis = run_strategy(path, config.strategy)
    ledger = build_ledger(path, pis)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"ledger": out / "ledger.csv", "summary": out / "summary.json"}
    ledger.to_csv(paths["ledger"])
    tally = None
    if not ledger_only:
        paths["weights"] = out / "weights.csv"
        write_weights_csv(path, pis, paths["weights"])
        if path.n_assets == 2 and config.sigma is not None:
            tally = match_tally_for(path, config.sigma)
            paths["match_tally"] = out / "match_tally.csv"
            tally.to_csv(paths["match_tally"])
    summary = summarize(ledger)
    summary["config"] = config.to_dict()
    if tally is not None:
        summary["matched"] = tally.N
        summary["unmatched"] = tally.unmatched_count
    text = json.dumps(summary, indent=2, sort_keys=True, allow_nan=False)
    paths["summary"].write_text(text + "\n")
    bundle = ArtifactBundle(ledger, summary, {k: str(v) for k, v in paths.items()}, tally)
    if not abs(summary["identity_residual"]) < SUMMARY_TOL:
        raise IdentityCheckError(f"summary identity residual {summary['identity_residual']:.3e} exceeds {SUMMARY_TOL}")
    return bundle

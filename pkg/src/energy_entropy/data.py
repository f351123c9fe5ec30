"""Price tables in long CSV format and their conversion to market paths."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .ledger import MarketPath
from .simplex import DimensionError, SimplexVector

__all__ = ["DataError", "PriceTable", "ingest_csv", "export_csv", "to_market_path"]

log = logging.getLogger(__name__)

MODES = ("price", "capitalization")


class DataError(ValueError):
    """Malformed or inadmissible input data."""


@dataclass(frozen=True)
class PriceTable:
    """Date-aligned positive values, one column per ticker.

    Dates are opaque labels kept in order of first appearance.
    """

    tickers: list
    dates: list
    values: np.ndarray
    mode: str = "price"
    n_dropped: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise DataError(f"mode must be one of {MODES}, got {self.mode!r}")
        v = np.array(self.values, dtype=float)
        if v.shape != (len(self.dates), len(self.tickers)):
            raise DimensionError(f"values shape {v.shape} does not match {len(self.dates)} dates x {len(self.tickers)} tickers")
        if not np.all(np.isfinite(v)):
            raise DataError("table has missing or non-finite cells")
        if np.any(v <= 0):
            raise DataError("values must be strictly positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "tickers", [str(t) for t in self.tickers])
        object.__setattr__(self, "dates", [str(d) for d in self.dates])

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def select(self, tickers) -> "PriceTable":
        idx = [self.tickers.index(t) for t in tickers]
        return PriceTable(list(tickers), self.dates, self.values[:, idx], self.mode)


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return math.nan


def ingest_csv(path, mode: str = "price") -> PriceTable:
    """Read a ``date,ticker,value`` CSV into an aligned table.

    Dates where any ticker lacks a value are dropped; the number dropped is
    logged and stored in ``n_dropped``. Nonpositive or unparseable values and
    duplicate ``(date, ticker)`` rows raise ``DataError``.
    """
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError:
        raise
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: cannot parse CSV ({exc})") from exc
    df.columns = [c.strip().lower() for c in df.columns]
    if list(df.columns) != ["date", "ticker", "value"]:
        raise DataError(f"{path}: header must be date,ticker,value, got {','.join(df.columns)}")
    if df.empty:
        raise DataError(f"{path}: no data rows")
    # Python's float() is correctly rounded; pandas' fast parser is not, which breaks round trips
    values = df["value"].str.strip().map(_parse_float).astype(float)
    bad = values.isna() | (df["date"].str.strip() == "") | (df["ticker"].str.strip() == "")
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0]) + 2
        raise DataError(f"{path}: unparseable row at line {row}")
    if (values <= 0).any() or not np.isfinite(values).all():
        row = int(np.flatnonzero(~((values > 0) & np.isfinite(values)).to_numpy())[0]) + 2
        raise DataError(f"{path}: nonpositive value at line {row}")
    df = df.assign(date=df["date"].str.strip(), ticker=df["ticker"].str.strip(), value=values)
    if df.duplicated(["date", "ticker"]).any():
        raise DataError(f"{path}: duplicate (date, ticker) rows")
    dates = list(dict.fromkeys(df["date"]))
    tickers = list(dict.fromkeys(df["ticker"]))
    wide = df.pivot(index="date", columns="ticker", values="value").reindex(index=dates, columns=tickers)
    complete = wide.notna().all(axis=1)
    n_dropped = int((~complete).sum())
    if n_dropped:
        log.warning("%s: dropped %d date(s) with missing tickers", path, n_dropped)
    wide = wide[complete]
    if len(wide) == 0:
        raise DataError(f"{path}: no date has values for every ticker")
    return PriceTable(tickers, list(wide.index), wide.to_numpy(), mode, n_dropped)


def export_csv(table: PriceTable, path) -> None:
    """Write ``table`` in long format with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "ticker", "value"])
        for d, row in zip(table.dates, table.values):
            for t, v in zip(table.tickers, row):
                w.writerow([d, t, format(v, ".17g")])


def to_market_path(table: PriceTable, initial_weights=None) -> MarketPath:
    """Market path from a table.

    Capitalization tables are normalized date by date. Price tables need
    initial weights (equal weights if omitted); capitalizations are then
    ``mu_i(0) P_i(t) / P_i(0)`` and ``mu(0)`` is stored exactly as given.
    """
    n = len(table.tickers)
    if table.mode == "capitalization":
        if initial_weights is not None:
            raise DataError("initial weights only apply to price tables")
        return MarketPath(caps=table.values, times=np.arange(len(table.dates)), tickers=tuple(table.tickers))
    w0 = SimplexVector.uniform(n) if initial_weights is None else SimplexVector(initial_weights)
    if w0.n != n:
        raise DimensionError(f"{w0.n} initial weights for {n} tickers")
    if np.any(w0.weights <= 0):
        raise DataError("initial weights must be strictly positive")
    caps = w0.weights * (table.values / table.values[0])
    weights = caps / caps.sum(axis=1, keepdims=True)
    weights[0] = w0.weights
    return MarketPath(caps=caps, times=np.arange(len(table.dates)), weights=weights, tickers=tuple(table.tickers))


def read_weights(path) -> np.ndarray:
    """Initial weights from a JSON list or a one-line comma separated file."""
    text = Path(path).read_text().strip()
    text = text.strip("[]")
    return np.array([float(x) for x in text.replace("\n", ",").split(",") if x.strip()])

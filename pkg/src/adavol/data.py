"""Price CSV ingestion and log-return computation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path

import numpy as np

from .errors import EmptySeries, NonMonotoneDates, ParseError

__all__ = ["PriceSeries", "ReturnSeries", "load_prices", "log_returns", "prices_from_returns", "read_columns"]

ISO = "iso"


@dataclass(frozen=True)
class PriceSeries:
    dates: tuple
    close: np.ndarray

    def __post_init__(self):
        close = np.asarray(self.close, dtype=float)
        if len(self.dates) != close.size:
            raise ValueError("dates and close differ in length")
        if close.size == 0:
            raise EmptySeries("price series is empty")
        if np.any(~(close > 0.0)) or not np.all(np.isfinite(close)):
            raise ValueError("closing prices must be positive and finite")
        for i in range(1, len(self.dates)):
            if not self.dates[i] > self.dates[i - 1]:
                raise NonMonotoneDates(f"date at position {i} ({self.dates[i]}) does not follow {self.dates[i - 1]}")
        close.setflags(write=False)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "close", close)

    def __len__(self):
        return self.close.size


@dataclass(frozen=True)
class ReturnSeries:
    """``returns[i] = log(close[i + 1] / close[i])``, dated at the later day."""

    dates: tuple
    returns: np.ndarray

    def __len__(self):
        return self.returns.size


def _parse_date(text: str, fmt: str):
    if fmt == ISO:
        return date.fromisoformat(text) if len(text) == 10 else datetime.fromisoformat(text)
    return datetime.strptime(text, fmt)


def load_prices(path, date_col: str = "Date", close_col: str = "Close",
                date_format: str = ISO, delimiter: str = ",") -> PriceSeries:
    """Read a headered CSV of closing prices.

    Row numbers in :class:`ParseError` count the header as row 1, matching
    what a spreadsheet shows.
    """
    dates, close = [], []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None:
            raise EmptySeries(f"{path}: no header row")
        for col in (date_col, close_col):
            if col not in reader.fieldnames:
                raise ParseError(1, f"missing column {col!r}")
        for row_no, row in enumerate(reader, start=2):
            raw_d, raw_c = (row.get(date_col) or "").strip(), (row.get(close_col) or "").strip()
            if not raw_c:
                raise ParseError(row_no, "missing close")
            try:
                d = _parse_date(raw_d, date_format)
            except ValueError as exc:
                raise ParseError(row_no, f"bad date {raw_d!r}: {exc}") from None
            try:
                c = float(raw_c)
            except ValueError:
                raise ParseError(row_no, f"close is not a number: {raw_c!r}") from None
            if not (math.isfinite(c) and c > 0.0):
                raise ParseError(row_no, f"close must be positive, got {raw_c}")
            if dates and not d > dates[-1]:
                raise NonMonotoneDates(f"row {row_no}: date {raw_d} does not follow {dates[-1]}")
            dates.append(d)
            close.append(c)
    if not close:
        raise EmptySeries(f"{path}: no data rows")
    return PriceSeries(tuple(dates), np.array(close))


def log_returns(prices: PriceSeries) -> ReturnSeries:
    if len(prices) < 2:
        raise EmptySeries("need at least two prices to form a return")
    r = np.diff(np.log(prices.close))
    r.setflags(write=False)
    return ReturnSeries(tuple(prices.dates[1:]), r)


def prices_from_returns(first_price: float, returns) -> np.ndarray:
    """Inverse of :func:`log_returns` given the first close."""
    r = np.asarray(returns, dtype=float)
    return first_price * np.exp(np.concatenate(([0.0], np.cumsum(r))))


def read_columns(path, columns=None, delimiter: str = ",") -> dict[str, np.ndarray]:
    """Load numeric columns of a headered CSV (e.g. files written by the CLI)."""
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None:
            raise EmptySeries(f"{path}: no header row")
        names = list(reader.fieldnames if columns is None else columns)
        missing = [c for c in names if c not in reader.fieldnames]
        if missing:
            raise ParseError(1, f"missing columns {missing}")
        cols = {c: [] for c in names}
        for row_no, row in enumerate(reader, start=2):
            for c in names:
                try:
                    cols[c].append(float(row[c]))
                except (TypeError, ValueError):
                    raise ParseError(row_no, f"column {c!r} is not numeric: {row[c]!r}") from None
    if not any(cols.values()):
        raise EmptySeries(f"{path}: no data rows")
    return {c: np.array(v) for c, v in cols.items()}

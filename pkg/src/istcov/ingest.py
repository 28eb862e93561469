"""Candlestick (OHLC) ingestion and the package's CSV file formats.

Candle schema (header required, comma-separated, UTF-8):

    symbol,timestamp,open,high,low,close

with integer epoch-second timestamps and positive decimal prices.

Interval matrices travel as a CSV pair ``<name>.lower.csv`` /
``<name>.upper.csv``, each n rows x p columns under a header row of
variable names. Square matrices (estimates, ground truths, spectra) use
the same layout in a single file. Floats are written with 17 significant
digits so every file round-trips bit-exactly through the readers here.
"""
from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DuplicateBar,
    EmptyInput,
    InvalidInput,
    MissingBar,
    ParseError,
)
from .intervals import IntervalMatrix

CANDLE_HEADER = ["symbol", "timestamp", "open", "high", "low", "close"]


def _fmt(x: float) -> str:
    return format(float(x), ".16e")


@dataclass(frozen=True)
class CandleBar:
    """One OHLC bar; prices must be positive and bracket open/close."""

    symbol: str
    timestamp: int
    open: float
    high: float
    low: float
    close: float

    def __post_init__(self):
        reason = bar_violation(
            self.open, self.high, self.low, self.close
        )
        if reason is not None:
            raise InvalidInput(
                f"invalid bar for {self.symbol!r} at {self.timestamp}: {reason}"
            )


def bar_violation(open_, high, low, close) -> Optional[str]:
    """Reason string when OHLC values violate bar invariants, else None."""
    if min(open_, high, low, close) <= 0:
        return "prices must be positive"
    if low > min(open_, close):
        return f"low {low} above min(open, close)"
    if high < max(open_, close):
        return f"high {high} below max(open, close)"
    return None


@dataclass(frozen=True)
class PanelSpec:
    """Which symbols and bar length make up one observation panel."""

    symbols: Tuple[str, ...]
    bar_seconds: int = 300
    day: Optional[_dt.date] = None

    def __post_init__(self):
        symbols = tuple(self.symbols)
        if not symbols:
            raise InvalidInput("symbols must be nonempty")
        if len(set(symbols)) != len(symbols):
            raise InvalidInput("symbols must be unique")
        if self.bar_seconds < 1:
            raise InvalidInput(f"bar_seconds must be positive, got {self.bar_seconds}")
        object.__setattr__(self, "symbols", symbols)


@dataclass
class IngestReport:
    """Row accounting for one read_candles pass."""

    rows_total: int = 0
    bars_accepted: int = 0
    bars_rejected: int = 0
    rows_foreign_symbol: int = 0
    rows_outside_day: int = 0
    rejection_reasons: List[str] = None

    def __post_init__(self):
        if self.rejection_reasons is None:
            self.rejection_reasons = []


def read_candles(path, spec: PanelSpec):
    """Parse a candle CSV into per-symbol bar lists.

    Returns (bars, report) where bars maps each panel symbol to its bars
    sorted by timestamp. Bars violating OHLC invariants are dropped and
    counted in the report; malformed rows raise ParseError with the line
    number; a repeated (symbol, timestamp) raises DuplicateBar; a file
    with no data rows raises EmptyInput.
    """
    path = Path(path)
    report = IngestReport()
    bars: Dict[str, List[CandleBar]] = {s: [] for s in spec.symbols}
    seen = set()
    wanted = set(spec.symbols)
    day_range = None
    if spec.day is not None:
        start = int(
            _dt.datetime.combine(
                spec.day, _dt.time.min, tzinfo=_dt.timezone.utc
            ).timestamp()
        )
        day_range = (start, start + 86400)

    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInput(f"{path} is empty") from None
        if [h.strip().lower() for h in header] != CANDLE_HEADER:
            raise ParseError(
                f"{path}: expected header {','.join(CANDLE_HEADER)}", line=1
            )
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 6:
                raise ParseError(
                    f"{path}: expected 6 fields, got {len(row)}", line=line_no
                )
            symbol = row[0].strip()
            try:
                timestamp = int(row[1])
                open_, high, low, close = (float(v) for v in row[2:6])
            except ValueError as exc:
                raise ParseError(f"{path}: {exc}", line=line_no) from None
            report.rows_total += 1
            if symbol not in wanted:
                report.rows_foreign_symbol += 1
                continue
            if day_range is not None and not (day_range[0] <= timestamp < day_range[1]):
                report.rows_outside_day += 1
                continue
            key = (symbol, timestamp)
            if key in seen:
                raise DuplicateBar(f"duplicate bar for {symbol!r} at {timestamp}")
            seen.add(key)
            reason = bar_violation(open_, high, low, close)
            if reason is not None:
                report.bars_rejected += 1
                report.rejection_reasons.append(f"line {line_no}: {reason}")
                continue
            bars[symbol].append(
                CandleBar(symbol, timestamp, open_, high, low, close)
            )
            report.bars_accepted += 1

    if report.rows_total == 0:
        raise EmptyInput(f"{path} has no data rows")
    for symbol in bars:
        bars[symbol].sort(key=lambda b: b.timestamp)
    return bars, report


def bars_to_intervals(bars: Dict[str, List[CandleBar]], spec: PanelSpec) -> IntervalMatrix:
    """Log low/high returns relative to each bar's open, aligned on time slots.

    Bars are binned by floor(timestamp / bar_seconds); the row set is the
    union of slots seen across symbols, and every symbol must cover every
    slot (MissingBar otherwise, no imputation). Two bars of one symbol in
    one slot raise DuplicateBar. Column order follows spec.symbols.
    """
    by_slot: Dict[str, Dict[int, CandleBar]] = {}
    slots = set()
    for symbol in spec.symbols:
        slot_map: Dict[int, CandleBar] = {}
        for bar in bars.get(symbol, []):
            slot = bar.timestamp // spec.bar_seconds
            if slot in slot_map:
                raise DuplicateBar(
                    f"symbol {symbol!r} has two bars in slot {slot} "
                    f"(bar_seconds={spec.bar_seconds})"
                )
            slot_map[slot] = bar
        by_slot[symbol] = slot_map
        slots.update(slot_map)
    if not slots:
        raise EmptyInput("no bars to convert")
    ordered = sorted(slots)
    for symbol in spec.symbols:
        for slot in ordered:
            if slot not in by_slot[symbol]:
                raise MissingBar(symbol, slot)

    n, p = len(ordered), len(spec.symbols)
    lower = np.empty((n, p))
    upper = np.empty((n, p))
    for j, symbol in enumerate(spec.symbols):
        for i, slot in enumerate(ordered):
            bar = by_slot[symbol][slot]
            lower[i, j] = np.log(bar.low) - np.log(bar.open)
            upper[i, j] = np.log(bar.high) - np.log(bar.open)
    return IntervalMatrix(lower, upper)


def write_interval_csv(data: IntervalMatrix, base, names: Optional[Sequence[str]] = None):
    """Write ``<base>.lower.csv`` and ``<base>.upper.csv``; returns the paths."""
    base = Path(base)
    if names is None:
        names = [f"v{j + 1}" for j in range(data.p)]
    names = list(names)
    if len(names) != data.p:
        raise InvalidInput(f"got {len(names)} names for {data.p} variables")
    paths = []
    for suffix, mat in (("lower", data.lower), ("upper", data.upper)):
        path = base.with_name(base.name + f".{suffix}.csv")
        _write_table(path, names, mat)
        paths.append(path)
    return tuple(paths)


def read_interval_csv(base):
    """Read an interval CSV pair; returns (IntervalMatrix, names)."""
    base = Path(base)
    lower_path = base.with_name(base.name + ".lower.csv")
    upper_path = base.with_name(base.name + ".upper.csv")
    names_l, lower = _read_table(lower_path)
    names_u, upper = _read_table(upper_path)
    if names_l != names_u:
        raise ParseError(f"{lower_path} and {upper_path} disagree on variable names")
    return IntervalMatrix(lower, upper), names_l


def write_matrix_csv(path, mat, names: Optional[Sequence[str]] = None):
    """Write one matrix (square or rectangular) under a header row."""
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2:
        raise InvalidInput("matrix must be 2-dimensional")
    if names is None:
        names = [f"v{j + 1}" for j in range(mat.shape[1])]
    names = list(names)
    if len(names) != mat.shape[1]:
        raise InvalidInput(f"got {len(names)} names for {mat.shape[1]} columns")
    _write_table(Path(path), names, mat)


def read_matrix_csv(path):
    """Read a matrix CSV; returns (array, names)."""
    names, mat = _read_table(Path(path))
    return mat, names


def _write_table(path: Path, names: List[str], mat: np.ndarray):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in np.atleast_2d(mat):
            writer.writerow([_fmt(v) for v in row])


def _read_table(path: Path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            names = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyInput(f"{path} is empty") from None
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(names):
                raise ParseError(
                    f"{path}: expected {len(names)} fields, got {len(row)}",
                    line=line_no,
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ParseError(f"{path}: {exc}", line=line_no) from None
    if not rows:
        raise EmptyInput(f"{path} has no data rows")
    return names, np.array(rows, dtype=float)

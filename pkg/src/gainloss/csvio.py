"""CSV dialect for price series and panels.

One header row, then one row per day.  The first column may hold an ISO-8601
date; every other column is a positive decimal closing price.  Lines that
start with ``#`` are comments (outputs use one to carry their run config).
Missing or non-positive cells are rejected with the offending line number.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .index_builder import PricePanel
from .series_core import PriceSeries


class InputError(ValueError):
    pass


@dataclass
class Table:
    path: str
    columns: list[str]
    values: np.ndarray                 # rows x columns
    dates: list[str] | None = None
    comments: list[str] = field(default_factory=list)


_ISO_DAY = re.compile(r"\d{4}-\d{2}-\d{2}")


def _is_date(text: str) -> bool:
    # require the dashed form so a bare number like 20240101 stays a price
    if not _ISO_DAY.match(text.strip()):
        return False
    try:
        dt.date.fromisoformat(text.strip())
    except ValueError:
        return False
    return True


def read_table(path) -> Table:
    path = str(path)
    try:
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from None

    comments = []
    rows = []
    for lineno, line in enumerate(lines, start=1):
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif line.strip():
            rows.append((lineno, next(csv.reader([line]))))
    if not rows:
        raise InputError(f"{path}: no header row")
    header_line, header = rows[0]
    header = [h.strip() for h in header]
    body = rows[1:]
    if not body:
        raise InputError(f"{path}:{header_line}: header only, length >= 2 required")

    has_dates = _is_date(body[0][1][0])
    price_cols = header[1:] if has_dates else header
    if not price_cols:
        raise InputError(f"{path}:{header_line}: no price columns")
    width = len(header)
    values = np.empty((len(body), len(price_cols)))
    dates = [] if has_dates else None
    for i, (lineno, cells) in enumerate(body):
        if len(cells) != width:
            raise InputError(f"{path}:{lineno}: expected {width} fields, found {len(cells)}")
        if has_dates:
            if not _is_date(cells[0]):
                raise InputError(f"{path}:{lineno}: bad date {cells[0]!r}")
            dates.append(cells[0].strip())
            cells = cells[1:]
        for j, cell in enumerate(cells):
            try:
                v = float(cell)
            except ValueError:
                raise InputError(f"{path}:{lineno}: column {price_cols[j]!r}: "
                                 f"not a number: {cell!r}") from None
            if not (np.isfinite(v) and v > 0):
                raise InputError(f"{path}:{lineno}: column {price_cols[j]!r}: "
                                 f"price must be positive, got {cell!r}")
            values[i, j] = v
    if dates is not None and len(set(dates)) != len(dates):
        raise InputError(f"{path}: duplicate dates")
    return Table(path, price_cols, values, dates, comments)


def read_series(path, column: str | None = None) -> PriceSeries:
    table = read_table(path)
    if column is None:
        if len(table.columns) != 1:
            raise InputError(f"{path}: {len(table.columns)} price columns; choose one with --column")
        j = 0
    else:
        if column not in table.columns:
            raise InputError(f"{path}: no column {column!r}")
        j = table.columns.index(column)
    if table.values.shape[0] < 2:
        raise InputError(f"{path}: length >= 2 required")
    dates = tuple(table.dates) if table.dates else None
    return PriceSeries(table.values[:, j], label=table.columns[j], dates=dates)


@dataclass
class PanelLoad:
    panel: PricePanel
    dropped_dates: list[str]


def read_panel(paths, strict_dates: bool = False) -> PanelLoad:
    """Load a panel from one wide file or several single-asset files.

    Several dated files are aligned on the dates they all share; the dates
    dropped in doing so are returned (or, with ``strict_dates``, reported in
    an error).  Undated files must all have the same length.
    """
    tables = [read_table(p) for p in paths]
    if len(tables) == 1:
        t = tables[0]
        return PanelLoad(PricePanel(t.columns, t.values.T,
                                    tuple(t.dates) if t.dates else None), [])

    dated = [t.dates is not None for t in tables]
    if any(dated) and not all(dated):
        raise InputError("cannot mix dated and undated input files")
    names, rows = [], []
    if not all(dated):
        lengths = {t.values.shape[0] for t in tables}
        if len(lengths) != 1:
            raise InputError(f"undated inputs differ in length: {sorted(lengths)}")
        for t in tables:
            names += t.columns
            rows += list(t.values.T)
        return PanelLoad(PricePanel(names, np.array(rows)), [])

    common = set(tables[0].dates)
    for t in tables[1:]:
        common &= set(t.dates)
    every = set().union(*(t.dates for t in tables))
    dropped = sorted(every - common)
    if dropped and strict_dates:
        shown = ", ".join(dropped[:10]) + (" ..." if len(dropped) > 10 else "")
        raise InputError(f"misaligned inputs: {len(dropped)} dates not present in every file: {shown}")
    grid = sorted(common)
    if len(grid) < 2:
        raise InputError("fewer than 2 dates shared by all input files")
    for t in tables:
        pos = {d: i for i, d in enumerate(t.dates)}
        idx = [pos[d] for d in grid]
        names += t.columns
        rows += list(t.values[idx].T)
    return PanelLoad(PricePanel(names, np.array(rows), tuple(grid)), dropped)


def format_value(v: float) -> str:
    return repr(float(v))


def render_csv(columns, matrix, dates=None, comment: str | None = None) -> str:
    """Columns of ``matrix`` (days x columns) as CSV text, shortest round-trip floats."""
    buf = io.StringIO()
    if comment is not None:
        buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((["date"] if dates is not None else []) + list(columns))
    for i, row in enumerate(np.asarray(matrix, dtype=float)):
        cells = [format_value(v) for v in row]
        w.writerow(([dates[i]] if dates is not None else []) + cells)
    return buf.getvalue()


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path

"""Monthly multi-series store, CSV ingestion, and supervised design matrices.

The raw modeling universe is a :class:`TimeSeriesTable`: several named real
series aligned on a gap-free monthly index, each tagged with a role
(``target`` / ``economic`` / ``sii``).  A :class:`LagSpec` turns a table into
the :class:`SupervisedSet` that every downstream model trains on: one row per
forecast origin, holding an explicit intercept column, autoregressive lags of
the target, and the configured lags of each exogenous column.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateMonth,
    GapInIndex,
    MalformedDate,
    MultipleTargetColumns,
    NonMonotonicIndex,
    NonNumericCell,
    NoTargetColumn,
    SeriesTooShort,
    SplitOutOfRange,
    UnknownExogenousColumn,
)

ROLES = ("target", "economic", "sii", "forecast", "actual")

_MONTH_RE = re.compile(r"(\d{4})-(\d{2})")


def parse_month(text: str) -> int:
    """Parse 'YYYY-MM' into a month ordinal (year*12 + month-1)."""
    m = _MONTH_RE.fullmatch(text.strip())
    if not m:
        raise MalformedDate(f"month {text!r} does not match YYYY-MM")
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise MalformedDate(f"month {text!r} has month number outside 1..12")
    return year * 12 + (month - 1)


def format_month(ordinal: int) -> str:
    """Inverse of :func:`parse_month`."""
    year, month = divmod(ordinal, 12)
    return f"{year:04d}-{month + 1:02d}"


@dataclass(frozen=True)
class TimeSeriesTable:
    """Aligned monthly series with per-column role tags.

    Immutable after construction: the value matrix is flagged read-only and
    instances are safe to share across threads.

    Attributes:
        months: consecutive month ordinals (strictly increasing, no gaps).
        columns: column names in their original order.
        values: float64 matrix of shape (len(months), len(columns)).
        roles: column name -> one of ``target`` / ``economic`` / ``sii``;
            at most one column may be tagged target.
    """

    months: tuple[int, ...]
    columns: tuple[str, ...]
    values: np.ndarray
    roles: Mapping[str, str]

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.shape != (len(self.months), len(self.columns)):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"{len(self.months)} months x {len(self.columns)} columns"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("table values must all be finite")
        for prev, cur in zip(self.months, self.months[1:]):
            if cur == prev:
                raise DuplicateMonth(f"month {format_month(cur)} repeated")
            if cur < prev:
                raise NonMonotonicIndex(f"month {format_month(cur)} out of order")
            if cur != prev + 1:
                raise GapInIndex(
                    f"missing month {format_month(prev + 1)} in index"
                )
        if set(self.roles) != set(self.columns):
            raise ValueError("roles must tag exactly the table columns")
        for name, role in self.roles.items():
            if role not in ROLES:
                raise ValueError(f"column {name!r} has unknown role {role!r}")
        targets = [c for c in self.columns if self.roles[c] == "target"]
        if len(targets) > 1:
            raise MultipleTargetColumns(f"columns {targets} all tagged target")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "roles", dict(self.roles))

    @property
    def n_months(self) -> int:
        return len(self.months)

    @property
    def month_labels(self) -> tuple[str, ...]:
        return tuple(format_month(m) for m in self.months)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def target_name(self) -> str:
        for name in self.columns:
            if self.roles[name] == "target":
                return name
        raise NoTargetColumn("table has no column tagged target")

    def columns_with_role(self, role: str) -> tuple[str, ...]:
        return tuple(c for c in self.columns if self.roles[c] == role)


@dataclass(frozen=True)
class LagSpec:
    """Lag structure of the supervised problem.

    Attributes:
        target_lags: number of autoregressive lags of the target (q >= 1).
        exogenous_lags: column name -> number of lags of that column (>= 1);
            lag windows start at the forecast origin itself.
        horizon: months ahead being forecast (h >= 1).
    """

    target_lags: int
    exogenous_lags: Mapping[str, int] = field(default_factory=dict)
    horizon: int = 1

    def __post_init__(self):
        if self.target_lags < 1:
            raise ValueError("target_lags must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        for name, n in self.exogenous_lags.items():
            if n < 1:
                raise ValueError(f"exogenous lag count for {name!r} must be >= 1")
        object.__setattr__(self, "exogenous_lags", dict(self.exogenous_lags))

    @property
    def deepest_lag(self) -> int:
        return max(self.target_lags, *self.exogenous_lags.values()) \
            if self.exogenous_lags else self.target_lags

    @property
    def width(self) -> int:
        """Predictor width including the leading intercept column."""
        return 1 + self.target_lags + sum(self.exogenous_lags.values())


@dataclass(frozen=True)
class SupervisedSet:
    """Design matrix pairing lagged predictor rows with future targets.

    Row i holds the predictor vector observed at origin month
    ``origin_months[i]`` and the target value ``horizon`` months later.
    The first predictor column is identically 1 (explicit intercept), so
    bootstrap resampling of rows carries it along.
    """

    predictors: np.ndarray
    targets: np.ndarray
    origin_months: tuple[str, ...]
    latest_predictor_row: np.ndarray
    horizon: int

    def __post_init__(self):
        predictors = np.ascontiguousarray(self.predictors, dtype=np.float64)
        targets = np.ascontiguousarray(self.targets, dtype=np.float64)
        latest = np.ascontiguousarray(self.latest_predictor_row, dtype=np.float64)
        if predictors.ndim != 2 or targets.ndim != 1:
            raise ValueError("predictors must be 2-D and targets 1-D")
        if not (predictors.shape[0] == targets.shape[0] == len(self.origin_months)):
            raise ValueError("row counts of predictors/targets/origins differ")
        if latest.shape != (predictors.shape[1],):
            raise ValueError("latest_predictor_row width does not match")
        predictors.flags.writeable = False
        targets.flags.writeable = False
        latest.flags.writeable = False
        object.__setattr__(self, "predictors", predictors)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "latest_predictor_row", latest)

    @property
    def n_rows(self) -> int:
        return self.predictors.shape[0]

    @property
    def width(self) -> int:
        return self.predictors.shape[1]


# --- CSV ingestion ---------------------------------------------------------

def _parse_csv(stream: IO[bytes]) -> tuple[list[str], list[int], np.ndarray]:
    text = io.TextIOWrapper(stream, encoding="utf-8", newline="")
    reader = csv.reader(text)
    try:
        header = next(reader)
    except StopIteration:
        raise NonNumericCell("CSV is empty") from None
    if not header or header[0] != "month":
        raise MalformedDate(
            f"first header column must be 'month', got {header[:1] or ['']!r}"
        )
    names = [h.strip() for h in header[1:]]
    months: list[int] = []
    rows: list[list[float]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(names) + 1:
            raise NonNumericCell(
                f"line {lineno}: expected {len(names) + 1} cells, got {len(row)}"
            )
        months.append(parse_month(row[0]))
        parsed = []
        for name, cell in zip(names, row[1:]):
            try:
                value = float(cell)
            except ValueError:
                raise NonNumericCell(
                    f"line {lineno}: column {name!r} cell {cell!r} is not numeric"
                ) from None
            if not math.isfinite(value):
                raise NonNumericCell(
                    f"line {lineno}: column {name!r} cell {cell!r} is not finite"
                )
            parsed.append(value)
        rows.append(parsed)
    if not rows:
        raise NonNumericCell("CSV has a header but no data rows")
    return names, months, np.array(rows, dtype=np.float64)


def load_series(stream: IO[bytes], schema: Mapping[str, str]) -> TimeSeriesTable:
    """Load a monthly CSV into a table; exactly one column must be the target.

    The schema maps each data column name to its role tag.  Extra schema
    entries for columns absent from the file are ignored so one schema
    document can cover several related files.
    """
    names, months, values = _parse_csv(stream)
    roles = {}
    for name in names:
        if name not in schema:
            raise NonNumericCell(f"column {name!r} missing from the role schema")
        roles[name] = schema[name]
    if not any(role == "target" for role in roles.values()):
        raise NoTargetColumn("schema tags no column as target")
    return TimeSeriesTable(tuple(months), tuple(names), values, roles)


def load_wide_series(stream: IO[bytes], role: str) -> TimeSeriesTable:
    """Load a wide CSV where every data column shares one role (no target)."""
    names, months, values = _parse_csv(stream)
    return TimeSeriesTable(
        tuple(months), tuple(names), values, {n: role for n in names}
    )


def write_series(table: TimeSeriesTable, stream: IO[bytes]) -> None:
    """Write a table as CSV; float cells use shortest round-trip repr."""
    text = io.TextIOWrapper(stream, encoding="utf-8", newline="")
    writer = csv.writer(text, lineterminator="\n")
    writer.writerow(("month",) + table.columns)
    for i, label in enumerate(table.month_labels):
        writer.writerow([label] + [repr(float(v)) for v in table.values[i]])
    text.flush()
    text.detach()


# --- table surgery -----------------------------------------------------------

def split_in_out(
    table: TimeSeriesTable, first_out_month: str
) -> tuple[TimeSeriesTable, TimeSeriesTable]:
    """Partition at a month: everything before it versus from it onward.

    The split month must lie strictly inside the index range; an empty
    in-sample part is forbidden.
    """
    split = parse_month(first_out_month)
    if split <= table.months[0] or split > table.months[-1]:
        raise SplitOutOfRange(
            f"split month {first_out_month} not strictly inside "
            f"{format_month(table.months[0])}..{format_month(table.months[-1])}"
        )
    pos = split - table.months[0]
    head = TimeSeriesTable(
        table.months[:pos], table.columns, table.values[:pos], dict(table.roles)
    )
    tail = TimeSeriesTable(
        table.months[pos:], table.columns, table.values[pos:], dict(table.roles)
    )
    return head, tail


def truncate_before(table: TimeSeriesTable, last_month: int) -> TimeSeriesTable:
    """All rows with month ordinal <= last_month (training-window view)."""
    if last_month < table.months[0]:
        raise SplitOutOfRange(
            f"cutoff {format_month(last_month)} precedes the table start"
        )
    pos = min(last_month, table.months[-1]) - table.months[0] + 1
    return TimeSeriesTable(
        table.months[:pos], table.columns, table.values[:pos], dict(table.roles)
    )


def shift_table(table: TimeSeriesTable, months: int) -> TimeSeriesTable:
    """Relabel every row's month by +months (value observed at t serves t+months)."""
    return TimeSeriesTable(
        tuple(m + months for m in table.months),
        table.columns,
        np.array(table.values),
        dict(table.roles),
    )


def select_columns(table: TimeSeriesTable, names: Sequence[str]) -> TimeSeriesTable:
    idx = [table.columns.index(n) for n in names]
    return TimeSeriesTable(
        table.months,
        tuple(names),
        table.values[:, idx],
        {n: table.roles[n] for n in names},
    )


def merge_tables(tables: Iterable[TimeSeriesTable]) -> TimeSeriesTable:
    """Join tables column-wise over the intersection of their month ranges."""
    tables = list(tables)
    if not tables:
        raise ValueError("merge_tables needs at least one table")
    first = max(t.months[0] for t in tables)
    last = min(t.months[-1] for t in tables)
    if last < first:
        raise SeriesTooShort("tables share no common months")
    months = tuple(range(first, last + 1))
    columns: list[str] = []
    roles: dict[str, str] = {}
    blocks = []
    for t in tables:
        lo = first - t.months[0]
        hi = lo + len(months)
        for name in t.columns:
            if name in roles:
                raise ValueError(f"duplicate column {name!r} across merged tables")
            roles[name] = t.roles[name]
        columns.extend(t.columns)
        blocks.append(t.values[lo:hi])
    return TimeSeriesTable(months, tuple(columns), np.hstack(blocks), roles)


# --- design matrix ---------------------------------------------------------

def _exogenous_order(table: TimeSeriesTable, spec: LagSpec) -> list[str]:
    unknown = set(spec.exogenous_lags) - set(table.columns)
    if unknown:
        raise UnknownExogenousColumn(
            f"exogenous columns {sorted(unknown)} not in table"
        )
    return [c for c in table.columns if c in spec.exogenous_lags]


def build_predictor_row(
    table: TimeSeriesTable, spec: LagSpec, origin: int
) -> np.ndarray:
    """Predictor vector observed at row position ``origin`` of the table."""
    if origin < spec.deepest_lag - 1 or origin >= table.n_months:
        raise SeriesTooShort(
            f"origin position {origin} lacks full lag history"
        )
    target = table.column(table.target_name())
    row = [1.0]
    row.extend(target[origin - i] for i in range(spec.target_lags))
    for name in _exogenous_order(table, spec):
        series = table.column(name)
        row.extend(series[origin - i] for i in range(spec.exogenous_lags[name]))
    return np.array(row, dtype=np.float64)


def build_design_matrix(table: TimeSeriesTable, spec: LagSpec) -> SupervisedSet:
    """Arrange a table into supervised rows for direct h-step forecasting.

    Origins run from the first month with full lag history to the last month
    whose target (h months later) is still observed; rows lacking history are
    dropped, never padded.  Row layout: intercept 1, target lags
    x(t)..x(t-q+1), then each exogenous column's lags x_j(t)..x_j(t-N_j+1)
    in table column order.  The returned set also carries the predictor
    vector at the final table month, from which the next unseen value is
    forecast.
    """
    exog = _exogenous_order(table, spec)
    depth = spec.deepest_lag
    t_len = table.n_months
    n_rows = t_len - spec.horizon - depth + 1
    if n_rows < 1:
        raise SeriesTooShort(
            f"table of {t_len} months supports no rows at horizon "
            f"{spec.horizon} with deepest lag {depth}"
        )
    target = table.column(table.target_name())
    width = spec.width
    predictors = np.empty((n_rows, width), dtype=np.float64)
    predictors[:, 0] = 1.0
    origins = np.arange(depth - 1, t_len - spec.horizon)
    col = 1
    for i in range(spec.target_lags):
        predictors[:, col] = target[origins - i]
        col += 1
    for name in exog:
        series = table.column(name)
        for i in range(spec.exogenous_lags[name]):
            predictors[:, col] = series[origins - i]
            col += 1
    targets = target[origins + spec.horizon]
    origin_months = tuple(format_month(table.months[t]) for t in origins)
    latest = build_predictor_row(table, spec, t_len - 1)
    return SupervisedSet(predictors, targets, origin_months, latest, spec.horizon)

"""Economic predictor construction, keyword screening, and min-max scaling.

Three concerns live here.  First, raw macro series for an origin country are
combined into the five predictors the demand models consume: GDP per capita,
the long-short government bond spread, a relative price of the destination,
and two substitute prices.  Second, search-index keyword series are screened
by lagged Pearson correlation against arrivals so only leading indicators
enter the design matrix.  Third, a fit-once scaler maps columns into [0,1]
for the sigmoid networks without leaking test-set ranges.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import IO, Mapping, Sequence

import numpy as np

from .dataset import TimeSeriesTable, load_wide_series
from .errors import (
    ConstantColumn,
    CsvFormatError,
    InsufficientOverlap,
    MisalignedIndex,
    NonPositiveInput,
    NoTargetColumn,
    UnknownColumn,
    ZeroVarianceSeries,
)

ECONOMIC_COLUMNS = (
    "gdppc", "ltgb", "stgb", "cpi_origin",
    "cpi_cn", "cpi_kr", "cpi_jp", "ex_cny", "ex_krw", "ex_jpy",
)

_POSITIVE_COLUMNS = (
    "cpi_origin", "cpi_cn", "cpi_kr", "cpi_jp", "ex_cny", "ex_krw", "ex_jpy",
)

FEATURE_COLUMNS = ("gdppc", "irs", "rel_price_cn", "sub_price_kr", "sub_price_jp")


@dataclass(frozen=True)
class EconomicRaw:
    """Raw macro inputs for one origin country on a monthly index.

    Columns (fixed names): gdppc, ltgb and stgb (annualized yields in
    percent), cpi_origin plus destination/substitute CPIs (cpi_cn, cpi_kr,
    cpi_jp), and exchange rates quoted as foreign currency per unit of
    origin currency (ex_cny, ex_krw, ex_jpy).  CPIs and exchange rates must
    be strictly positive.
    """

    table: TimeSeriesTable

    def __post_init__(self):
        missing = set(ECONOMIC_COLUMNS) - set(self.table.columns)
        extra = set(self.table.columns) - set(ECONOMIC_COLUMNS)
        if missing or extra:
            raise CsvFormatError(
                f"economic data needs columns {sorted(ECONOMIC_COLUMNS)}; "
                f"missing {sorted(missing)}, unexpected {sorted(extra)}"
            )
        for name in _POSITIVE_COLUMNS:
            series = self.table.column(name)
            if np.any(series <= 0.0):
                pos = int(np.argmax(series <= 0.0))
                raise NonPositiveInput(
                    f"column {name!r} is {series[pos]} at "
                    f"{self.table.month_labels[pos]}; must be strictly positive"
                )

    @classmethod
    def from_series(
        cls, months: Sequence[int], series: Mapping[str, Sequence[float]]
    ) -> "EconomicRaw":
        lengths = {name: len(vals) for name, vals in series.items()}
        if any(n != len(months) for n in lengths.values()):
            raise MisalignedIndex(
                f"series lengths {lengths} do not all match "
                f"{len(months)} months"
            )
        names = tuple(series)
        values = np.column_stack([np.asarray(series[n], float) for n in names])
        table = TimeSeriesTable(
            tuple(months), names, values, {n: "economic" for n in names}
        )
        return cls(table)


def load_economic_csv(stream: IO[bytes]) -> EconomicRaw:
    return EconomicRaw(load_wide_series(stream, "economic"))


def build_economic_features(raw: EconomicRaw) -> TimeSeriesTable:
    """Derive the five economic predictors, all tagged economic.

    irs is the long minus short government bond yield.  rel_price_cn is the
    destination CPI converted to origin currency and divided by the origin
    CPI.  The substitute prices are the competing destinations' CPIs
    converted to origin currency.
    """
    t = raw.table
    gdppc = t.column("gdppc")
    irs = t.column("ltgb") - t.column("stgb")
    rel_price_cn = (t.column("cpi_cn") / t.column("ex_cny")) / t.column("cpi_origin")
    sub_price_kr = t.column("cpi_kr") / t.column("ex_krw")
    sub_price_jp = t.column("cpi_jp") / t.column("ex_jpy")
    values = np.column_stack([gdppc, irs, rel_price_cn, sub_price_kr, sub_price_jp])
    return TimeSeriesTable(
        t.months,
        FEATURE_COLUMNS,
        values,
        {name: "economic" for name in FEATURE_COLUMNS},
    )


# --- keyword screening -------------------------------------------------------

@dataclass(frozen=True)
class KeywordChoice:
    """Screening outcome for one keyword: best lag and its correlation."""

    keyword: str
    lag: int
    correlation: float
    selected: bool


@dataclass(frozen=True)
class KeywordSelection:
    choices: tuple[KeywordChoice, ...]
    max_lag: int
    threshold: float

    def selected_lags(self) -> dict[str, int]:
        """Map of selected keywords to their chosen lead, for lag specs."""
        return {c.keyword: c.lag for c in self.choices if c.selected}


def _pearson(a: np.ndarray, b: np.ndarray, label: str) -> float:
    da = a - a.mean()
    db = b - b.mean()
    sa = float(da @ da)
    sb = float(db @ db)
    if sa == 0.0 or sb == 0.0:
        raise ZeroVarianceSeries(f"{label}: correlation undefined on constant data")
    return float(da @ db) / math.sqrt(sa * sb)


def select_keywords(
    arrivals: TimeSeriesTable,
    keywords: TimeSeriesTable,
    max_lag: int = 3,
    threshold: float = 0.7,
) -> KeywordSelection:
    """Screen keywords by Pearson correlation with arrivals at lags 1..max_lag.

    For each keyword the correlation between arrivals at t and the keyword
    at t-lag is computed over the overlapping months, for every lag from 1
    to max_lag.  The lag with the highest (signed) correlation wins, ties
    breaking toward the smallest lag so fresher readings are preferred.  A
    keyword is selected only when that correlation strictly exceeds the
    threshold.
    """
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    try:
        target_name = arrivals.target_name()
    except NoTargetColumn:
        if len(arrivals.columns) != 1:
            raise
        target_name = arrivals.columns[0]
    arr = arrivals.column(target_name)
    a0, a1 = arrivals.months[0], arrivals.months[-1]
    k0, k1 = keywords.months[0], keywords.months[-1]
    overlap0 = min(a1, k1) - max(a0, k0) + 1
    if overlap0 < max_lag + 2:
        raise InsufficientOverlap(
            f"series overlap of {max(overlap0, 0)} months is below the "
            f"{max_lag + 2} needed to scan lags 1..{max_lag}"
        )
    choices = []
    for name in keywords.columns:
        kw = keywords.column(name)
        best_lag, best_corr = 0, -np.inf
        for lag in range(1, max_lag + 1):
            lo = max(a0, k0 + lag)
            hi = min(a1, k1 + lag)
            if hi - lo + 1 < 2:
                raise InsufficientOverlap(
                    f"keyword {name!r} overlaps arrivals on fewer than 2 "
                    f"months at lag {lag}"
                )
            a_slice = arr[lo - a0: hi - a0 + 1]
            k_slice = kw[lo - lag - k0: hi - lag - k0 + 1]
            corr = _pearson(a_slice, k_slice, f"keyword {name!r} at lag {lag}")
            if corr > best_corr:
                best_lag, best_corr = lag, corr
        choices.append(
            KeywordChoice(name, best_lag, best_corr, best_corr > threshold)
        )
    return KeywordSelection(tuple(choices), max_lag, threshold)


def write_selection_csv(selection: KeywordSelection, stream: IO[bytes]) -> None:
    text = io.TextIOWrapper(stream, encoding="utf-8", newline="")
    writer = csv.writer(text, lineterminator="\n")
    writer.writerow(["keyword", "lag", "correlation", "selected"])
    for c in selection.choices:
        writer.writerow(
            [c.keyword, c.lag, repr(float(c.correlation)),
             "true" if c.selected else "false"]
        )
    text.flush()
    text.detach()


# --- min-max scaling --------------------------------------------------------

@dataclass(frozen=True)
class ScalerState:
    """Per-column train-set minima and maxima, fitted on in-sample data only."""

    columns: tuple[str, ...]
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.ascontiguousarray(self.mins, dtype=np.float64)
        maxs = np.ascontiguousarray(self.maxs, dtype=np.float64)
        if mins.shape != maxs.shape or mins.shape != (len(self.columns),):
            raise ValueError("scaler bounds do not match the column list")
        mins.flags.writeable = False
        maxs.flags.writeable = False
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)


def fit_scaler(train: TimeSeriesTable) -> ScalerState:
    mins = train.values.min(axis=0)
    maxs = train.values.max(axis=0)
    for i, name in enumerate(train.columns):
        if mins[i] == maxs[i]:
            raise ConstantColumn(
                f"column {name!r} is constant at {mins[i]}; range is degenerate"
            )
    return ScalerState(train.columns, mins, maxs)


def _bounds_for(state: ScalerState, columns: Sequence[str]):
    index = {name: i for i, name in enumerate(state.columns)}
    unknown = [c for c in columns if c not in index]
    if unknown:
        raise UnknownColumn(f"columns {unknown} were not fitted by the scaler")
    idx = [index[c] for c in columns]
    return state.mins[idx], state.maxs[idx]


def apply_scaler(state: ScalerState, table: TimeSeriesTable) -> TimeSeriesTable:
    """Map each value to (v - min) / (max - min); no clamping outside [0,1]."""
    mins, maxs = _bounds_for(state, table.columns)
    scaled = (table.values - mins) / (maxs - mins)
    return TimeSeriesTable(table.months, table.columns, scaled, dict(table.roles))


def invert_scaler(state: ScalerState, table: TimeSeriesTable) -> TimeSeriesTable:
    mins, maxs = _bounds_for(state, table.columns)
    raw = table.values * (maxs - mins) + mins
    return TimeSeriesTable(table.months, table.columns, raw, dict(table.roles))


@dataclass(frozen=True)
class ArrayScaler:
    """Column-wise min-max bounds for plain design matrices."""

    mins: np.ndarray
    maxs: np.ndarray

    def to_json_dict(self) -> dict:
        return {"mins": [float(v) for v in self.mins],
                "maxs": [float(v) for v in self.maxs]}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ArrayScaler":
        return cls(np.asarray(doc["mins"], float), np.asarray(doc["maxs"], float))


def fit_array_scaler(x: np.ndarray) -> ArrayScaler:
    x = np.asarray(x, dtype=np.float64)
    mins = x.min(axis=0)
    maxs = x.max(axis=0)
    flat = np.flatnonzero(mins == maxs)
    if flat.size:
        raise ConstantColumn(
            f"matrix column {int(flat[0])} is constant at {mins[flat[0]]}"
        )
    return ArrayScaler(mins, maxs)


def apply_array_scaler(scaler: ArrayScaler, x: np.ndarray) -> np.ndarray:
    return (np.asarray(x, np.float64) - scaler.mins) / (scaler.maxs - scaler.mins)


def invert_array_scaler(scaler: ArrayScaler, x: np.ndarray) -> np.ndarray:
    return np.asarray(x, np.float64) * (scaler.maxs - scaler.mins) + scaler.mins

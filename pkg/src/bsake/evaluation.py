"""Forecast accuracy metrics and significance tests.

Level accuracy is measured by MAPE and mean-normalized RMSE, both reported
in percent; directional accuracy by the share of months where the forecast
moves the same way as the actual.  Two significance tests accompany them:
the Diebold-Mariano test compares per-observation loss series between two
models, and the Pesaran-Timmermann test checks directional skill against
the independence null.  Every statistic here is cross-checked in the test
suite against an independently coded oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDifferential,
    DegenerateDirections,
    EmptyInput,
    LengthMismatch,
    TooShort,
    ZeroActual,
    ZeroMeanActual,
)


@dataclass(frozen=True)
class MetricResult:
    """Level and directional accuracy for one forecast series (percent)."""

    mape: float
    nrmse: float
    ds: float
    n: int

    def __post_init__(self):
        if self.mape < 0 or self.nrmse < 0 or not 0 <= self.ds <= 100:
            raise ValueError("metric values out of range")


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    alternative: str

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError("p-value must lie in [0,1]")


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _paired(actual, forecast) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=np.float64).reshape(-1)
    f = np.asarray(forecast, dtype=np.float64).reshape(-1)
    if a.size != f.size:
        raise LengthMismatch(f"lengths {a.size} and {f.size} differ")
    return a, f


def mape(actual, forecast) -> float:
    """Mean absolute percentage error, in percent."""
    a, f = _paired(actual, forecast)
    if a.size == 0:
        raise EmptyInput("mape needs at least one observation")
    if np.any(a == 0.0):
        raise ZeroActual("actual values of 0 make percentage error undefined")
    return float(np.mean(np.abs(a - f) / np.abs(a)) * 100.0)


def nrmse(actual, forecast) -> float:
    """Root mean square error divided by the actual mean, in percent."""
    a, f = _paired(actual, forecast)
    if a.size == 0:
        raise EmptyInput("nrmse needs at least one observation")
    mean = float(np.mean(a))
    if mean == 0.0:
        raise ZeroMeanActual("zero-mean actuals make the normalization undefined")
    rmse = math.sqrt(float(np.mean((a - f) ** 2)))
    return rmse / mean * 100.0


def ds(actual, forecast, denominator: str = "n-1") -> float:
    """Directional symmetry: percent of months moved in the right direction.

    A month scores when (x_t - x_{t-1}) and (xhat_t - x_{t-1}) have the same
    strict sign; a zero product counts as a miss.  The canonical denominator
    is the N-1 scored months; denominator="n" divides by N instead (kept for
    comparability, see the run report).
    """
    if denominator not in ("n-1", "n"):
        raise ValueError("denominator must be 'n-1' or 'n'")
    a, f = _paired(actual, forecast)
    if a.size < 2:
        raise TooShort("directional accuracy needs at least two observations")
    hits = (a[1:] - a[:-1]) * (f[1:] - a[:-1]) > 0.0
    divisor = a.size - 1 if denominator == "n-1" else a.size
    return float(hits.sum()) / divisor * 100.0


def compute_metrics(actual, forecast) -> MetricResult:
    a, f = _paired(actual, forecast)
    return MetricResult(
        mape=mape(a, f), nrmse=nrmse(a, f), ds=ds(a, f), n=int(a.size)
    )


def absolute_percentage_errors(actual, forecast) -> np.ndarray:
    """Per-observation |error|/|actual| loss series, DM test's default loss."""
    a, f = _paired(actual, forecast)
    if np.any(a == 0.0):
        raise ZeroActual("actual values of 0 make percentage error undefined")
    return np.abs(a - f) / np.abs(a)


def dm_test(
    loss_a, loss_b, horizon: int = 1, harvey_correction: bool = False
) -> TestResult:
    """Diebold-Mariano comparison of two per-observation loss series.

    The statistic standardizes the mean loss differential (a minus b) by its
    long-run variance with rectangular weights up to lag horizon-1; when
    that estimate is nonpositive it falls back to the lag-0 variance.  The
    p-value is the lower normal tail, so a negative statistic is evidence
    that model a beats model b.  The optional Harvey small-sample factor is
    off by default.
    """
    a, b = _paired(loss_a, loss_b)
    n = a.size
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if n < 5:
        raise TooShort(f"{n} observations are too few for the DM test")
    d = a - b
    dbar = float(np.mean(d))
    centered = d - dbar
    gamma0 = float(centered @ centered) / n
    scale = max(1.0, float(np.max(np.abs(d))))
    if gamma0 <= (1e-12 * scale) ** 2:
        raise DegenerateDifferential(
            "loss differential has (numerically) zero variance"
        )
    lrv = gamma0
    for j in range(1, min(horizon, n)):
        gamma_j = float(centered[j:] @ centered[:-j]) / n
        lrv += 2.0 * gamma_j
    if lrv <= 0.0:
        lrv = gamma0
    statistic = dbar / math.sqrt(lrv / n)
    if harvey_correction:
        h = horizon
        statistic *= math.sqrt((n + 1 - 2 * h + h * (h - 1) / n) / n)
    return TestResult(
        statistic=statistic,
        p_value=_norm_cdf(statistic),
        alternative="loss of a is lower than loss of b (lower tail)",
    )


def _directions(values: np.ndarray, previous: np.ndarray) -> np.ndarray:
    """Up moves relative to the previous actual; a zero change counts down."""
    return (values - previous > 0.0).astype(np.float64)


def pt_test(actual, forecast) -> TestResult:
    """Pesaran-Timmermann test of directional forecasting skill.

    Directions are month-over-month changes against the previous actual
    value (matching the ds metric).  The observed agreement rate is
    compared with the rate expected under independence, standardized by the
    difference of their estimated variances; the p-value is the upper
    normal tail, so a large positive statistic means genuine skill.
    """
    a, f = _paired(actual, forecast)
    if a.size < 3:
        raise TooShort("the PT test needs at least three observations")
    x = _directions(a[1:], a[:-1])
    y = _directions(f[1:], a[:-1])
    n = x.size
    px = float(np.mean(x))
    py = float(np.mean(y))
    if px in (0.0, 1.0) or py in (0.0, 1.0):
        raise DegenerateDirections(
            "constant direction in actuals or forecasts; null variance is zero"
        )
    phat = float(np.mean(x == y))
    pstar = px * py + (1.0 - px) * (1.0 - py)
    var_hat = pstar * (1.0 - pstar) / n
    var_star = (
        (2.0 * py - 1.0) ** 2 * px * (1.0 - px) / n
        + (2.0 * px - 1.0) ** 2 * py * (1.0 - py) / n
        + 4.0 * px * py * (1.0 - px) * (1.0 - py) / n**2
    )
    var_diff = var_hat - var_star
    if var_diff <= 0.0:
        raise DegenerateDirections(
            "null variance estimate collapsed; directions too unbalanced"
        )
    statistic = (phat - pstar) / math.sqrt(var_diff)
    return TestResult(
        statistic=statistic,
        p_value=1.0 - _norm_cdf(statistic),
        alternative="directional accuracy exceeds independence (upper tail)",
    )

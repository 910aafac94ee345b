"""Seeded synthetic data generator for exercising the full pipeline.

Real monthly arrivals, search-intensity, and macro series are not shipped
with the package, so tests and demos run on generated stand-ins: a trend
plus an amplitude-modulated, peak-sharpened seasonal cycle with AR noise,
keyword series
that lead the arrivals by configured lags (true positives for the
screening step), pure-noise keyword series (true negatives), and positive
pseudo-economic series.  Everything derives from one seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import TimeSeriesTable, parse_month
from .errors import ConfigError
from .features import ECONOMIC_COLUMNS, EconomicRaw

_SEED_MASK = 2**64 - 1


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of one generated dataset.

    keyword_lags gives one informative keyword per entry, leading the
    arrivals by that many months; noise_keywords adds uninformative
    series on top.  The seasonal cycle mixes in a second harmonic
    weighted by sharpness, giving the peaked, asymmetric shape of real
    arrival seasons, and its amplitude grows linearly to twice its base
    value over the sample.  The noise is an AR(1) process with marginal standard deviation
    noise_sd and autocorrelation noise_persistence, so forecast
    uncertainty genuinely compounds with the horizon; persistence 0
    recovers white noise.  With walk_sd > 0 the demand level also
    carries a random walk with that innovation sd, shared by arrivals
    and keywords alike: the walk is unforecastable beyond the newest
    observation, so every model's error grows with the input-target
    gap no matter how well it fits.  On top of that, months drawn at shock_rate
    receive level shocks of about shock_scale noise sds that fade
    geometrically at shock_decay, mimicking the multi-month episodes
    that strikes, epidemics, and policy breaks carve into arrivals.
    """

    length: int = 132
    start_month: str = "2008-01"
    base_level: float = 100.0
    trend: float = 0.5
    amplitude: float = 10.0
    period: int = 12
    sharpness: float = 0.4
    noise_sd: float = 2.0
    noise_persistence: float = 0.8
    walk_sd: float = 0.0
    shock_rate: float = 0.05
    shock_scale: float = 4.0
    shock_decay: float = 0.0
    keyword_lags: tuple = (1, 2, 3, 1, 2)
    keyword_noise_sd: float = 2.0
    kw_curvature: float = 0.0
    noise_keywords: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.length < 36:
            raise ConfigError("synthetic length must be at least 36 months")
        if self.period < 2:
            raise ConfigError("seasonal period must be at least 2")
        if self.sharpness < 0:
            raise ConfigError("seasonal sharpness must be >= 0")
        if self.noise_sd < 0 or self.keyword_noise_sd < 0 or self.walk_sd < 0:
            raise ConfigError("noise standard deviations must be >= 0")
        if not 0.0 <= self.noise_persistence < 1.0:
            raise ConfigError("noise_persistence must be in [0, 1)")
        if not 0.0 <= self.shock_rate <= 0.5:
            raise ConfigError("shock_rate must be in [0, 0.5]")
        if self.shock_scale < 0:
            raise ConfigError("shock_scale must be >= 0")
        if not 0.0 <= self.shock_decay < 1.0:
            raise ConfigError("shock_decay must be in [0, 1)")
        if self.noise_keywords < 0:
            raise ConfigError("noise_keywords must be >= 0")
        if not 0.0 <= self.kw_curvature < 2.0:
            raise ConfigError("kw_curvature must be in [0, 2)")
        if any(lag < 1 for lag in self.keyword_lags):
            raise ConfigError("keyword lags must be >= 1")
        parse_month(self.start_month)
        object.__setattr__(
            self, "keyword_lags", tuple(int(l) for l in self.keyword_lags)
        )


def signal_value(spec: SyntheticSpec, t: int) -> float:
    """Noise-free arrivals value at month index t (closed form)."""
    swell = 1.0 + t / spec.length
    theta = 2 * np.pi * t / spec.period
    season = np.sin(theta) + spec.sharpness * np.sin(2 * theta)
    return spec.base_level + spec.trend * t + spec.amplitude * swell * season


def generate_synthetic(
    spec: SyntheticSpec,
) -> tuple[TimeSeriesTable, TimeSeriesTable, EconomicRaw]:
    """Generate (arrivals, keywords, economic) tables from one seed.

    Keyword i at month t observes the demand level (trend-seasonal
    signal plus any random-walk drift, but not the transient noise) at
    t+lag_i plus its own noise, so the lag-lag_i correlation with the
    arrivals is high by construction and screening can recover the lag.
    With kw_curvature > 0 each keyword reads the signal through its own
    monotone power warp (saturating for some, accelerating for others),
    the way search-intensity indices track real arrivals without being
    proportional to them; warps stay mild enough that the screening
    correlations survive.
    """
    rng = np.random.default_rng(spec.seed & _SEED_MASK)
    n = spec.length
    first = parse_month(spec.start_month)
    months = tuple(range(first, first + n))

    max_lag = max(spec.keyword_lags, default=0)
    t_ext = np.arange(n + max_lag, dtype=np.float64)
    swell = 1.0 + t_ext / n
    theta = 2 * np.pi * t_ext / spec.period
    season = np.sin(theta) + spec.sharpness * np.sin(2 * theta)
    signal = spec.base_level + spec.trend * t_ext + spec.amplitude * swell * season
    rho = spec.noise_persistence
    draws = rng.normal(0.0, spec.noise_sd, n)
    noise = np.empty(n)
    # innovations scaled so the marginal sd stays noise_sd at any rho
    prev = draws[0]
    noise[0] = prev
    scale = np.sqrt(1.0 - rho * rho)
    for t in range(1, n):
        prev = rho * prev + scale * draws[t]
        noise[t] = prev
    # occasional level shocks (strikes, epidemics, policy breaks): months
    # drawn at shock_rate start a disturbance of several noise sds that
    # fades geometrically at shock_decay, so breaks are episodes rather
    # than single-month pops when decay > 0
    # slow demand drift: a random walk in the level, observed by the
    # keywords as well (search interest tracks where demand actually is,
    # not the clean trend), so the screening correlations survive it
    demand = signal
    if spec.walk_sd > 0:
        demand = signal + np.cumsum(rng.normal(0.0, spec.walk_sd, n + max_lag))
    shock_months = rng.uniform(size=n) < spec.shock_rate
    shock_sizes = rng.normal(0.0, spec.shock_scale * spec.noise_sd, n)
    impulses = np.where(shock_months, shock_sizes, 0.0)
    shocks = np.empty(n)
    carry = 0.0
    for t in range(n):
        carry = impulses[t] + spec.shock_decay * carry
        shocks[t] = carry
    arrivals_vals = demand[:n] + noise + shocks
    arrivals = TimeSeriesTable(
        months, ("arrivals",), arrivals_vals[:, None],
        {"arrivals": "target"},
    )

    # per-keyword power warps: exponent 1 + curvature * offset, cycled
    _warp_offsets = (-0.5, 0.0, 1.0, -0.25, 0.5)
    lo = float(demand.min())
    span = float(demand.max() - demand.min()) or 1.0

    kw_names = []
    kw_cols = []
    for i, lag in enumerate(spec.keyword_lags, start=1):
        kw_names.append(f"kw{i}")
        window = demand[lag:lag + n]
        if spec.kw_curvature > 0.0:
            power = 1.0 + spec.kw_curvature * _warp_offsets[(i - 1) % 5]
            window = lo + span * ((window - lo) / span) ** power
        kw_cols.append(window + rng.normal(0.0, spec.keyword_noise_sd, n))
    level = spec.base_level if spec.base_level > 0 else 1.0
    for j in range(1, spec.noise_keywords + 1):
        kw_names.append(f"noise{j}")
        kw_cols.append(rng.normal(level, level / 10.0, n))
    keywords = TimeSeriesTable(
        months,
        tuple(kw_names),
        np.column_stack(kw_cols) if kw_cols else np.empty((n, 0)),
        {name: "sii" for name in kw_names},
    )

    econ_series = {}
    for c, name in enumerate(ECONOMIC_COLUMNS):
        base = 10.0 + 3.0 * c
        steps = rng.normal(0.0, 0.01, n)
        econ_series[name] = base * np.exp(np.cumsum(steps))
    economic = EconomicRaw.from_series(months, econ_series)

    return arrivals, keywords, economic

"""Model composition, rolling-origin forecasting, and the benchmark tournament.

A SAKE forecaster scales the design-matrix predictors, compresses them with
a stacked autoencoder, and regresses the raw targets on the codes with a
kernel ridge head.  Bagged variants train one such model per moving-block
bootstrap replicate and aggregate the member forecasts.  The tournament
runs six model kinds over in-sample and out-of-sample rolling schemes at
several horizons and assembles a metrics report with significance tests.

Seeding discipline: one base seed is derived per (scheme, run horizon,
roll, sub-horizon) and shared by every model kind, and ensemble member k
trains with base+k-1.  A single-member ensemble on a full-length block
therefore reproduces the unbagged model bit for bit, and a SAKE model with
no autoencoder layers reproduces the plain kernel model bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .bagging import AGGREGATION_RULES, block_bootstrap
from .dataset import (
    LagSpec,
    SupervisedSet,
    TimeSeriesTable,
    build_design_matrix,
    build_predictor_row,
    format_month,
    merge_tables,
    parse_month,
    select_columns,
    shift_table,
    split_in_out,
    truncate_before,
)
from .errors import HorizonExceedsTestSpan, NonFiniteForecast, ZeroActual
from .evaluation import (
    absolute_percentage_errors,
    dm_test,
    ds,
    mape,
    nrmse,
    pt_test,
)
from .features import (
    ArrayScaler,
    EconomicRaw,
    KeywordSelection,
    apply_array_scaler,
    build_economic_features,
    fit_array_scaler,
    select_keywords,
)
from .kelm import KelmModel, KernelSpec, default_gamma, fit_kelm, predict_kelm
from .mlp import MlpModel, fit_mlp, predict_mlp
from .sae import StackedAutoencoder, TrainConfig, sae_encode, train_sae

_SEED_MASK = 2**64 - 1


class ModelKind(Enum):
    MLP = "MLP"
    B_MLP = "B-MLP"
    KELM = "KELM"
    B_KELM = "B-KELM"
    SAKE = "SAKE"
    B_SAKE = "B-SAKE"


MODEL_ORDER = (
    ModelKind.B_SAKE, ModelKind.SAKE, ModelKind.B_KELM,
    ModelKind.KELM, ModelKind.B_MLP, ModelKind.MLP,
)

BAGGED_KINDS = frozenset(
    {ModelKind.B_MLP, ModelKind.B_KELM, ModelKind.B_SAKE}
)

_FAMILY = {
    ModelKind.MLP: "mlp", ModelKind.B_MLP: "mlp",
    ModelKind.KELM: "kelm", ModelKind.B_KELM: "kelm",
    ModelKind.SAKE: "sake", ModelKind.B_SAKE: "sake",
}

RESERVED_MODELS = ("SARIMAX",)

_SCHEMES = ("in-sample", "out-of-sample")
# seed streams: the two evaluation schemes plus hyperparameter selection
_SEED_STREAMS = ("in-sample", "out-of-sample", "selection")


def coerce_kind(kind) -> ModelKind:
    if isinstance(kind, ModelKind):
        return kind
    return ModelKind(str(kind).upper())


@dataclass(frozen=True)
class PipelineSettings:
    """Everything the tournament needs beyond the data itself.

    sae_layers_grid entries are size tuples, or None for the automatic
    two-layer architecture [ceil(d/2), ceil(d/4)] at data width d.
    gamma_grid entries are kernel widths, or None for the 1/d default at
    the kernel's input width.  block_length None means every bootstrap
    draw uses one block spanning the whole window (the degenerate case).
    """

    split_month: str
    target_lags: int = 12
    exogenous_lags: Mapping[str, int] = field(default_factory=dict)
    sae_layers_grid: tuple = (None,)
    gamma_grid: tuple = (None,)
    c_grid: tuple = (100.0,)
    mlp_hidden_grid: tuple = (8,)
    epochs: int = 150
    learning_rate: float = 0.5
    batch_size: int | None = None
    mlp_epochs: int | None = None
    mlp_learning_rate: float | None = None
    ensemble_size: int = 100
    block_length: int | None = 12
    aggregation: str = "mean"
    master_seed: int = 0
    retrain_per_roll: bool = True
    validation_months: int = 12

    def __post_init__(self):
        if self.target_lags < 1:
            raise ValueError("target_lags must be >= 1")
        if self.epochs < 0 or self.learning_rate <= 0:
            raise ValueError("bad training settings")
        if self.mlp_epochs is not None and self.mlp_epochs < 0:
            raise ValueError("mlp_epochs must be >= 0")
        if self.mlp_learning_rate is not None and self.mlp_learning_rate <= 0:
            raise ValueError("mlp_learning_rate must be > 0")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")
        if self.block_length is not None and self.block_length < 1:
            raise ValueError("block_length must be >= 1 or None")
        if self.aggregation not in AGGREGATION_RULES:
            raise ValueError(f"aggregation must be one of {AGGREGATION_RULES}")
        if not self.sae_layers_grid or not self.gamma_grid \
                or not self.c_grid or not self.mlp_hidden_grid:
            raise ValueError("hyperparameter grids must be nonempty")
        object.__setattr__(self, "exogenous_lags", dict(self.exogenous_lags))


def derive_seed(
    master_seed: int, scheme: str, horizon: int, roll: int, sub_horizon: int
) -> int:
    """Base training seed for one tournament cell, shared by all kinds."""
    scheme_code = _SEED_STREAMS.index(scheme)
    ss = np.random.SeedSequence(
        [master_seed & _SEED_MASK, scheme_code, horizon, roll, sub_horizon]
    )
    return int(ss.generate_state(1, np.uint64)[0])


def member_seed(base_seed: int, k: int) -> int:
    """Training seed of ensemble member k (counting from 1)."""
    return (base_seed + k - 1) & _SEED_MASK


# --- single models -----------------------------------------------------------

@dataclass(frozen=True)
class SakeParams:
    """Hyperparameters of one SAKE fit (layers None = automatic sizes)."""

    layers: tuple | None
    gamma: float | None
    c: float
    seed: int = 0


@dataclass(frozen=True)
class MlpParams:
    hidden: int
    seed: int = 0


@dataclass(frozen=True)
class SakeModel:
    """Scaler + autoencoder stack + kernel head, plus the settings echo."""

    scaler: ArrayScaler
    sae: StackedAutoencoder
    kelm: KelmModel
    horizon: int
    params: SakeParams


@dataclass(frozen=True)
class MlpForecaster:
    """Perceptron benchmark with its input scaler and target range."""

    scaler: ArrayScaler
    mlp: MlpModel
    y_min: float
    y_max: float
    horizon: int
    params: MlpParams


@dataclass(frozen=True)
class BaggedEnsemble:
    """K member models trained on bootstrap replicates of one design matrix."""

    members: tuple
    member_seeds: tuple
    aggregation: str
    block_length: int
    base_seed: int
    horizon: int

    @property
    def size(self) -> int:
        return len(self.members)


def _strip_intercept(predictors: np.ndarray) -> np.ndarray:
    return predictors[:, 1:]


def _auto_layers(width: int) -> tuple:
    return (math.ceil(width / 2), math.ceil(width / 4))


def _train_config(settings: PipelineSettings, seed: int,
                  family: str = "sake") -> TrainConfig:
    # the perceptron's linear output tolerates far smaller steps than the
    # bounded autoencoder, so it may carry its own schedule
    epochs = settings.epochs
    rate = settings.learning_rate
    if family == "mlp":
        if settings.mlp_epochs is not None:
            epochs = settings.mlp_epochs
        if settings.mlp_learning_rate is not None:
            rate = settings.mlp_learning_rate
    return TrainConfig(
        epochs=epochs,
        learning_rate=rate,
        batch_size=settings.batch_size,
        seed=seed,
    )


def _fit_sake(
    predictors: np.ndarray,
    targets: np.ndarray,
    horizon: int,
    params: SakeParams,
    settings: PipelineSettings,
) -> SakeModel:
    features = _strip_intercept(predictors)
    scaler = fit_array_scaler(features)
    scaled = apply_array_scaler(scaler, features)
    layers = params.layers
    if layers is None:
        layers = _auto_layers(scaled.shape[1])
    stack = train_sae(scaled, layers, _train_config(settings, params.seed))
    codes = sae_encode(stack, scaled)
    gamma = params.gamma
    if gamma is None:
        gamma = default_gamma(codes.shape[1])
    head = fit_kelm(codes, targets, KernelSpec("gaussian", gamma), params.c)
    return SakeModel(scaler, stack, head, horizon, params)


def _fit_mlp_forecaster(
    predictors: np.ndarray,
    targets: np.ndarray,
    horizon: int,
    params: MlpParams,
    settings: PipelineSettings,
) -> MlpForecaster:
    features = _strip_intercept(predictors)
    scaler = fit_array_scaler(features)
    scaled = apply_array_scaler(scaler, features)
    y = np.asarray(targets, dtype=np.float64)
    y_min, y_max = float(y.min()), float(y.max())
    if y_min == y_max:
        # constant targets carry no direction; pin the output to them
        y_scaled = np.zeros_like(y)
    else:
        y_scaled = (y - y_min) / (y_max - y_min)
    net = fit_mlp(
        scaled, y_scaled, params.hidden,
        _train_config(settings, params.seed, family="mlp"),
    )
    return MlpForecaster(scaler, net, y_min, y_max, horizon, params)


def train_sake(train: SupervisedSet, params: SakeParams,
               settings: PipelineSettings) -> SakeModel:
    """Fit one SAKE model on a design matrix (drops the intercept column)."""
    return _fit_sake(
        train.predictors, train.targets, train.horizon, params, settings
    )


def predict_model(model, predictor_rows: np.ndarray) -> np.ndarray:
    """Forecast from raw design-matrix rows (intercept column included)."""
    rows = np.atleast_2d(np.asarray(predictor_rows, dtype=np.float64))
    if isinstance(model, BaggedEnsemble):
        stack = np.stack(
            [predict_model(m, rows) for m in model.members], axis=0
        )
        if not np.all(np.isfinite(stack)):
            raise NonFiniteForecast("an ensemble member forecast is non-finite")
        if model.aggregation == "mean":
            return np.sum(stack, axis=0) / stack.shape[0]
        return np.median(stack, axis=0)
    features = apply_array_scaler(model.scaler, _strip_intercept(rows))
    if isinstance(model, SakeModel):
        codes = sae_encode(model.sae, features)
        return predict_kelm(model.kelm, codes)
    out = predict_mlp(model.mlp, features)
    return out * (model.y_max - model.y_min) + model.y_min


def _fit_family(
    family: str,
    predictors: np.ndarray,
    targets: np.ndarray,
    horizon: int,
    params,
    settings: PipelineSettings,
):
    if family == "mlp":
        return _fit_mlp_forecaster(predictors, targets, horizon, params, settings)
    return _fit_sake(predictors, targets, horizon, params, settings)


def train_bagged(
    train: SupervisedSet,
    family: str,
    base_params,
    settings: PipelineSettings,
    base_seed: int,
) -> BaggedEnsemble:
    """Train the K-member ensemble on moving-block bootstrap replicates.

    Member k's data comes from the generator derived from (base_seed, k)
    and its weights from seed base_seed+k-1, so members never depend on
    execution order and a K=1 full-block ensemble equals the single model.
    """
    n = train.n_rows
    m = n if settings.block_length is None else min(settings.block_length, n)
    members = []
    seeds = []
    for k in range(1, settings.ensemble_size + 1):
        sample = block_bootstrap(train, m, k, master_seed=base_seed)
        seed_k = member_seed(base_seed, k)
        params_k = replace(base_params, seed=seed_k)
        members.append(
            _fit_family(
                family, sample.predictors, sample.targets,
                train.horizon, params_k, settings,
            )
        )
        seeds.append(seed_k)
    return BaggedEnsemble(
        tuple(members), tuple(seeds), settings.aggregation, m,
        base_seed, train.horizon,
    )


def train_bsake(
    train: SupervisedSet, params: SakeParams, settings: PipelineSettings
) -> BaggedEnsemble:
    """Bagged SAKE: bootstrap K copies, train one model each, aggregate later."""
    return train_bagged(train, "sake", params, settings, params.seed)


def train_mlp(train: SupervisedSet, params: MlpParams,
              settings: PipelineSettings) -> MlpForecaster:
    return _fit_mlp_forecaster(
        train.predictors, train.targets, train.horizon, params, settings
    )


# --- hyperparameter selection ------------------------------------------------

def _param_grid(family: str, settings: PipelineSettings) -> list:
    if family == "mlp":
        return [MlpParams(hidden=h) for h in settings.mlp_hidden_grid]
    if family == "kelm":
        return [
            SakeParams(layers=(), gamma=g, c=c)
            for g, c in product(settings.gamma_grid, settings.c_grid)
        ]
    return [
        SakeParams(layers=None if l is None else tuple(l), gamma=g, c=c)
        for l, g, c in product(
            settings.sae_layers_grid, settings.gamma_grid, settings.c_grid
        )
    ]


def _row_subset(train: SupervisedSet, rows: slice) -> SupervisedSet:
    return SupervisedSet(
        train.predictors[rows],
        train.targets[rows],
        train.origin_months[rows],
        train.latest_predictor_row,
        train.horizon,
    )


def select_params(
    kind,
    train: SupervisedSet,
    settings: PipelineSettings,
    seed: int,
):
    """Pick the grid combo with the lowest tail-validation error.

    The last validation_months rows of the training design matrix are held
    out; each candidate trains as the actual model kind (bagged kinds
    validate with their full ensemble, since the best regularization for a
    bootstrap member differs from the unbagged one) on the remaining head
    and is scored by MAPE on the tail, falling back to RMSE when a tail
    target is zero.  With a single combo no training happens at all.
    """
    kind = coerce_kind(kind)
    grid = _param_grid(_FAMILY[kind], settings)
    if len(grid) == 1 or train.n_rows < 2:
        return replace(grid[0], seed=seed)
    n = train.n_rows
    held = min(settings.validation_months, max(1, n // 4))
    head = _row_subset(train, slice(None, n - held))
    tail_x, tail_y = train.predictors[-held:], train.targets[-held:]
    best = None
    best_score = math.inf
    for candidate in grid:
        model = _fit_kind(kind, head, candidate, settings, seed)
        pred = predict_model(model, tail_x)
        try:
            score = mape(tail_y, pred)
        except ZeroActual:
            score = float(np.sqrt(np.mean((tail_y - pred) ** 2)))
        if score < best_score:
            best, best_score = replace(candidate, seed=seed), score
    return best


# --- rolling-origin forecasting ----------------------------------------------

@dataclass(frozen=True)
class ForecastPoint:
    """One point forecast: made at origin for origin+horizon months."""

    origin: str
    target: str
    horizon: int
    value: float

    def __post_init__(self):
        if parse_month(self.target) != parse_month(self.origin) + self.horizon:
            raise ValueError(
                f"target {self.target} is not {self.horizon} months past "
                f"{self.origin}"
            )


@dataclass(frozen=True)
class ForecastSeries:
    kind: str
    scheme: str
    points: tuple

    def target_months(self) -> tuple:
        return tuple(p.target for p in self.points)

    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points], dtype=np.float64)


def _fit_kind(
    kind: ModelKind,
    train: SupervisedSet,
    params,
    settings: PipelineSettings,
    base_seed: int,
):
    params = replace(params, seed=base_seed)
    family = _FAMILY[kind]
    if kind in BAGGED_KINDS:
        return train_bagged(train, family, params, settings, base_seed)
    return _fit_family(
        family, train.predictors, train.targets, train.horizon,
        params, settings,
    )


def rolling_forecast(
    kind,
    data: TimeSeriesTable,
    split_month: str,
    horizon: int,
    settings: PipelineSettings,
    scheme: str = "out-of-sample",
    chosen_params=None,
) -> ForecastSeries:
    """Roll the forecast origin through one evaluation scheme.

    Out-of-sample: the origin starts at the month before the split and
    advances `horizon` months per roll; each roll trains direct models for
    steps 1..horizon on data up to the origin (or reuses the first roll's
    models when retraining is off) so every evaluation month is forecast
    exactly once, with a truncated final roll when the span does not
    divide evenly.  In-sample: one direct model per horizon is fitted on
    the whole training span and evaluated on its own fitted values.

    Hyperparameters come from chosen_params when given (the tournament
    shares one selection across schemes), otherwise from tail-validation
    grid selection seeded independently of the evaluation scheme.
    """
    kind = coerce_kind(kind)
    if scheme not in _SCHEMES:
        raise ValueError(f"scheme must be one of {_SCHEMES}")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    head, tail = split_in_out(data, split_month)

    selection_seed = derive_seed(
        settings.master_seed, "selection", horizon, 0, 0
    )

    if scheme == "in-sample":
        spec = LagSpec(
            settings.target_lags, settings.exogenous_lags, horizon
        )
        train = build_design_matrix(head, spec)
        params = chosen_params
        if params is None:
            params = select_params(kind, train, settings, selection_seed)
        base_seed = derive_seed(
            settings.master_seed, scheme, horizon, 0, horizon
        )
        model = _fit_kind(kind, train, params, settings, base_seed)
        fitted = predict_model(model, train.predictors)
        points = tuple(
            ForecastPoint(
                origin, format_month(parse_month(origin) + horizon),
                horizon, float(value),
            )
            for origin, value in zip(train.origin_months, fitted)
        )
        return ForecastSeries(kind.value, scheme, points)

    test_span = tail.n_months
    if horizon > test_span:
        raise HorizonExceedsTestSpan(
            f"horizon {horizon} exceeds the {test_span}-month evaluation span"
        )
    split_ord = parse_month(split_month)
    last_ord = data.months[-1]
    specs = {
        j: LagSpec(settings.target_lags, settings.exogenous_lags, j)
        for j in range(1, horizon + 1)
    }
    chosen = chosen_params
    if chosen is None:
        first_train = build_design_matrix(head, specs[horizon])
        chosen = select_params(kind, first_train, settings, selection_seed)
    cached_models: dict = {}
    points = []
    roll = 0
    origin = split_ord - 1
    while origin + 1 <= last_ord:
        window = truncate_before(data, origin)
        steps = min(horizon, last_ord - origin)
        for j in range(1, steps + 1):
            model = cached_models.get(j)
            if model is None or settings.retrain_per_roll:
                train = build_design_matrix(window, specs[j])
                base_seed = derive_seed(
                    settings.master_seed, scheme, horizon, roll, j
                )
                model = _fit_kind(kind, train, chosen, settings, base_seed)
                cached_models[j] = model
            row = build_predictor_row(
                data, specs[j], origin - data.months[0]
            )
            value = float(predict_model(model, row[None, :])[0])
            points.append(
                ForecastPoint(
                    format_month(origin),
                    format_month(origin + j),
                    j,
                    value,
                )
            )
        roll += 1
        origin += horizon
    return ForecastSeries(kind.value, scheme, tuple(points))


# --- dataset assembly --------------------------------------------------------

def assemble_dataset(
    arrivals: TimeSeriesTable,
    keywords: TimeSeriesTable | None,
    economic: EconomicRaw | None,
    split_month: str,
    max_lag: int = 3,
    threshold: float = 0.7,
) -> tuple:
    """Merge arrivals with screened keywords and lagged economic predictors.

    Keyword screening sees only months before the split (no test-set
    leakage); selected keywords enter with their chosen lead as the lag
    depth.  Economic predictors enter shifted one month, so the value
    observed in month t serves the design row of month t+1.

    Returns (merged table, exogenous lag map, keyword selection or None).
    """
    tables = [arrivals]
    exogenous_lags: dict = {}
    selection: KeywordSelection | None = None
    split_ord = parse_month(split_month)
    if keywords is not None:
        head_arrivals, _ = split_in_out(arrivals, split_month)
        head_keywords = truncate_before(keywords, split_ord - 1)
        selection = select_keywords(
            head_arrivals, head_keywords, max_lag, threshold
        )
        lags = selection.selected_lags()
        if lags:
            tables.append(select_columns(keywords, list(lags)))
            exogenous_lags.update(lags)
    if economic is not None:
        feats = shift_table(build_economic_features(economic), 1)
        tables.append(feats)
        exogenous_lags.update({name: 1 for name in feats.columns})
    merged = merge_tables(tables) if len(tables) > 1 else arrivals
    return merged, exogenous_lags, selection


# --- tournament --------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonReport:
    """Tournament results: metric cells, test matrices, and forecast rows."""

    country: str
    split_month: str
    horizons: tuple
    kinds: tuple
    cells: dict
    dm_matrix: dict
    pt_column: dict
    forecast_rows: tuple
    bagging_echo: dict

    def to_json_dict(self) -> dict:
        doc_horizons = {}
        for h in self.horizons:
            schemes = {}
            for scheme in _SCHEMES:
                per_model = {
                    kind.value: self.cells[(h, scheme, kind)]
                    for kind in self.kinds
                }
                for name in RESERVED_MODELS:
                    per_model[name] = None
                schemes[scheme.replace("-", "_")] = per_model
            schemes["dm"] = self.dm_matrix[h]
            schemes["pt"] = {
                kind.value: self.pt_column[(h, kind)] for kind in self.kinds
            }
            doc_horizons[str(h)] = schemes
        return {
            "country": self.country,
            "split_month": self.split_month,
            "models": [kind.value for kind in self.kinds],
            "reserved_models": list(RESERVED_MODELS),
            "horizons": doc_horizons,
            "bagging": dict(self.bagging_echo),
        }

    def csv_rows(self) -> list:
        header = [
            "horizon", "model", "in_mape", "in_nrmse", "in_ds",
            "out_mape", "out_nrmse", "out_ds",
        ]
        rows = [header]
        for h in self.horizons:
            for kind in self.kinds:
                cells = [
                    self.cells[(h, scheme, kind)] for scheme in _SCHEMES
                ]
                row = [str(h), kind.value]
                for cell in cells:
                    for metric in ("mape", "nrmse", "ds"):
                        value = cell.get(metric)
                        row.append("" if value is None else repr(float(value)))
                rows.append(row)
            for name in RESERVED_MODELS:
                rows.append([str(h), name] + [""] * 6)
        return rows


def _metric_cell(actual: np.ndarray, forecast: np.ndarray) -> dict:
    cell: dict = {"n": int(actual.size)}
    for name, fn in (
        ("mape", mape),
        ("nrmse", nrmse),
        ("ds", lambda a, f: ds(a, f, denominator="n-1")),
        ("ds_alt", lambda a, f: ds(a, f, denominator="n")),
    ):
        try:
            cell[name] = float(fn(actual, forecast))
        except Exception as exc:
            cell[name] = None
            cell.setdefault("errors", {})[name] = (
                f"{type(exc).__name__}: {exc}"
            )
    return cell


def run_benchmarks(
    data: TimeSeriesTable,
    kinds: Sequence,
    horizons: Sequence[int],
    settings: PipelineSettings,
    country: str = "synthetic",
) -> ComparisonReport:
    """Run every (kind, horizon, scheme) cell and assemble the full report.

    Out-of-sample cells also feed the pairwise loss-comparison matrix (in
    the fixed order B-SAKE, SAKE, B-KELM, KELM, B-MLP, MLP, first model as
    the candidate) and the directional-skill column.  Statistical tests
    that degenerate are recorded as error strings instead of aborting.
    """
    kind_list = [coerce_kind(k) for k in kinds]
    if not kind_list:
        raise ValueError("at least one model kind required")
    ordered = [k for k in MODEL_ORDER if k in kind_list]
    actual_by_month = {
        label: float(value)
        for label, value in zip(
            data.month_labels, data.column(data.target_name())
        )
    }
    cells: dict = {}
    dm_matrix: dict = {}
    pt_column: dict = {}
    forecast_rows: list = []
    head, _ = split_in_out(data, settings.split_month)
    for h in horizons:
        out_series: dict = {}
        selection_train = build_design_matrix(
            head, LagSpec(settings.target_lags, settings.exogenous_lags, h)
        )
        selection_seed = derive_seed(
            settings.master_seed, "selection", h, 0, 0
        )
        for kind in ordered:
            chosen = select_params(
                kind, selection_train, settings, selection_seed
            )
            for scheme in _SCHEMES:
                series = rolling_forecast(
                    kind, data, settings.split_month, h, settings, scheme,
                    chosen_params=chosen,
                )
                actual = np.array(
                    [actual_by_month[t] for t in series.target_months()]
                )
                cells[(h, scheme, kind)] = _metric_cell(
                    actual, series.values()
                )
                if scheme == "out-of-sample":
                    out_series[kind] = (actual, series)
                    for p in series.points:
                        forecast_rows.append(
                            (p.origin, p.target, p.horizon, kind.value,
                             p.value)
                        )
        pairs = []
        for i, kind_a in enumerate(ordered):
            for kind_b in ordered[i + 1:]:
                entry = {"model_a": kind_a.value, "model_b": kind_b.value}
                try:
                    actual_a, series_a = out_series[kind_a]
                    _, series_b = out_series[kind_b]
                    loss_a = absolute_percentage_errors(
                        actual_a, series_a.values()
                    )
                    loss_b = absolute_percentage_errors(
                        actual_a, series_b.values()
                    )
                    result = dm_test(loss_a, loss_b, horizon=h)
                    entry["statistic"] = result.statistic
                    entry["p_value"] = result.p_value
                except Exception as exc:
                    entry["error"] = f"{type(exc).__name__}: {exc}"
                pairs.append(entry)
        dm_matrix[h] = pairs
        for kind in ordered:
            actual, series = out_series[kind]
            try:
                result = pt_test(actual, series.values())
                pt_column[(h, kind)] = {
                    "statistic": result.statistic,
                    "p_value": result.p_value,
                }
            except Exception as exc:
                pt_column[(h, kind)] = {
                    "error": f"{type(exc).__name__}: {exc}"
                }
    bagging_echo = {
        "ensemble_size": settings.ensemble_size,
        "block_length": settings.block_length,
        "aggregation": settings.aggregation,
        "master_seed": settings.master_seed,
    }
    return ComparisonReport(
        country=country,
        split_month=settings.split_month,
        horizons=tuple(horizons),
        kinds=tuple(ordered),
        cells=cells,
        dm_matrix=dm_matrix,
        pt_column=pt_column,
        forecast_rows=tuple(forecast_rows),
        bagging_echo=bagging_echo,
    )

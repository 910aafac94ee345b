"""JSON run-configuration parsing and validation for the CLI.

A run config is a single JSON object naming the input CSVs, the split
month, the horizons and model kinds to race, and every training knob.
Validation reports the exact offending field (including list positions)
so a bad config fails with an actionable message rather than a stack
trace from deep inside training.  The master seed is mandatory: runs
are never seeded from the clock.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import IO

from .errors import ConfigError
from .pipeline import MODEL_ORDER, PipelineSettings, coerce_kind
from .synth import SyntheticSpec

_DEFAULT_MODELS = tuple(kind.value for kind in MODEL_ORDER)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved description of one forecasting run."""

    arrivals_csv: str
    split_month: str
    horizons: tuple
    master_seed: int
    keywords_csv: str | None = None
    economic_csv: str | None = None
    models: tuple = _DEFAULT_MODELS
    ensemble_size: int = 100
    block_length: int | None = 12
    sae_layers_grid: tuple = (None,)
    gamma_grid: tuple = (None,)
    c_grid: tuple = (100.0,)
    mlp_hidden_grid: tuple = (8,)
    epochs: int = 150
    learning_rate: float = 0.5
    batch_size: int | None = None
    mlp_epochs: int | None = None
    mlp_learning_rate: float | None = None
    target_lags: int = 12
    keyword_max_lag: int = 3
    keyword_threshold: float = 0.7
    validation_months: int = 12
    retrain_per_roll: bool = True
    aggregation: str = "mean"
    out_dir: str = "out"

    def __post_init__(self):
        if not self.horizons:
            raise ConfigError("horizons: must list at least one horizon")
        for i, h in enumerate(self.horizons):
            if not isinstance(h, int) or isinstance(h, bool) or h < 1:
                raise ConfigError(f"horizons[{i}]: must be an integer >= 1")
        if not self.models:
            raise ConfigError("models: must list at least one model kind")
        for i, name in enumerate(self.models):
            try:
                coerce_kind(name)
            except ValueError:
                raise ConfigError(
                    f"models[{i}]: unknown model kind {name!r}; valid kinds "
                    f"are {', '.join(_DEFAULT_MODELS)}"
                ) from None
        # the settings constructor owns the numeric-range rules; rewrap
        # its complaints so config errors all speak with one voice
        try:
            self.to_settings({})
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_settings(self, exogenous_lags: dict) -> PipelineSettings:
        """Build pipeline settings, injecting screened keyword lags."""
        return PipelineSettings(
            split_month=self.split_month,
            target_lags=self.target_lags,
            exogenous_lags=exogenous_lags,
            sae_layers_grid=self.sae_layers_grid,
            gamma_grid=self.gamma_grid,
            c_grid=self.c_grid,
            mlp_hidden_grid=self.mlp_hidden_grid,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            mlp_epochs=self.mlp_epochs,
            mlp_learning_rate=self.mlp_learning_rate,
            ensemble_size=self.ensemble_size,
            block_length=self.block_length,
            aggregation=self.aggregation,
            master_seed=self.master_seed,
            retrain_per_roll=self.retrain_per_roll,
            validation_months=self.validation_months,
        )


# --- field readers -----------------------------------------------------------

def _need(obj: dict, field: str):
    if field not in obj:
        raise ConfigError(f"{field}: required field is missing")
    return obj[field]


def _read_str(obj: dict, field: str, default=None, required=False) -> str:
    value = _need(obj, field) if required else obj.get(field, default)
    if value is default and not required:
        return value
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{field}: expected a non-empty string")
    return value

def _read_int(obj: dict, field: str, default=None, minimum=None,
              nullable=False):
    if field not in obj:
        return default
    value = obj[field]
    if value is None and nullable:
        return None
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{field}: expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{field}: must be >= {minimum}")
    return value


def _read_float(obj: dict, field: str, default=None, nullable=False):
    if field not in obj:
        return default
    value = obj[field]
    if value is None and nullable:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{field}: expected a number")
    return float(value)


def _read_bool(obj: dict, field: str, default):
    if field not in obj:
        return default
    value = obj[field]
    if not isinstance(value, bool):
        raise ConfigError(f"{field}: expected true or false")
    return value


def _read_str_list(obj: dict, field: str, default):
    if field not in obj:
        return default
    value = obj[field]
    if not isinstance(value, list):
        raise ConfigError(f"{field}: expected a list of strings")
    for i, entry in enumerate(value):
        if not isinstance(entry, str):
            raise ConfigError(f"{field}[{i}]: expected a string")
    return tuple(value)


def _read_int_list(obj: dict, field: str, default, minimum=1):
    if field not in obj:
        return default
    value = obj[field]
    if not isinstance(value, list):
        raise ConfigError(f"{field}: expected a list of integers")
    out = []
    for i, entry in enumerate(value):
        if not isinstance(entry, int) or isinstance(entry, bool):
            raise ConfigError(f"{field}[{i}]: expected an integer")
        if entry < minimum:
            raise ConfigError(f"{field}[{i}]: must be >= {minimum}")
        out.append(entry)
    return tuple(out)


def _read_float_list(obj: dict, field: str, default, nullable_entries=False):
    if field not in obj:
        return default
    value = obj[field]
    if not isinstance(value, list):
        raise ConfigError(f"{field}: expected a list of numbers")
    out = []
    for i, entry in enumerate(value):
        if entry is None and nullable_entries:
            out.append(None)
            continue
        if isinstance(entry, bool) or not isinstance(entry, (int, float)):
            raise ConfigError(f"{field}[{i}]: expected a number")
        out.append(float(entry))
    return tuple(out)


def _read_layers_grid(obj: dict, field: str, default):
    """Grid of SAE layer stacks: entries are null (auto) or int lists."""
    if field not in obj:
        return default
    value = obj[field]
    if not isinstance(value, list):
        raise ConfigError(
            f"{field}: expected a list of layer-size lists (null = auto)"
        )
    out = []
    for i, entry in enumerate(value):
        if entry is None:
            out.append(None)
            continue
        if not isinstance(entry, list):
            raise ConfigError(f"{field}[{i}]: expected null or a list")
        sizes = []
        for j, size in enumerate(entry):
            if not isinstance(size, int) or isinstance(size, bool) or size < 1:
                raise ConfigError(
                    f"{field}[{i}][{j}]: layer sizes must be integers >= 1"
                )
            sizes.append(size)
        out.append(tuple(sizes))
    return tuple(out)


_RUN_FIELDS = frozenset(f.name for f in dataclasses.fields(RunConfig))


def _parse_object(stream: IO[bytes], what: str) -> dict:
    try:
        payload = json.load(stream)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} is not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise ConfigError(f"{what} must be a JSON object")
    return payload


def parse_run_config(stream: IO[bytes]) -> RunConfig:
    """Parse and validate a run config from a JSON byte stream."""
    obj = _parse_object(stream, "run config")
    unknown = sorted(set(obj) - _RUN_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
    if "master_seed" not in obj:
        raise ConfigError(
            "master_seed: required field is missing (runs are never "
            "seeded from the clock)"
        )
    horizons = obj.get("horizons")
    if horizons is None:
        raise ConfigError("horizons: required field is missing")
    if not isinstance(horizons, list):
        raise ConfigError("horizons: expected a list of integers")
    return RunConfig(
        arrivals_csv=_read_str(obj, "arrivals_csv", required=True),
        split_month=_read_str(obj, "split_month", required=True),
        horizons=_read_int_list(obj, "horizons", ()),
        master_seed=_read_int(obj, "master_seed"),
        keywords_csv=_read_str(obj, "keywords_csv"),
        economic_csv=_read_str(obj, "economic_csv"),
        models=_read_str_list(obj, "models", _DEFAULT_MODELS),
        ensemble_size=_read_int(obj, "ensemble_size", 100, minimum=1),
        block_length=_read_int(obj, "block_length", 12, minimum=1,
                               nullable=True),
        sae_layers_grid=_read_layers_grid(obj, "sae_layers_grid", (None,)),
        gamma_grid=_read_float_list(obj, "gamma_grid", (None,),
                                    nullable_entries=True),
        c_grid=_read_float_list(obj, "c_grid", (100.0,)),
        mlp_hidden_grid=_read_int_list(obj, "mlp_hidden_grid", (8,)),
        epochs=_read_int(obj, "epochs", 150, minimum=0),
        learning_rate=_read_float(obj, "learning_rate", 0.5),
        batch_size=_read_int(obj, "batch_size", None, minimum=1,
                             nullable=True),
        mlp_epochs=_read_int(obj, "mlp_epochs", None, minimum=0,
                             nullable=True),
        mlp_learning_rate=_read_float(obj, "mlp_learning_rate", None,
                                      nullable=True),
        target_lags=_read_int(obj, "target_lags", 12, minimum=1),
        keyword_max_lag=_read_int(obj, "keyword_max_lag", 3, minimum=1),
        keyword_threshold=_read_float(obj, "keyword_threshold", 0.7),
        validation_months=_read_int(obj, "validation_months", 12, minimum=1),
        retrain_per_roll=_read_bool(obj, "retrain_per_roll", True),
        aggregation=_read_str(obj, "aggregation", "mean"),
        out_dir=_read_str(obj, "out_dir", "out"),
    )


def load_run_config(path: str) -> RunConfig:
    with open(path, "rb") as stream:
        return parse_run_config(stream)


_SPEC_FIELDS = frozenset(f.name for f in dataclasses.fields(SyntheticSpec))


def parse_synthetic_spec(stream: IO[bytes]) -> SyntheticSpec:
    """Parse a synthetic-data spec from a JSON byte stream."""
    obj = _parse_object(stream, "synthetic spec")
    unknown = sorted(set(obj) - _SPEC_FIELDS)
    if unknown:
        raise ConfigError(f"unknown spec field(s): {', '.join(unknown)}")
    kwargs = {}
    for field in (
        "length", "period", "noise_keywords", "seed",
    ):
        value = _read_int(obj, field)
        if value is not None:
            kwargs[field] = value
    for field in (
        "base_level", "trend", "amplitude", "sharpness", "noise_sd",
        "noise_persistence", "walk_sd", "shock_rate", "shock_scale",
        "shock_decay", "keyword_noise_sd", "kw_curvature",
    ):
        value = _read_float(obj, field)
        if value is not None:
            kwargs[field] = value
    start = _read_str(obj, "start_month")
    if start is not None:
        kwargs["start_month"] = start
    lags = _read_int_list(obj, "keyword_lags", None)
    if lags is not None:
        kwargs["keyword_lags"] = lags
    return SyntheticSpec(**kwargs)


def load_synthetic_spec(path: str) -> SyntheticSpec:
    with open(path, "rb") as stream:
        return parse_synthetic_spec(stream)


def apply_overrides(
    config: RunConfig,
    seed: int | None = None,
    split: str | None = None,
    out: str | None = None,
    horizons: tuple | None = None,
    models: tuple | None = None,
) -> RunConfig:
    """Apply command-line flag overrides onto a parsed config."""
    updates = {}
    if seed is not None:
        updates["master_seed"] = seed
    if split is not None:
        updates["split_month"] = split
    if out is not None:
        updates["out_dir"] = out
    if horizons is not None:
        updates["horizons"] = tuple(horizons)
    if models is not None:
        updates["models"] = tuple(models)
    return dataclasses.replace(config, **updates) if updates else config

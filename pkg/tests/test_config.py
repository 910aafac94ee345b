import io
import json

import pytest

from bsake.config import (
    RunConfig,
    apply_overrides,
    parse_run_config,
    parse_synthetic_spec,
)
from bsake.errors import ConfigError
from bsake.synth import SyntheticSpec

MINIMAL = {
    "arrivals_csv": "arrivals.csv",
    "split_month": "2017-01",
    "horizons": [1, 3],
    "master_seed": 7,
}


def parse(obj):
    return parse_run_config(io.BytesIO(json.dumps(obj).encode()))


def without(key):
    obj = dict(MINIMAL)
    del obj[key]
    return obj


class TestRunConfigParsing:
    def test_minimal_config_gets_defaults(self):
        config = parse(MINIMAL)
        assert config.arrivals_csv == "arrivals.csv"
        assert config.split_month == "2017-01"
        assert config.horizons == (1, 3)
        assert config.master_seed == 7
        assert config.keywords_csv is None
        assert config.economic_csv is None
        assert len(config.models) == 6
        assert config.ensemble_size == 100
        assert config.block_length == 12
        assert config.sae_layers_grid == (None,)
        assert config.gamma_grid == (None,)
        assert config.c_grid == (100.0,)
        assert config.retrain_per_roll is True
        assert config.aggregation == "mean"
        assert config.out_dir == "out"

    @pytest.mark.parametrize(
        "field", ["master_seed", "horizons", "arrivals_csv", "split_month"]
    )
    def test_missing_required_field_names_it(self, field):
        with pytest.raises(ConfigError, match=field):
            parse(without(field))

    def test_missing_seed_message_forbids_clock(self):
        with pytest.raises(ConfigError, match="never.*seeded from the clock"):
            parse(without("master_seed"))

    def test_not_json(self):
        with pytest.raises(ConfigError, match="not valid JSON"):
            parse_run_config(io.BytesIO(b"{nope"))

    def test_not_an_object(self):
        with pytest.raises(ConfigError, match="JSON object"):
            parse_run_config(io.BytesIO(b"[1, 2]"))

    def test_unknown_field_is_named(self):
        with pytest.raises(ConfigError, match="ensembles"):
            parse({**MINIMAL, "ensembles": 4})

    def test_unknown_model_kind_lists_valid_ones(self):
        with pytest.raises(ConfigError, match=r"models\[1\].*B-SAKE"):
            parse({**MINIMAL, "models": ["KELM", "SARIMA"]})

    @pytest.mark.parametrize(
        "field,value,path",
        [
            ("horizons", [1, 0], r"horizons\[1\]"),
            ("horizons", "1,3", "horizons"),
            ("horizons", [], "horizons"),
            ("c_grid", "big", "c_grid"),
            ("c_grid", [1.0, "x"], r"c_grid\[1\]"),
            ("mlp_hidden_grid", [8, 0], r"mlp_hidden_grid\[1\]"),
            ("ensemble_size", 0, "ensemble_size"),
            ("block_length", 0, "block_length"),
            ("epochs", True, "epochs"),
            ("epochs", -1, "epochs"),
            ("learning_rate", "fast", "learning_rate"),
            ("retrain_per_roll", 1, "retrain_per_roll"),
            ("aggregation", "mode", "aggregation"),
            ("arrivals_csv", "", "arrivals_csv"),
            ("sae_layers_grid", [[16, 0]], r"sae_layers_grid\[0\]\[1\]"),
            ("sae_layers_grid", [16], r"sae_layers_grid\[0\]"),
            ("gamma_grid", [0.5, "x"], r"gamma_grid\[1\]"),
        ],
    )
    def test_bad_field_error_names_the_path(self, field, value, path):
        with pytest.raises(ConfigError, match=path):
            parse({**MINIMAL, field: value})

    def test_empty_grid_rejected(self):
        with pytest.raises(ConfigError, match="nonempty"):
            parse({**MINIMAL, "c_grid": []})

    def test_layer_grid_forms(self):
        config = parse(
            {**MINIMAL, "sae_layers_grid": [None, [16, 8], []]}
        )
        assert config.sae_layers_grid == (None, (16, 8), ())

    def test_nullable_fields(self):
        config = parse(
            {**MINIMAL, "block_length": None, "batch_size": 32,
             "gamma_grid": [None, 0.5]}
        )
        assert config.block_length is None
        assert config.batch_size == 32
        assert config.gamma_grid == (None, 0.5)

    def test_model_names_case_insensitive(self):
        config = parse({**MINIMAL, "models": ["b-sake", "kelm"]})
        assert config.models == ("b-sake", "kelm")


class TestRunConfigBehaviour:
    def test_to_settings_carries_fields(self):
        config = parse(
            {**MINIMAL, "ensemble_size": 25, "block_length": 3,
             "aggregation": "median", "epochs": 40, "mlp_epochs": 10}
        )
        settings = config.to_settings({"kw1": 2})
        assert settings.split_month == "2017-01"
        assert settings.ensemble_size == 25
        assert settings.block_length == 3
        assert settings.aggregation == "median"
        assert settings.epochs == 40
        assert settings.mlp_epochs == 10
        assert settings.master_seed == 7
        assert settings.exogenous_lags == {"kw1": 2}

    def test_direct_construction_validates(self):
        with pytest.raises(ConfigError, match="horizons"):
            RunConfig(
                arrivals_csv="a.csv", split_month="2017-01",
                horizons=(), master_seed=0,
            )
        with pytest.raises(ConfigError, match="models"):
            RunConfig(
                arrivals_csv="a.csv", split_month="2017-01",
                horizons=(1,), master_seed=0, models=("NOPE",),
            )

    def test_apply_overrides(self):
        config = parse(MINIMAL)
        updated = apply_overrides(
            config, seed=99, split="2016-06", out="elsewhere",
            horizons=(6,), models=("KELM",),
        )
        assert updated.master_seed == 99
        assert updated.split_month == "2016-06"
        assert updated.out_dir == "elsewhere"
        assert updated.horizons == (6,)
        assert updated.models == ("KELM",)
        # untouched fields survive
        assert updated.arrivals_csv == config.arrivals_csv

    def test_apply_overrides_noop_returns_same_config(self):
        config = parse(MINIMAL)
        assert apply_overrides(config) is config


class TestSyntheticSpecParsing:
    def parse_spec(self, obj):
        return parse_synthetic_spec(io.BytesIO(json.dumps(obj).encode()))

    def test_empty_object_gives_defaults(self):
        assert self.parse_spec({}) == SyntheticSpec()

    def test_fields_map_through(self):
        spec = self.parse_spec(
            {"length": 48, "period": 6, "seed": 11, "noise_sd": 1.5,
             "keyword_lags": [2, 2], "start_month": "2010-05",
             "shock_decay": 0.5, "walk_sd": 1.25}
        )
        assert spec.length == 48
        assert spec.period == 6
        assert spec.seed == 11
        assert spec.noise_sd == 1.5
        assert spec.keyword_lags == (2, 2)
        assert spec.start_month == "2010-05"
        assert spec.shock_decay == 0.5
        assert spec.walk_sd == 1.25

    def test_negative_walk_sd_rejected(self):
        with pytest.raises(ConfigError, match="standard deviations"):
            self.parse_spec({"walk_sd": -0.1})

    def test_unknown_field_is_named(self):
        with pytest.raises(ConfigError, match="wavelength"):
            self.parse_spec({"wavelength": 4})

    def test_domain_rules_still_apply(self):
        with pytest.raises(ConfigError, match="period"):
            self.parse_spec({"period": 1})

    def test_type_errors_name_the_field(self):
        with pytest.raises(ConfigError, match="length"):
            self.parse_spec({"length": "long"})
        with pytest.raises(ConfigError, match=r"keyword_lags\[0\]"):
            self.parse_spec({"keyword_lags": ["two"]})

"""Command-line frontend: run tournaments, synthesize data, evaluate files.

Four commands share one executable: ``run`` drives ingestion, screening,
training, and report emission from a JSON config; ``synth`` writes a
seeded synthetic dataset; ``eval`` scores a forecast CSV against actuals;
``select-keywords`` runs the screening step alone.  Exit codes: 0 on
success, 1 when a domain contract is violated (the message names the
failing subsystem and error kind), 2 for bad invocations.
"""

from __future__ import annotations

import os

# Pin the BLAS thread pools before numpy first loads in this process:
# threaded GEMM reorders reductions, and a run's bytes must not depend
# on the machine's core count.  Explicit user settings are respected.
for _var in (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
    "NUMEXPR_NUM_THREADS",
):
    os.environ.setdefault(_var, "1")

import argparse
import dataclasses
import json
import sys

import numpy as np

from .config import (
    RunConfig,
    apply_overrides,
    load_run_config,
    load_synthetic_spec,
)
from .dataset import (
    load_wide_series,
    parse_month,
    split_in_out,
    truncate_before,
    write_series,
)
from .errors import BsakeError, ConfigError, MissingInput
from .evaluation import (
    absolute_percentage_errors,
    compute_metrics,
    dm_test,
    pt_test,
)
from .features import (
    KeywordSelection,
    load_economic_csv,
    select_keywords,
    write_selection_csv,
)
from .pipeline import assemble_dataset, derive_seed, run_benchmarks
from .synth import SyntheticSpec, generate_synthetic

_REPORT_JSON = "report.json"
_REPORT_CSV = "report.csv"
_SELECTION_CSV = "keyword_selection.csv"
_FORECASTS_CSV = "forecasts.csv"
_MANIFEST_JSON = "manifest.json"


def _say(quiet: bool, message: str) -> None:
    if not quiet:
        print(message)


def _require_file(path: str, what: str) -> None:
    if not os.path.isfile(path):
        raise MissingInput(f"{what} not found: {path}")


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write(text)


def _write_csv_rows(path: str, rows) -> None:
    lines = [",".join(str(cell) for cell in row) for row in rows]
    _write_text(path, "\n".join(lines) + "\n")


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# --- run -----------------------------------------------------------------

def _derived_seeds(config: RunConfig, last_month: int) -> dict:
    """Every seed the run will derive, keyed by stream and horizon.

    Mirrors the rolling schedule: out-of-sample rolls advance the origin
    by the horizon and fit one direct model per remaining step, so each
    (roll, step) pair owns a seed; the in-sample scheme fits one model
    per horizon, and hyperparameter selection one more.
    """
    split = parse_month(config.split_month)
    seeds: dict = {"selection": {}, "in-sample": {}, "out-of-sample": {}}
    for h in config.horizons:
        key = str(h)
        seeds["selection"][key] = int(
            derive_seed(config.master_seed, "selection", h, 0, 0)
        )
        seeds["in-sample"][key] = int(
            derive_seed(config.master_seed, "in-sample", h, 0, h)
        )
        rolls = {}
        roll = 0
        origin = split - 1
        while origin + 1 <= last_month:
            steps = min(h, last_month - origin)
            rolls[str(roll)] = [
                int(derive_seed(config.master_seed, "out-of-sample", h, roll, j))
                for j in range(1, steps + 1)
            ]
            roll += 1
            origin += h
        seeds["out-of-sample"][key] = rolls
    return seeds


def cmd_run(args) -> int:
    config = load_run_config(args.config)
    config = apply_overrides(
        config,
        seed=args.seed,
        split=args.split,
        out=args.out,
        horizons=args.horizons,
        models=args.models,
    )

    _require_file(config.arrivals_csv, "arrivals csv")
    if config.keywords_csv is not None:
        _require_file(config.keywords_csv, "keywords csv")
    if config.economic_csv is not None:
        _require_file(config.economic_csv, "economic csv")

    with open(config.arrivals_csv, "rb") as stream:
        arrivals = load_wide_series(stream, "target")
    keywords = None
    if config.keywords_csv is not None:
        with open(config.keywords_csv, "rb") as stream:
            keywords = load_wide_series(stream, "sii")
    economic = None
    if config.economic_csv is not None:
        with open(config.economic_csv, "rb") as stream:
            economic = load_economic_csv(stream)
    _say(args.quiet, f"loaded arrivals ({arrivals.n_months} months)")

    data, exogenous_lags, selection = assemble_dataset(
        arrivals,
        keywords,
        economic,
        config.split_month,
        max_lag=config.keyword_max_lag,
        threshold=config.keyword_threshold,
    )
    settings = config.to_settings(exogenous_lags)
    label = os.path.splitext(os.path.basename(config.arrivals_csv))[0]

    report = run_benchmarks(
        data, config.models, config.horizons, settings, country=label
    )
    _say(args.quiet, f"raced {len(config.models)} models over "
                     f"horizons {list(config.horizons)}")

    os.makedirs(config.out_dir, exist_ok=True)
    _write_text(
        os.path.join(config.out_dir, _REPORT_JSON),
        _json_text(report.to_json_dict()),
    )
    _write_csv_rows(
        os.path.join(config.out_dir, _REPORT_CSV), report.csv_rows()
    )
    if selection is None:
        selection = KeywordSelection(
            (), config.keyword_max_lag, config.keyword_threshold
        )
    with open(os.path.join(config.out_dir, _SELECTION_CSV), "wb") as stream:
        write_selection_csv(selection, stream)
    forecast_rows = [["origin", "target", "horizon", "model", "value"]]
    for origin, target, horizon, model, value in report.forecast_rows:
        forecast_rows.append(
            [origin, target, str(horizon), model, repr(float(value))]
        )
    _write_csv_rows(
        os.path.join(config.out_dir, _FORECASTS_CSV), forecast_rows
    )
    manifest = {
        "config": dataclasses.asdict(config),
        "inputs": {
            "arrivals_csv": os.path.abspath(config.arrivals_csv),
            "keywords_csv": (
                None if config.keywords_csv is None
                else os.path.abspath(config.keywords_csv)
            ),
            "economic_csv": (
                None if config.economic_csv is None
                else os.path.abspath(config.economic_csv)
            ),
        },
        "derived_seeds": _derived_seeds(config, data.months[-1]),
    }
    _write_text(
        os.path.join(config.out_dir, _MANIFEST_JSON), _json_text(manifest)
    )
    for name in (
        _REPORT_JSON, _REPORT_CSV, _SELECTION_CSV, _FORECASTS_CSV,
        _MANIFEST_JSON,
    ):
        _say(args.quiet, f"wrote {os.path.join(config.out_dir, name)}")
    return 0


# --- synth -----------------------------------------------------------------

def cmd_synth(args) -> int:
    if args.config is not None:
        _require_file(args.config, "synthetic spec")
        spec = load_synthetic_spec(args.config)
    else:
        spec = SyntheticSpec()
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    arrivals, keywords, economic = generate_synthetic(spec)
    os.makedirs(args.out, exist_ok=True)
    outputs = (
        ("arrivals.csv", arrivals),
        ("keywords.csv", keywords),
        ("economic.csv", economic.table),
    )
    for name, table in outputs:
        path = os.path.join(args.out, name)
        with open(path, "wb") as stream:
            write_series(table, stream)
        _say(args.quiet, f"wrote {path}")
    return 0


# --- eval ------------------------------------------------------------------

def _aligned_actual(actuals, forecasts) -> np.ndarray:
    """Actual values at exactly the forecast months, order preserved."""
    index = {month: i for i, month in enumerate(actuals.months)}
    target = actuals.column(actuals.columns[0])
    rows = []
    for month, label in zip(forecasts.months, forecasts.month_labels):
        if month not in index:
            raise MissingInput(
                f"actuals do not cover forecast month {label}"
            )
        rows.append(target[index[month]])
    return np.asarray(rows)


def cmd_eval(args) -> int:
    _require_file(args.forecasts, "forecasts csv")
    _require_file(args.actuals, "actuals csv")
    with open(args.forecasts, "rb") as stream:
        forecasts = load_wide_series(stream, "forecast")
    with open(args.actuals, "rb") as stream:
        actuals = load_wide_series(stream, "actual")
    if len(actuals.columns) != 1:
        raise ConfigError(
            f"actuals csv must have exactly one value column, "
            f"found {len(actuals.columns)}"
        )
    actual = _aligned_actual(actuals, forecasts)

    models = list(forecasts.columns)
    two = len(models) == 2
    if args.dm and not two:
        raise ConfigError("two models required for the DM comparison")

    payload: dict = {"n_months": forecasts.n_months, "metrics": {}}
    for name in models:
        result = compute_metrics(actual, forecasts.column(name))
        payload["metrics"][name] = dataclasses.asdict(result)
    if two:
        a, b = models
        losses = [
            absolute_percentage_errors(actual, forecasts.column(name))
            for name in (a, b)
        ]
        entry: dict = {"model_a": a, "model_b": b}
        try:
            dm = dm_test(losses[0], losses[1], horizon=args.horizon)
            entry.update(dataclasses.asdict(dm))
        except BsakeError as exc:
            entry["error"] = f"[{exc.component}/{type(exc).__name__}] {exc}"
        payload["dm"] = entry
    if two or args.pt:
        payload["pt"] = {}
        for name in models:
            try:
                pt = pt_test(actual, forecasts.column(name))
                payload["pt"][name] = dataclasses.asdict(pt)
            except BsakeError as exc:
                payload["pt"][name] = {
                    "error": f"[{exc.component}/{type(exc).__name__}] {exc}"
                }

    text = _json_text(payload)
    if args.out is not None:
        _write_text(args.out, text)
        _say(args.quiet, f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


# --- select-keywords ---------------------------------------------------------

def cmd_select_keywords(args) -> int:
    _require_file(args.arrivals, "arrivals csv")
    _require_file(args.keywords, "keywords csv")
    with open(args.arrivals, "rb") as stream:
        arrivals = load_wide_series(stream, "target")
    with open(args.keywords, "rb") as stream:
        keywords = load_wide_series(stream, "sii")
    if args.split is not None:
        # screen on the training span only, as the full run does
        arrivals, _ = split_in_out(arrivals, args.split)
        keywords = truncate_before(keywords, parse_month(args.split) - 1)
    selection = select_keywords(
        arrivals, keywords, max_lag=args.max_lag, threshold=args.threshold
    )
    if args.out is not None:
        with open(args.out, "wb") as stream:
            write_selection_csv(selection, stream)
        _say(args.quiet, f"wrote {args.out}")
    else:
        for choice in selection.choices:
            flag = "selected" if choice.selected else "rejected"
            print(
                f"{choice.keyword}: lag {choice.lag} "
                f"corr {choice.correlation:.4f} {flag}"
            )
    return 0


# --- argument parsing ----------------------------------------------------

def _int_list(text: str):
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}"
        ) from None


def _str_list(text: str):
    return tuple(part.strip() for part in text.split(",") if part.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bsake",
        description="Bagged stacked-autoencoder kernel ELM forecasting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full tournament from a JSON config")
    run.add_argument("--config", required=True, help="run config JSON path")
    run.add_argument("--out", help="override the output directory")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--split", help="override the split month (YYYY-MM)")
    run.add_argument(
        "--horizons", type=_int_list, help="override horizons, e.g. 1,3,6"
    )
    run.add_argument(
        "--models", type=_str_list, help="override model kinds, e.g. SAKE,KELM"
    )
    run.add_argument("--quiet", action="store_true")
    run.set_defaults(func=cmd_run)

    synth = sub.add_parser("synth", help="write a seeded synthetic dataset")
    synth.add_argument("--config", help="synthetic spec JSON (optional)")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--seed", type=int, help="override the spec seed")
    synth.add_argument("--quiet", action="store_true")
    synth.set_defaults(func=cmd_synth)

    ev = sub.add_parser("eval", help="score a forecast CSV against actuals")
    ev.add_argument("--forecasts", required=True,
                    help="CSV: month plus one column per model")
    ev.add_argument("--actuals", required=True,
                    help="CSV: month plus the actual series")
    ev.add_argument("--horizon", type=int, default=1,
                    help="forecast horizon for the DM variance window")
    ev.add_argument("--dm", action="store_true",
                    help="require the two-model DM comparison")
    ev.add_argument("--pt", action="store_true",
                    help="directional accuracy test per model")
    ev.add_argument("--out", help="write JSON here instead of stdout")
    ev.add_argument("--quiet", action="store_true")
    ev.set_defaults(func=cmd_eval)

    sel = sub.add_parser(
        "select-keywords", help="keyword screening step alone"
    )
    sel.add_argument("--arrivals", required=True)
    sel.add_argument("--keywords", required=True)
    sel.add_argument("--split", help="screen the pre-split span only")
    sel.add_argument("--max-lag", type=int, default=3, dest="max_lag")
    sel.add_argument("--threshold", type=float, default=0.7)
    sel.add_argument("--out", help="write the selection CSV here")
    sel.add_argument("--quiet", action="store_true")
    sel.set_defaults(func=cmd_select_keywords)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except BsakeError as exc:
        print(
            f"[{exc.component}/{type(exc).__name__}] {exc}", file=sys.stderr
        )
        return 1
    except OSError as exc:
        print(f"[cli/{type(exc).__name__}] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

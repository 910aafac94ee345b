"""Moving-block bootstrap over supervised rows and forecast aggregation.

Each ensemble replicate resamples whole blocks of consecutive design-matrix
rows so the serial dependence inside a block survives the resampling.  The
per-replicate generator is derived from (master_seed, replicate index), so
replicate k is the same no matter how many replicates run or in what order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import SupervisedSet
from .errors import (
    BlockTooLong,
    EmptyForecastSet,
    NonFiniteForecast,
    ZeroRows,
)

AGGREGATION_RULES = ("mean", "median")


@dataclass(frozen=True)
class BootstrapSample:
    """One resampled copy of a design matrix, same shape as its source.

    Every row is a verbatim (predictor row, target) pair copied from the
    source set; replicate_index and master_seed identify the generator that
    produced it.
    """

    replicate_index: int
    predictors: np.ndarray
    targets: np.ndarray
    block_length: int
    master_seed: int

    def __post_init__(self):
        predictors = np.ascontiguousarray(self.predictors, dtype=np.float64)
        targets = np.ascontiguousarray(self.targets, dtype=np.float64)
        if predictors.ndim != 2 or targets.shape != (predictors.shape[0],):
            raise ValueError("bootstrap rows and targets must align")
        if self.replicate_index < 1:
            raise ValueError("replicate_index counts from 1")
        predictors.flags.writeable = False
        targets.flags.writeable = False
        object.__setattr__(self, "predictors", predictors)
        object.__setattr__(self, "targets", targets)


def replicate_rng(master_seed: int, k: int) -> np.random.Generator:
    """The one generator-derivation rule shared by every replicate."""
    return np.random.default_rng([master_seed & (2**64 - 1), k])


def block_bootstrap(
    source: SupervisedSet, m: int, k: int, master_seed: int
) -> BootstrapSample:
    """Draw replicate k of the source rows by moving blocks of length m.

    ceil(rows/m) block start positions are drawn uniformly from
    {0..rows-m} with replacement; the blocks are concatenated and the tail
    truncated so the sample has exactly the source's row count.
    """
    n = source.n_rows
    if n < 1:
        raise ZeroRows("source design matrix has no rows")
    if m < 1:
        raise ValueError("block length must be >= 1")
    if m > n:
        raise BlockTooLong(f"block length {m} exceeds {n} source rows")
    if k < 1:
        raise ValueError("replicate index counts from 1")
    rng = replicate_rng(master_seed, k)
    n_blocks = math.ceil(n / m)
    starts = rng.integers(0, n - m + 1, size=n_blocks)
    rows = np.concatenate([np.arange(s, s + m) for s in starts])[:n]
    return BootstrapSample(
        replicate_index=k,
        predictors=source.predictors[rows],
        targets=source.targets[rows],
        block_length=m,
        master_seed=master_seed,
    )


def aggregate_forecasts(forecasts, rule: str) -> float:
    """Combine replicate forecasts by arithmetic mean or median.

    The mean sums in replicate-index order with numpy's fixed reduction,
    so the result does not depend on scheduling.
    """
    if rule not in AGGREGATION_RULES:
        raise ValueError(f"rule must be one of {AGGREGATION_RULES}, got {rule!r}")
    values = np.asarray(forecasts, dtype=np.float64).reshape(-1)
    if values.size == 0:
        raise EmptyForecastSet("no forecasts to aggregate")
    if not np.all(np.isfinite(values)):
        raise NonFiniteForecast("forecast set contains non-finite values")
    if rule == "mean":
        return float(np.sum(values) / values.size)
    return float(np.median(values))

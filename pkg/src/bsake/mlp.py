"""Single-hidden-layer perceptron benchmark trained by plain backprop.

Sigmoid hidden layer, linear scalar output, seeded uniform init, and
full-batch or mini-batch gradient descent on mean squared error.  It exists
as the conventional neural baseline next to the kernel models and shares
their determinism contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DimensionMismatch, NonFiniteLoss
from .sae import TrainConfig, sigmoid


@dataclass(frozen=True)
class MlpModel:
    """Weights of one trained perceptron: hidden map plus linear readout."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    def __post_init__(self):
        w1 = np.ascontiguousarray(self.w1, dtype=np.float64)
        b1 = np.ascontiguousarray(self.b1, dtype=np.float64)
        w2 = np.ascontiguousarray(self.w2, dtype=np.float64)
        hidden = w1.shape[0]
        if hidden < 1:
            raise DimensionMismatch("at least one hidden node required")
        if b1.shape != (hidden,) or w2.shape != (hidden,):
            raise DimensionMismatch("bias/readout widths must match hidden count")
        for arr in (w1, b1, w2):
            if not np.all(np.isfinite(arr)):
                raise ValueError("weights must be finite")
            arr.flags.writeable = False
        if not math.isfinite(self.b2):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "w2", w2)

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]


def _mlp_loss_grads(
    params: Mapping[str, np.ndarray | float], x: np.ndarray, y: np.ndarray
) -> tuple[float, dict]:
    n = x.shape[0]
    h = sigmoid(x @ params["w1"].T + params["b1"])
    pred = h @ params["w2"] + params["b2"]
    diff = pred - y
    loss = float(np.mean(diff * diff))
    d_pred = 2.0 * diff / n
    d_w2 = h.T @ d_pred
    d_b2 = float(d_pred.sum())
    d_h = np.outer(d_pred, params["w2"])
    d_z1 = d_h * h * (1.0 - h)
    d_w1 = d_z1.T @ x
    d_b1 = d_z1.sum(axis=0)
    return loss, {"w1": d_w1, "b1": d_b1, "w2": d_w2, "b2": d_b2}


def mlp_loss_and_gradients(
    model: MlpModel, x: np.ndarray, y: np.ndarray
) -> tuple[float, dict]:
    """Training MSE and exact gradients, public for finite-difference checks."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.ndim != 2 or x.shape[1] != model.input_dim or x.shape[0] != y.size:
        raise DimensionMismatch("inputs and targets do not align with the model")
    params = {"w1": model.w1, "b1": model.b1, "w2": model.w2, "b2": model.b2}
    return _mlp_loss_grads(params, x, y)


def init_mlp(width: int, hidden: int, cfg: TrainConfig) -> MlpModel:
    if width < 1 or hidden < 1:
        raise DimensionMismatch("input and hidden widths must be >= 1")
    rng = np.random.default_rng(cfg.seed)
    s1 = cfg.init_scale if cfg.init_scale is not None else 0.5 / math.sqrt(width)
    s2 = cfg.init_scale if cfg.init_scale is not None else 0.5 / math.sqrt(hidden)
    w1 = rng.uniform(-s1, s1, size=(hidden, width))
    w2 = rng.uniform(-s2, s2, size=hidden)
    return MlpModel(w1, np.zeros(hidden), w2, 0.0)


def fit_mlp(x: np.ndarray, y: np.ndarray, hidden: int, cfg: TrainConfig) -> MlpModel:
    """Seeded gradient descent; epochs=0 returns the raw initialization."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.ndim != 2 or x.shape[0] != y.size or y.size < 1:
        raise DimensionMismatch(
            f"inputs {x.shape} and targets {y.shape} do not align"
        )
    model = init_mlp(x.shape[1], hidden, cfg)
    if cfg.epochs == 0:
        return model
    rng = np.random.default_rng(cfg.seed)
    s1 = cfg.init_scale if cfg.init_scale is not None else 0.5 / math.sqrt(x.shape[1])
    s2 = cfg.init_scale if cfg.init_scale is not None else 0.5 / math.sqrt(hidden)
    # replay init draws so epoch shuffles continue the same stream
    rng.uniform(-s1, s1, size=(hidden, x.shape[1]))
    rng.uniform(-s2, s2, size=hidden)
    params: dict = {
        "w1": np.array(model.w1), "b1": np.array(model.b1),
        "w2": np.array(model.w2), "b2": model.b2,
    }
    n = x.shape[0]
    batch = n if cfg.batch_size is None else min(cfg.batch_size, n)
    # divergence is detected via the loss, not numpy overflow warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            order = np.arange(n) if batch >= n else rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, batch):
                rows = order[start: start + batch]
                loss, grads = _mlp_loss_grads(params, x[rows], y[rows])
                epoch_loss += loss * len(rows)
                for name in ("w1", "b1", "w2"):
                    params[name] = params[name] - cfg.learning_rate * grads[name]
                params["b2"] = params["b2"] - cfg.learning_rate * grads["b2"]
            if not math.isfinite(epoch_loss):
                raise NonFiniteLoss(
                    f"training loss diverged at epoch {epoch + 1}"
                )
    arrays_ok = all(
        np.all(np.isfinite(params[name])) for name in ("w1", "b1", "w2")
    )
    if not arrays_ok or not math.isfinite(params["b2"]):
        raise NonFiniteLoss("weights diverged to non-finite values")
    return MlpModel(params["w1"], params["b1"], params["w2"], params["b2"])


def predict_mlp(model: MlpModel, xq: np.ndarray) -> np.ndarray:
    xq = np.asarray(xq, dtype=np.float64)
    if xq.size == 0:
        return np.zeros(0)
    xq = np.atleast_2d(xq)
    if xq.shape[1] != model.input_dim:
        raise DimensionMismatch(
            f"query width {xq.shape[1]} does not match input width "
            f"{model.input_dim}"
        )
    return sigmoid(xq @ model.w1.T + model.b1) @ model.w2 + model.b2


def mlp_to_json_dict(model: MlpModel) -> dict:
    return {
        "w1": [[float(v) for v in row] for row in model.w1],
        "b1": [float(v) for v in model.b1],
        "w2": [float(v) for v in model.w2],
        "b2": float(model.b2),
    }


def mlp_from_json_dict(doc: dict) -> MlpModel:
    return MlpModel(
        np.asarray(doc["w1"], float),
        np.asarray(doc["b1"], float),
        np.asarray(doc["w2"], float),
        float(doc["b2"]),
    )

"""Autoencoders and greedy layer-wise stacking for feature compression.

A single autoencoder squeezes its input through a narrower sigmoid hidden
layer and reconstructs it, trained by plain gradient descent on mean squared
reconstruction error.  A stack chains several of them: each layer trains
unsupervised on the previous layer's codes, and encoding runs the chain
forward.  Training is seeded and single-threaded, so identical inputs and
config reproduce identical weights bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, NonDecreasingLayerSizes, NonFiniteLoss


def sigmoid(z: np.ndarray) -> np.ndarray:
    return expit(z)


@dataclass(frozen=True)
class TrainConfig:
    """Gradient-descent settings for one autoencoder (or MLP) training run.

    batch_size None means full-batch descent; a smaller value trains on
    sequential mini-batches in a freshly shuffled order each epoch.
    init_scale None picks 0.5/sqrt(fan_in) per weight matrix.
    """

    epochs: int
    learning_rate: float
    batch_size: int | None = None
    seed: int = 0
    init_scale: float | None = None

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive when given")
        if self.init_scale is not None and self.init_scale <= 0:
            raise ValueError("init_scale must be positive when given")


def _freeze(arrays: Mapping[str, np.ndarray], obj) -> None:
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(obj, name, arr)


@dataclass(frozen=True)
class Autoencoder:
    """One trained encode/decode pair with sigmoid activations.

    w_enc is (hidden x input), w_dec is (input x hidden); the hidden width
    must not exceed the input width (the layer compresses).
    """

    w_enc: np.ndarray
    b_enc: np.ndarray
    w_dec: np.ndarray
    b_dec: np.ndarray
    activation: str = "sigmoid"

    def __post_init__(self):
        if self.activation != "sigmoid":
            raise ValueError(f"unsupported activation {self.activation!r}")
        hidden, width = np.asarray(self.w_enc).shape
        if not 1 <= hidden <= width:
            raise DimensionMismatch(
                f"hidden width {hidden} must lie in 1..input width {width}"
            )
        if np.asarray(self.w_dec).shape != (width, hidden):
            raise DimensionMismatch("decode weights must be input x hidden")
        if np.asarray(self.b_enc).shape != (hidden,):
            raise DimensionMismatch("encode bias must match hidden width")
        if np.asarray(self.b_dec).shape != (width,):
            raise DimensionMismatch("decode bias must match input width")
        for arr in (self.w_enc, self.b_enc, self.w_dec, self.b_dec):
            if not np.all(np.isfinite(arr)):
                raise ValueError("autoencoder weights must be finite")
        _freeze(
            {"w_enc": self.w_enc, "b_enc": self.b_enc,
             "w_dec": self.w_dec, "b_dec": self.b_dec},
            self,
        )

    @property
    def input_dim(self) -> int:
        return self.w_enc.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_enc.shape[0]


def _check_width(x: np.ndarray, width: int, what: str) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch(f"{what} must be a 2-D sample matrix")
    if x.shape[1] != width:
        raise DimensionMismatch(
            f"{what} width {x.shape[1]} does not match expected {width}"
        )
    return x


def encode(ae: Autoencoder, x: np.ndarray) -> np.ndarray:
    x = _check_width(x, ae.input_dim, "encode input")
    return sigmoid(x @ ae.w_enc.T + ae.b_enc)


def reconstruct(ae: Autoencoder, x: np.ndarray) -> np.ndarray:
    return sigmoid(encode(ae, x) @ ae.w_dec.T + ae.b_dec)


def reconstruction_loss(ae: Autoencoder, x: np.ndarray) -> float:
    """Mean squared error over every cell of the reconstruction."""
    x = _check_width(x, ae.input_dim, "input")
    diff = reconstruct(ae, x) - x
    return float(np.mean(diff * diff))


def _ae_loss_grads(
    params: Mapping[str, np.ndarray], x: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    n, width = x.shape
    h = sigmoid(x @ params["w_enc"].T + params["b_enc"])
    xhat = sigmoid(h @ params["w_dec"].T + params["b_dec"])
    diff = xhat - x
    loss = float(np.mean(diff * diff))
    d_xhat = 2.0 * diff / (n * width)
    d_z2 = d_xhat * xhat * (1.0 - xhat)
    d_w_dec = d_z2.T @ h
    d_b_dec = d_z2.sum(axis=0)
    d_h = d_z2 @ params["w_dec"]
    d_z1 = d_h * h * (1.0 - h)
    d_w_enc = d_z1.T @ x
    d_b_enc = d_z1.sum(axis=0)
    return loss, {
        "w_enc": d_w_enc, "b_enc": d_b_enc,
        "w_dec": d_w_dec, "b_dec": d_b_dec,
    }


def loss_and_gradients(
    ae: Autoencoder, x: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Reconstruction MSE and its exact gradients for every parameter.

    Kept public so the analytic gradients can be checked against finite
    differences.
    """
    x = _check_width(x, ae.input_dim, "input")
    params = {
        "w_enc": ae.w_enc, "b_enc": ae.b_enc,
        "w_dec": ae.w_dec, "b_dec": ae.b_dec,
    }
    return _ae_loss_grads(params, x)


def _init_weights(
    rng: np.random.Generator, rows: int, cols: int, scale: float | None
) -> np.ndarray:
    s = scale if scale is not None else 0.5 / math.sqrt(cols)
    return rng.uniform(-s, s, size=(rows, cols))


def init_autoencoder(width: int, hidden: int, cfg: TrainConfig) -> Autoencoder:
    """Seeded uniform weight init (biases start at zero)."""
    if not 1 <= hidden <= width:
        raise DimensionMismatch(
            f"hidden width {hidden} must lie in 1..input width {width}"
        )
    rng = np.random.default_rng(cfg.seed)
    w_enc = _init_weights(rng, hidden, width, cfg.init_scale)
    w_dec = _init_weights(rng, width, hidden, cfg.init_scale)
    return Autoencoder(w_enc, np.zeros(hidden), w_dec, np.zeros(width))


def train_autoencoder(x: np.ndarray, hidden: int, cfg: TrainConfig) -> Autoencoder:
    """Gradient-descent training of one autoencoder on the rows of x.

    epochs=0 returns the seeded initialization untouched.  Raises
    NonFiniteLoss if the loss diverges, which usually means the learning
    rate is too high for the data scale.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DimensionMismatch("training data must be a nonempty 2-D matrix")
    if not np.all(np.isfinite(x)):
        raise ValueError("training data must be finite")
    ae = init_autoencoder(x.shape[1], hidden, cfg)
    if cfg.epochs == 0:
        return ae
    rng = np.random.default_rng(cfg.seed)
    # replay the init draws so epoch shuffles continue the same stream
    _init_weights(rng, hidden, x.shape[1], cfg.init_scale)
    _init_weights(rng, x.shape[1], hidden, cfg.init_scale)
    params = {
        "w_enc": np.array(ae.w_enc), "b_enc": np.array(ae.b_enc),
        "w_dec": np.array(ae.w_dec), "b_dec": np.array(ae.b_dec),
    }
    n = x.shape[0]
    batch = n if cfg.batch_size is None else min(cfg.batch_size, n)
    # divergence is detected via the loss, not numpy overflow warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            if batch >= n:
                order = np.arange(n)
            else:
                order = rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, batch):
                rows = order[start: start + batch]
                loss, grads = _ae_loss_grads(params, x[rows])
                epoch_loss += loss * len(rows)
                for name in params:
                    params[name] = params[name] - cfg.learning_rate * grads[name]
            if not math.isfinite(epoch_loss):
                raise NonFiniteLoss(
                    f"reconstruction loss diverged at epoch {epoch + 1}"
                )
    if not all(np.all(np.isfinite(p)) for p in params.values()):
        raise NonFiniteLoss("weights diverged to non-finite values")
    final = Autoencoder(
        params["w_enc"], params["b_enc"], params["w_dec"], params["b_dec"]
    )
    if not math.isfinite(reconstruction_loss(final, x)):
        raise NonFiniteLoss("reconstruction loss diverged after training")
    return final


@dataclass(frozen=True)
class StackedAutoencoder:
    """Ordered autoencoder layers; layer k feeds on layer k-1's codes."""

    layers: tuple[Autoencoder, ...]
    final_losses: tuple[float, ...] = ()

    def __post_init__(self):
        for prev, cur in zip(self.layers, self.layers[1:]):
            if cur.input_dim != prev.hidden_dim:
                raise DimensionMismatch(
                    f"layer input width {cur.input_dim} does not chain from "
                    f"previous hidden width {prev.hidden_dim}"
                )
        if self.final_losses and len(self.final_losses) != len(self.layers):
            raise ValueError("one final loss per layer required")

    @property
    def output_dim(self) -> int | None:
        """Final code width, or None for the empty (identity) stack."""
        return self.layers[-1].hidden_dim if self.layers else None


def _layer_seed(seed: int, layer_index: int) -> int:
    return int(np.random.SeedSequence([seed & (2**64 - 1), layer_index])
               .generate_state(1, np.uint64)[0])


def train_sae(
    x: np.ndarray, layer_sizes: Sequence[int], cfg: TrainConfig
) -> StackedAutoencoder:
    """Greedy layer-wise training: each layer learns to reconstruct the codes
    of the layer beneath it.  No joint fine-tuning pass follows.

    layer_sizes must be nonincreasing and start at or below the data width;
    an empty list yields the identity stack.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    sizes = list(layer_sizes)
    for a, b in zip(sizes, sizes[1:]):
        if b > a:
            raise NonDecreasingLayerSizes(
                f"layer sizes {sizes} must be nonincreasing"
            )
    if sizes and x.ndim == 2 and sizes[0] > x.shape[1]:
        raise NonDecreasingLayerSizes(
            f"first layer size {sizes[0]} exceeds data width {x.shape[1]}"
        )
    layers: list[Autoencoder] = []
    losses: list[float] = []
    current = x
    for i, hidden in enumerate(sizes):
        layer_cfg = replace(cfg, seed=_layer_seed(cfg.seed, i))
        ae = train_autoencoder(current, hidden, layer_cfg)
        layers.append(ae)
        losses.append(reconstruction_loss(ae, current))
        current = encode(ae, current)
    return StackedAutoencoder(tuple(layers), tuple(losses))


def sae_encode(sae: StackedAutoencoder, x: np.ndarray) -> np.ndarray:
    """Run the encode chain; the empty stack is the identity map."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    for ae in sae.layers:
        x = encode(ae, x)
    return x


# --- serialization ----------------------------------------------------------

def autoencoder_to_json_dict(ae: Autoencoder) -> dict:
    return {
        "activation": ae.activation,
        "w_enc": [[float(v) for v in row] for row in ae.w_enc],
        "b_enc": [float(v) for v in ae.b_enc],
        "w_dec": [[float(v) for v in row] for row in ae.w_dec],
        "b_dec": [float(v) for v in ae.b_dec],
    }


def autoencoder_from_json_dict(doc: dict) -> Autoencoder:
    return Autoencoder(
        np.asarray(doc["w_enc"], float),
        np.asarray(doc["b_enc"], float),
        np.asarray(doc["w_dec"], float),
        np.asarray(doc["b_dec"], float),
        activation=doc.get("activation", "sigmoid"),
    )


def sae_to_json_dict(sae: StackedAutoencoder, cfg: TrainConfig | None = None) -> dict:
    doc = {
        "layers": [autoencoder_to_json_dict(ae) for ae in sae.layers],
        "final_losses": [float(v) for v in sae.final_losses],
    }
    if cfg is not None:
        doc["train_config"] = {
            "epochs": cfg.epochs,
            "learning_rate": cfg.learning_rate,
            "batch_size": cfg.batch_size,
            "seed": cfg.seed,
            "init_scale": cfg.init_scale,
        }
    return doc


def sae_from_json_dict(doc: dict) -> StackedAutoencoder:
    layers = tuple(autoencoder_from_json_dict(d) for d in doc["layers"])
    return StackedAutoencoder(layers, tuple(doc.get("final_losses", ())))

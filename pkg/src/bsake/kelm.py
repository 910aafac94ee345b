"""Extreme learning machine and its kernelized variant.

The kernel model is ridge regression in a reproducing-kernel space: fitting
solves the symmetric positive definite system (I/C + K) alpha = y once, and
prediction sums alpha-weighted kernel evaluations against the stored
training inputs.  The plain ELM benchmark keeps the random frozen hidden
layer: seeded uniform input weights, sigmoid hidden activations, and a
closed-form ridge solve for the output weights.  Nothing here is trained
iteratively.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DimensionMismatch, SingularSystem
from .sae import sigmoid

RESIDUAL_TOLERANCE = 1e-8


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and width; only the Gaussian kernel is supported."""

    kind: str = "gaussian"
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ValueError(f"unsupported kernel kind {self.kind!r}")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


def default_gamma(width: int) -> float:
    """Default kernel width 1/d for feature width d."""
    if width < 1:
        raise DimensionMismatch("feature width must be >= 1")
    return 1.0 / width


def gaussian_kernel(u: np.ndarray, v: np.ndarray, gamma: float) -> float:
    """exp(-gamma * ||u - v||^2); always in (0, 1]."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if u.shape != v.shape:
        raise DimensionMismatch(
            f"kernel arguments have widths {u.size} and {v.size}"
        )
    diff = u - v
    return float(np.exp(-gamma * (diff @ diff)))


def kernel_matrix(
    x: np.ndarray, y: np.ndarray, spec: KernelSpec
) -> np.ndarray:
    """Pairwise Gaussian kernel values, K[i, j] = k(x_i, y_j).

    Squared distances are expanded per pair (not via the norms identity) so
    K(x, x) comes out bitwise symmetric.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(
            f"kernel inputs have widths {x.shape[1]} and {y.shape[1]}"
        )
    diff = x[:, None, :] - y[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    return np.exp(-spec.gamma * sq)


def solve_dual_weights(k: np.ndarray, y: np.ndarray, c: float) -> np.ndarray:
    """Solve (I/C + K) alpha = y by Cholesky, asserting symmetry first.

    Raises SingularSystem when the factorization fails or the relative
    residual of the solution exceeds 1e-8.
    """
    if c <= 0:
        raise ValueError("C must be positive")
    k = np.asarray(k, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n = y.size
    if k.shape != (n, n):
        raise DimensionMismatch(
            f"kernel matrix {k.shape} does not match {n} targets"
        )
    if not np.array_equal(k, k.T):
        raise SingularSystem("system matrix is not symmetric")
    a = k + np.eye(n) / c
    try:
        factor = cho_factor(a, lower=True)
        alpha = cho_solve(factor, y)
    except LinAlgError as exc:
        raise SingularSystem(f"Cholesky factorization failed: {exc}") from None
    denom = float(np.linalg.norm(y))
    residual = float(np.linalg.norm(a @ alpha - y))
    if residual > RESIDUAL_TOLERANCE * (denom if denom > 0 else 1.0):
        raise SingularSystem(
            f"solve residual {residual / (denom or 1.0):.3e} exceeds tolerance"
        )
    return alpha


@dataclass(frozen=True)
class KelmModel:
    """Dual-form kernel ridge model: stored training inputs plus weights."""

    kernel: KernelSpec
    c: float
    train_x: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        train_x = np.ascontiguousarray(self.train_x, dtype=np.float64)
        alpha = np.ascontiguousarray(self.alpha, dtype=np.float64)
        if train_x.ndim != 2 or train_x.shape[0] < 1:
            raise DimensionMismatch("training inputs must be a nonempty matrix")
        if alpha.shape != (train_x.shape[0],):
            raise DimensionMismatch("one dual weight per training row required")
        if not np.all(np.isfinite(alpha)):
            raise ValueError("dual weights must be finite")
        train_x.flags.writeable = False
        alpha.flags.writeable = False
        object.__setattr__(self, "train_x", train_x)
        object.__setattr__(self, "alpha", alpha)


def fit_kelm(
    x: np.ndarray, y: np.ndarray, kernel: KernelSpec, c: float
) -> KelmModel:
    """Deterministic kernel ridge fit; no randomness anywhere."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.ndim != 2 or x.shape[0] != y.size or y.size < 1:
        raise DimensionMismatch(
            f"inputs {x.shape} and targets {y.shape} do not align"
        )
    k = kernel_matrix(x, x, kernel)
    alpha = solve_dual_weights(k, y, c)
    return KelmModel(kernel, float(c), x, alpha)


def predict_kelm(model: KelmModel, xq: np.ndarray) -> np.ndarray:
    """Sum of alpha-weighted kernels against the stored training rows."""
    xq = np.asarray(xq, dtype=np.float64)
    if xq.size == 0:
        return np.zeros(0)
    xq = np.atleast_2d(xq)
    if xq.shape[1] != model.train_x.shape[1]:
        raise DimensionMismatch(
            f"query width {xq.shape[1]} does not match training width "
            f"{model.train_x.shape[1]}"
        )
    return kernel_matrix(xq, model.train_x, model.kernel) @ model.alpha


# --- plain ELM benchmark -----------------------------------------------------

@dataclass(frozen=True)
class ElmModel:
    """Random frozen hidden layer with a solved linear readout."""

    omega: np.ndarray
    bias: np.ndarray
    beta: np.ndarray
    c: float
    activation: str = "sigmoid"

    def __post_init__(self):
        omega = np.ascontiguousarray(self.omega, dtype=np.float64)
        bias = np.ascontiguousarray(self.bias, dtype=np.float64)
        beta = np.ascontiguousarray(self.beta, dtype=np.float64)
        hidden = omega.shape[0]
        if hidden < 1:
            raise DimensionMismatch("at least one hidden node required")
        if bias.shape != (hidden,) or beta.shape != (hidden,):
            raise DimensionMismatch("bias and beta must match hidden count")
        for arr in (omega, bias, beta):
            arr.flags.writeable = False
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "bias", bias)
        object.__setattr__(self, "beta", beta)


def fit_elm(
    x: np.ndarray, y: np.ndarray, hidden: int, c: float, seed: int
) -> ElmModel:
    """Seeded random hidden map, then the ridge readout in its dual form."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.ndim != 2 or x.shape[0] != y.size or y.size < 1:
        raise DimensionMismatch(
            f"inputs {x.shape} and targets {y.shape} do not align"
        )
    if hidden < 1:
        raise DimensionMismatch("hidden node count must be >= 1")
    rng = np.random.default_rng(seed)
    omega = rng.uniform(-1.0, 1.0, size=(hidden, x.shape[1]))
    bias = rng.uniform(-1.0, 1.0, size=hidden)
    h = sigmoid(x @ omega.T + bias)
    gram = h @ h.T
    # BLAS does not promise bitwise-symmetric gemm output; average once
    gram = (gram + gram.T) * 0.5
    dual = solve_dual_weights(gram, y, c)
    beta = h.T @ dual
    return ElmModel(omega, bias, beta, float(c))


def predict_elm(model: ElmModel, xq: np.ndarray) -> np.ndarray:
    xq = np.asarray(xq, dtype=np.float64)
    if xq.size == 0:
        return np.zeros(0)
    xq = np.atleast_2d(xq)
    if xq.shape[1] != model.omega.shape[1]:
        raise DimensionMismatch(
            f"query width {xq.shape[1]} does not match input width "
            f"{model.omega.shape[1]}"
        )
    return sigmoid(xq @ model.omega.T + model.bias) @ model.beta


# --- serialization ----------------------------------------------------------

def kelm_to_json_dict(model: KelmModel) -> dict:
    return {
        "kernel": {"kind": model.kernel.kind, "gamma": model.kernel.gamma},
        "c": model.c,
        "train_x": [[float(v) for v in row] for row in model.train_x],
        "alpha": [float(v) for v in model.alpha],
    }


def kelm_from_json_dict(doc: dict) -> KelmModel:
    spec = KernelSpec(doc["kernel"]["kind"], float(doc["kernel"]["gamma"]))
    return KelmModel(
        spec,
        float(doc["c"]),
        np.asarray(doc["train_x"], float),
        np.asarray(doc["alpha"], float),
    )

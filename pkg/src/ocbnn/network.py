"""MLP forward pass, analytic backpropagation, and data log-likelihoods.

Everything here is a pure function of ``(architecture, weight vector, inputs)``;
callers may evaluate different weight vectors concurrently.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Activation, Architecture, Task, layer_slices, unflatten
from .errors import ConfigError


@dataclass(frozen=True)
class Dataset:
    """Inputs plus targets (real matrix for regression, integer labels otherwise)."""

    inputs: np.ndarray
    targets: np.ndarray
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        object.__setattr__(self, "inputs", inputs)
        targets = np.asarray(self.targets)
        if targets.dtype.kind in "iu":
            targets = targets.astype(np.int64).reshape(-1)
        else:
            targets = np.atleast_2d(targets.astype(float))
        object.__setattr__(self, "targets", targets)
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if len(targets) != len(inputs):
            raise ConfigError(
                f"inputs ({len(inputs)} rows) and targets ({len(targets)} rows) disagree"
            )

    @property
    def n_rows(self) -> int:
        return self.inputs.shape[0]

    @property
    def is_classification(self) -> bool:
        return self.targets.ndim == 1

    def validate_for(self, arch: Architecture) -> None:
        if self.n_rows and self.inputs.shape[1] != arch.input_dim:
            raise ConfigError(
                f"dataset has {self.inputs.shape[1]} input columns, "
                f"architecture expects {arch.input_dim}"
            )
        if arch.task is Task.CLASSIFICATION:
            if not self.is_classification:
                raise ConfigError("classification architecture needs integer labels")
            if self.n_rows and (self.targets.min() < 0 or self.targets.max() >= arch.output_dim):
                raise ConfigError(f"labels must lie in [0, {arch.output_dim})")
        else:
            if self.is_classification:
                raise ConfigError("regression architecture needs real-valued targets")
            if self.n_rows and self.targets.shape[1] != arch.output_dim:
                raise ConfigError(
                    f"dataset has {self.targets.shape[1]} target columns, "
                    f"architecture expects {arch.output_dim}"
                )

    def subset(self, idx) -> "Dataset":
        return Dataset(self.inputs[idx], self.targets[idx], self.feature_names)


@dataclass(frozen=True)
class LikelihoodConfig:
    regression_noise_sigma: float = 0.1
    batch_size: int | None = None  # None = full batch

    def __post_init__(self):
        if self.regression_noise_sigma <= 0:
            raise ConfigError("regression_noise_sigma must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be positive or None")


def _activate(activation: Activation, z: np.ndarray) -> np.ndarray:
    if activation is Activation.RBF:
        return np.exp(-np.square(z))
    return np.tanh(z)


def _activate_deriv(activation: Activation, z: np.ndarray) -> np.ndarray:
    if activation is Activation.RBF:
        return -2.0 * z * np.exp(-np.square(z))
    t = np.tanh(z)
    return 1.0 - t * t


def _forward_pass(arch: Architecture, w: np.ndarray, X: np.ndarray):
    """Return (activations, pre_activations); activations[-1] is the raw output."""
    layers = unflatten(arch, w)
    acts = [X]
    pre = []
    a = X
    last = len(layers) - 1
    for li, (W, b) in enumerate(layers):
        z = a @ W + b
        pre.append(z)
        a = z if li == last else _activate(arch.activation, z)
        acts.append(a)
    return acts, pre


def forward_batch(arch: Architecture, w: np.ndarray, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != arch.input_dim:
        raise ConfigError(f"input has {X.shape[1]} columns, expected {arch.input_dim}")
    acts, _ = _forward_pass(arch, w, X)
    return acts[-1]


def forward(arch: Architecture, w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Network output for a single input vector; hidden layers use the RBF or tanh map."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != arch.input_dim:
        raise ConfigError(f"input has length {x.shape[0]}, expected {arch.input_dim}")
    return forward_batch(arch, w, x[None, :])[0]


def backprop_batch(
    arch: Architecture, w: np.ndarray, X: np.ndarray, dL_dout: np.ndarray
) -> np.ndarray:
    """Gradient wrt the flat weight vector of sum_n L_n, given each dL_n/d(output row)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    G = np.atleast_2d(np.asarray(dL_dout, dtype=float))
    if G.shape != (X.shape[0], arch.output_dim):
        raise ConfigError(f"dL_dout has shape {G.shape}, expected {(X.shape[0], arch.output_dim)}")
    layers = unflatten(arch, w)
    acts, pre = _forward_pass(arch, w, X)
    grad = np.zeros_like(np.asarray(w, dtype=float))
    delta = G
    for li in reversed(range(len(layers))):
        W, _ = layers[li]
        s = layer_slices(arch)[li]
        grad[s.w_start : s.w_stop] = (acts[li].T @ delta).reshape(-1)
        grad[s.w_stop : s.b_stop] = delta.sum(axis=0)
        if li > 0:
            delta = (delta @ W.T) * _activate_deriv(arch.activation, pre[li - 1])
    return grad


def backprop_scalar(
    arch: Architecture, w: np.ndarray, x: np.ndarray, dL_dout: np.ndarray
) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    g = np.asarray(dL_dout, dtype=float).reshape(-1)
    return backprop_batch(arch, w, x[None, :], g[None, :])


def log_softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=-1, keepdims=True)
    stabilized = logits - m
    return stabilized - np.log(np.exp(stabilized).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def log_likelihood(
    arch: Architecture,
    w: np.ndarray,
    data: Dataset,
    cfg: LikelihoodConfig,
    batch: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Data log-likelihood and its weight gradient.

    With a minibatch index set, both value and gradient are rescaled by
    N/|batch| so they are unbiased estimates of the full-data quantities.
    """
    data.validate_for(arch)
    w = np.asarray(w, dtype=float)
    if data.n_rows == 0:
        return 0.0, np.zeros_like(w)
    if batch is None:
        rows = data
        scale = 1.0
    else:
        batch = np.asarray(batch, dtype=int)
        rows = data.subset(batch)
        scale = data.n_rows / len(batch)
    X = rows.inputs
    out = forward_batch(arch, w, X)
    if arch.task is Task.REGRESSION:
        sigma2 = cfg.regression_noise_sigma**2
        resid = rows.targets - out
        value = -0.5 * resid.size * np.log(2.0 * np.pi * sigma2) - np.sum(resid**2) / (2 * sigma2)
        dvalue_dout = resid / sigma2
    else:
        logp = log_softmax(out)
        labels = rows.targets
        value = float(logp[np.arange(len(labels)), labels].sum())
        dvalue_dout = -np.exp(logp)
        dvalue_dout[np.arange(len(labels)), labels] += 1.0
    grad = backprop_batch(arch, w, X, dvalue_dout)
    return scale * float(value), scale * grad

"""Weight-vector layout, seeded RNG streams, and the finite-difference gradient oracle.

Weights of a fixed MLP are stored in one flat float64 vector, layer by layer:
for each layer the weight matrix (shape ``(fan_in, fan_out)``, row-major)
followed by the bias vector. This layout is also the on-disk order used by the
posterior-sample JSON file.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigError, OracleError

FD_EPS = 1e-5
FD_REL_TOL = 1e-5


class Activation(str, enum.Enum):
    RBF = "rbf"
    TANH = "tanh"


class Task(str, enum.Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


@dataclass(frozen=True)
class Architecture:
    """Fixed MLP shape. Immutable and hashable; shared freely across threads."""

    input_dim: int
    hidden_sizes: tuple[int, ...]
    output_dim: int
    activation: Activation = Activation.RBF
    task: Task = Task.REGRESSION

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        object.__setattr__(self, "activation", Activation(self.activation))
        object.__setattr__(self, "task", Task(self.task))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ConfigError("input_dim and output_dim must be >= 1")
        if not self.hidden_sizes or any(h < 1 for h in self.hidden_sizes):
            raise ConfigError("hidden_sizes must be non-empty with all sizes >= 1")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_sizes, self.output_dim)

    @property
    def parameter_count(self) -> int:
        return parameter_count(self)

    def to_json_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_sizes": list(self.hidden_sizes),
            "output_dim": self.output_dim,
            "activation": self.activation.value,
            "task": self.task.value,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Architecture":
        unknown = set(d) - {"input_dim", "hidden_sizes", "output_dim", "activation", "task"}
        if unknown:
            raise ConfigError(f"unknown architecture keys: {sorted(unknown)}")
        return cls(
            input_dim=int(d["input_dim"]),
            hidden_sizes=tuple(d["hidden_sizes"]),
            output_dim=int(d["output_dim"]),
            activation=Activation(d.get("activation", "rbf")),
            task=Task(d.get("task", "regression")),
        )


def parameter_count(arch: Architecture) -> int:
    dims = arch.layer_dims
    return sum(fi * fo + fo for fi, fo in zip(dims[:-1], dims[1:]))


class LayerSlice(NamedTuple):
    w_start: int
    w_stop: int
    b_stop: int
    fan_in: int
    fan_out: int


@lru_cache(maxsize=None)
def layer_slices(arch: Architecture) -> tuple[LayerSlice, ...]:
    """Index ranges of each layer's weight matrix and bias inside the flat vector."""
    out = []
    pos = 0
    dims = arch.layer_dims
    for fi, fo in zip(dims[:-1], dims[1:]):
        w_stop = pos + fi * fo
        b_stop = w_stop + fo
        out.append(LayerSlice(pos, w_stop, b_stop, fi, fo))
        pos = b_stop
    return tuple(out)


def unflatten(arch: Architecture, values: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Views (no copies) of the per-layer ``(W, b)`` pairs inside ``values``."""
    values = np.asarray(values, dtype=float)
    if values.shape != (arch.parameter_count,):
        raise ConfigError(
            f"weight vector has length {values.shape}, expected ({arch.parameter_count},)"
        )
    return [
        (values[s.w_start : s.w_stop].reshape(s.fan_in, s.fan_out), values[s.w_stop : s.b_stop])
        for s in layer_slices(arch)
    ]


def flatten(arch: Architecture, layers) -> np.ndarray:
    parts = []
    for W, b in layers:
        parts.append(np.asarray(W, dtype=float).reshape(-1))
        parts.append(np.asarray(b, dtype=float).reshape(-1))
    out = np.concatenate(parts)
    if out.shape != (arch.parameter_count,):
        raise ConfigError("layer shapes do not match the architecture")
    return out


class Stream(enum.IntEnum):
    """Channel indices for deriving independent RNG streams from one run seed."""

    DATA = 0
    SPLIT = 1
    PERTURB = 2
    CONSTRAINT = 3
    INIT = 4
    SAMPLER = 5


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based (Philox) stream, fully determined by (seed, key)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def finite_diff_grad(
    f: Callable[[np.ndarray], float], w: np.ndarray, eps: float = FD_EPS
) -> np.ndarray:
    """Central-difference gradient of a scalar function, one coordinate at a time."""
    if eps <= 0:
        raise ConfigError("eps must be positive")
    w = np.asarray(w, dtype=float)
    grad = np.empty_like(w)
    for i in range(w.size):
        bumped = w.copy()
        bumped[i] = w[i] + eps
        hi = float(f(bumped))
        bumped[i] = w[i] - eps
        lo = float(f(bumped))
        if not (math.isfinite(hi) and math.isfinite(lo)):
            raise OracleError(f"non-finite value at coordinate {i}: f+={hi}, f-={lo}")
        grad[i] = (hi - lo) / (2.0 * eps)
    return grad


def grad_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max per-coordinate |a - n| / max(1, |a|); the comparison used by gradient tests."""
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    denom = np.maximum(1.0, np.abs(analytic))
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0

"""Constrained regions, the two-scale tanh indicator, and region sampling."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from .expr import PolyExpr

# Box bounds are stored per constrained input dimension as (dim, low, high);
# dimensions not listed are unbounded and excluded from membership checks.
Box = tuple[tuple[int, float, float], ...]


@dataclass(frozen=True)
class SoftIndicatorParams:
    """Scales of the sharp (tau0) and flat (tau1) tanh factors."""

    tau0: float = 15.0
    tau1: float = 2.0

    def __post_init__(self):
        if not (self.tau0 > self.tau1 > 0):
            raise ConfigError("require tau0 > tau1 > 0")


class PiMode(str, enum.Enum):
    UNIFORM_BOX = "uniform_box"
    FIXED_POINTS = "fixed_points"


@dataclass(frozen=True)
class SamplerPi:
    """How input points are drawn from a region's input box."""

    mode: PiMode = PiMode.UNIFORM_BOX
    points: tuple[tuple[float, ...], ...] = ()
    sample_count: int = 50

    def __post_init__(self):
        object.__setattr__(self, "mode", PiMode(self.mode))
        object.__setattr__(self, "points", tuple(tuple(float(v) for v in p) for p in self.points))
        if self.sample_count < 1:
            raise ConfigError("sample_count must be positive")
        if self.mode is PiMode.FIXED_POINTS and not self.points:
            raise ConfigError("fixed_points mode requires a non-empty point list")


def _normalize_box(box) -> Box:
    seen = set()
    out = []
    for dim, lo, hi in box:
        dim = int(dim)
        lo, hi = float(lo), float(hi)
        if dim in seen:
            raise ConfigError(f"duplicate bound for x[{dim}]")
        if not lo < hi:
            raise ConfigError(f"degenerate bound for x[{dim}]: [{lo}, {hi}]")
        seen.add(dim)
        out.append((dim, lo, hi))
    if not out:
        raise ConfigError("region needs at least one input bound")
    return tuple(sorted(out))


@dataclass(frozen=True)
class NegativeRegion:
    """Forbidden set: union over groups of conjunctions of expressions f <= 0."""

    input_box: Box
    inequality_groups: tuple[tuple[PolyExpr, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "input_box", _normalize_box(self.input_box))
        groups = tuple(tuple(g) for g in self.inequality_groups)
        if not groups or any(not g for g in groups):
            raise ConfigError("negative region needs at least one non-empty inequality group")
        object.__setattr__(self, "inequality_groups", groups)


@dataclass(frozen=True)
class MixtureComponent:
    target: PolyExpr  # function of x only
    sigma: float
    weight: float

    def __post_init__(self):
        if self.target.uses_y:
            raise ConfigError("target functions may reference x[...] only")
        if self.sigma <= 0:
            raise ConfigError("component sigma must be positive")
        if not (0 < self.weight <= 1):
            raise ConfigError("component weight must lie in (0, 1]")


@dataclass(frozen=True)
class PositiveRegion:
    """Desired set: a target mixture on one output column (regression) or an
    allowed class set (classification)."""

    input_box: Box
    output_index: int | None = None
    components: tuple[MixtureComponent, ...] = ()
    allowed_classes: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "input_box", _normalize_box(self.input_box))
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "allowed_classes", frozenset(int(c) for c in self.allowed_classes))
        if bool(self.components) == bool(self.allowed_classes):
            raise ConfigError("positive region needs either targets or an allowed class set")
        if self.components:
            if self.output_index is None or self.output_index < 0:
                raise ConfigError("regression targets need a valid output index")
            total = sum(c.weight for c in self.components)
            if abs(total - 1.0) > 1e-9:
                raise ConfigError(f"mixture weights sum to {total!r}, expected 1")

    @property
    def is_classification(self) -> bool:
        return bool(self.allowed_classes)


Region = NegativeRegion | PositiveRegion


def box_contains(box: Box, X: np.ndarray) -> np.ndarray:
    """Boolean mask of rows inside the box on every constrained dimension."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mask = np.ones(X.shape[0], dtype=bool)
    for dim, lo, hi in box:
        mask &= (X[:, dim] >= lo) & (X[:, dim] <= hi)
    return mask


def soft_indicator(z, params: SoftIndicatorParams) -> np.ndarray:
    """(tanh(-tau0 z) + 1)(tanh(-tau1 z) + 1): ~4 when z << 0, ~0 when z >> 0."""
    z = np.asarray(z, dtype=float)
    return (np.tanh(-params.tau0 * z) + 1.0) * (np.tanh(-params.tau1 * z) + 1.0)


def soft_indicator_deriv(z, params: SoftIndicatorParams) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    t0 = np.tanh(-params.tau0 * z)
    t1 = np.tanh(-params.tau1 * z)
    return -params.tau0 * (1.0 - t0 * t0) * (t1 + 1.0) - params.tau1 * (1.0 - t1 * t1) * (t0 + 1.0)


def classifier_c_batch(
    X: np.ndarray, Y: np.ndarray, region: NegativeRegion, params: SoftIndicatorParams
) -> np.ndarray:
    """Soft membership score of each (x, y) row in the forbidden region."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    total = np.zeros(X.shape[0])
    for group in region.inequality_groups:
        prod = np.ones(X.shape[0])
        for f in group:
            prod = prod * soft_indicator(f.evaluate(X, Y), params)
        total += prod
    return total


def grad_classifier_c_batch(
    X: np.ndarray, Y: np.ndarray, region: NegativeRegion, params: SoftIndicatorParams
) -> np.ndarray:
    """d(classifier score)/dy per row, shape (N, O)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    grad = np.zeros_like(Y)
    for group in region.inequality_groups:
        sigmas = []
        dsigmas = []
        fgrads = []
        for f in group:
            z = f.evaluate(X, Y)
            sigmas.append(soft_indicator(z, params))
            dsigmas.append(soft_indicator_deriv(z, params))
            fgrads.append(f.grad_y(X, Y))
        sigmas = np.stack(sigmas)  # (K, N)
        for k in range(len(group)):
            rest = np.ones(X.shape[0])
            for other in range(len(group)):
                if other != k:
                    rest = rest * sigmas[other]
            grad += (dsigmas[k] * rest)[:, None] * fgrads[k]
    return grad


def classifier_c(x, y, region: NegativeRegion, params: SoftIndicatorParams) -> float:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    y = np.asarray(y, dtype=float).reshape(1, -1)
    return float(classifier_c_batch(x, y, region, params)[0])


def grad_classifier_c(x, y, region: NegativeRegion, params: SoftIndicatorParams) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    y = np.asarray(y, dtype=float).reshape(1, -1)
    return grad_classifier_c_batch(x, y, region, params)[0]


def hard_membership(region: NegativeRegion, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Exact forbidden-set membership: some group has every f <= 0. Shape (N,)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    inside = np.zeros(X.shape[0], dtype=bool)
    for group in region.inequality_groups:
        group_ok = np.ones(X.shape[0], dtype=bool)
        for f in group:
            group_ok &= f.evaluate(X, Y) <= 0.0
        inside |= group_ok
    return inside


def sample_pi(
    region: Region, pi: SamplerPi, rng: np.random.Generator, input_dim: int
) -> np.ndarray:
    """Draw ``pi.sample_count`` input points from the region's input box."""
    m = pi.sample_count
    if pi.mode is PiMode.FIXED_POINTS:
        pts = np.asarray(pi.points, dtype=float)
        if pts.shape[1] != input_dim:
            raise ConfigError(f"fixed points have dim {pts.shape[1]}, expected {input_dim}")
        if not box_contains(region.input_box, pts).all():
            raise ConfigError("fixed points must lie inside the region's input box")
        reps = int(np.ceil(m / len(pts)))
        return np.tile(pts, (reps, 1))[:m]
    bounded = {dim: (lo, hi) for dim, lo, hi in region.input_box}
    missing = [d for d in range(input_dim) if d not in bounded]
    if missing:
        raise ConfigError(
            f"uniform box sampling needs bounds on every input dim; missing {missing}"
        )
    lo = np.array([bounded[d][0] for d in range(input_dim)])
    hi = np.array([bounded[d][1] for d in range(input_dim)])
    return rng.uniform(lo, hi, size=(m, input_dim))

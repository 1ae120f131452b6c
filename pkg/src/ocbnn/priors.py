"""Log-prior densities over the weight vector and their gradients.

The composite prior multiplies an isotropic Gaussian over the weights with one
adherence term per constrained region: a Gaussian / mixture term on desired
regions (regression), a Dirichlet term on allowed classes (classification),
and an exponential penalty on the expected soft violation score for forbidden
regions. None of the composite densities are normalized; all of them stay
finite for finite weights.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .constraints import (
    NegativeRegion,
    PositiveRegion,
    Region,
    SamplerPi,
    SoftIndicatorParams,
    classifier_c_batch,
    grad_classifier_c_batch,
    sample_pi,
)
from .core import Architecture, Stream, Task, substream
from .errors import ConfigError
from .network import backprop_batch, forward_batch, log_softmax

# Probabilities are floored before entering the Dirichlet log-density so the
# objective stays finite when the softmax saturates.
PROB_FLOOR = 1e-12
_LOG_PROB_FLOOR = math.log(PROB_FLOOR)


class ResampleMode(str, enum.Enum):
    FIXED_AT_SETUP = "fixed_at_setup"
    PER_ITERATION = "per_iteration"


@dataclass(frozen=True)
class PriorConfig:
    sigma_p: float = 1.0
    gamma: float = 10_000.0
    alpha_allowed: float = 10.0
    alpha_forbidden: float = 0.01
    indicator: SoftIndicatorParams = field(default_factory=SoftIndicatorParams)
    pi: SamplerPi = field(default_factory=SamplerPi)
    resample_mode: ResampleMode = ResampleMode.FIXED_AT_SETUP

    def __post_init__(self):
        object.__setattr__(self, "resample_mode", ResampleMode(self.resample_mode))
        if min(self.sigma_p, self.alpha_allowed, self.alpha_forbidden) <= 0:
            raise ConfigError("sigma_p and Dirichlet concentrations must be positive")
        if self.gamma < 0:
            raise ConfigError("gamma must be non-negative")
        if not self.alpha_forbidden < self.alpha_allowed:
            raise ConfigError("require alpha_forbidden < alpha_allowed")


def log_weight_prior(w: np.ndarray, sigma_p: float) -> tuple[float, np.ndarray]:
    """Isotropic Gaussian over all weights; gradient is -w / sigma_p^2."""
    if sigma_p <= 0:
        raise ConfigError("sigma_p must be positive")
    w = np.asarray(w, dtype=float)
    var = sigma_p**2
    value = -0.5 * w.size * math.log(2.0 * math.pi * var) - float(np.sum(w**2)) / (2.0 * var)
    return value, -w / var


def _resolve_samples(region, cfg: PriorConfig, rng_or_samples, input_dim: int) -> np.ndarray:
    if isinstance(rng_or_samples, np.random.Generator):
        return sample_pi(region, cfg.pi, rng_or_samples, input_dim)
    samples = np.atleast_2d(np.asarray(rng_or_samples, dtype=float))
    if samples.shape[1] != input_dim:
        raise ConfigError(f"region samples have dim {samples.shape[1]}, expected {input_dim}")
    return samples


def log_positive_regression(
    w: np.ndarray,
    arch: Architecture,
    region: PositiveRegion,
    cfg: PriorConfig,
    rng_or_samples,
) -> tuple[float, np.ndarray]:
    """Mixture-of-Gaussians adherence term on the region's output column."""
    if arch.task is not Task.REGRESSION or region.is_classification:
        raise ConfigError("Gaussian positive term applies to regression regions only")
    if region.output_index >= arch.output_dim:
        raise ConfigError(
            f"region targets y[{region.output_index}] but the network has "
            f"{arch.output_dim} outputs"
        )
    X = _resolve_samples(region, cfg, rng_or_samples, arch.input_dim)
    out = forward_batch(arch, w, X)
    phi = out[:, region.output_index]  # (M,)
    comp_logs = []
    for comp in region.components:
        t = comp.target.evaluate(X)
        var = comp.sigma**2
        comp_logs.append(
            math.log(comp.weight) - 0.5 * math.log(2.0 * math.pi * var) - (phi - t) ** 2 / (2 * var)
        )
    stacked = np.stack(comp_logs)  # (K, M)
    top = stacked.max(axis=0)
    lse = top + np.log(np.exp(stacked - top).sum(axis=0))
    value = float(lse.sum())
    resp = np.exp(stacked - lse)  # responsibilities, (K, M)
    dvalue_dphi = np.zeros_like(phi)
    for k, comp in enumerate(region.components):
        t = comp.target.evaluate(X)
        dvalue_dphi += resp[k] * (t - phi) / comp.sigma**2
    G = np.zeros_like(out)
    G[:, region.output_index] = dvalue_dphi
    return value, backprop_batch(arch, w, X, G)


def log_positive_classification(
    w: np.ndarray,
    arch: Architecture,
    region: PositiveRegion,
    cfg: PriorConfig,
    rng_or_samples,
) -> tuple[float, np.ndarray]:
    """Dirichlet adherence term over the softmax simplex at sampled inputs."""
    if arch.task is not Task.CLASSIFICATION or not region.is_classification:
        raise ConfigError("Dirichlet positive term applies to classification regions only")
    k_classes = arch.output_dim
    if not region.allowed_classes or not region.allowed_classes < set(range(k_classes)):
        raise ConfigError(
            f"allowed class set must be a non-empty proper subset of [0, {k_classes})"
        )
    alpha = np.full(k_classes, cfg.alpha_forbidden)
    alpha[sorted(region.allowed_classes)] = cfg.alpha_allowed
    log_norm = math.lgamma(float(alpha.sum())) - sum(math.lgamma(a) for a in alpha)
    X = _resolve_samples(region, cfg, rng_or_samples, arch.input_dim)
    logits = forward_batch(arch, w, X)
    logp = log_softmax(logits)
    floored = np.maximum(logp, _LOG_PROB_FLOOR)
    active = logp > _LOG_PROB_FLOOR  # floored coordinates contribute no gradient
    value = X.shape[0] * log_norm + float(((alpha - 1.0) * floored).sum())
    probs = np.exp(logp)
    coeff = (alpha - 1.0) * active
    G = coeff - probs * coeff.sum(axis=1, keepdims=True)
    return value, backprop_batch(arch, w, X, G)


def log_negative(
    w: np.ndarray,
    arch: Architecture,
    region: NegativeRegion,
    cfg: PriorConfig,
    rng_or_samples,
) -> tuple[float, np.ndarray]:
    """-gamma times the Monte-Carlo mean of the soft forbidden-region score."""
    if arch.task is not Task.REGRESSION:
        raise ConfigError("the negative prior does not apply to classification")
    X = _resolve_samples(region, cfg, rng_or_samples, arch.input_dim)
    out = forward_batch(arch, w, X)
    scores = classifier_c_batch(X, out, region, cfg.indicator)
    value = -cfg.gamma * float(scores.mean())
    G = (-cfg.gamma / X.shape[0]) * grad_classifier_c_batch(X, out, region, cfg.indicator)
    return value, backprop_batch(arch, w, X, G)


def validate_regions(arch: Architecture, regions) -> None:
    """Cross-check every region against the architecture before any compute."""
    for region in regions:
        for dim, _, _ in region.input_box:
            if dim >= arch.input_dim:
                raise ConfigError(f"region bounds x[{dim}] but inputs have dim {arch.input_dim}")
        if isinstance(region, NegativeRegion):
            if arch.task is Task.CLASSIFICATION:
                raise ConfigError("the negative prior does not apply to classification")
            for group in region.inequality_groups:
                for f in group:
                    if f.max_index("y") >= arch.output_dim or f.max_index("x") >= arch.input_dim:
                        raise ConfigError("inequality references an out-of-range variable")
        elif region.is_classification:
            if arch.task is not Task.CLASSIFICATION:
                raise ConfigError("class constraints require a classification architecture")
            if not region.allowed_classes < set(range(arch.output_dim)):
                raise ConfigError(
                    "allowed classes must form a proper subset of "
                    f"[0, {arch.output_dim})"
                )
        else:
            if arch.task is not Task.REGRESSION:
                raise ConfigError("target constraints require a regression architecture")
            if region.output_index >= arch.output_dim:
                raise ConfigError(
                    f"region targets y[{region.output_index}] but the network has "
                    f"{arch.output_dim} outputs"
                )
            for comp in region.components:
                if comp.target.max_index("x") >= arch.input_dim:
                    raise ConfigError("target function references an out-of-range input")


def _region_term(w, arch, region, cfg, samples):
    if isinstance(region, NegativeRegion):
        return log_negative(w, arch, region, cfg, samples)
    if region.is_classification:
        return log_positive_classification(w, arch, region, cfg, samples)
    return log_positive_regression(w, arch, region, cfg, samples)


def log_constraint_prior(
    w: np.ndarray,
    arch: Architecture,
    regions,
    cfg: PriorConfig,
    rng_or_samples,
) -> tuple[float, np.ndarray]:
    """Weight prior plus the matching adherence term of every region.

    ``rng_or_samples`` is either a Generator (fresh draws per region) or a list
    with one pre-drawn sample matrix per region.
    """
    validate_regions(arch, regions)
    w = np.asarray(w, dtype=float)
    value, grad = log_weight_prior(w, cfg.sigma_p)
    for i, region in enumerate(regions):
        source = rng_or_samples if isinstance(rng_or_samples, np.random.Generator) else rng_or_samples[i]
        v, g = _region_term(w, arch, region, cfg, source)
        value += v
        grad = grad + g
    return value, grad


class ConstraintPrior:
    """Bound form of the composite prior with per-region sample management.

    With ``fixed_at_setup`` resampling the region samples are drawn once from
    the constraint stream of ``seed`` and reused for every evaluation, making
    the log-density deterministic (required for HMC and for finite-difference
    checks). With ``per_iteration`` the caller passes a Generator per call.
    """

    def __init__(self, arch: Architecture, regions, cfg: PriorConfig, seed: int):
        validate_regions(arch, regions)
        self.arch = arch
        self.regions = tuple(regions)
        self.cfg = cfg
        self.seed = seed
        self._fixed: list[np.ndarray] | None = None
        if cfg.resample_mode is ResampleMode.FIXED_AT_SETUP:
            self._fixed = [
                sample_pi(region, cfg.pi, substream(seed, Stream.CONSTRAINT, i), arch.input_dim)
                for i, region in enumerate(self.regions)
            ]

    @property
    def deterministic(self) -> bool:
        return self._fixed is not None or not self.regions

    def value_and_grad(self, w: np.ndarray, rng: np.random.Generator | None = None):
        if self._fixed is not None:
            return log_constraint_prior(w, self.arch, self.regions, self.cfg, self._fixed)
        if self.regions and rng is None:
            raise ConfigError("per_iteration resampling needs an RNG at evaluation time")
        return log_constraint_prior(w, self.arch, self.regions, self.cfg, rng)

"""Black-box posterior inference: Hamiltonian Monte Carlo and Stein variational
gradient descent over the unnormalized log-joint (constraint prior + likelihood)."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .core import Architecture, Stream, substream
from .errors import ConfigError, InferenceError
from .network import Dataset, LikelihoodConfig, log_likelihood
from .priors import ConstraintPrior, PriorConfig, ResampleMode

Target = Callable[[np.ndarray], tuple[float, np.ndarray]]

# Guard for the kernel bandwidth when all particles coincide.
MIN_BANDWIDTH = 1e-6


@dataclass(frozen=True)
class HmcConfig:
    step_size: float
    leapfrog_steps: int
    burn_in: int
    n_samples: int
    thin: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.step_size <= 0:
            raise ConfigError("step_size must be positive")
        if self.leapfrog_steps < 0:
            raise ConfigError("leapfrog_steps must be >= 0")
        if self.burn_in < 0 or self.n_samples < 1 or self.thin < 1:
            raise ConfigError("burn_in >= 0, n_samples >= 1, thin >= 1 required")

    @property
    def total_iterations(self) -> int:
        return self.burn_in + self.n_samples * self.thin


@dataclass(frozen=True)
class SvgdConfig:
    n_particles: int
    n_iters: int
    step_size: float = 0.05
    adagrad_eps: float = 1e-8
    batch_size: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_particles < 1:
            raise ConfigError("n_particles must be >= 1")
        if self.n_iters < 1 or self.step_size <= 0 or self.adagrad_eps <= 0:
            raise ConfigError("n_iters, step_size and adagrad_eps must be positive")


@dataclass(frozen=True)
class PosteriorEnsemble:
    """Weight vectors representing the posterior (HMC samples or SVGD particles)."""

    architecture: Architecture
    method: str
    weights: np.ndarray  # (S, parameter_count)
    diagnostics: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "weights", weights)
        if weights.shape[0] == 0:
            raise ConfigError("ensemble must be non-empty")
        if weights.shape[1] != self.architecture.parameter_count:
            raise ConfigError(
                f"ensemble members have length {weights.shape[1]}, architecture "
                f"expects {self.architecture.parameter_count}"
            )

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "architecture": self.architecture.to_json_dict(),
            "seed": self.seed,
            "method": self.method,
            "samples": self.weights.tolist(),
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "PosteriorEnsemble":
        d = json.loads(Path(path).read_text())
        unknown = set(d) - {"architecture", "seed", "method", "samples", "diagnostics"}
        if unknown:
            raise ConfigError(f"unknown posterior-file keys: {sorted(unknown)}")
        return cls(
            architecture=Architecture.from_json_dict(d["architecture"]),
            method=d["method"],
            weights=np.asarray(d["samples"], dtype=float),
            diagnostics=d.get("diagnostics", {}),
            seed=int(d.get("seed", 0)),
        )


class LogJoint:
    """Constraint prior plus data likelihood, with value and weight gradient."""

    def __init__(
        self,
        arch: Architecture,
        data: Dataset,
        lik_cfg: LikelihoodConfig,
        regions=(),
        prior_cfg: PriorConfig | None = None,
        seed: int = 0,
    ):
        self.arch = arch
        self.data = data
        self.lik_cfg = lik_cfg
        self.prior_cfg = prior_cfg or PriorConfig()
        self.prior = ConstraintPrior(arch, regions, self.prior_cfg, seed)
        data.validate_for(arch)

    @property
    def deterministic(self) -> bool:
        return self.prior.deterministic

    def value_and_grad(
        self,
        w: np.ndarray,
        batch: np.ndarray | None = None,
        rng: np.random.Generator | None = None,
    ) -> tuple[float, np.ndarray]:
        pv, pg = self.prior.value_and_grad(w, rng)
        lv, lg = log_likelihood(self.arch, w, self.data, self.lik_cfg, batch)
        return pv + lv, pg + lg

    def __call__(self, w: np.ndarray) -> tuple[float, np.ndarray]:
        return self.value_and_grad(w)

    def iteration_target(self, rng: np.random.Generator) -> Target:
        """Per-iteration closure: draws a minibatch and, under per-iteration
        resampling, fresh region samples. Used by SVGD."""
        batch = None
        if self.lik_cfg.batch_size is not None and self.lik_cfg.batch_size < self.data.n_rows:
            batch = rng.choice(self.data.n_rows, size=self.lik_cfg.batch_size, replace=False)
        resample = (
            self.prior.cfg.resample_mode is ResampleMode.PER_ITERATION and self.prior.regions
        )
        samples = None
        if resample:
            # one shared draw per iteration, reused across particles
            from .constraints import sample_pi

            samples = [
                sample_pi(region, self.prior.cfg.pi, rng, self.arch.input_dim)
                for region in self.prior.regions
            ]

        def target(w: np.ndarray) -> tuple[float, np.ndarray]:
            if samples is not None:
                from .priors import log_constraint_prior

                pv, pg = log_constraint_prior(
                    w, self.arch, self.prior.regions, self.prior.cfg, samples
                )
            else:
                pv, pg = self.prior.value_and_grad(w)
            lv, lg = log_likelihood(self.arch, w, self.data, self.lik_cfg, batch)
            return pv + lv, pg + lg

        return target


def log_joint(
    w: np.ndarray,
    arch: Architecture,
    regions,
    prior_cfg: PriorConfig,
    data: Dataset,
    lik_cfg: LikelihoodConfig,
    batch: np.ndarray | None = None,
    rng_or_samples=None,
) -> tuple[float, np.ndarray]:
    """One-shot log-joint; prefer :class:`LogJoint` for repeated evaluation."""
    from .priors import log_constraint_prior

    if rng_or_samples is None and regions:
        raise ConfigError("regions present: pass an RNG or pre-drawn samples")
    if regions:
        pv, pg = log_constraint_prior(w, arch, regions, prior_cfg, rng_or_samples)
    else:
        from .priors import log_weight_prior

        pv, pg = log_weight_prior(w, prior_cfg.sigma_p)
    lv, lg = log_likelihood(arch, w, data, lik_cfg, batch)
    return pv + lv, pg + lg


def leapfrog(
    target: Target, w: np.ndarray, p: np.ndarray, step_size: float, n_steps: int
) -> tuple[np.ndarray, np.ndarray, float, np.ndarray, bool]:
    """Symplectic integration of Hamiltonian dynamics with identity mass.

    Returns (w', p', logp(w'), grad(w'), ok); ``ok`` is False if any state on
    the trajectory became non-finite.
    """
    w = np.asarray(w, dtype=float).copy()
    p = np.asarray(p, dtype=float).copy()
    logp, grad = target(w)
    if not (math.isfinite(logp) and np.isfinite(grad).all()):
        return w, p, logp, grad, False
    if n_steps == 0:
        return w, p, logp, grad, True
    # dU/dw = -grad(logp); half step in momentum, full steps in position
    p = p + 0.5 * step_size * grad
    for step in range(n_steps):
        w = w + step_size * p
        logp, grad = target(w)
        if not (math.isfinite(logp) and np.isfinite(grad).all() and np.isfinite(w).all()):
            return w, p, logp, grad, False
        if step < n_steps - 1:
            p = p + step_size * grad
    p = p + 0.5 * step_size * grad
    return w, p, logp, grad, True


def hmc_run(target: Target, init: np.ndarray, cfg: HmcConfig) -> tuple[np.ndarray, dict]:
    """Standard HMC with identity mass matrix and Metropolis acceptance.

    Returns the kept samples (n_samples, dim) and a diagnostics dict. The
    target must be deterministic; a stochastic potential breaks detailed
    balance.
    """
    rng = substream(cfg.seed, Stream.SAMPLER)
    w = np.asarray(init, dtype=float).copy()
    logp, _ = target(w)
    if not math.isfinite(logp):
        raise InferenceError(f"non-finite target at initialization: {logp}")
    kept = np.empty((cfg.n_samples, w.size))
    n_kept = 0
    accepted = 0
    for it in range(cfg.total_iterations):
        p = rng.standard_normal(w.size)
        h_old = -logp + 0.5 * float(p @ p)
        w_new, p_new, logp_new, _, ok = leapfrog(target, w, p, cfg.step_size, cfg.leapfrog_steps)
        if ok:
            h_new = -logp_new + 0.5 * float(p_new @ p_new)
            if math.log(rng.uniform()) < h_old - h_new:
                w, logp = w_new, logp_new
                accepted += 1
        if it >= cfg.burn_in and (it - cfg.burn_in + 1) % cfg.thin == 0:
            kept[n_kept] = w
            n_kept += 1
    diagnostics = {
        "acceptance_rate": accepted / cfg.total_iterations,
        "iterations": cfg.total_iterations,
    }
    return kept, diagnostics


def _rbf_kernel(P: np.ndarray) -> tuple[np.ndarray, float]:
    """Pairwise kernel matrix with median-heuristic bandwidth."""
    diff = P[:, None, :] - P[None, :, :]
    sq = np.sum(diff * diff, axis=-1)
    s = P.shape[0]
    if s > 1:
        iu = np.triu_indices(s, k=1)
        med = float(np.median(np.sqrt(sq[iu])))
        h = max(med * med / math.log(s + 1.0), MIN_BANDWIDTH)
    else:
        h = 1.0
    return np.exp(-sq / h), h


def svgd_step_direction(P: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Kernel-weighted gradient plus repulsion, averaged over particles."""
    K, h = _rbf_kernel(P)
    s = P.shape[0]
    driving = K @ G
    repulsion = (2.0 / h) * (K.sum(axis=1, keepdims=True) * P - K @ P)
    return (driving + repulsion) / s


def svgd_run(
    target: Target,
    init_particles: np.ndarray,
    cfg: SvgdConfig,
    per_iteration: Callable[[np.random.Generator], Target] | None = None,
) -> tuple[np.ndarray, dict]:
    """SVGD with Adagrad steps; returns the particles and a diagnostics dict.

    ``per_iteration(rng)``, when given, builds the iteration's target (fresh
    minibatch / region samples); otherwise ``target`` is used throughout.
    """
    P = np.atleast_2d(np.asarray(init_particles, dtype=float)).copy()
    if P.shape[0] != cfg.n_particles:
        raise ConfigError(f"got {P.shape[0]} init particles, config says {cfg.n_particles}")
    rng = substream(cfg.seed, Stream.SAMPLER)
    accumulator = np.zeros_like(P)
    phi = np.zeros_like(P)
    for it in range(cfg.n_iters):
        f = per_iteration(rng) if per_iteration is not None else target
        G = np.empty_like(P)
        for s in range(P.shape[0]):
            _, G[s] = f(P[s])
        if not np.isfinite(G).all():
            raise InferenceError(f"non-finite gradient at iteration {it}")
        phi = svgd_step_direction(P, G)
        accumulator += phi * phi
        P += cfg.step_size * phi / (np.sqrt(accumulator) + cfg.adagrad_eps)
    diagnostics = {
        "final_mean_grad_norm": float(np.mean(np.linalg.norm(phi, axis=1))),
        "iterations": cfg.n_iters,
    }
    return P, diagnostics


def init_from_weight_prior(
    arch: Architecture, sigma_p: float, seed: int, n: int = 1
) -> np.ndarray:
    """Draws from the isotropic weight prior; rows are weight vectors."""
    rng = substream(seed, Stream.INIT)
    return sigma_p * rng.standard_normal((n, arch.parameter_count))


def run_inference(
    log_joint_obj: LogJoint, inference_cfg: HmcConfig | SvgdConfig
) -> PosteriorEnsemble:
    """Drive the configured sampler over a log-joint and wrap the result."""
    arch = log_joint_obj.arch
    if isinstance(inference_cfg, HmcConfig):
        if not log_joint_obj.deterministic:
            raise ConfigError("HMC requires fixed_at_setup resampling (deterministic target)")
        if log_joint_obj.lik_cfg.batch_size is not None:
            raise ConfigError("HMC requires the full-batch likelihood")
        init = init_from_weight_prior(
            arch, log_joint_obj.prior_cfg.sigma_p, inference_cfg.seed, 1
        )[0]
        samples, diagnostics = hmc_run(log_joint_obj, init, inference_cfg)
        method = "hmc"
    else:
        init = init_from_weight_prior(
            arch, log_joint_obj.prior_cfg.sigma_p, inference_cfg.seed, inference_cfg.n_particles
        )
        samples, diagnostics = svgd_run(
            lambda w: log_joint_obj.value_and_grad(w),
            init,
            inference_cfg,
            per_iteration=log_joint_obj.iteration_target,
        )
        method = "svgd"
    return PosteriorEnsemble(
        architecture=arch,
        method=method,
        weights=samples,
        diagnostics=diagnostics,
        seed=inference_cfg.seed,
    )

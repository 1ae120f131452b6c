"""Output-constrained Bayesian neural networks.

A constraint prior multiplies the usual isotropic weight prior with
function-space adherence terms over user-declared regions: Gaussian or
mixture terms where the function should be, Dirichlet terms over allowed
classes, and an exponential penalty on the expected soft violation score
where the function cannot be. Posterior inference is black-box via HMC or
SVGD over the resulting unnormalized log-joint.
"""
from .constraints import (
    NegativeRegion,
    PolyExpr,
    PositiveRegion,
    SamplerPi,
    SoftIndicatorParams,
    parse_constraints,
    pretty_constraints,
)
from .core import Activation, Architecture, Task, finite_diff_grad, parameter_count, substream
from .datasets import GeneratorKind, GeneratorSpec, generate, perturb, split
from .errors import ConfigError, ConstraintSyntaxError, InferenceError, OcbnnError, OracleError
from .inference import (
    HmcConfig,
    LogJoint,
    PosteriorEnsemble,
    SvgdConfig,
    hmc_run,
    run_inference,
    svgd_run,
)
from .network import Dataset, LikelihoodConfig, backprop_scalar, forward, log_likelihood
from .predictive import (
    PredictiveSummary,
    accuracy_f1,
    metrics_report,
    posterior_predictive,
    pp_violation,
    rmse_holl,
    violation_fraction,
)
from .priors import ConstraintPrior, PriorConfig, ResampleMode, log_constraint_prior, log_weight_prior

__all__ = [
    "Activation",
    "Architecture",
    "ConfigError",
    "ConstraintPrior",
    "ConstraintSyntaxError",
    "Dataset",
    "GeneratorKind",
    "GeneratorSpec",
    "HmcConfig",
    "InferenceError",
    "LikelihoodConfig",
    "LogJoint",
    "NegativeRegion",
    "OcbnnError",
    "OracleError",
    "PolyExpr",
    "PositiveRegion",
    "PosteriorEnsemble",
    "PredictiveSummary",
    "PriorConfig",
    "ResampleMode",
    "SamplerPi",
    "SoftIndicatorParams",
    "SvgdConfig",
    "Task",
    "accuracy_f1",
    "backprop_scalar",
    "finite_diff_grad",
    "forward",
    "generate",
    "hmc_run",
    "log_constraint_prior",
    "log_likelihood",
    "log_weight_prior",
    "metrics_report",
    "parameter_count",
    "parse_constraints",
    "perturb",
    "posterior_predictive",
    "pp_violation",
    "pretty_constraints",
    "rmse_holl",
    "run_inference",
    "split",
    "substream",
    "svgd_run",
    "violation_fraction",
]

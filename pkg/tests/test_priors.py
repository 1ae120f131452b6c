import math

import numpy as np
import pytest

from ocbnn.constraints import (
    SamplerPi,
    SoftIndicatorParams,
    parse_constraints,
    soft_indicator,
)
from ocbnn.core import (
    Activation,
    Architecture,
    Task,
    finite_diff_grad,
    grad_rel_error,
    substream,
)
from ocbnn.errors import ConfigError
from ocbnn.priors import (
    ConstraintPrior,
    PriorConfig,
    ResampleMode,
    log_constraint_prior,
    log_negative,
    log_positive_classification,
    log_positive_regression,
    log_weight_prior,
)

REL_TOL = 1e-5
REG_ARCH = Architecture(1, (5,), 1)
CLS_ARCH = Architecture(2, (5,), 3, task=Task.CLASSIFICATION)


def _const_output_weights(arch, value):
    """Weights making the network output the constant `value` (zero elsewhere)."""
    w = np.zeros(arch.parameter_count)
    w[-arch.output_dim :] = value
    return w


def _samples(region, cfg, seed, input_dim):
    from ocbnn.constraints import sample_pi

    return sample_pi(region, cfg.pi, substream(seed, 0), input_dim)


def test_weight_prior_at_zero():
    value, grad = log_weight_prior(np.zeros(3), 1.0)
    assert value == pytest.approx(-1.5 * math.log(2 * math.pi), abs=1e-9)
    assert value == pytest.approx(-2.756815, abs=1e-6)
    np.testing.assert_array_equal(grad, np.zeros(3))


def test_weight_prior_gradient_matches_fd():
    rng = np.random.default_rng(1)
    w = rng.standard_normal(20)
    sigma = 0.8
    value, grad = log_weight_prior(w, sigma)
    numeric = finite_diff_grad(lambda v: log_weight_prior(v, sigma)[0], w)
    assert grad_rel_error(grad, numeric) <= 1e-6
    np.testing.assert_allclose(grad, -w / sigma**2, rtol=1e-12)


def _tilted_region():
    (region,) = parse_constraints("positive: -1 <= x[0] <= 1 : y[0] = 2.0 ~ gauss(0.5)")
    return region


def test_positive_regression_at_mode():
    region = _tilted_region()
    cfg = PriorConfig()
    w = _const_output_weights(REG_ARCH, 2.0)  # output equals the target everywhere
    X = _samples(region, cfg, 0, 1)
    value, _ = log_positive_regression(w, REG_ARCH, region, cfg, X)
    m = cfg.pi.sample_count
    assert value == pytest.approx(-(m / 2) * math.log(2 * math.pi * 0.25), rel=1e-12)


def test_positive_regression_far_mixture():
    (region,) = parse_constraints(
        "positive: -1 <= x[0] <= 1 : y[0] = 0 ~ gauss(0.5) @ 0.5 | y[0] = 100 ~ gauss(0.5) @ 0.5"
    )
    cfg = PriorConfig()
    w = _const_output_weights(REG_ARCH, 0.0)  # sits exactly on the first component
    X = _samples(region, cfg, 0, 1)
    value, _ = log_positive_regression(w, REG_ARCH, region, cfg, X)
    m = cfg.pi.sample_count
    expected = m * (math.log(0.5) - 0.5 * math.log(2 * math.pi * 0.25))
    assert value == pytest.approx(expected, rel=1e-9)


def test_positive_regression_gradient_fd():
    (region,) = parse_constraints(
        "positive: -1 <= x[0] <= 1 : y[0] = x[0]^2 - 0.5 ~ gauss(0.5) @ 0.3 | "
        "y[0] = -x[0] + 1 ~ gauss(0.8) @ 0.7"
    )
    cfg = PriorConfig()
    rng = np.random.default_rng(7)
    X = _samples(region, cfg, 0, 1)
    for _ in range(5):
        w = rng.standard_normal(REG_ARCH.parameter_count)
        value, grad = log_positive_regression(w, REG_ARCH, region, cfg, X)
        numeric = finite_diff_grad(
            lambda v: log_positive_regression(v, REG_ARCH, region, cfg, X)[0], w
        )
        assert grad_rel_error(grad, numeric) <= REL_TOL


def _class_region():
    (region,) = parse_constraints("positive: -1 <= x[0] <= 1, -1 <= x[1] <= 1 : class = 2")
    return region


def test_dirichlet_value_concentrates_on_allowed_vertex():
    region = _class_region()
    cfg = PriorConfig()
    X = _samples(region, cfg, 0, 2)
    values = []
    for t in (0.0, 2.0, 4.0, 8.0):
        w = np.zeros(CLS_ARCH.parameter_count)
        w[-1] = t  # bias of the allowed class: probs -> (eps, eps, 1 - 2 eps)
        values.append(log_positive_classification(w, CLS_ARCH, region, cfg, X)[0])
    assert all(b > a for a, b in zip(values, values[1:]))


def test_dirichlet_uniform_probs_closed_form():
    region = _class_region()
    cfg = PriorConfig(alpha_allowed=10.0, alpha_forbidden=10.0 - 1e-9)
    # nearly symmetric alpha; compare against the closed-form density at the
    # simplex center computed directly
    X = _samples(region, cfg, 0, 2)
    w = np.zeros(CLS_ARCH.parameter_count)
    value, _ = log_positive_classification(w, CLS_ARCH, region, cfg, X)
    alpha = np.array([10.0 - 1e-9, 10.0 - 1e-9, 10.0])
    log_dir = (
        math.lgamma(alpha.sum())
        - sum(math.lgamma(a) for a in alpha)
        + float((alpha - 1) @ np.log(np.full(3, 1 / 3)))
    )
    assert value == pytest.approx(len(X) * log_dir, rel=1e-9)


def test_dirichlet_gradient_fd():
    region = _class_region()
    cfg = PriorConfig()
    X = _samples(region, cfg, 0, 2)
    rng = np.random.default_rng(3)
    for _ in range(5):
        w = rng.standard_normal(CLS_ARCH.parameter_count)
        _, grad = log_positive_classification(w, CLS_ARCH, region, cfg, X)
        numeric = finite_diff_grad(
            lambda v: log_positive_classification(v, CLS_ARCH, region, cfg, X)[0], w
        )
        assert grad_rel_error(grad, numeric) <= REL_TOL


def _box_region():
    (region,) = parse_constraints("negative: -1 <= x[0] <= 1 : y[0] >= -5, y[0] <= 3")
    return region


def test_negative_far_outside_is_near_zero():
    region = _box_region()
    cfg = PriorConfig()
    w = _const_output_weights(REG_ARCH, 40.0)
    X = _samples(region, cfg, 0, 1)
    value, _ = log_negative(w, REG_ARCH, region, cfg, X)
    assert abs(value) < 1e-6


def test_negative_deep_interior_matches_indicator_product():
    region = _box_region()
    cfg = PriorConfig()
    w = _const_output_weights(REG_ARCH, -1.0)  # box center
    X = _samples(region, cfg, 0, 1)
    value, _ = log_negative(w, REG_ARCH, region, cfg, X)
    p = SoftIndicatorParams()
    c_interior = float(soft_indicator(-4.0, p) * soft_indicator(-4.0, p))
    assert value == pytest.approx(-cfg.gamma * c_interior, rel=1e-6)


def test_negative_gradient_fd():
    region = _box_region()
    cfg = PriorConfig()
    X = _samples(region, cfg, 0, 1)
    rng = np.random.default_rng(11)
    for _ in range(5):
        w = rng.standard_normal(REG_ARCH.parameter_count)
        _, grad = log_negative(w, REG_ARCH, region, cfg, X)
        numeric = finite_diff_grad(lambda v: log_negative(v, REG_ARCH, region, cfg, X)[0], w)
        assert grad_rel_error(grad, numeric) <= REL_TOL


def test_negative_scales_linearly_in_gamma():
    region = _box_region()
    X = _samples(region, PriorConfig(), 0, 1)
    rng = np.random.default_rng(2)
    w = rng.standard_normal(REG_ARCH.parameter_count)
    v1, g1 = log_negative(w, REG_ARCH, region, PriorConfig(gamma=1_000.0), X)
    v10, g10 = log_negative(w, REG_ARCH, region, PriorConfig(gamma=10_000.0), X)
    assert v10 == pytest.approx(10 * v1, rel=1e-12)
    np.testing.assert_allclose(g10, 10 * g1, rtol=1e-12)


def test_negative_monotone_along_descent_into_box():
    # constant-output family moving from above the box down to its center
    region = _box_region()
    cfg = PriorConfig()
    X = _samples(region, cfg, 0, 1)
    values = []
    for t in np.linspace(10.0, -1.0, 45):
        w = _const_output_weights(REG_ARCH, t)
        values.append(log_negative(w, REG_ARCH, region, cfg, X)[0])
    diffs = np.diff(values)
    assert (diffs <= 1e-9).all()


def test_composite_reduces_to_weight_prior():
    rng = np.random.default_rng(0)
    w = rng.standard_normal(REG_ARCH.parameter_count)
    cfg = PriorConfig()
    value, grad = log_constraint_prior(w, REG_ARCH, (), cfg, None)
    ref_value, ref_grad = log_weight_prior(w, cfg.sigma_p)
    assert value == ref_value
    np.testing.assert_array_equal(grad, ref_grad)


def test_composite_gamma_zero_equals_weight_prior():
    rng = np.random.default_rng(4)
    w = rng.standard_normal(REG_ARCH.parameter_count)
    cfg = PriorConfig(gamma=0.0)
    region = _box_region()
    X = _samples(region, cfg, 0, 1)
    value, grad = log_constraint_prior(w, REG_ARCH, (region,), cfg, [X])
    ref_value, ref_grad = log_weight_prior(w, cfg.sigma_p)
    assert value == pytest.approx(ref_value, abs=1e-12)
    np.testing.assert_allclose(grad, ref_grad, atol=1e-12)


def test_composite_matches_componentwise_sum():
    regions = parse_constraints(
        "negative: -0.3 <= x[0] <= 0.3 : y[0] <= 2.5\n"
        "negative: -0.3 <= x[0] <= 0.3 : y[0] >= 3"
    )
    cfg = PriorConfig()
    sample_sets = [_samples(r, cfg, i, 1) for i, r in enumerate(regions)]
    rng = np.random.default_rng(9)
    for _ in range(5):
        w = rng.standard_normal(REG_ARCH.parameter_count)
        value, grad = log_constraint_prior(w, REG_ARCH, regions, cfg, sample_sets)
        ref_v, ref_g = log_weight_prior(w, cfg.sigma_p)
        for region, X in zip(regions, sample_sets):
            v, g = log_negative(w, REG_ARCH, region, cfg, X)
            ref_v += v
            ref_g = ref_g + g
        assert value == pytest.approx(ref_v, rel=1e-12)
        np.testing.assert_allclose(grad, ref_g, rtol=1e-12)


def test_negative_region_rejected_for_classification():
    region = _box_region()
    with pytest.raises(ConfigError, match="classification"):
        log_constraint_prior(
            np.zeros(CLS_ARCH.parameter_count), CLS_ARCH, (region,), PriorConfig(), None
        )


def test_prior_is_finite_for_extreme_weights():
    regions = [_box_region(), _tilted_region()]
    cfg = PriorConfig()
    for region in regions:
        X = _samples(region, cfg, 0, 1)
        for scale in (1.0, 1e3, 1e6):
            w = np.full(REG_ARCH.parameter_count, scale)
            value, grad = log_constraint_prior(w, REG_ARCH, (region,), cfg, [X])
            assert math.isfinite(value)
            assert np.isfinite(grad).all()
    # classification side: saturated softmax must stay finite via the floor
    region = _class_region()
    X = _samples(region, cfg, 0, 2)
    w = np.full(CLS_ARCH.parameter_count, 50.0)
    value, grad = log_positive_classification(w, CLS_ARCH, region, cfg, X)
    assert math.isfinite(value)
    assert np.isfinite(grad).all()


def test_constraint_prior_fixed_setup_is_deterministic():
    regions = (_box_region(),)
    cfg = PriorConfig(resample_mode=ResampleMode.FIXED_AT_SETUP)
    prior = ConstraintPrior(REG_ARCH, regions, cfg, seed=5)
    w = np.ones(REG_ARCH.parameter_count)
    v1, g1 = prior.value_and_grad(w)
    v2, g2 = prior.value_and_grad(w)
    assert v1 == v2
    np.testing.assert_array_equal(g1, g2)
    assert prior.deterministic


def test_constraint_prior_per_iteration_needs_rng():
    regions = (_box_region(),)
    cfg = PriorConfig(resample_mode=ResampleMode.PER_ITERATION)
    prior = ConstraintPrior(REG_ARCH, regions, cfg, seed=5)
    assert not prior.deterministic
    with pytest.raises(ConfigError):
        prior.value_and_grad(np.ones(REG_ARCH.parameter_count))
    v1, _ = prior.value_and_grad(np.ones(REG_ARCH.parameter_count), substream(1, 0))
    v2, _ = prior.value_and_grad(np.ones(REG_ARCH.parameter_count), substream(1, 0))
    assert v1 == v2  # same stream state, same draw

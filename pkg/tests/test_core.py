import numpy as np
import pytest

from ocbnn.core import (
    Architecture,
    FD_REL_TOL,
    finite_diff_grad,
    flatten,
    grad_rel_error,
    parameter_count,
    substream,
    unflatten,
)
from ocbnn.errors import ConfigError, OracleError


def test_parameter_count_examples():
    assert parameter_count(Architecture(1, (10,), 1)) == 31
    assert parameter_count(Architecture(2, (10,), 3)) == 63
    assert parameter_count(Architecture(9, (200, 200), 2)) == 42602


def test_architecture_validation():
    with pytest.raises(ConfigError):
        Architecture(0, (10,), 1)
    with pytest.raises(ConfigError):
        Architecture(1, (), 1)
    with pytest.raises(ConfigError):
        Architecture(1, (10, 0), 1)


def test_flatten_round_trip_random_shapes():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n_hidden = rng.integers(1, 4)
        arch = Architecture(
            int(rng.integers(1, 6)),
            tuple(int(h) for h in rng.integers(1, 8, size=n_hidden)),
            int(rng.integers(1, 5)),
        )
        w = rng.standard_normal(arch.parameter_count)
        layers = unflatten(arch, w)
        assert all(W.shape == (s.fan_in, s.fan_out) for (W, _), s in zip(layers, _slices(arch)))
        back = flatten(arch, layers)
        np.testing.assert_array_equal(back, w)


def _slices(arch):
    from ocbnn.core import layer_slices

    return layer_slices(arch)


def test_unflatten_rejects_wrong_length():
    arch = Architecture(1, (10,), 1)
    with pytest.raises(ConfigError):
        unflatten(arch, np.zeros(30))


def test_finite_diff_quadratic():
    grad = finite_diff_grad(lambda w: float(np.sum(w**2)), np.array([1.0, 2.0]))
    np.testing.assert_allclose(grad, [2.0, 4.0], atol=1e-8)


def test_finite_diff_constant():
    grad = finite_diff_grad(lambda w: 3.5, np.zeros(4))
    np.testing.assert_array_equal(grad, np.zeros(4))


def test_finite_diff_matches_gaussian_gradient():
    # oracle for the oracle: the closed-form isotropic Gaussian log-density gradient
    rng = np.random.default_rng(11)
    w = rng.standard_normal(12)
    sigma = 0.7

    def logpdf(v):
        return float(-0.5 * np.sum(v**2) / sigma**2)

    analytic = -w / sigma**2
    numeric = finite_diff_grad(logpdf, w)
    assert grad_rel_error(analytic, numeric) <= 1e-6


def test_finite_diff_reports_non_finite():
    with pytest.raises(OracleError):
        finite_diff_grad(lambda w: float("nan"), np.zeros(2))


def test_substreams_are_deterministic_and_distinct():
    a1 = substream(42, 3).standard_normal(5)
    a2 = substream(42, 3).standard_normal(5)
    b = substream(42, 4).standard_normal(5)
    np.testing.assert_array_equal(a1, a2)
    assert not np.allclose(a1, b)


def test_fd_rel_tol_is_pinned():
    assert FD_REL_TOL == 1e-5

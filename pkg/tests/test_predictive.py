import math

import numpy as np
import pytest

from ocbnn.constraints import SoftIndicatorParams, classifier_c, parse_constraints
from ocbnn.core import Architecture, Task
from ocbnn.errors import ConfigError
from ocbnn.inference import PosteriorEnsemble
from ocbnn.network import forward_batch, softmax
from ocbnn.predictive import (
    SIGMA_FLOOR,
    PredictiveSummary,
    accuracy_f1,
    grid_points,
    metrics_report,
    posterior_predictive,
    pp_violation,
    rmse_holl,
    violation_fraction,
)

REG_ARCH = Architecture(1, (4,), 1)
CLS_ARCH = Architecture(2, (4,), 2, task=Task.CLASSIFICATION)


def _reg_ensemble(n_members, seed=0):
    rng = np.random.default_rng(seed)
    return PosteriorEnsemble(
        REG_ARCH, "hmc", rng.standard_normal((n_members, REG_ARCH.parameter_count))
    )


def test_single_member_summary():
    ens = _reg_ensemble(1)
    X = np.linspace(-1, 1, 7)[:, None]
    summary = posterior_predictive(ens, X)
    np.testing.assert_allclose(summary.mean, forward_batch(REG_ARCH, ens.weights[0], X))
    np.testing.assert_array_equal(summary.std, np.zeros_like(summary.mean))


def test_two_member_statistics():
    ens = _reg_ensemble(2)
    X = np.array([[0.3]])
    a = forward_batch(REG_ARCH, ens.weights[0], X)[0, 0]
    b = forward_batch(REG_ARCH, ens.weights[1], X)[0, 0]
    summary = posterior_predictive(ens, X)
    assert summary.mean[0, 0] == pytest.approx((a + b) / 2, rel=1e-12)
    assert summary.std[0, 0] == pytest.approx(abs(a - b) / 2, rel=1e-12)


def test_summary_matches_naive_recomputation():
    ens = _reg_ensemble(9, seed=4)
    X = np.linspace(-2, 2, 11)[:, None]
    summary = posterior_predictive(ens, X)
    outs = np.array([[forward_batch(REG_ARCH, w, X)[i, 0] for w in ens.weights] for i in range(11)])
    np.testing.assert_allclose(summary.mean[:, 0], outs.mean(axis=1), atol=1e-12)
    np.testing.assert_allclose(summary.std[:, 0], outs.std(axis=1), atol=1e-12)
    np.testing.assert_allclose(summary.q05[:, 0], np.quantile(outs, 0.05, axis=1), atol=1e-12)


def test_classification_probs_sum_to_one():
    rng = np.random.default_rng(3)
    ens = PosteriorEnsemble(CLS_ARCH, "svgd", rng.standard_normal((5, CLS_ARCH.parameter_count)))
    summary = posterior_predictive(ens, rng.standard_normal((6, 2)))
    np.testing.assert_allclose(summary.class_probs.sum(axis=1), np.ones(6), atol=1e-9)
    member_probs = softmax(summary.samples)
    np.testing.assert_allclose(summary.class_probs, member_probs.mean(axis=0), atol=1e-12)


def _cls_summary(pred_labels):
    pred_labels = np.asarray(pred_labels)
    n = len(pred_labels)
    probs = np.zeros((n, 2))
    probs[np.arange(n), pred_labels] = 1.0
    return PredictiveSummary(
        inputs=np.zeros((n, 2)),
        samples=np.zeros((1, n, 2)),
        mean=np.zeros((n, 2)),
        std=np.zeros((n, 2)),
        q05=np.zeros((n, 2)),
        q95=np.zeros((n, 2)),
        class_probs=probs,
        labels=pred_labels,
    )


def test_accuracy_f1_all_correct():
    summary = _cls_summary([1, 0, 1, 0])
    acc, f1 = accuracy_f1(summary, [1, 0, 1, 0])
    assert (acc, f1) == (1.0, 1.0)


def test_accuracy_f1_zero_recall():
    summary = _cls_summary([0, 0, 0, 0])
    acc, f1 = accuracy_f1(summary, [1, 1, 0, 0])
    assert acc == 0.5
    assert f1 == 0.0


def test_accuracy_f1_hand_counted():
    summary = _cls_summary([1, 1, 0, 0])
    acc, f1 = accuracy_f1(summary, [1, 0, 0, 1])
    assert acc == 0.5
    assert f1 == pytest.approx(0.5)


def test_accuracy_f1_rejects_multiclass():
    summary = _cls_summary([0, 1])
    with pytest.raises(ConfigError):
        accuracy_f1(summary, [0, 2])


BOX = parse_constraints("negative: -1 <= x[0] <= 1 : y[0] >= -5, y[0] <= 3")


def _reg_summary(inputs, member_outputs):
    member_outputs = np.asarray(member_outputs, dtype=float)  # (S, N)
    samples = member_outputs[:, :, None]
    mean = samples.mean(axis=0)
    return PredictiveSummary(
        inputs=np.asarray(inputs, dtype=float).reshape(-1, 1),
        samples=samples,
        mean=mean,
        std=samples.std(axis=0),
        q05=np.quantile(samples, 0.05, axis=0),
        q95=np.quantile(samples, 0.95, axis=0),
    )


def test_violation_fraction_counts():
    # 8 in-region points, means: 3 inside the box, 5 outside
    inputs = np.concatenate([np.linspace(-0.9, 0.9, 8), [4.0, 5.0]])
    means = np.array([0.0, 1.0, 2.0, 5.0, 6.0, 7.0, 8.0, 9.0, 0.0, 0.0])
    summary = _reg_summary(inputs, means[None, :])
    assert violation_fraction(summary, BOX) == pytest.approx(3 / 8)


def test_violation_fraction_not_applicable():
    summary = _reg_summary([4.0, 5.0], [[0.0, 0.0]])
    assert violation_fraction(summary, BOX) is None


def test_pp_violation_quarter():
    # four members, one inside the box at the single in-region point
    summary = _reg_summary([0.0], [[0.0], [10.0], [11.0], [12.0]])
    assert pp_violation(summary, BOX) == pytest.approx(25.0)


def test_pp_violation_extremes():
    summary = _reg_summary([0.0, 0.5], [[10.0, 10.0], [11.0, 11.0]])
    assert pp_violation(summary, BOX) == 0.0
    summary = _reg_summary([0.0, 0.5], [[0.0, 0.0], [1.0, 1.0]])
    assert pp_violation(summary, BOX) == 100.0


def test_pp_violation_permutation_invariant():
    rng = np.random.default_rng(8)
    inputs = rng.uniform(-2, 2, size=12)
    outs = rng.uniform(-8, 8, size=(6, 12))
    base = pp_violation(_reg_summary(inputs, outs), BOX)
    perm_members = rng.permutation(6)
    perm_points = rng.permutation(12)
    shuffled = pp_violation(_reg_summary(inputs[perm_points], outs[perm_members][:, perm_points]), BOX)
    assert shuffled == pytest.approx(base, rel=1e-12)


def test_hard_membership_consistent_with_soft_classifier():
    from ocbnn.constraints import hard_membership

    rng = np.random.default_rng(1)
    params = SoftIndicatorParams()
    for _ in range(50):
        lo_y, hi_y = (float(v) for v in np.sort(rng.uniform(-5, 5, size=2)))
        if hi_y - lo_y < 0.5:
            continue
        (region,) = parse_constraints(
            f"negative: -1 <= x[0] <= 1 : y[0] >= {lo_y!r}, y[0] <= {hi_y!r}"
        )
        for _ in range(20):
            x = rng.uniform(-1, 1, size=1)
            y = rng.uniform(lo_y - 5, hi_y + 5, size=1)
            c = classifier_c(x, y, region, params)
            member = bool(hard_membership(region, x[None, :], y[None, :])[0])
            if c > 3.9:
                assert member
            if c < 1e-6:
                assert not member


def test_rmse_holl_at_perfect_fit():
    summary = _reg_summary([0.0, 1.0, 2.0], np.array([[1.0, 2.0, 3.0]]))
    object.__setattr__(summary, "std", np.ones_like(summary.std))
    rmse, holl = rmse_holl(summary, np.array([[1.0], [2.0], [3.0]]))
    assert rmse == 0.0
    assert holl == pytest.approx(-(3 / 2) * math.log(2 * math.pi), rel=1e-6)


def test_rmse_constant_offset():
    summary = _reg_summary([0.0, 1.0], np.array([[1.5, 2.5]]))
    rmse, _ = rmse_holl(summary, np.array([[1.0], [2.0]]))
    assert rmse == pytest.approx(0.5)


def test_rmse_holl_matches_direct_formula():
    rng = np.random.default_rng(5)
    outs = rng.standard_normal((7, 4))
    targets = rng.standard_normal((4, 1))
    summary = _reg_summary(np.arange(4.0), outs)
    rmse, holl = rmse_holl(summary, targets)
    mu = outs.mean(axis=0)[:, None]
    var = outs.std(axis=0)[:, None] ** 2 + SIGMA_FLOOR**2
    ref_rmse = math.sqrt(float(np.mean((mu - targets) ** 2)))
    ref_holl = float(np.sum(-0.5 * np.log(2 * math.pi * var) - (targets - mu) ** 2 / (2 * var)))
    assert rmse == pytest.approx(ref_rmse, rel=1e-10)
    assert holl == pytest.approx(ref_holl, rel=1e-10)


def test_metrics_report_subsets():
    summary = _reg_summary([0.0], [[10.0]])
    report = metrics_report(summary, BOX, targets=np.array([[10.0]]))
    assert set(report) == {"rmse", "holl", "viol", "pp_viol"}
    report = metrics_report(summary, (), targets=np.array([[10.0]]))
    assert set(report) == {"rmse", "holl"}


def test_grid_points_shapes():
    g1 = grid_points([-5.0], [5.0], [101])
    assert g1.shape == (101, 1)
    assert g1[0, 0] == -5.0 and g1[-1, 0] == 5.0
    g2 = grid_points([-1.0, 0.0], [1.0, 2.0], [3, 5])
    assert g2.shape == (15, 2)
    assert sorted(set(g2[:, 0])) == [-1.0, 0.0, 1.0]

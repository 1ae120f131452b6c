import numpy as np
import pytest

from ocbnn.constraints import parse_constraints
from ocbnn.datasets import (
    GeneratorKind,
    GeneratorSpec,
    dataset_csv_text,
    filter_constrained,
    generate,
    perturb,
    quartic_curve,
    read_dataset_csv,
    split,
    write_dataset_csv,
)
from ocbnn.errors import ConfigError
from ocbnn.network import Dataset


def test_quartic_values():
    assert quartic_curve(np.array([0.0]))[0] == 1.0
    assert quartic_curve(np.array([1.0]))[0] == 3.0


def test_quartic_noise_free_lies_on_curve():
    spec = GeneratorSpec(kind=GeneratorKind.QUARTIC_1D, n_points=200, noise_sigma=0.0, seed=1)
    data = generate(spec)
    np.testing.assert_array_equal(data.targets[:, 0], quartic_curve(data.inputs[:, 0]))


def test_quartic_respects_ranges():
    spec = GeneratorSpec(
        kind=GeneratorKind.QUARTIC_1D,
        n_points=500,
        x_ranges=((-2.0, -0.5), (0.5, 2.0)),
        seed=2,
    )
    x = generate(spec).inputs[:, 0]
    assert ((np.abs(x) >= 0.5) & (np.abs(x) <= 2.0)).all()
    assert (x < 0).any() and (x > 0).any()


def test_three_gaussians_degenerate_std():
    spec = GeneratorSpec(kind=GeneratorKind.THREE_GAUSSIANS_2D, class_std=0.0, seed=0)
    data = generate(spec)
    assert data.n_rows == 24
    np.testing.assert_array_equal(data.inputs[:8], np.tile([-3.0, 1.0], (8, 1)))
    np.testing.assert_array_equal(data.targets[:8], np.zeros(8, dtype=int))


def test_sparse_points_passthrough():
    spec = GeneratorSpec(
        kind=GeneratorKind.SPARSE_POINTS,
        point_inputs=((-1.5,), (0.0,), (1.5,)),
        point_targets=((0.5,), (1.0,), (0.5,)),
    )
    data = generate(spec)
    np.testing.assert_array_equal(data.inputs[:, 0], [-1.5, 0.0, 1.5])
    np.testing.assert_array_equal(data.targets[:, 0], [0.5, 1.0, 0.5])


def test_clinical_surrogate_threshold_rule():
    spec = GeneratorSpec(kind=GeneratorKind.CLINICAL_SURROGATE, n_points=10_000, seed=5)
    data = generate(spec)
    assert data.inputs.shape == (10_000, 9)
    assert data.feature_names[0] == "mean_bp"
    below = data.inputs[:, 0] < 65.0
    rate = data.targets[below].mean()
    assert below.sum() > 200
    assert abs(rate - 0.95) < 0.02


def test_clinical_surrogate_roughly_balanced():
    spec = GeneratorSpec(kind=GeneratorKind.CLINICAL_SURROGATE, n_points=20_000, seed=6)
    data = generate(spec)
    assert 0.4 < data.targets.mean() < 0.65


def test_generators_are_deterministic():
    for spec in (
        GeneratorSpec(kind=GeneratorKind.QUARTIC_1D, n_points=50, noise_sigma=0.1, seed=9),
        GeneratorSpec(kind=GeneratorKind.THREE_GAUSSIANS_2D, seed=9),
        GeneratorSpec(kind=GeneratorKind.CLINICAL_SURROGATE, n_points=100, seed=9),
    ):
        a, b = generate(spec), generate(spec)
        np.testing.assert_array_equal(a.inputs, b.inputs)
        np.testing.assert_array_equal(a.targets, b.targets)


def test_perturb_zero_sigma_is_identity():
    data = generate(GeneratorSpec(kind=GeneratorKind.QUARTIC_1D, n_points=20, seed=0))
    same = perturb(data, 0.0, seed=3)
    np.testing.assert_array_equal(same.inputs, data.inputs)


def test_perturb_deterministic_and_leaves_targets():
    data = generate(GeneratorSpec(kind=GeneratorKind.QUARTIC_1D, n_points=30, seed=0))
    p1 = perturb(data, 2.0, seed=3)
    p2 = perturb(data, 2.0, seed=3)
    np.testing.assert_array_equal(p1.inputs, p2.inputs)
    np.testing.assert_array_equal(p1.targets, data.targets)
    assert not np.allclose(p1.inputs, data.inputs)


def test_perturb_moment_check():
    rng = np.random.default_rng(0)
    data = Dataset(rng.standard_normal((2500, 4)), rng.standard_normal((2500, 1)))
    noisy = perturb(data, 2.0, seed=11)
    added = noisy.inputs - data.inputs
    assert abs(added.std() - 2.0) / 2.0 < 0.03


def test_split_sizes_and_exhaustive():
    data = generate(GeneratorSpec(kind=GeneratorKind.QUARTIC_1D, n_points=10, seed=0))
    train, test = split(data, 0.5, seed=1)
    assert (train.n_rows, test.n_rows) == (5, 5)
    merged = np.vstack([train.inputs, test.inputs])
    np.testing.assert_array_equal(np.sort(merged, axis=0), np.sort(data.inputs, axis=0))
    train2, _ = split(data, 0.5, seed=1)
    np.testing.assert_array_equal(train.inputs, train2.inputs)


def test_split_rejects_empty_side():
    data = generate(GeneratorSpec(kind=GeneratorKind.QUARTIC_1D, n_points=3, seed=0))
    with pytest.raises(ConfigError):
        split(data, 0.05, seed=0)


def test_filter_constrained():
    regions = parse_constraints("positive: 40 <= x[0] <= 65, -5 <= x[1] <= 5 : class = 1")
    inputs = np.array([[50.0, 0.0], [70.0, 0.0], [60.0, 10.0], [64.9, -1.0]])
    data = Dataset(inputs, np.array([1, 0, 1, 1]))
    kept = filter_constrained(data, regions)
    # rows inside the box (bp in [40, 65] and x1 in [-5, 5]) are dropped
    np.testing.assert_array_equal(kept.inputs[:, 0], [70.0, 60.0])


def test_filter_constrained_no_overlap_is_identity():
    regions = parse_constraints("positive: 100 <= x[0] <= 200 : class = 1")
    data = Dataset(np.array([[1.0], [2.0]]), np.array([0, 1]))
    kept = filter_constrained(data, regions)
    assert kept.n_rows == 2


def test_csv_round_trip_regression(tmp_path):
    data = generate(GeneratorSpec(kind=GeneratorKind.QUARTIC_1D, n_points=17, noise_sigma=0.1, seed=4))
    path = tmp_path / "d.csv"
    write_dataset_csv(data, path)
    back = read_dataset_csv(path)
    np.testing.assert_array_equal(back.inputs, data.inputs)
    np.testing.assert_array_equal(back.targets, data.targets)
    assert not back.is_classification


def test_csv_round_trip_classification(tmp_path):
    data = generate(GeneratorSpec(kind=GeneratorKind.THREE_GAUSSIANS_2D, seed=4))
    path = tmp_path / "d.csv"
    write_dataset_csv(data, path)
    back = read_dataset_csv(path)
    assert back.is_classification
    np.testing.assert_array_equal(back.targets, data.targets)


def test_csv_text_is_deterministic():
    spec = GeneratorSpec(kind=GeneratorKind.QUARTIC_1D, n_points=9, noise_sigma=0.2, seed=8)
    assert dataset_csv_text(generate(spec)) == dataset_csv_text(generate(spec))


def test_csv_parse_error_reports_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x1,y1\n1.0,2.0\noops,3.0\n")
    with pytest.raises(ConfigError, match="row 3"):
        read_dataset_csv(path)

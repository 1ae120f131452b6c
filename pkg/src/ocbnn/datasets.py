"""Synthetic dataset generators, CSV ingestion, perturbation, and splits.

All generators are pure functions of their spec (including its seed); the
clinical surrogate is an explicitly synthetic stand-in shaped like a
9-feature hypotension-management task, with no claim of matching any real
clinical distribution.
"""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constraints import PositiveRegion, box_contains
from .core import Stream, substream
from .errors import ConfigError
from .network import Dataset


def quartic_curve(x: np.ndarray) -> np.ndarray:
    """The 1-d generating function: -x^4 + 3x^2 + 1."""
    return -(x**4) + 3.0 * x**2 + 1.0


class GeneratorKind(str, enum.Enum):
    QUARTIC_1D = "quartic_1d"
    THREE_GAUSSIANS_2D = "three_gaussians_2d"
    SPARSE_POINTS = "sparse_points"
    CLINICAL_SURROGATE = "clinical_surrogate"
    CSV = "csv"


# Fixed mixing weights of the surrogate's above-threshold label rule; the
# blood-pressure column enters through a separate trend term.
_SURROGATE_COEFFS = np.array([0.9, -0.7, 0.5, 0.3, 0.0, 0.0, 0.0, 0.0])
_SURROGATE_FEATURES = (
    "mean_bp",
    "lactate",
    "heart_rate",
    "creatinine",
    "urine_output",
    "fio2",
    "spo2",
    "age",
    "gcs",
)


@dataclass(frozen=True)
class GeneratorSpec:
    kind: GeneratorKind
    n_points: int = 0
    noise_sigma: float = 0.0
    seed: int = 0
    # quartic_1d: x drawn uniformly over the union of these ranges
    x_ranges: tuple[tuple[float, float], ...] = ((-2.0, 2.0),)
    # three_gaussians_2d
    class_means: tuple[tuple[float, float], ...] = ((-3.0, 1.0), (0.0, -3.0), (2.0, 3.0))
    class_std: float = 0.8
    points_per_class: int = 8
    # sparse_points: explicit rows
    point_inputs: tuple[tuple[float, ...], ...] = ()
    point_targets: tuple[tuple[float, ...], ...] = ()
    # clinical_surrogate
    bp_mean: float = 81.0
    bp_std: float = 10.0
    threshold: float = 65.0
    p_action_below: float = 0.95
    bp_trend: float = 0.8
    # csv
    csv_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GeneratorKind(self.kind))
        object.__setattr__(self, "x_ranges", tuple(tuple(map(float, r)) for r in self.x_ranges))
        object.__setattr__(
            self, "class_means", tuple(tuple(map(float, m)) for m in self.class_means)
        )
        object.__setattr__(
            self, "point_inputs", tuple(tuple(map(float, p)) for p in self.point_inputs)
        )
        object.__setattr__(
            self, "point_targets", tuple(tuple(map(float, p)) for p in self.point_targets)
        )
        if self.n_points < 0 or self.noise_sigma < 0:
            raise ConfigError("n_points and noise_sigma must be non-negative")


def _generate_quartic(spec: GeneratorSpec, rng: np.random.Generator) -> Dataset:
    lengths = np.array([hi - lo for lo, hi in spec.x_ranges])
    if (lengths <= 0).any():
        raise ConfigError("x_ranges must have positive length")
    which = rng.choice(len(lengths), size=spec.n_points, p=lengths / lengths.sum())
    u = rng.uniform(size=spec.n_points)
    x = np.array([spec.x_ranges[i][0] + u_ * lengths[i] for i, u_ in zip(which, u)])
    y = quartic_curve(x)
    if spec.noise_sigma > 0:
        y = y + spec.noise_sigma * rng.standard_normal(spec.n_points)
    return Dataset(x[:, None], y[:, None], feature_names=("x1",))


def _generate_gaussians(spec: GeneratorSpec, rng: np.random.Generator) -> Dataset:
    inputs = []
    labels = []
    for k, mean in enumerate(spec.class_means):
        pts = np.asarray(mean) + spec.class_std * rng.standard_normal((spec.points_per_class, 2))
        inputs.append(pts)
        labels.extend([k] * spec.points_per_class)
    return Dataset(np.vstack(inputs), np.array(labels, dtype=np.int64), ("x1", "x2"))


def _generate_sparse(spec: GeneratorSpec) -> Dataset:
    if not spec.point_inputs or len(spec.point_inputs) != len(spec.point_targets):
        raise ConfigError("sparse_points needs matching point_inputs and point_targets")
    return Dataset(np.asarray(spec.point_inputs), np.asarray(spec.point_targets, dtype=float))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _generate_clinical(spec: GeneratorSpec, rng: np.random.Generator) -> Dataset:
    n = spec.n_points
    bp = spec.bp_mean + spec.bp_std * rng.standard_normal(n)
    others = rng.standard_normal((n, 8))
    features = np.column_stack([bp, others])
    below = bp < spec.threshold
    # above threshold the action probability mixes other features with a mild
    # downward blood-pressure trend, so low pressures hint at action
    logits = others @ _SURROGATE_COEFFS + spec.bp_trend * (spec.bp_mean - bp) / spec.bp_std
    p_action = np.where(below, spec.p_action_below, _sigmoid(logits))
    labels = (rng.uniform(size=n) < p_action).astype(np.int64)
    return Dataset(features, labels, _SURROGATE_FEATURES)


def generate(spec: GeneratorSpec) -> Dataset:
    rng = substream(spec.seed, Stream.DATA)
    if spec.kind is GeneratorKind.QUARTIC_1D:
        return _generate_quartic(spec, rng)
    if spec.kind is GeneratorKind.THREE_GAUSSIANS_2D:
        return _generate_gaussians(spec, rng)
    if spec.kind is GeneratorKind.SPARSE_POINTS:
        return _generate_sparse(spec)
    if spec.kind is GeneratorKind.CLINICAL_SURROGATE:
        return _generate_clinical(spec, rng)
    if spec.csv_path is None:
        raise ConfigError("csv generator needs csv_path")
    return read_dataset_csv(spec.csv_path)


def perturb(data: Dataset, sigma: float, seed: int, columns=None) -> Dataset:
    """Add iid N(0, sigma^2) noise to the given input columns (default: all);
    targets are left untouched."""
    if sigma < 0:
        raise ConfigError("sigma must be non-negative")
    if sigma == 0:
        return data
    rng = substream(seed, Stream.PERTURB)
    inputs = data.inputs.copy()
    cols = list(range(inputs.shape[1])) if columns is None else list(columns)
    inputs[:, cols] += sigma * rng.standard_normal((inputs.shape[0], len(cols)))
    return Dataset(inputs, data.targets, data.feature_names)


def split(data: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint, exhaustive, seed-deterministic shuffle split."""
    if not 0 < train_fraction < 1:
        raise ConfigError("train_fraction must lie strictly between 0 and 1")
    n = data.n_rows
    n_train = int(round(n * train_fraction))
    if n_train == 0 or n_train == n:
        raise ConfigError(f"split of {n} rows at fraction {train_fraction} leaves a side empty")
    perm = substream(seed, Stream.SPLIT).permutation(n)
    return data.subset(np.sort(perm[:n_train])), data.subset(np.sort(perm[n_train:]))


def filter_constrained(data: Dataset, regions) -> Dataset:
    """Drop rows whose input falls in any positive region's input box."""
    keep = np.ones(data.n_rows, dtype=bool)
    for region in regions:
        if isinstance(region, PositiveRegion):
            keep &= ~box_contains(region.input_box, data.inputs)
    return data.subset(np.flatnonzero(keep))


def _format_cell(value: float) -> str:
    return repr(float(value))


def dataset_csv_text(data: Dataset) -> str:
    """Render a dataset as CSV: columns x1..xD then y1..yO or label."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    d = data.inputs.shape[1]
    header = [f"x{i + 1}" for i in range(d)]
    if data.is_classification:
        header.append("label")
    else:
        header.extend(f"y{j + 1}" for j in range(data.targets.shape[1]))
    writer.writerow(header)
    for i in range(data.n_rows):
        row = [_format_cell(v) for v in data.inputs[i]]
        if data.is_classification:
            row.append(str(int(data.targets[i])))
        else:
            row.extend(_format_cell(v) for v in data.targets[i])
        writer.writerow(row)
    return buf.getvalue()


def write_dataset_csv(data: Dataset, path) -> None:
    Path(path).write_text(dataset_csv_text(data))


def read_dataset_csv(path) -> Dataset:
    """Read the dataset CSV format; the task is inferred from the header."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty CSV") from None
        n_inputs = sum(1 for name in header if name.startswith("x"))
        has_label = "label" in header
        n_targets = len(header) - n_inputs - (1 if has_label else 0)
        if n_inputs == 0 or (not has_label and n_targets == 0) or (has_label and n_targets):
            raise ConfigError(f"{path}: header must be x1..xD then y1..yO or label")
        inputs, targets = [], []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ConfigError(f"{path}: row {row_no} has {len(row)} cells, expected {len(header)}")
            try:
                inputs.append([float(v) for v in row[:n_inputs]])
                if has_label:
                    targets.append(int(row[n_inputs]))
                else:
                    targets.append([float(v) for v in row[n_inputs:]])
            except ValueError as exc:
                raise ConfigError(f"{path}: row {row_no}: {exc}") from None
    if not inputs:
        raise ConfigError(f"{path}: no data rows")
    target_arr = np.asarray(targets, dtype=np.int64 if has_label else float)
    return Dataset(np.asarray(inputs, dtype=float), target_arr)

"""Posterior-predictive summaries and the evaluation metrics."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constraints import NegativeRegion, PositiveRegion, box_contains, hard_membership
from .core import Task
from .errors import ConfigError
from .inference import PosteriorEnsemble
from .network import forward_batch, softmax

# Variance floor inside the held-out log-likelihood; keeps it finite when the
# ensemble degenerates to a point.
SIGMA_FLOOR = 1e-6


@dataclass(frozen=True)
class PredictiveSummary:
    """Per-query-point statistics of the ensemble's outputs.

    ``samples`` holds the raw member outputs (logits for classification),
    shape (ensemble, n_points, output_dim). ``class_probs``/``labels`` are
    filled for classification only.
    """

    inputs: np.ndarray
    samples: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    q05: np.ndarray
    q95: np.ndarray
    class_probs: np.ndarray | None = None
    labels: np.ndarray | None = None

    @property
    def n_points(self) -> int:
        return self.inputs.shape[0]


def posterior_predictive(ensemble: PosteriorEnsemble, query_inputs) -> PredictiveSummary:
    """Forward passes of every ensemble member over the query points."""
    X = np.atleast_2d(np.asarray(query_inputs, dtype=float))
    arch = ensemble.architecture
    if X.shape[1] != arch.input_dim:
        raise ConfigError(f"query points have dim {X.shape[1]}, expected {arch.input_dim}")
    outs = np.stack([forward_batch(arch, w, X) for w in ensemble.weights])
    class_probs = None
    labels = None
    if arch.task is Task.CLASSIFICATION:
        class_probs = softmax(outs).mean(axis=0)
        labels = np.argmax(class_probs, axis=1)  # ties break to the lowest index
    return PredictiveSummary(
        inputs=X,
        samples=outs,
        mean=outs.mean(axis=0),
        std=outs.std(axis=0),
        q05=np.quantile(outs, 0.05, axis=0),
        q95=np.quantile(outs, 0.95, axis=0),
        class_probs=class_probs,
        labels=labels,
    )


def accuracy(summary: PredictiveSummary, labels) -> float:
    labels = np.asarray(labels, dtype=int)
    if summary.labels is None:
        raise ConfigError("accuracy needs a classification summary")
    return float(np.mean(summary.labels == labels))


def accuracy_f1(summary: PredictiveSummary, labels) -> tuple[float, float]:
    """Accuracy and F1 with positive class 1; binary labels only."""
    labels = np.asarray(labels, dtype=int)
    if summary.labels is None:
        raise ConfigError("accuracy_f1 needs a classification summary")
    present = set(np.unique(labels)) | set(np.unique(summary.labels))
    if not present <= {0, 1}:
        raise ConfigError(f"accuracy_f1 is defined for binary labels, got {sorted(present)}")
    pred = summary.labels
    acc = float(np.mean(pred == labels))
    tp = int(np.sum((pred == 1) & (labels == 1)))
    fp = int(np.sum((pred == 1) & (labels == 0)))
    fn = int(np.sum((pred == 0) & (labels == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return acc, f1


def _negative_regions(regions) -> list[NegativeRegion]:
    return [r for r in regions if isinstance(r, NegativeRegion)]


def _positive_regions(regions) -> list[PositiveRegion]:
    return [r for r in regions if isinstance(r, PositiveRegion)]


def violation_fraction(summary: PredictiveSummary, regions) -> float | None:
    """Fraction of in-region points whose point prediction breaks a constraint.

    Classification: the predicted label must be allowed by every positive
    region containing the input. Regression: the predictive mean must stay
    outside every forbidden region. Points outside all constrained input boxes
    are excluded; returns None when no point is in any region (not applicable).
    """
    X = summary.inputs
    if summary.labels is not None:
        checks = _positive_regions(regions)
        if not checks:
            return None
        in_any = np.zeros(summary.n_points, dtype=bool)
        violated = np.zeros(summary.n_points, dtype=bool)
        for region in checks:
            mask = box_contains(region.input_box, X)
            in_any |= mask
            allowed = np.isin(summary.labels, sorted(region.allowed_classes))
            violated |= mask & ~allowed
    else:
        checks = _negative_regions(regions)
        if not checks:
            return None
        in_any = np.zeros(summary.n_points, dtype=bool)
        violated = np.zeros(summary.n_points, dtype=bool)
        for region in checks:
            mask = box_contains(region.input_box, X)
            in_any |= mask
            violated |= mask & hard_membership(region, X, summary.mean)
    if not in_any.any():
        return None
    return float(violated[in_any].mean())


def pp_violation(summary: PredictiveSummary, regions) -> float | None:
    """Percentage of ensemble outputs falling inside a forbidden region,
    averaged over the query points whose input lies in a forbidden input box."""
    checks = _negative_regions(regions)
    if not checks:
        raise ConfigError("pp_violation needs at least one negative region")
    X = summary.inputs
    in_any = np.zeros(summary.n_points, dtype=bool)
    member_inside = np.zeros((summary.samples.shape[0], summary.n_points), dtype=bool)
    for region in checks:
        mask = box_contains(region.input_box, X)
        in_any |= mask
        for s in range(summary.samples.shape[0]):
            member_inside[s] |= mask & hard_membership(region, X, summary.samples[s])
    if not in_any.any():
        return None
    return float(member_inside[:, in_any].mean() * 100.0)


def rmse_holl(summary: PredictiveSummary, targets) -> tuple[float, float]:
    """RMSE of the predictive mean and held-out log-likelihood of
    N(mean, std^2 + SIGMA_FLOOR^2), both over all points and output dims."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if targets.shape != summary.mean.shape:
        raise ConfigError(f"targets have shape {targets.shape}, expected {summary.mean.shape}")
    err = summary.mean - targets
    rmse = float(np.sqrt(np.mean(err**2)))
    var = summary.std**2 + SIGMA_FLOOR**2
    holl = float(np.sum(-0.5 * np.log(2.0 * math.pi * var) - err**2 / (2.0 * var)))
    return rmse, holl


def grid_points(mins, maxs, counts) -> np.ndarray:
    """Cartesian product grid over per-dimension linspaces, one point per row."""
    mins, maxs, counts = list(mins), list(maxs), list(counts)
    if not len(mins) == len(maxs) == len(counts):
        raise ConfigError("grid mins, maxs and counts must have equal length")
    if any(c < 1 for c in counts):
        raise ConfigError("grid counts must be >= 1")
    axes = [np.linspace(lo, hi, n) for lo, hi, n in zip(mins, maxs, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.reshape(-1) for m in mesh])


def grid_csv_text(summary: PredictiveSummary) -> str:
    """Predictive grid CSV: x..., then mean/std/q05/q95 per output dim, plus
    class probabilities and the argmax label for classification."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    d = summary.inputs.shape[1]
    n_out = summary.mean.shape[1]
    header = [f"x{i + 1}" for i in range(d)]
    for j in range(1, n_out + 1):
        header.extend([f"mean_{j}", f"std_{j}", f"q05_{j}", f"q95_{j}"])
    if summary.class_probs is not None:
        header.extend(f"prob_{k}" for k in range(summary.class_probs.shape[1]))
        header.append("label")
    writer.writerow(header)
    for i in range(summary.n_points):
        row = [repr(float(v)) for v in summary.inputs[i]]
        for j in range(n_out):
            row.extend(
                repr(float(a[i, j]))
                for a in (summary.mean, summary.std, summary.q05, summary.q95)
            )
        if summary.class_probs is not None:
            row.extend(repr(float(p)) for p in summary.class_probs[i])
            row.append(str(int(summary.labels[i])))
        writer.writerow(row)
    return buf.getvalue()


def write_grid_csv(summary: PredictiveSummary, path) -> None:
    Path(path).write_text(grid_csv_text(summary))


def metrics_report(
    summary: PredictiveSummary, regions, targets=None, labels=None
) -> dict:
    """The applicable subset of {acc, f1, viol, rmse, holl, pp_viol}."""
    report: dict = {}
    if summary.labels is not None:
        if labels is None:
            raise ConfigError("classification metrics need labels")
        labels = np.asarray(labels, dtype=int)
        report["acc"] = accuracy(summary, labels)
        present = set(np.unique(labels)) | set(np.unique(summary.labels))
        if present <= {0, 1}:
            report["f1"] = accuracy_f1(summary, labels)[1]
        if _positive_regions(regions):
            report["viol"] = violation_fraction(summary, regions)
    else:
        if targets is not None:
            rmse, holl = rmse_holl(summary, targets)
            report["rmse"] = rmse
            report["holl"] = holl
        if _negative_regions(regions):
            report["viol"] = violation_fraction(summary, regions)
            report["pp_viol"] = pp_violation(summary, regions)
    return report

"""Renderers for the predictive-grid CSV formats.

Visual conventions: baseline ensembles in gray/black, constrained ensembles
in blue, forbidden regions shaded red, desired regions green. Regression
figures show the posterior mean as a bold line with shaded 1-sigma and
2-sigma bands. Rendering never alters the numbers: plotted polyline vertices
are exactly the CSV columns.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import ListedColormap
from matplotlib.patches import Rectangle

from .regions import RegionShape, negative_mask, read_constraint_file

FIGSIZE = (6.4, 4.2)
DPI = 100
CLASS_COLORS = ("#d62728", "#2ca02c", "#1f77b4", "#9467bd", "#8c564b")
NEGATIVE_COLOR = "#d62728"
POSITIVE_COLOR = "#2ca02c"
STYLES = {"baseline": {"color": "#333333", "band": "#888888"}, "oc": {"color": "#1f77b4", "band": "#1f77b4"}}


@dataclass(frozen=True)
class FigureSpec:
    out: Path
    baseline_grid: Path | None = None
    oc_grid: Path | None = None
    constraints: Path | None = None
    train_csv: Path | None = None
    title: str | None = None

    @classmethod
    def from_json_file(cls, path) -> "FigureSpec":
        raw = json.loads(Path(path).read_text())
        known = {"out", "baseline_grid", "oc_grid", "constraints", "train_csv", "title"}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown figure-spec keys: {sorted(unknown)}")
        if "out" not in raw:
            raise ValueError("figure spec needs an 'out' image path")
        paths = {
            key: Path(raw[key]) if raw.get(key) is not None else None
            for key in ("baseline_grid", "oc_grid", "constraints", "train_csv")
        }
        return cls(out=Path(raw["out"]), title=raw.get("title"), **paths)


@dataclass(frozen=True)
class RenderResult:
    """Output path plus the exact polyline vertices that were drawn."""

    path: Path
    mean_vertices: dict


def _read_grid(path: Path) -> dict:
    if path is None or not Path(path).exists():
        raise FileNotFoundError(f"grid CSV not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: empty grid CSV")
    cols = {name: np.array([float(r[name]) for r in rows]) for name in rows[0] if name != "label"}
    if "label" in rows[0]:
        cols["label"] = np.array([int(r["label"]) for r in rows])
    return cols


def _x_columns(cols: dict) -> list[str]:
    return sorted(
        (c for c in cols if c.startswith("x")), key=lambda c: int(c[1:])
    )


def _load_regions(path: Path | None) -> list[RegionShape]:
    if path is None:
        return []
    return read_constraint_file(Path(path).read_text())


def _shade_regression_regions(ax, regions, x_grid):
    ylim = ax.get_ylim()
    y_grid = np.linspace(ylim[0], ylim[1], 220)
    for region in regions:
        if region.kind == "negative":
            xs, ys = np.meshgrid(x_grid, y_grid)
            mask = negative_mask(region, xs.ravel(), ys.ravel()).reshape(xs.shape)
            shade = np.where(mask, 1.0, np.nan)
            ax.contourf(
                xs, ys, shade, levels=[0.5, 1.5], colors=[NEGATIVE_COLOR], alpha=0.25
            )
        elif region.kind == "positive":
            bounded = {dim: (lo, hi) for dim, lo, hi in region.box}
            lo, hi = bounded.get(0, (x_grid.min(), x_grid.max()))
            xs = x_grid[(x_grid >= lo) & (x_grid <= hi)]
            for target, sigma, _weight in region.components:
                t = target(xs[:, None])
                ax.fill_between(xs, t - sigma, t + sigma, color=POSITIVE_COLOR, alpha=0.35, lw=0)
    ax.set_ylim(ylim)


def render_regression(spec: FigureSpec) -> RenderResult:
    grids = {}
    for name in ("baseline", "oc"):
        path = getattr(spec, f"{name}_grid")
        if path is not None:
            grids[name] = _read_grid(path)
    if not grids:
        raise ValueError("figure spec names neither a baseline nor a constrained grid")
    for name, cols in grids.items():
        x_cols = _x_columns(cols)
        if len(x_cols) != 1:
            raise ValueError(
                f"{name} grid has {len(x_cols)} input columns; use render_classification "
                "for multi-dimensional inputs"
            )

    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    mean_vertices = {}
    for name, cols in grids.items():
        style = STYLES[name]
        x = cols["x1"]
        mean, std = cols["mean_1"], cols["std_1"]
        ax.fill_between(x, mean - 2 * std, mean + 2 * std, color=style["band"], alpha=0.15, lw=0)
        ax.fill_between(x, mean - std, mean + std, color=style["band"], alpha=0.3, lw=0)
        (line,) = ax.plot(x, mean, color=style["color"], lw=2.0, label=name)
        mean_vertices[name] = line.get_xydata().copy()

    if spec.train_csv is not None:
        train = _read_grid(spec.train_csv)
        ax.plot(train["x1"], train["y1"], "o", color="black", ms=4, label="train")

    _shade_regression_regions(ax, _load_regions(spec.constraints), next(iter(grids.values()))["x1"])
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(loc="best")
    _save(fig, spec.out)
    return RenderResult(path=spec.out, mean_vertices=mean_vertices)


def render_classification(spec: FigureSpec) -> RenderResult:
    path = spec.oc_grid or spec.baseline_grid
    cols = _read_grid(path)
    x_cols = _x_columns(cols)
    if len(x_cols) != 2:
        raise ValueError(f"classification maps need a 2-d input grid, found {len(x_cols)} columns")
    prob_cols = sorted((c for c in cols if c.startswith("prob_")), key=lambda c: int(c[5:]))
    if not prob_cols:
        raise ValueError(f"{path}: no class-probability columns")
    x1, x2 = cols["x1"], cols["x2"]
    probs = np.column_stack([cols[c] for c in prob_cols])
    labels = np.argmax(probs, axis=1)  # ties break to the lowest class index

    u1, u2 = np.unique(x1), np.unique(x2)
    lattice = np.full((len(u2), len(u1)), -1)
    i1 = np.searchsorted(u1, x1)
    i2 = np.searchsorted(u2, x2)
    lattice[i2, i1] = labels

    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    cmap = ListedColormap(CLASS_COLORS[: len(prob_cols)])
    ax.pcolormesh(u1, u2, lattice, cmap=cmap, vmin=0, vmax=len(prob_cols) - 1, alpha=0.45)

    if spec.train_csv is not None:
        train = _read_grid(spec.train_csv)
        for k in range(len(prob_cols)):
            pts = train["label"] == k
            ax.plot(
                train["x1"][pts], train["x2"][pts], "o",
                color=CLASS_COLORS[k], mec="black", ms=5,
            )

    for region in _load_regions(spec.constraints):
        if region.kind == "positive_class":
            bounded = {dim: (lo, hi) for dim, lo, hi in region.box}
            if 0 in bounded and 1 in bounded:
                (lo1, hi1), (lo2, hi2) = bounded[0], bounded[1]
                ax.add_patch(
                    Rectangle(
                        (lo1, lo2), hi1 - lo1, hi2 - lo2,
                        fill=False, edgecolor="black", lw=2.0,
                    )
                )
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    if spec.title:
        ax.set_title(spec.title)
    _save(fig, spec.out)
    return RenderResult(path=spec.out, mean_vertices={})


def _save(fig, out: Path) -> None:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    # strip the software tag so identical inputs give identical bytes
    fig.savefig(out, format="png", metadata={"Software": None})
    plt.close(fig)

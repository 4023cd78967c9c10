"""Quick-look figures rendered to files next to the data artifacts.

The JSON/CSV outputs are the canonical record; these helpers exist so a
CLI run can drop a PNG beside them without a separate plotting script.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .data import Metric
from .evaluation import RemovalCurve
from .heatmap import Heatmap
from .shapley import ValuationResult

_METRIC_STYLE = {
    Metric.ACCURACY: ("accuracy", "tab:blue"),
    Metric.PRECISION: ("precision", "tab:orange"),
    Metric.RECALL: ("recall", "tab:green"),
}


def save_figure(fig, path: str | Path) -> None:
    fig.savefig(Path(path), dpi=150, bbox_inches="tight")
    plt.close(fig)


def removal_curve_figure(curve: RemovalCurve):
    fig, ax = plt.subplots(figsize=(6, 4))
    for metric, series in curve.scores.items():
        label, color = _METRIC_STYLE[metric]
        ax.plot([f * 100 for f in curve.fractions], series, label=label, color=color)
    ax.set_xlabel("training data removed (%)")
    ax.set_ylabel(f"score on {curve.eval_set_label} set")
    ax.set_title(
        f"removal order: {curve.ranking.direction.value} "
        f"({curve.ranking.source.value})"
    )
    ax.set_ylim(0.0, 1.0)
    ax.legend()
    ax.grid(alpha=0.3)
    return fig


def value_histogram_figure(result: ValuationResult, bins: int = 50):
    values = list(result.values.values())
    negative = sum(1 for v in values if v < 0)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(values, bins=bins, color="tab:blue", edgecolor="black", linewidth=0.3)
    ax.axvline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel(f"{result.method.value} value")
    ax.set_ylabel("count")
    ax.set_title(
        f"{len(values)} points, {100.0 * negative / max(len(values), 1):.1f}% negative"
    )
    return fig


def mislabel_curves_figure(curves: dict[str, list[int]]):
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, counts in curves.items():
        ax.plot(range(len(counts)), counts, label=label)
    ax.set_xlabel("points inspected")
    ax.set_ylabel("cumulative mislabels")
    ax.legend()
    ax.grid(alpha=0.3)
    return fig


def heatmap_figure(heatmap: Heatmap):
    fig, ax = plt.subplots(figsize=(4, 4))
    image = ax.imshow(heatmap.grid, cmap="inferno")
    fig.colorbar(image, ax=ax, fraction=0.046)
    ax.set_xticks([])
    ax.set_yticks([])
    return fig

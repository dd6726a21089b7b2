"""SVG figures of metric reports and leaderboards."""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

from matplotlib.figure import Figure  # noqa: E402

from ..evaluation.submission import MetricReport  # noqa: E402
from ..models import Category  # noqa: E402
from ..ranking.bootstrap import RankingResult  # noqa: E402

logger = logging.getLogger(__name__)

# fixed ids and no timestamp keep the SVG output byte-stable
matplotlib.rcParams["svg.hashsalt"] = "teethland-eval"
SVG_METADATA = {"Date": None}


def _save(figure: Figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    figure.savefig(path, format="svg", metadata=SVG_METADATA)
    logger.debug(f"Wrote {path}")
    return path


def plot_boxplots(report: MetricReport, path: Path) -> Path:
    """Per-scan AP and AR distributions, one box per category."""
    figure = Figure(figsize=(9, 4))
    axes = figure.subplots(1, 2, sharey=True)
    labels = [c.value for c in Category]
    for ax, metric, title in zip(axes, ("ap", "ar"), ("AP per scan", "AR per scan"), strict=True):
        ax.boxplot([report.values(c, metric) for c in Category])
        ax.set_xticks(range(1, len(labels) + 1), labels)
        ax.set_title(title)
        ax.set_ylim(-0.02, 1.02)
        ax.tick_params(axis="x", labelrotation=20)
    figure.tight_layout()
    return _save(figure, path)


def plot_pr_curves(report: MetricReport, path: Path) -> Path:
    """Dataset PR curves per category, one line per threshold."""
    figure = Figure(figsize=(10, 8))
    axes = figure.subplots(2, 2).ravel()
    for ax, category in zip(axes, Category, strict=True):
        _draw_category_curves(ax, report, category)
    figure.tight_layout()
    return _save(figure, path)


def _draw_category_curves(ax, report: MetricReport, category: Category) -> None:
    for curve in report.pr_curves:
        if curve.category is category:
            ax.plot(curve.recall, curve.precision, label=f"tau = {curve.tau:g} mm")
    ax.set_title(category.value)
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_xlim(0, 1.02)
    ax.set_ylim(0, 1.02)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="lower left")


def plot_category(report: MetricReport, category: Category, path: Path) -> Path:
    """One category: per-scan AP/AR box plots beside its PR curves."""
    figure = Figure(figsize=(10, 4))
    left, right = figure.subplots(1, 2)
    left.boxplot([report.values(category, "ap"), report.values(category, "ar")])
    left.set_xticks([1, 2], ["AP", "AR"])
    left.set_ylim(-0.02, 1.02)
    summary = report.category(category)
    left.set_title(f"{category.value}: mAP {summary.mean_ap:.3f}, mAR {summary.mean_ar:.3f}")
    _draw_category_curves(right, report, category)
    figure.tight_layout()
    return _save(figure, path)


def plot_leaderboard(result: RankingResult, path: Path) -> Path:
    """Horizontal bars of the rank scores, best team on top."""
    ordering = result.ordering()
    figure = Figure(figsize=(7, 0.5 * len(ordering) + 1.5))
    ax = figure.subplots()
    ax.barh(list(reversed(ordering)), [result.rank_scores[t] for t in reversed(ordering)])
    ax.set_xlim(0, 1)
    ax.set_xlabel("rank score")
    ax.set_title(f"Leaderboard ({result.iterations} iterations, {result.resample_mode})")
    figure.tight_layout()
    return _save(figure, path)

"""The report command: render figures and tables from earlier outputs."""

import logging
from pathlib import Path
from typing import Any

from ..config import AppConfig
from ..models import Category
from ..report.plots import plot_category, plot_leaderboard
from ..utils.report_writer import read_metric_report, read_ranking, write_csv
from .common import prepare_output, require_dir

logger = logging.getLogger(__name__)


class ReportCommand:
    """Turns an eval output (and optionally a rank output) into an SVG/CSV bundle."""

    def __init__(self, config: AppConfig):
        """Initialize report command.

        Args:
            config: Resolved application configuration
        """
        self.config = config

    def handle(self, eval_dir: Path, output: Path, rank_dir: Path | None = None) -> dict[str, Any]:
        """Write <Category>.svg per category, category_summary.csv and scan_metrics.csv.

        With `rank_dir`, also leaderboard.svg.

        Args:
            eval_dir: Output directory of the eval command
            output: Directory receiving the bundle
            rank_dir: Optional output directory of the rank command

        Returns:
            Result with the written files
        """
        report = read_metric_report(require_dir(eval_dir, "eval output"))
        out = prepare_output(output, self.config)

        written = [plot_category(report, c, out / f"{c.value}.svg") for c in Category]
        written.append(
            write_csv(
                out / "category_summary.csv",
                ["category", "mAP", "mAR"],
                ([c.category.value, repr(c.mean_ap), repr(c.mean_ar)] for c in report.categories),
            )
        )

        columns = [(c, metric) for c in Category for metric in ("ap", "ar")]
        values = {key: report.values(*key) for key in columns}
        written.append(
            write_csv(
                out / "scan_metrics.csv",
                ["scan_id"] + [f"{c.value}_{m.upper()}" for c, m in columns],
                (
                    [scan_id] + [repr(values[key][i]) for key in columns]
                    for i, scan_id in enumerate(report.scan_ids())
                ),
            )
        )

        if rank_dir is not None:
            ranking = read_ranking(require_dir(rank_dir, "rank output"))
            written.append(plot_leaderboard(ranking, out / "leaderboard.svg"))

        logger.info(f"Wrote {len(written)} report files to {out}")
        return {"success": True, "output": str(out), "files": sorted(p.name for p in written)}

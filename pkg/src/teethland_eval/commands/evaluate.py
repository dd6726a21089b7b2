"""The eval command: score one prediction directory against the ground truth."""

import logging
from collections.abc import Mapping
from pathlib import Path
from typing import Any

from ..config import AppConfig
from ..evaluation.submission import MetricReport, evaluate_submission
from ..models import DatasetIndex, LandmarkFile
from ..report.plots import plot_boxplots, plot_pr_curves
from ..utils.landmark_file import DatasetStore
from ..utils.report_writer import write_metric_report
from .common import prepare_output, require_dir

logger = logging.getLogger(__name__)


class EvalCommand:
    """Evaluates a submission and writes its metric report."""

    def __init__(self, config: AppConfig):
        """Initialize eval command.

        Args:
            config: Resolved application configuration
        """
        self.config = config

    def load_ground_truth(self, ground_truth: Path) -> tuple[DatasetIndex, dict[str, LandmarkFile]]:
        """Index and decode a ground-truth directory.

        Raises:
            ValidationError: If the directory does not exist
            LandmarkFileError: If a file cannot be decoded or a scan id repeats
        """
        index, files = DatasetStore(require_dir(ground_truth, "ground-truth")).load_dataset()
        logger.info(f"Indexed {len(index)} ground-truth scans in {ground_truth}")
        return index, files

    def evaluate(
        self, ground_truth: Path | Mapping[str, LandmarkFile], predictions: Path
    ) -> MetricReport:
        """Read the predictions and compute the MetricReport.

        Args:
            ground_truth: Ground-truth directory, or files already resolved through
                `load_ground_truth`
            predictions: Directory of prediction JSON files

        Raises:
            ValidationError: If a directory does not exist
            LandmarkFileError: If a file cannot be decoded
            SubmissionError: If predictions name unknown or repeated scans
        """
        if isinstance(ground_truth, Mapping):
            gt = ground_truth
        else:
            gt = self.load_ground_truth(Path(ground_truth))[1]
        preds = DatasetStore(require_dir(predictions, "predictions")).read_predictions()
        if not preds:
            logger.warning(f"No prediction files in {predictions}")
        return evaluate_submission(
            gt,
            list(preds.values()),
            options=self.config.evaluation,
            workers=self.config.execution.workers,
        )

    def handle(self, ground_truth: Path, predictions: Path, output: Path) -> dict[str, Any]:
        """Run the evaluation and write CSV, JSON and SVG outputs.

        Args:
            ground_truth: Directory of ground-truth JSON files
            predictions: Directory of prediction JSON files
            output: Output directory

        Returns:
            Result with the summary and the written files
        """
        report = self.evaluate(ground_truth, predictions)
        out = prepare_output(output, self.config)
        written = write_metric_report(report, out)
        written.append(plot_boxplots(report, out / "boxplots.svg"))
        written.append(plot_pr_curves(report, out / "pr_curves.svg"))
        return {
            "success": True,
            "output": str(out),
            "files": sorted(p.name for p in written),
            "summary": report.summary(),
        }

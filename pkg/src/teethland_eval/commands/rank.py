"""The rank command: evaluate several teams and rank them by bootstrap significance."""

import logging
from pathlib import Path
from typing import Any

from ..config import AppConfig
from ..evaluation.submission import MetricReport
from ..exceptions import ValidationError
from ..ranking.bootstrap import (
    MetricSample,
    bootstrap_rank_with_config,
    leaderboard,
    samples_from_report,
)
from ..utils.report_writer import write_ranking
from .common import prepare_output
from .evaluate import EvalCommand

logger = logging.getLogger(__name__)


class RankCommand:
    """Builds the leaderboard of several prediction directories."""

    def __init__(self, config: AppConfig):
        """Initialize rank command.

        Args:
            config: Resolved application configuration
        """
        self.config = config
        self.evaluator = EvalCommand(config)

    def handle(self, ground_truth: Path, teams: list[Path], output: Path) -> dict[str, Any]:
        """Evaluate every team, rank them and write the leaderboard files.

        Team names are the directory names.

        Args:
            ground_truth: Directory of ground-truth JSON files
            teams: One prediction directory per team
            output: Output directory

        Returns:
            Result with the leaderboard rows

        Raises:
            ValidationError: With fewer than two teams or repeated team names
        """
        if len(teams) < 2:
            raise ValidationError("ranking needs at least two team directories")
        names = [Path(t).name for t in teams]
        if len(set(names)) != len(names):
            raise ValidationError(f"team directory names must be unique, got {names}")

        _, gt = self.evaluator.load_ground_truth(Path(ground_truth))
        reports: dict[str, MetricReport] = {}
        samples: list[MetricSample] = []
        for name, directory in zip(names, teams, strict=True):
            logger.info(f"Evaluating team {name}")
            reports[name] = self.evaluator.evaluate(gt, Path(directory))
            samples.extend(samples_from_report(name, reports[name], self.config.ranking.streams))

        result = bootstrap_rank_with_config(
            samples, self.config.ranking, workers=self.config.execution.workers
        )
        rows = leaderboard(result, reports)
        out = prepare_output(output, self.config)
        written = write_ranking(result, rows, out)
        return {
            "success": True,
            "output": str(out),
            "files": sorted(p.name for p in written),
            "leaderboard": [row.model_dump() for row in rows],
        }

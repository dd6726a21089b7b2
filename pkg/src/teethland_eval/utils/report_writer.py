"""CSV and JSON emission of metric reports and rankings."""

import csv
import json
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

from ..evaluation.submission import MetricReport
from ..exceptions import ValidationError
from ..ranking.bootstrap import LeaderboardRow, RankingResult

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
RANKING_FILE = "ranking.json"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write an RFC-4180 CSV file (CRLF line endings, minimal quoting)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\r\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_json(path: Path, data: Any) -> Path:
    """Write JSON with sorted keys and a trailing newline."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def write_metric_report(report: MetricReport, out_dir: Path) -> list[Path]:
    """Write metrics.csv, summary.json, pr_curves.csv, errors.csv and report.json."""
    written = [
        write_csv(
            out_dir / "metrics.csv",
            ["scan_id", "category", "AP", "AR", "references", "predictions", "vacuous"],
            (
                [m.scan_id, m.category.value, repr(m.ap), repr(m.ar),
                 m.reference_count, m.prediction_count, m.vacuous]
                for m in report.scans
            ),
        ),
        write_json(out_dir / "summary.json", report.summary()),
        write_csv(
            out_dir / "pr_curves.csv",
            ["category", "tau", "rank", "recall", "precision"],
            (
                [curve.category.value, repr(curve.tau), i, repr(r), repr(p)]
                for curve in report.pr_curves
                for i, (r, p) in enumerate(zip(curve.recall, curve.precision, strict=True))
            ),
        ),
        write_csv(
            out_dir / "errors.csv",
            ["scan_id", "category", "tau", "correct", "class_confusion",
             "mislocalized", "spurious", "missed"],
            (
                [e.scan_id, e.category.value, repr(e.tau), e.correct, e.class_confusion,
                 e.mislocalized, e.spurious, e.missed]
                for e in report.errors
            ),
        ),
    ]
    report_path = out_dir / REPORT_FILE
    report_path.write_text(report.model_dump_json(indent=2) + "\n")
    written.append(report_path)
    logger.info(f"Wrote metric report to {out_dir}")
    return written


def read_metric_report(out_dir: Path) -> MetricReport:
    """Load the report.json of an eval output directory.

    Raises:
        ValidationError: If the directory holds no readable report
    """
    path = out_dir / REPORT_FILE
    if not path.is_file():
        raise ValidationError(f"{out_dir} contains no {REPORT_FILE}")
    try:
        return MetricReport.model_validate_json(path.read_text())
    except Exception as e:
        raise ValidationError(f"cannot read {path}: {e}")


def write_ranking(
    result: RankingResult, rows: Sequence[LeaderboardRow], out_dir: Path
) -> list[Path]:
    """Write leaderboard.csv/.json, pvalues.json, bootstrap_points.csv and ranking.json."""
    written = [
        write_csv(
            out_dir / "leaderboard.csv",
            ["rank", "team", "rank_score", "mAP", "mAR"],
            (
                [row.rank, row.team, repr(row.rank_score),
                 "" if row.mAP is None else repr(row.mAP),
                 "" if row.mAR is None else repr(row.mAR)]
                for row in rows
            ),
        ),
        write_json(out_dir / "leaderboard.json", [row.model_dump() for row in rows]),
        write_json(out_dir / "pvalues.json", result.pvalues),
        write_csv(
            out_dir / "bootstrap_points.csv",
            ["iteration", "team", "points", "normalized"],
            (
                [i, team, result.raw_points[team][i], repr(result.normalized[team][i])]
                for i in range(result.iterations)
                for team in result.teams
            ),
        ),
    ]
    ranking_path = out_dir / RANKING_FILE
    ranking_path.write_text(result.model_dump_json(indent=2) + "\n")
    written.append(ranking_path)
    logger.info(f"Wrote leaderboard of {len(rows)} teams to {out_dir}")
    return written


def read_ranking(out_dir: Path) -> RankingResult:
    """Load the ranking.json of a rank output directory.

    Raises:
        ValidationError: If the directory holds no readable ranking
    """
    path = out_dir / RANKING_FILE
    if not path.is_file():
        raise ValidationError(f"{out_dir} contains no {RANKING_FILE}")
    try:
        return RankingResult.model_validate_json(path.read_text())
    except Exception as e:
        raise ValidationError(f"cannot read {path}: {e}")

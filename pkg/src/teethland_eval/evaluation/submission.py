"""Evaluation of a full submission against the ground truth."""

import logging
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from ..config import EvaluationConfig
from ..exceptions import EmptyInputError, SubmissionError
from ..models import Category, Landmark, LandmarkFile, Prediction
from .matching import assign
from .metrics import (
    CategoryScore,
    ScanTables,
    ThresholdGrid,
    classify_errors,
    mean_average_precision,
    mean_average_recall,
    pooled_mean_average_precision,
    pooled_pr_flags,
    table_at,
)

logger = logging.getLogger(__name__)

MetricName = Literal["ap", "ar"]


class ScanMetrics(BaseModel):
    """AP and AR of one scan in one category."""

    scan_id: str
    category: Category
    ap_per_tau: list[float]
    ap: float = Field(..., ge=0.0, le=1.0)
    ar: float = Field(..., ge=0.0, le=1.0)
    reference_count: int
    prediction_count: int
    vacuous: bool = Field(
        default=False, description="No references and no predictions: scored 1 by convention"
    )


class ScanErrors(BaseModel):
    """Error breakdown of one scan and category at the error-analysis threshold."""

    scan_id: str
    category: Category
    tau: float
    correct: int
    class_confusion: int
    mislocalized: int
    spurious: int
    missed: int


class CategorySummary(BaseModel):
    """Aggregate scores of one category."""

    category: Category
    mean_ap: float = Field(..., ge=0.0, le=1.0)
    mean_ar: float = Field(..., ge=0.0, le=1.0)


class PRCurveRecord(BaseModel):
    """Dataset-level PR curve of a category at one threshold."""

    category: Category
    tau: float
    recall: list[float]
    precision: list[float]


class MetricReport(BaseModel):
    """Per-scan and aggregate AP/AR per category."""

    taus: list[float]
    pooled_ap: bool = False
    scans: list[ScanMetrics]
    categories: list[CategorySummary]
    grand_map: float
    grand_mar: float
    missing_scans: list[str] = Field(default_factory=list)
    errors: list[ScanErrors] = Field(default_factory=list)
    pr_curves: list[PRCurveRecord] = Field(default_factory=list)

    def scan_ids(self) -> list[str]:
        """Evaluated scan ids in sorted order."""
        return sorted({s.scan_id for s in self.scans})

    def values(self, category: Category, metric: MetricName) -> list[float]:
        """Per-scan values of one category, aligned with `scan_ids()`."""
        lookup = {s.scan_id: getattr(s, metric) for s in self.scans if s.category is category}
        return [lookup[scan_id] for scan_id in self.scan_ids()]

    def grand_values(self, metric: MetricName) -> list[float]:
        """Per-scan mean of the four category values, aligned with `scan_ids()`."""
        columns = np.asarray([self.values(c, metric) for c in Category])
        return columns.mean(axis=0).tolist()

    def category(self, category: Category) -> CategorySummary:
        return next(c for c in self.categories if c.category is category)

    def summary(self) -> dict:
        """Leaderboard-style summary: grand mAP/mAR and the per-category table."""
        return {
            "mAP": self.grand_map,
            "mAR": self.grand_mar,
            "categories": {
                c.category.value: {"mAP": c.mean_ap, "mAR": c.mean_ar} for c in self.categories
            },
            "scans": len(self.scan_ids()),
            "missing_scans": self.missing_scans,
            "taus": self.taus,
            "pooled_ap": self.pooled_ap,
        }


@dataclass
class _ScanOutcome:
    scan_id: str
    reference_counts: dict[Category, int] = field(default_factory=dict)
    prediction_counts: dict[Category, int] = field(default_factory=dict)
    errors: list[ScanErrors] = field(default_factory=list)
    tables: dict[Category, ScanTables] = field(default_factory=dict)


def evaluate_submission(
    ground_truth: Mapping[str, LandmarkFile],
    predictions: Sequence[LandmarkFile],
    grid: ThresholdGrid | None = None,
    options: EvaluationConfig | None = None,
    workers: int = 1,
) -> MetricReport:
    """Score a prediction set against the ground truth.

    Scans present in the ground truth but absent from the predictions are evaluated
    with empty prediction sets and listed in `missing_scans`. Matching runs per scan
    on `workers` threads; category scores come from `mean_average_precision` and
    `mean_average_recall` over the resulting tables.

    Args:
        ground_truth: Ground-truth files keyed by scan id
        predictions: One prediction file per scan
        grid: Threshold grid (derived from `options` when omitted)
        options: Evaluation settings; defaults when omitted
        workers: Threads used for per-scan evaluation

    Returns:
        MetricReport

    Raises:
        SubmissionError: If a prediction scan is unknown or appears twice
        EmptyInputError: If the ground truth holds no scan
    """
    if not ground_truth:
        raise EmptyInputError("ground truth")
    options = options or EvaluationConfig()
    grid = grid or ThresholdGrid.regular(
        options.tau_step, options.tau_max, options.include_zero_threshold
    )

    by_scan: dict[str, LandmarkFile] = {}
    for pred in predictions:
        if pred.scan_id not in ground_truth:
            raise SubmissionError("scan is not part of the ground truth", pred.scan_id)
        if pred.scan_id in by_scan:
            raise SubmissionError("more than one prediction file", pred.scan_id)
        by_scan[pred.scan_id] = pred

    scan_ids = sorted(ground_truth)
    missing = [scan_id for scan_id in scan_ids if scan_id not in by_scan]
    if missing:
        logger.warning(f"{len(missing)} scans have no predictions and are scored as empty")

    def run(scan_id: str) -> _ScanOutcome:
        return _evaluate_scan(scan_id, ground_truth[scan_id], by_scan.get(scan_id), grid, options)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        outcomes = list(pool.map(run, scan_ids))

    inclusive = options.inclusive_hits
    ap_scores: dict[Category, CategoryScore] = {}
    ar_scores: dict[Category, CategoryScore] = {}
    categories: list[CategorySummary] = []
    pr_curves: list[PRCurveRecord] = []
    for category in Category:
        tables = {o.scan_id: o.tables[category] for o in outcomes}
        ap_scores[category] = mean_average_precision(tables, grid, category, inclusive)
        ar_scores[category] = mean_average_recall(tables, grid, category, inclusive)
        if options.pooled_ap:
            mean_ap = pooled_mean_average_precision(tables, grid, category, inclusive)
        else:
            mean_ap = ap_scores[category].value
        categories.append(
            CategorySummary(
                category=category, mean_ap=min(1.0, mean_ap), mean_ar=ar_scores[category].value
            )
        )

        for tau in options.pr_curve_taus:
            flags, references = pooled_pr_flags(
                [table_at(o.tables[category], tau) for o in outcomes], tau, inclusive
            )
            hit = np.asarray(flags, dtype=np.float64)
            tp = np.cumsum(hit)
            recall = (tp / references).tolist() if references else [0.0] * len(flags)
            precision = (tp / np.arange(1, len(flags) + 1)).tolist()
            pr_curves.append(
                PRCurveRecord(category=category, tau=tau, recall=recall, precision=precision)
            )

    scans = [
        ScanMetrics(
            scan_id=o.scan_id,
            category=category,
            ap_per_tau=list(ap_scores[category].per_tau[o.scan_id]),
            ap=ap_scores[category].per_scan[o.scan_id],
            ar=ar_scores[category].per_scan[o.scan_id],
            reference_count=o.reference_counts[category],
            prediction_count=o.prediction_counts[category],
            vacuous=not o.reference_counts[category] and not o.prediction_counts[category],
        )
        for o in outcomes
        for category in Category
    ]

    report = MetricReport(
        taus=list(grid.taus),
        pooled_ap=options.pooled_ap,
        scans=scans,
        categories=categories,
        grand_map=float(np.mean([c.mean_ap for c in categories])),
        grand_mar=float(np.mean([c.mean_ar for c in categories])),
        missing_scans=missing,
        errors=[e for o in outcomes for e in o.errors],
        pr_curves=pr_curves,
    )
    logger.info(
        f"Evaluated {len(scan_ids)} scans: mAP={report.grand_map:.4f} mAR={report.grand_mar:.4f}"
    )
    return report


def _split(items: Sequence[Prediction] | Sequence[Landmark], category: Category) -> list:
    return [item for item in items if item.category is category]


def _evaluate_scan(
    scan_id: str,
    gt: LandmarkFile,
    pred: LandmarkFile | None,
    grid: ThresholdGrid,
    options: EvaluationConfig,
) -> _ScanOutcome:
    predictions = pred.predictions() if pred is not None else []
    references = gt.landmarks()
    inclusive = options.inclusive_hits
    outcome = _ScanOutcome(scan_id=scan_id)
    error_tau = options.error_analysis_tau

    for category in Category:
        preds = _split(predictions, category)
        refs = _split(references, category)

        tables: ScanTables
        if options.restrict_assignment_to_threshold:
            taus = sorted({*grid.taus, *options.pr_curve_taus, error_tau})
            tables = {
                tau: assign(preds, refs, category, max_distance=tau, inclusive=inclusive)
                for tau in taus
            }
        else:
            tables = assign(preds, refs, category)

        outcome.tables[category] = tables
        outcome.reference_counts[category] = len(refs)
        outcome.prediction_counts[category] = len(preds)

        breakdown = classify_errors(
            preds, refs, table_at(tables, error_tau), error_tau, inclusive
        )
        outcome.errors.append(
            ScanErrors(
                scan_id=scan_id,
                category=category,
                tau=error_tau,
                correct=breakdown.correct,
                class_confusion=breakdown.class_confusion,
                mislocalized=breakdown.mislocalized,
                spurious=breakdown.spurious,
                missed=breakdown.missed,
            )
        )

    logger.debug(f"Scan {scan_id}: {len(predictions)} predictions, {len(references)} references")
    return outcome

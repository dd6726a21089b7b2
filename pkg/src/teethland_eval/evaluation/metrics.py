"""Average precision and average recall over a distance-threshold grid."""

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import EmptyInputError, ValidationError
from ..models import Category, Landmark, Prediction
from .matching import HitThreshold, MatchTable, hits

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ThresholdGrid:
    """Ordered distance thresholds in mm."""

    taus: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.taus:
            raise ValidationError("threshold grid must not be empty")
        if any(not math.isfinite(t) or t < 0 for t in self.taus):
            raise ValidationError("thresholds must be finite and non-negative")
        if any(b <= a for a, b in zip(self.taus, self.taus[1:], strict=False)):
            raise ValidationError("thresholds must be strictly increasing")

    @classmethod
    def regular(
        cls, step: float = 0.1, tau_max: float = 3.0, include_zero: bool = False
    ) -> "ThresholdGrid":
        """Evenly spaced grid step, 2*step, ..., tau_max (optionally starting at 0)."""
        count = int(round(tau_max / step))
        taus = [round(step * i, 10) for i in range(0 if include_zero else 1, count + 1)]
        return cls(taus=tuple(taus))

    @property
    def tau_max(self) -> float:
        return self.taus[-1]

    def __len__(self) -> int:
        return len(self.taus)


DEFAULT_GRID = ThresholdGrid.regular()


@dataclass(frozen=True)
class PRCurve:
    """Score-ranked recall/precision points with the interpolated precision envelope."""

    recall: tuple[float, ...]
    precision: tuple[float, ...]
    interpolated: tuple[float, ...]
    reference_count: int


@dataclass(frozen=True)
class CategoryScore:
    """Per-scan values and their unweighted mean over scans."""

    category: Category
    per_scan: dict[str, float]
    value: float
    per_tau: dict[str, tuple[float, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class ErrorBreakdown:
    """Classification of predictions and references at one threshold."""

    correct: int = 0
    class_confusion: int = 0
    mislocalized: int = 0
    spurious: int = 0
    missed: int = 0


def _ap_from_flags(flags: Sequence[bool], reference_count: int) -> float:
    if reference_count == 0:
        return 1.0 if not flags else 0.0
    if not flags:
        return 0.0
    curve = _curve_from_flags(flags, reference_count)
    recall = np.asarray(curve.recall)
    previous = np.concatenate(([0.0], recall[:-1]))
    area = float(np.sum((recall - previous) * np.asarray(curve.interpolated)))
    return min(1.0, area)


def _curve_from_flags(flags: Sequence[bool], reference_count: int) -> PRCurve:
    hit = np.asarray(flags, dtype=np.float64)
    tp = np.cumsum(hit)
    fp = np.cumsum(1.0 - hit)
    recall = tp / reference_count if reference_count else np.zeros_like(tp)
    precision = tp / (tp + fp)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    return PRCurve(
        recall=tuple(recall.tolist()),
        precision=tuple(precision.tolist()),
        interpolated=tuple(envelope.tolist()),
        reference_count=reference_count,
    )


def pr_curve(table: MatchTable, tau: HitThreshold | float, inclusive: bool = False) -> PRCurve:
    """Precision/recall points of a table at one threshold, in score order."""
    return _curve_from_flags(hits(table, tau, inclusive).flags, table.reference_count)


def average_precision(
    table: MatchTable, tau: HitThreshold | float, inclusive: bool = False
) -> float:
    """Area under the interpolated PR curve at one threshold.

    AP = sum_i (R_i - R_{i-1}) * max_{r >= R_i} precision(r). A table without
    references scores 1 when it also has no predictions and 0 otherwise.
    """
    return _ap_from_flags(hits(table, tau, inclusive).flags, table.reference_count)


def pooled_pr_flags(
    tables: Iterable[MatchTable], tau: HitThreshold | float, inclusive: bool = False
) -> tuple[list[bool], int]:
    """Hit flags of all tables merged by descending score, and the total reference count.

    Equal scores keep table order, then row order.
    """
    scored: list[tuple[float, int, int, bool]] = []
    references = 0
    for t_index, table in enumerate(tables):
        references += table.reference_count
        for r_index, (row, flag) in enumerate(
            zip(table.rows, hits(table, tau, inclusive).flags, strict=True)
        ):
            scored.append((-row.score, t_index, r_index, flag))
    scored.sort()
    return [flag for *_, flag in scored], references


def pooled_average_precision(
    tables: Iterable[MatchTable], tau: HitThreshold | float, inclusive: bool = False
) -> float:
    """AP of the dataset-level PR curve built from every scan's rows."""
    flags, references = pooled_pr_flags(tables, tau, inclusive)
    return _ap_from_flags(flags, references)


def recall_at(table: MatchTable, tau: HitThreshold | float, inclusive: bool = False) -> float:
    """Fraction of references hit at a threshold (zero references give 0)."""
    if table.reference_count == 0:
        return 0.0
    return hits(table, tau, inclusive).true_positives / table.reference_count


def zero_distance_recall(table: MatchTable) -> float:
    """Recall as the threshold tends to 0 from above: references matched exactly."""
    if table.reference_count == 0:
        return 0.0
    exact = sum(1 for row in table.rows if row.distance == 0.0)
    return exact / table.reference_count


def recall_curve_area(taus: Sequence[float], recalls: Sequence[float], anchor: float) -> float:
    """Normalized trapezoidal area of recall against exp(-tau).

    The curve runs from x = exp(-tau_max) to x = exp(0) = 1. When the grid does not
    start at 0, `anchor` is the recall used at tau = 0. The area is divided by
    1 - exp(-tau_max), so a recall of 1 everywhere scores 1. The result is clamped
    to [0, 1].
    """
    taus_arr = np.asarray(taus, dtype=np.float64)
    rec_arr = np.asarray(recalls, dtype=np.float64)
    if taus_arr[0] > 0.0:
        taus_arr = np.concatenate(([0.0], taus_arr))
        rec_arr = np.concatenate(([anchor], rec_arr))
    x = np.exp(-taus_arr)
    widths = x[:-1] - x[1:]
    area = float(np.sum(widths * (rec_arr[:-1] + rec_arr[1:]) / 2.0))
    return min(1.0, max(0.0, area / (1.0 - math.exp(-taus_arr[-1]))))


ScanTables = MatchTable | Mapping[float, MatchTable]
"""One table shared by every threshold, or one table per threshold."""


def table_at(tables: ScanTables, tau: float) -> MatchTable:
    """The table scored at `tau`."""
    if isinstance(tables, MatchTable):
        return tables
    return tables[tau]


def ap_per_threshold(
    tables: ScanTables, grid: ThresholdGrid, inclusive: bool = False
) -> list[float]:
    """AP of one scan and category at every grid threshold."""
    return [average_precision(table_at(tables, tau), tau, inclusive) for tau in grid.taus]


def average_recall(table: ScanTables, grid: ThresholdGrid, inclusive: bool = False) -> float:
    """Normalized area under the recall vs exp(-distance threshold) curve.

    A table without references scores 1 when it has no predictions and 0 otherwise.
    With per-threshold tables the tau = 0 anchor comes from the smallest threshold.
    """
    first = table_at(table, grid.taus[0])
    if first.reference_count == 0:
        return 1.0 if not first.rows else 0.0
    recalls = [recall_at(table_at(table, tau), tau, inclusive) for tau in grid.taus]
    return recall_curve_area(grid.taus, recalls, zero_distance_recall(first))


def _check_tables(
    tables: Mapping[str, ScanTables], grid: ThresholdGrid, category: Category
) -> None:
    if not tables:
        raise EmptyInputError("scan set")
    for scan_id, scan_tables in tables.items():
        table = table_at(scan_tables, grid.taus[0])
        if table.category is not category:
            raise ValidationError(
                f"table for scan '{scan_id}' is {table.category.value}, expected {category.value}"
            )


def mean_average_precision(
    tables: Mapping[str, ScanTables],
    grid: ThresholdGrid,
    category: Category,
    inclusive: bool = False,
) -> CategoryScore:
    """Per scan, the mean AP over the grid; overall, the unweighted mean over scans.

    Raises:
        EmptyInputError: If no scans are given
    """
    _check_tables(tables, grid, category)
    per_tau = {
        scan_id: tuple(ap_per_threshold(scan_tables, grid, inclusive))
        for scan_id, scan_tables in tables.items()
    }
    per_scan = {scan_id: min(1.0, float(np.mean(aps))) for scan_id, aps in per_tau.items()}
    return CategoryScore(
        category=category,
        per_scan=per_scan,
        value=min(1.0, float(np.mean(list(per_scan.values())))),
        per_tau=per_tau,
    )


def mean_average_recall(
    tables: Mapping[str, ScanTables],
    grid: ThresholdGrid,
    category: Category,
    inclusive: bool = False,
) -> CategoryScore:
    """Per-scan AR and its unweighted mean over scans.

    Raises:
        EmptyInputError: If no scans are given
    """
    _check_tables(tables, grid, category)
    per_scan = {
        scan_id: average_recall(scan_tables, grid, inclusive)
        for scan_id, scan_tables in tables.items()
    }
    return CategoryScore(
        category=category,
        per_scan=per_scan,
        value=min(1.0, float(np.mean(list(per_scan.values())))),
    )


def pooled_mean_average_precision(
    tables: Mapping[str, ScanTables],
    grid: ThresholdGrid,
    category: Category,
    inclusive: bool = False,
) -> float:
    """Mean over the grid of the pooled dataset-level AP."""
    _check_tables(tables, grid, category)
    ordered = [tables[scan_id] for scan_id in sorted(tables)]
    return float(
        np.mean(
            [
                pooled_average_precision([table_at(t, tau) for t in ordered], tau, inclusive)
                for tau in grid.taus
            ]
        )
    )


def classify_errors(
    predictions: Sequence[Prediction],
    references: Sequence[Landmark],
    table: MatchTable,
    tau: HitThreshold | float,
    inclusive: bool = False,
) -> ErrorBreakdown:
    """Break a category's outcome at one threshold into error kinds.

    `predictions` and `references` are the category subsets the table indexes into.
    A hit whose classes differ (e.g. a mesial point predicted as distal) is a class
    confusion; it still counts as a hit for the metrics.
    """
    result = hits(table, tau, inclusive)
    correct = confusion = mislocalized = spurious = 0
    for row, flag in zip(table.rows, result.flags, strict=True):
        if row.reference is None:
            spurious += 1
        elif not flag:
            mislocalized += 1
        elif predictions[row.prediction].landmark_class is references[row.reference].landmark_class:
            correct += 1
        else:
            confusion += 1
    return ErrorBreakdown(
        correct=correct,
        class_confusion=confusion,
        mislocalized=mislocalized,
        spurious=spurious,
        missed=result.false_negatives,
    )

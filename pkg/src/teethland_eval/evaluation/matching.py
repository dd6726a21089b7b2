"""Greedy score-ordered one-to-one assignment of predictions to reference landmarks."""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from itertools import groupby

import numpy as np
from scipy.spatial import cKDTree

from ..exceptions import CategoryMismatchError, ValidationError
from ..models import Category, Landmark, Prediction

logger = logging.getLogger(__name__)

# Candidates within this relative slack of the k-d tree's nearest distance are re-ranked
# with the exact distance formula shared with the brute-force scan.
_TIE_SLACK = 1e-9


@dataclass(frozen=True)
class HitThreshold:
    """Distance threshold (mm) of the hit criterion."""

    tau: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.tau) or self.tau < 0:
            raise ValidationError(f"threshold must be finite and non-negative, got {self.tau}")


@dataclass(frozen=True)
class MatchRow:
    """One prediction in score order with its assigned reference, if any."""

    prediction: int
    score: float
    reference: int | None = None
    distance: float | None = None

    @property
    def assigned(self) -> bool:
        return self.reference is not None


@dataclass(frozen=True)
class MatchTable:
    """Per-category assignment, rows ordered by descending prediction score."""

    category: Category
    rows: tuple[MatchRow, ...]
    unmatched_references: frozenset[int]
    reference_count: int

    @property
    def prediction_count(self) -> int:
        return len(self.rows)

    def assigned_references(self) -> list[int]:
        return [row.reference for row in self.rows if row.reference is not None]


@dataclass(frozen=True)
class HitResult:
    """Hit flags in table order plus detection counts."""

    flags: tuple[bool, ...]
    true_positives: int
    false_positives: int
    false_negatives: int


def pairwise_distances(point: np.ndarray, refs: np.ndarray) -> np.ndarray:
    """Euclidean distances from one point to each row of `refs`.

    Written component-wise so every caller gets bit-identical values.
    """
    diff = refs - point
    return np.sqrt(diff[:, 0] * diff[:, 0] + diff[:, 1] * diff[:, 1] + diff[:, 2] * diff[:, 2])


class _BruteForceNearest:
    """Nearest unmatched reference by a full scan."""

    def __init__(self, refs: np.ndarray):
        self.refs = refs
        self.alive = np.ones(len(refs), dtype=bool)

    @property
    def remaining(self) -> int:
        return int(self.alive.sum())

    def nearest(self, point: np.ndarray) -> tuple[float, int]:
        candidates = np.flatnonzero(self.alive)
        distances = pairwise_distances(point, self.refs[candidates])
        best = int(np.argmin(distances))
        return float(distances[best]), int(candidates[best])

    def remove(self, index: int) -> None:
        self.alive[index] = False


class _KDTreeNearest(_BruteForceNearest):
    """Nearest unmatched reference through a k-d tree with lazy deletion."""

    def __init__(self, refs: np.ndarray):
        super().__init__(refs)
        self.tree = cKDTree(refs) if len(refs) else None

    def nearest(self, point: np.ndarray) -> tuple[float, int]:
        total = len(self.refs)
        k = min(8, total)
        while True:
            dist, idx = self.tree.query(point, k=k)
            dist = np.atleast_1d(dist)
            idx = np.atleast_1d(idx)
            alive = self.alive[idx]
            if alive.any():
                bound = dist[alive][0] * (1.0 + _TIE_SLACK) + 1e-12
                # every reference inside the bound must be among the k returned
                if dist[-1] > bound or k == total:
                    candidates = np.sort(idx[alive & (dist <= bound)])
                    exact = pairwise_distances(point, self.refs[candidates])
                    best = int(np.argmin(exact))
                    return float(exact[best]), int(candidates[best])
            if k == total:
                raise RuntimeError("nearest() called with no unmatched reference left")
            k = min(2 * k, total)


def assign(
    predictions: Sequence[Prediction],
    references: Sequence[Landmark],
    category: Category,
    max_distance: float | None = None,
    inclusive: bool = False,
) -> MatchTable:
    """Greedily assign predictions to references inside one category.

    Predictions are visited by descending score; each takes its nearest reference that
    is still unassigned, whatever the distance. Score ties are resolved by the smaller
    distance to the nearest unassigned reference, then by input order. Equidistant
    references resolve to the lower reference index.

    Args:
        predictions: Scored predictions whose classes map to `category`
        references: Ground-truth landmarks whose classes map to `category`
        category: Category being matched
        max_distance: If set, a prediction is only assigned when its nearest
            unassigned reference lies within this distance
        inclusive: Whether `max_distance` itself counts as within

    Returns:
        MatchTable

    Raises:
        CategoryMismatchError: If an input belongs to another category
    """
    return _greedy(predictions, references, category, _KDTreeNearest, max_distance, inclusive)


def assign_bruteforce(
    predictions: Sequence[Prediction],
    references: Sequence[Landmark],
    category: Category,
    max_distance: float | None = None,
    inclusive: bool = False,
) -> MatchTable:
    """Same contract as `assign`, by an O(n*m) scan without a spatial index."""
    return _greedy(predictions, references, category, _BruteForceNearest, max_distance, inclusive)


def assign_by_category(
    predictions: Sequence[Prediction],
    references: Sequence[Landmark],
    max_distance: float | None = None,
    inclusive: bool = False,
) -> dict[Category, MatchTable]:
    """Split both sides by category and assign each category separately.

    Indices in the returned tables refer to positions within each category's subset,
    in input order.
    """
    tables: dict[Category, MatchTable] = {}
    for category in Category:
        preds = [p for p in predictions if p.category is category]
        refs = [r for r in references if r.category is category]
        tables[category] = assign(preds, refs, category, max_distance, inclusive)
    return tables


def hits(table: MatchTable, tau: HitThreshold | float, inclusive: bool = False) -> HitResult:
    """Flag each row as hit or miss at a distance threshold.

    A row is a hit iff it is assigned and its distance is below `tau` (or equal to it
    when `inclusive`). References matched at or beyond the threshold count as missed.
    """
    threshold = tau.tau if isinstance(tau, HitThreshold) else float(tau)
    flags = tuple(
        row.distance is not None
        and (row.distance <= threshold if inclusive else row.distance < threshold)
        for row in table.rows
    )
    tp = sum(flags)
    return HitResult(
        flags=flags,
        true_positives=tp,
        false_positives=len(flags) - tp,
        false_negatives=table.reference_count - tp,
    )


def _check_category(items: Sequence[Prediction | Landmark], category: Category) -> None:
    for item in items:
        if item.category is not category:
            raise CategoryMismatchError(item.landmark_class.value, category.value)


def _as_array(items: Sequence[Prediction | Landmark]) -> np.ndarray:
    if not items:
        return np.zeros((0, 3), dtype=np.float64)
    return np.asarray([item.position for item in items], dtype=np.float64)


def _greedy(
    predictions: Sequence[Prediction],
    references: Sequence[Landmark],
    category: Category,
    finder_type: type[_BruteForceNearest],
    max_distance: float | None,
    inclusive: bool,
) -> MatchTable:
    _check_category(predictions, category)
    _check_category(references, category)

    points = _as_array(predictions)
    finder = finder_type(_as_array(references))

    order = sorted(range(len(predictions)), key=lambda i: (-predictions[i].score, i))
    rows: list[MatchRow] = []

    for score, group in groupby(order, key=lambda i: predictions[i].score):
        remaining = list(group)
        while remaining:
            if finder.remaining == 0:
                rows.extend(MatchRow(prediction=i, score=score) for i in remaining)
                break

            best_pos, best_dist, best_ref = 0, math.inf, -1
            for pos, i in enumerate(remaining):
                dist, ref = finder.nearest(points[i])
                if dist < best_dist:
                    best_pos, best_dist, best_ref = pos, dist, ref
            chosen = remaining.pop(best_pos)

            within = (
                max_distance is None
                or best_dist < max_distance
                or (inclusive and best_dist == max_distance)
            )
            if within:
                finder.remove(best_ref)
                rows.append(
                    MatchRow(prediction=chosen, score=score, reference=best_ref, distance=best_dist)
                )
            else:
                rows.append(MatchRow(prediction=chosen, score=score))

    unmatched = frozenset(np.flatnonzero(finder.alive).tolist())
    logger.debug(
        f"{category.value}: {len(rows)} predictions, {len(references)} references, "
        f"{len(references) - len(unmatched)} assigned"
    )
    return MatchTable(
        category=category,
        rows=tuple(rows),
        unmatched_references=unmatched,
        reference_count=len(references),
    )

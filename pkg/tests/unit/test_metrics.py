"""Unit tests for AP, AR and their aggregates."""

import math

import pytest

from teethland_eval.evaluation.matching import MatchRow, MatchTable, assign
from teethland_eval.evaluation.metrics import (
    DEFAULT_GRID,
    ThresholdGrid,
    ap_per_threshold,
    average_precision,
    average_recall,
    classify_errors,
    mean_average_precision,
    mean_average_recall,
    pooled_average_precision,
    pooled_mean_average_precision,
    pr_curve,
    recall_curve_area,
    table_at,
)
from teethland_eval.exceptions import EmptyInputError, ValidationError
from teethland_eval.models import Category, LandmarkClass
from tests.helpers import landmark, prediction

CUSPS = Category.CUSPS


def table_from(distances: list[float | None], reference_count: int) -> MatchTable:
    """Table whose rows (already in score order) have the given match distances."""
    rows = tuple(
        MatchRow(prediction=i, score=1.0 - 0.01 * i, reference=None if d is None else i, distance=d)
        for i, d in enumerate(distances)
    )
    return MatchTable(
        category=CUSPS, rows=rows, unmatched_references=frozenset(), reference_count=reference_count
    )


def single_match(distance: float) -> MatchTable:
    ref = landmark("r", LandmarkClass.CUSP, (0.0, 0.0, 0.0))
    pred = prediction("p", LandmarkClass.CUSP, (distance, 0.0, 0.0), 1.0)
    return assign([pred], [ref], CUSPS)


class TestThresholdGrid:
    """Tests for the threshold grid."""

    def test_default_grid(self):
        """Test the 30-threshold default from 0.1 to 3.0 mm."""
        assert len(DEFAULT_GRID) == 30
        assert DEFAULT_GRID.taus[0] == 0.1
        assert DEFAULT_GRID.taus[9] == 1.0
        assert DEFAULT_GRID.tau_max == 3.0

    def test_zero_included(self):
        """Test prepending tau = 0."""
        grid = ThresholdGrid.regular(include_zero=True)
        assert grid.taus[0] == 0.0 and len(grid) == 31

    @pytest.mark.parametrize("taus", [(), (1.0, 0.5), (-0.1, 1.0), (1.0, 1.0)])
    def test_invalid_grids(self, taus):
        """Test that empty, unsorted or negative grids are rejected."""
        with pytest.raises(ValidationError):
            ThresholdGrid(taus=taus)


class TestAveragePrecision:
    """Tests for single-threshold AP."""

    def test_hand_case(self):
        """Test flags [hit, miss, hit] with 2 references gives 5/6."""
        table = table_from([0.5, 2.0, 0.5], reference_count=2)
        assert average_precision(table, 1.0) == pytest.approx(5.0 / 6.0, abs=1e-12)

    def test_perfect_detector(self):
        """Test that all hits with all references matched give AP = 1."""
        assert average_precision(table_from([0.0, 0.0], 2), 0.1) == 1.0

    def test_no_predictions(self):
        """Test that no predictions give AP = 0."""
        assert average_precision(table_from([], 3), 1.0) == 0.0

    def test_no_references(self):
        """Test the zero-reference convention."""
        assert average_precision(table_from([], 0), 1.0) == 1.0
        assert average_precision(table_from([None], 0), 1.0) == 0.0

    def test_pr_curve_envelope(self):
        """Test that interpolated precision is the running maximum from the right."""
        curve = pr_curve(table_from([0.5, 2.0, 0.5], 2), 1.0)
        assert curve.recall == (0.5, 0.5, 1.0)
        assert curve.precision == pytest.approx((1.0, 0.5, 2.0 / 3.0))
        assert curve.interpolated == pytest.approx((1.0, 2.0 / 3.0, 2.0 / 3.0))

    def test_pooled_equals_single_table(self):
        """Test that pooling one table reproduces its AP."""
        table = table_from([0.5, 2.0, 0.5], 2)
        assert pooled_average_precision([table], 1.0) == average_precision(table, 1.0)


class TestMeanAveragePrecision:
    """Tests for mAP over the grid and scans."""

    def test_single_match_below_one_mm(self):
        """Test a match at 0.95 mm hits 21 of 30 thresholds."""
        score = mean_average_precision({"s": single_match(0.95)}, DEFAULT_GRID, CUSPS)
        assert score.value == pytest.approx(0.7, abs=1e-12)

    def test_identity_scores_one(self):
        """Test that exact predictions score mAP = 1."""
        tables = {f"s{i}": single_match(0.0) for i in range(3)}
        assert mean_average_precision(tables, DEFAULT_GRID, CUSPS).value == 1.0

    def test_no_predictions_score_zero(self):
        """Test that empty predictions score mAP = 0."""
        tables = {"s": table_from([], 2)}
        assert mean_average_precision(tables, DEFAULT_GRID, CUSPS).value == 0.0

    def test_unweighted_mean_over_scans(self):
        """Test that scans count equally whatever their reference counts."""
        tables = {"a": table_from([0.0] * 10, 10), "b": table_from([], 1)}
        score = mean_average_precision(tables, DEFAULT_GRID, CUSPS)
        assert score.per_scan == pytest.approx({"a": 1.0, "b": 0.0})
        assert score.value == pytest.approx(0.5)

    def test_per_tau_values(self):
        """Test that the per-threshold APs behind each scan value are kept."""
        score = mean_average_precision({"s": single_match(0.95)}, DEFAULT_GRID, CUSPS)
        assert score.per_tau["s"] == tuple([0.0] * 9 + [1.0] * 21)

    def test_empty_scan_set(self):
        """Test that no scans raise EmptyInputError."""
        with pytest.raises(EmptyInputError):
            mean_average_precision({}, DEFAULT_GRID, CUSPS)

    def test_wrong_category(self):
        """Test that a table of another category is rejected."""
        with pytest.raises(ValidationError):
            mean_average_precision({"s": single_match(0.0)}, DEFAULT_GRID, Category.FACIAL)

    def test_pooled_identity(self):
        """Test pooled mAP of exact predictions."""
        tables = {f"s{i}": single_match(0.0) for i in range(3)}
        assert pooled_mean_average_precision(tables, DEFAULT_GRID, CUSPS) == 1.0


class TestAverageRecall:
    """Tests for AR."""

    def test_perfect_detector(self):
        """Test that distance-0 matches give AR = 1."""
        assert average_recall(single_match(0.0), DEFAULT_GRID) == pytest.approx(1.0, abs=1e-12)

    def test_no_predictions(self):
        """Test that no predictions give AR = 0."""
        assert average_recall(table_from([], 1), DEFAULT_GRID) == 0.0

    def test_no_references(self):
        """Test the zero-reference convention mirrors AP."""
        assert average_recall(table_from([], 0), DEFAULT_GRID) == 1.0
        assert average_recall(table_from([None], 0), DEFAULT_GRID) == 0.0

    def test_closed_form_step(self):
        """Test a match at 1 mm against the continuous step integral."""
        expected = (math.exp(-1.0) - math.exp(-3.0)) / (1.0 - math.exp(-3.0))
        assert average_recall(single_match(1.0), DEFAULT_GRID) == pytest.approx(expected, abs=0.02)

    def test_curve_area_constant_recall(self):
        """Test that constant recall r gives area r."""
        taus = DEFAULT_GRID.taus
        assert recall_curve_area(taus, [0.4] * len(taus), 0.4) == pytest.approx(0.4)

    def test_mean_over_scans(self):
        """Test mAR averages per-scan AR."""
        tables = {"a": single_match(0.0), "b": table_from([], 1)}
        assert mean_average_recall(tables, DEFAULT_GRID, CUSPS).value == pytest.approx(0.5)

    @pytest.mark.parametrize("grid", [DEFAULT_GRID, ThresholdGrid.regular(include_zero=True)])
    def test_perfect_detector_never_exceeds_one(self, grid):
        """Test that exact matches over many references stay within [0, 1]."""
        table = table_from([0.0] * 17, 17)
        ar = average_recall(table, grid)
        assert 1.0 - 1e-12 <= ar <= 1.0
        assert mean_average_recall({"a": table, "b": table}, grid, CUSPS).value <= 1.0

    def test_curve_area_clamped(self):
        """Test that the normalized area is clamped to [0, 1]."""
        taus = DEFAULT_GRID.taus
        assert recall_curve_area(taus, [1.0] * len(taus), 1.0) <= 1.0
        assert recall_curve_area(taus, [0.0] * len(taus), 0.0) == 0.0

    def test_per_threshold_tables(self):
        """Test that a table per threshold is scored at its own threshold."""
        grid = ThresholdGrid(taus=(1.0, 2.0))
        tables = {1.0: table_from([None], 1), 2.0: table_from([0.5], 1)}
        # recall 0 at tau=0 and tau=1, 1 at tau=2
        expected = (math.exp(-1.0) - math.exp(-2.0)) / 2.0 / (1.0 - math.exp(-2.0))
        assert average_recall(tables, grid) == pytest.approx(expected)
        assert ap_per_threshold(tables, grid) == [0.0, 1.0]
        assert table_at(tables, 2.0) is tables[2.0]


class TestClassifyErrors:
    """Tests for the error breakdown."""

    def test_breakdown(self):
        """Test correct, confused, mislocalized, spurious and missed counts."""
        md = Category.MESIAL_DISTAL
        refs = [
            landmark("m", LandmarkClass.MESIAL, (0.0, 0.0, 0.0)),
            landmark("d", LandmarkClass.DISTAL, (10.0, 0.0, 0.0)),
            landmark("far", LandmarkClass.MESIAL, (50.0, 0.0, 0.0)),
            landmark("lost", LandmarkClass.MESIAL, (100.0, 0.0, 0.0)),
        ]
        preds = [
            prediction("ok", LandmarkClass.MESIAL, (0.1, 0.0, 0.0), 0.9),
            prediction("swap", LandmarkClass.MESIAL, (10.1, 0.0, 0.0), 0.8),
            prediction("off", LandmarkClass.MESIAL, (53.0, 0.0, 0.0), 0.7),
        ]
        table = assign(preds, refs, md, max_distance=5.0)
        extra = prediction("ghost", LandmarkClass.DISTAL, (200.0, 0.0, 0.0), 0.1)
        table_all = assign([*preds, extra], refs, md, max_distance=5.0)
        breakdown = classify_errors([*preds, extra], refs, table_all, 1.0)
        assert breakdown.correct == 1
        assert breakdown.class_confusion == 1
        assert breakdown.mislocalized == 1
        assert breakdown.spurious == 1
        assert breakdown.missed == 2
        assert len(table.rows) == 3

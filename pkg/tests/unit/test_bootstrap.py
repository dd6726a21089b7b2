"""Unit tests for point awards and bootstrap ranking."""

import numpy as np
import pytest

from teethland_eval.config import RankingConfig
from teethland_eval.exceptions import RankingError
from teethland_eval.ranking.bootstrap import (
    CATEGORY_STREAMS,
    GRAND_STREAMS,
    MetricSample,
    bootstrap_rank,
    bootstrap_rank_with_config,
    leaderboard,
    pairwise_pvalues,
    points_round,
    stream_names,
)

SCANS = tuple(f"s{i:02d}" for i in range(30))


def team_samples(team: str, level: float, seed: int = 0) -> list[MetricSample]:
    """Eight streams of per-scan values around `level` on a shared per-scan profile."""
    base = np.random.default_rng(seed).uniform(0.1, 0.5, size=len(SCANS))
    return [
        MetricSample(team=team, stream=stream, scan_ids=SCANS, values=tuple((base + level).tolist()))
        for stream in CATEGORY_STREAMS
    ]


@pytest.fixture
def chain():
    """Three teams in a strict dominance chain A > B > C on every scan and stream."""
    return team_samples("A", 0.4) + team_samples("B", 0.2) + team_samples("C", 0.0)


class TestPointsRound:
    """Tests for points_round."""

    def test_two_teams_dominance(self):
        """Test a constant positive gap over 30 scans earns 8 points."""
        samples = team_samples("A", 0.1) + team_samples("B", 0.0)
        assert points_round(samples) == {"A": 8, "B": 0}

    def test_identical_teams(self):
        """Test that identical teams earn nothing."""
        samples = team_samples("A", 0.0) + team_samples("B", 0.0)
        assert points_round(samples) == {"A": 0, "B": 0}

    def test_chain(self, chain):
        """Test the dominance chain earns 16, 8 and 0 points."""
        assert points_round(chain) == {"A": 16, "B": 8, "C": 0}

    def test_single_team(self):
        """Test that one team cannot be ranked."""
        with pytest.raises(RankingError, match="two teams"):
            points_round(team_samples("A", 0.0))

    def test_missing_stream(self):
        """Test that teams must share every stream."""
        samples = team_samples("A", 0.1) + team_samples("B", 0.0)[:-1]
        with pytest.raises(RankingError, match="lacks"):
            points_round(samples)

    def test_scan_order_mismatch(self):
        """Test that teams must share the scan order."""
        other = [
            MetricSample(team="B", stream=s.stream, scan_ids=SCANS[::-1], values=s.values)
            for s in team_samples("B", 0.0)
        ]
        with pytest.raises(RankingError, match="scan order"):
            points_round(team_samples("A", 0.1) + other)

    def test_length_mismatch(self):
        """Test that a sample needs one value per scan."""
        with pytest.raises(RankingError):
            MetricSample(team="A", stream="mAP", scan_ids=("a", "b"), values=(1.0,))

    def test_pvalue_matrix(self, chain):
        """Test p-values are tiny for the dominant direction and 1 for the other."""
        matrix = pairwise_pvalues(chain)
        assert set(matrix) == set(CATEGORY_STREAMS)
        stream = CATEGORY_STREAMS[0]
        assert matrix[stream]["A"]["C"] < 0.001
        assert matrix[stream]["C"]["A"] == pytest.approx(1.0, abs=1e-3)


class TestBootstrapRank:
    """Tests for bootstrap_rank."""

    @pytest.mark.parametrize("seed", [0, 1, 123])
    def test_chain_scores(self, chain, seed):
        """Test normalized scores 1, 0.5 and 0 for every seed."""
        result = bootstrap_rank(chain, iterations=20, seed=seed)
        assert result.rank_scores == {"A": 1.0, "B": 0.5, "C": 0.0}
        assert result.ordering() == ["A", "B", "C"]
        assert result.comparisons_per_team == 16

    def test_degenerate_bootstrap_equals_full_round(self, chain):
        """Test one iteration without drops equals the full-data round, normalized."""
        result = bootstrap_rank(chain, iterations=1, drop_fraction=0.0)
        points = points_round(chain)
        assert result.raw_points == {team: [p] for team, p in points.items()}
        assert result.normalized["B"] == [0.5]

    def test_seed_determinism(self):
        """Test that a seed reproduces the result exactly, whatever the worker count."""
        noisy = team_samples("A", 0.01, seed=1) + team_samples("B", 0.0, seed=2)
        first = bootstrap_rank(noisy, iterations=15, seed=5, workers=1)
        second = bootstrap_rank(noisy, iterations=15, seed=5, workers=4)
        assert first.model_dump_json() == second.model_dump_json()

    def test_with_replacement(self, chain):
        """Test the with-replacement resampling mode keeps strict dominance."""
        result = bootstrap_rank(chain, iterations=10, resample_mode="bootstrap")
        assert result.rank_scores == {"A": 1.0, "B": 0.5, "C": 0.0}
        assert result.resample_mode == "bootstrap"

    def test_too_few_scans_left(self):
        """Test that dropping down to fewer than 2 scans is an error."""
        samples = [
            MetricSample(team=t, stream="mAP", scan_ids=("a", "b"), values=(v, v))
            for t, v in (("A", 1.0), ("B", 0.0))
        ]
        with pytest.raises(RankingError, match="fewer than 2"):
            bootstrap_rank(samples, drop_fraction=0.5)

    @pytest.mark.parametrize("fraction", [-0.1, 1.0])
    def test_invalid_drop_fraction(self, chain, fraction):
        """Test that the drop fraction lies in [0, 1)."""
        with pytest.raises(RankingError):
            bootstrap_rank(chain, drop_fraction=fraction)

    @pytest.mark.parametrize("factor", [0.5, 4.0])
    def test_common_scale_leaves_ranking_unchanged(self, factor):
        """Test that scaling every sample by one positive factor keeps the RankingResult."""
        samples = (
            team_samples("A", 0.02, seed=1)
            + team_samples("B", 0.0, seed=2)
            + team_samples("C", 0.01, seed=3)
        )
        scaled = [
            MetricSample(
                team=s.team,
                stream=s.stream,
                scan_ids=s.scan_ids,
                values=tuple(v * factor for v in s.values),
            )
            for s in samples
        ]
        original = bootstrap_rank(samples, iterations=10, seed=7, p_threshold=0.05)
        assert bootstrap_rank(scaled, iterations=10, seed=7, p_threshold=0.05) == original

    def test_with_config(self, chain):
        """Test that RankingConfig drives the run."""
        result = bootstrap_rank_with_config(chain, RankingConfig(iterations=3, seed=4))
        assert result.iterations == 3 and result.seed == 4


class TestLeaderboard:
    """Tests for leaderboard rows."""

    def test_identical_teams_share_rank(self):
        """Test that equal rank scores share a rank."""
        samples = team_samples("A", 0.0) + team_samples("B", 0.0)
        rows = leaderboard(bootstrap_rank(samples, iterations=3))
        assert [(r.rank, r.team, r.rank_score) for r in rows] == [(1, "A", 0.0), (1, "B", 0.0)]
        assert rows[0].mAP is None

    def test_stream_names(self):
        """Test the eight category streams and the two grand streams."""
        assert len(stream_names("categories")) == 8
        assert stream_names("grand") == GRAND_STREAMS

"""Unit tests for the one-sided Wilcoxon signed-rank test."""

import numpy as np
import pytest

from teethland_eval.exceptions import ValidationError
from teethland_eval.ranking.wilcoxon import (
    exact_upper_tail,
    normal_upper_tail,
    signed_ranks,
    wilcoxon_signed_rank,
)


class TestSignedRanks:
    """Tests for signed_ranks."""

    def test_wilcox_discards_zeros(self):
        """Test that zero differences are dropped before ranking."""
        ranks = signed_ranks(np.array([0.0, 2.0, -1.0]), "wilcox")
        assert ranks.tolist() == [2.0, -1.0]

    def test_pratt_ranks_zeros_first(self):
        """Test that Pratt ranks zeros, then drops them."""
        ranks = signed_ranks(np.array([0.0, 2.0, -1.0]), "pratt")
        assert ranks.tolist() == [3.0, -2.0]

    def test_ties_get_average_ranks(self):
        """Test average ranks for tied magnitudes."""
        ranks = signed_ranks(np.array([1.0, -1.0, 2.0]))
        assert ranks.tolist() == [1.5, -1.5, 3.0]

    def test_unknown_method(self):
        """Test that an unknown zero method is rejected."""
        with pytest.raises(ValidationError):
            signed_ranks(np.array([1.0]), "zsplit")  # type: ignore[arg-type]


class TestWilcoxonSignedRank:
    """Tests for wilcoxon_signed_rank."""

    def test_all_positive(self):
        """Test diffs [1..5] give W- = 0 and p = 1/32."""
        result = wilcoxon_signed_rank([1, 2, 3, 4, 5], [0, 0, 0, 0, 0])
        assert result.w_minus == 0.0
        assert result.statistic == 15.0
        assert result.p_value == 0.03125
        assert result.method == "exact"

    def test_two_pairs(self):
        """Test diffs [5, -1] give W- = 1 and p = 1/2."""
        result = wilcoxon_signed_rank([5, 0], [0, 1])
        assert result.w_minus == 1.0
        assert result.p_value == 0.5

    def test_identical_samples(self):
        """Test that equal samples give p = 1 and are flagged."""
        result = wilcoxon_signed_rank([0.3, 0.4], [0.3, 0.4])
        assert result.p_value == 1.0
        assert result.no_evidence

    def test_direction(self):
        """Test that the reversed test gives the complementary evidence."""
        x, y = [1, 2, 3, 4, 5], [0, 0, 0, 0, 0]
        assert wilcoxon_signed_rank(y, x).p_value == 1.0

    def test_unequal_lengths(self):
        """Test that unpaired samples are rejected."""
        with pytest.raises(ValidationError):
            wilcoxon_signed_rank([1, 2], [1])

    def test_empty(self):
        """Test that empty samples are rejected."""
        with pytest.raises(ValidationError):
            wilcoxon_signed_rank([], [])

    def test_normal_approximation_above_cutoff(self):
        """Test that large samples switch to the normal approximation."""
        rng = np.random.default_rng(3)
        x = rng.normal(size=40)
        result = wilcoxon_signed_rank(x + 0.5, x - rng.normal(size=40) * 0.1)
        assert result.method == "normal"
        assert 0.0 <= result.p_value <= 1.0

    def test_exact_and_normal_agree(self):
        """Test exact and normal tails agree within 0.01 for 20 to 25 pairs."""
        rng = np.random.default_rng(42)
        for _ in range(200):
            n = int(rng.integers(20, 26))
            diffs = rng.normal(0.1, 1.0, size=n)
            ranks = np.abs(signed_ranks(diffs))
            observed = float(ranks[diffs > 0].sum())
            assert abs(exact_upper_tail(ranks, observed) - normal_upper_tail(ranks, observed)) < 0.01

    def test_exact_tail_with_half_ranks(self):
        """Test the exact tail on tied (half-integer) ranks by enumeration."""
        ranks = np.array([1.5, 1.5, 3.0])
        # sign patterns give W+ in {0, 1.5, 1.5, 3, 3, 4.5, 4.5, 6}
        assert exact_upper_tail(ranks, 4.5) == 3 / 8

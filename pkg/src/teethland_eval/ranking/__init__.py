"""Significance-based ranking of teams."""

from .bootstrap import RankingResult, bootstrap_rank
from .wilcoxon import wilcoxon_signed_rank

__all__ = ["RankingResult", "bootstrap_rank", "wilcoxon_signed_rank"]

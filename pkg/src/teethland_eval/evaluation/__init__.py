"""Greedy matching and AP/AR metrics."""

from .matching import MatchTable, assign
from .metrics import ThresholdGrid
from .submission import MetricReport, evaluate_submission

__all__ = ["MatchTable", "MetricReport", "ThresholdGrid", "assign", "evaluate_submission"]

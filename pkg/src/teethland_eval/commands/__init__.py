"""Command handlers behind the CLI subcommands."""

from .detect import DetectCommand
from .evaluate import EvalCommand
from .rank import RankCommand
from .report import ReportCommand
from .synth import SynthCommand

__all__ = ["DetectCommand", "EvalCommand", "RankCommand", "ReportCommand", "SynthCommand"]

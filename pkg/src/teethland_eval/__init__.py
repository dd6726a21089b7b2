"""Teethland Eval - evaluation, ranking and post-processing for 3D dental landmark detection."""

__version__ = "0.1.0"

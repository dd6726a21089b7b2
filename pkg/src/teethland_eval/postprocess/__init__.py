"""Landmark extraction from dense per-point predictions."""

from .extract import Detection, extract, to_predictions
from .fields import MeshGraph, PointField

__all__ = ["Detection", "MeshGraph", "PointField", "extract", "to_predictions"]

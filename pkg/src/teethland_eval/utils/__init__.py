"""File codecs and output writers."""

from .landmark_file import DatasetStore, parse_ground_truth, parse_predictions, write_landmark_file

__all__ = ["DatasetStore", "parse_ground_truth", "parse_predictions", "write_landmark_file"]

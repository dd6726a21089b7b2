"""Builders shared by the test modules."""

from teethland_eval.models import Landmark, LandmarkClass, LandmarkFile, Prediction
from teethland_eval.utils.landmark_file import FORMAT_VERSION


def landmark(key: str, cls: LandmarkClass, position: tuple[float, float, float]) -> Landmark:
    return Landmark(key=key, landmark_class=cls, position=position)


def prediction(
    key: str, cls: LandmarkClass, position: tuple[float, float, float], score: float
) -> Prediction:
    return Prediction(landmark=landmark(key, cls, position), score=score)


def landmark_file(scan_id: str, objects: list[Landmark] | list[Prediction]) -> LandmarkFile:
    return LandmarkFile(version=FORMAT_VERSION, scan_id=scan_id, objects=tuple(objects))


def as_predictions(gt: LandmarkFile, score: float = 0.9) -> LandmarkFile:
    """The ground truth itself as a prediction file with a constant score."""
    return landmark_file(gt.scan_id, [Prediction(landmark=lm, score=score) for lm in gt.landmarks()])

"""Pydantic models for dental landmark ground truth and predictions."""

import math
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .exceptions import UnknownClassError


class LandmarkClass(str, Enum):
    """The six semantic landmark classes annotated on every tooth."""

    MESIAL = "Mesial"
    DISTAL = "Distal"
    CUSP = "Cusp"
    INNER_POINT = "InnerPoint"
    OUTER_POINT = "OuterPoint"
    FACIAL_POINT = "FacialPoint"

    @classmethod
    def parse(cls, value: str, source: str | None = None) -> "LandmarkClass":
        """Parse a class string case-insensitively after trimming.

        Args:
            value: Raw class string from an annotation file
            source: Optional file or scan name for error messages

        Returns:
            Matching LandmarkClass

        Raises:
            UnknownClassError: If the string names none of the six classes
        """
        if not isinstance(value, str):
            raise UnknownClassError(repr(value), source)
        wanted = value.strip().lower()
        for member in cls:
            if member.value.lower() == wanted:
                return member
        raise UnknownClassError(value, source)

    @property
    def category(self) -> "Category":
        """Evaluation category this class is scored in."""
        return CLASS_TO_CATEGORY[self]


class Category(str, Enum):
    """The four class groupings used by the metrics."""

    MESIAL_DISTAL = "MesialDistal"
    CUSPS = "Cusps"
    INNER_OUTER = "InnerOuter"
    FACIAL = "Facial"

    @property
    def classes(self) -> tuple[LandmarkClass, ...]:
        """Landmark classes scored in this category."""
        return tuple(c for c, cat in CLASS_TO_CATEGORY.items() if cat is self)


CLASS_TO_CATEGORY: dict[LandmarkClass, Category] = {
    LandmarkClass.MESIAL: Category.MESIAL_DISTAL,
    LandmarkClass.DISTAL: Category.MESIAL_DISTAL,
    LandmarkClass.CUSP: Category.CUSPS,
    LandmarkClass.INNER_POINT: Category.INNER_OUTER,
    LandmarkClass.OUTER_POINT: Category.INNER_OUTER,
    LandmarkClass.FACIAL_POINT: Category.FACIAL,
}


class Landmark(BaseModel):
    """One annotated 3D point in millimeters, in the scan's native frame."""

    key: str = Field(..., min_length=1, description="Opaque identifier, unique per file")
    landmark_class: LandmarkClass = Field(..., alias="class", description="Semantic class")
    position: tuple[float, float, float] = Field(..., description="x, y, z in mm")

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    @field_validator("position")
    @classmethod
    def validate_position(cls, v: tuple[float, float, float]) -> tuple[float, float, float]:
        """Reject non-finite coordinates."""
        if not all(math.isfinite(c) for c in v):
            raise ValueError(f"coordinates must be finite, got {v}")
        return v

    @property
    def category(self) -> Category:
        """Evaluation category of the landmark's class."""
        return self.landmark_class.category

    def as_array(self) -> np.ndarray:
        """Position as a float64 array of shape (3,)."""
        return np.asarray(self.position, dtype=np.float64)


class Prediction(BaseModel):
    """A predicted landmark with its detection score."""

    landmark: Landmark
    score: float = Field(..., description="Detection confidence in [0, 1]")

    model_config = ConfigDict(frozen=True)

    @field_validator("score")
    @classmethod
    def validate_score(cls, v: float) -> float:
        """Scores are finite and within [0, 1]."""
        if not math.isfinite(v) or v < 0.0 or v > 1.0:
            raise ValueError(f"score must be finite and within [0, 1], got {v}")
        return v

    @property
    def key(self) -> str:
        return self.landmark.key

    @property
    def landmark_class(self) -> LandmarkClass:
        return self.landmark.landmark_class

    @property
    def position(self) -> tuple[float, float, float]:
        return self.landmark.position

    @property
    def category(self) -> Category:
        return self.landmark.category


class LandmarkFile(BaseModel):
    """A scan's landmark record: ground truth (Landmark objects) or a submission (Prediction objects)."""

    version: str = Field(..., description="Annotation format version")
    scan_id: str = Field(..., min_length=1, description="Scan identifier")
    objects: tuple[Landmark, ...] | tuple[Prediction, ...] = Field(
        default=(), description="Ordered landmark or prediction objects"
    )
    extra: dict[str, Any] = Field(
        default_factory=dict, description="Unknown top-level fields kept for round-tripping"
    )

    model_config = ConfigDict(frozen=True)

    @field_validator("scan_id")
    @classmethod
    def validate_scan_id(cls, v: str) -> str:
        """scan_id must contain more than whitespace."""
        if not v.strip():
            raise ValueError("scan_id must be non-empty")
        return v

    @model_validator(mode="after")
    def validate_objects(self) -> "LandmarkFile":
        """Keys are unique and objects are homogeneous."""
        seen: set[str] = set()
        for obj in self.objects:
            if obj.key in seen:
                raise ValueError(f"duplicate landmark key '{obj.key}'")
            seen.add(obj.key)
        kinds = {type(obj) for obj in self.objects}
        if len(kinds) > 1:
            raise ValueError("a landmark file cannot mix scored and unscored objects")
        return self

    @property
    def is_prediction(self) -> bool:
        """True if the objects carry scores."""
        return bool(self.objects) and isinstance(self.objects[0], Prediction)

    def landmarks(self) -> list[Landmark]:
        """Objects as plain landmarks (scores dropped)."""
        return [obj.landmark if isinstance(obj, Prediction) else obj for obj in self.objects]

    def predictions(self) -> list[Prediction]:
        """Objects as predictions; unscored ground truth gets score 1."""
        return [
            obj if isinstance(obj, Prediction) else Prediction(landmark=obj, score=1.0)
            for obj in self.objects
        ]


class DatasetEntry(BaseModel):
    """Location of one scan's ground truth and optional mesh."""

    ground_truth: Path
    mesh: Path | None = None

    model_config = ConfigDict(frozen=True)


class DatasetIndex(BaseModel):
    """Mapping scan_id -> (ground-truth path, optional mesh path)."""

    entries: dict[str, DatasetEntry] = Field(default_factory=dict)

    model_config = ConfigDict(frozen=True)

    @classmethod
    def from_pairs(
        cls, pairs: list[tuple[str, Path, Path | None]]
    ) -> "DatasetIndex":
        """Build an index, rejecting duplicate scan ids."""
        entries: dict[str, DatasetEntry] = {}
        for scan_id, gt_path, mesh_path in pairs:
            if scan_id in entries:
                raise ValueError(f"duplicate scan_id '{scan_id}' in dataset index")
            entries[scan_id] = DatasetEntry(ground_truth=gt_path, mesh=mesh_path)
        return cls(entries=entries)

    @property
    def scan_ids(self) -> list[str]:
        """Scan ids in sorted order."""
        return sorted(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

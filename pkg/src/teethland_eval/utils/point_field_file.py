"""CSV and NPZ interchange for point fields."""

import logging
from pathlib import Path

import numpy as np

from ..exceptions import ValidationError
from ..models import LandmarkClass
from ..postprocess.fields import PointField

logger = logging.getLogger(__name__)

POSITION_COLUMNS = ("x", "y", "z")
OFFSET_COLUMNS = ("ox", "oy", "oz")


def write_point_field(field: PointField, path: Path | str) -> Path:
    """Write a field as CSV (x,y,z[,confidence][,distance][,ox,oy,oz]) or NPZ.

    The format follows the suffix: `.csv` or `.npz`.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    suffix = path.suffix.lower()

    if suffix == ".npz":
        arrays: dict[str, np.ndarray] = {"points": field.points}
        for name in ("confidence", "distance", "offsets"):
            if getattr(field, name) is not None:
                arrays[name] = getattr(field, name)
        if field.landmark_class is not None:
            arrays["landmark_class"] = np.array(field.landmark_class.value)
        with path.open("wb") as handle:
            np.savez(handle, **arrays)
        return path

    if suffix != ".csv":
        raise ValidationError(f"unsupported point field format '{suffix}'")

    columns = list(POSITION_COLUMNS)
    blocks = [field.points]
    if field.confidence is not None:
        columns.append("confidence")
        blocks.append(field.confidence[:, None])
    if field.distance is not None:
        columns.append("distance")
        blocks.append(field.distance[:, None])
    if field.offsets is not None:
        columns.extend(OFFSET_COLUMNS)
        blocks.append(field.offsets)
    data = np.hstack(blocks) if len(field) else np.zeros((0, len(columns)))
    np.savetxt(path, data, delimiter=",", header=",".join(columns), comments="", fmt="%.17g")
    return path


def read_point_field(path: Path | str, landmark_class: LandmarkClass | None = None) -> PointField:
    """Read a field written by `write_point_field` (or any CSV with the same header names).

    Raises:
        ValidationError: On unknown formats, missing position columns or partial offsets
    """
    path = Path(path)
    suffix = path.suffix.lower()

    if suffix == ".npz":
        with np.load(path, allow_pickle=False) as archive:
            stored_class = (
                LandmarkClass.parse(str(archive["landmark_class"]), str(path))
                if "landmark_class" in archive
                else None
            )
            return PointField(
                points=archive["points"],
                confidence=archive["confidence"] if "confidence" in archive else None,
                distance=archive["distance"] if "distance" in archive else None,
                offsets=archive["offsets"] if "offsets" in archive else None,
                landmark_class=landmark_class or stored_class,
            )

    if suffix != ".csv":
        raise ValidationError(f"unsupported point field format '{suffix}'")

    with path.open() as handle:
        header = [name.strip().lower() for name in handle.readline().split(",")]
    missing = [c for c in POSITION_COLUMNS if c not in header]
    if missing:
        raise ValidationError(f"{path}: missing columns {missing}")
    present_offsets = [c for c in OFFSET_COLUMNS if c in header]
    if present_offsets and len(present_offsets) != 3:
        raise ValidationError(f"{path}: offsets need all of {list(OFFSET_COLUMNS)}")

    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2).reshape(-1, len(header))
    column = {name: data[:, i] for i, name in enumerate(header)}
    field = PointField(
        points=np.column_stack([column[c] for c in POSITION_COLUMNS]),
        confidence=column.get("confidence"),
        distance=column.get("distance"),
        offsets=np.column_stack([column[c] for c in OFFSET_COLUMNS]) if present_offsets else None,
        landmark_class=landmark_class,
    )
    logger.debug(f"Read {len(field)} points from {path}")
    return field

"""JSON codec for landmark annotation and prediction files, plus a directory-backed store."""

import json
import logging
import math
from collections import Counter
from collections.abc import Iterable
from pathlib import Path
from typing import Any

from pydantic import ValidationError as PydanticValidationError

from ..exceptions import (
    DuplicateKeyError,
    LandmarkFileError,
    MissingScoreError,
    ScoreRangeError,
)
from ..models import DatasetIndex, Landmark, LandmarkClass, LandmarkFile, Prediction

logger = logging.getLogger(__name__)

FORMAT_VERSION = "1.0"
SCAN_ID_FIELDS = ("scan_id", "id")
COORDINATE_FIELDS = ("coordinates", "position")
KNOWN_TOP_LEVEL = {"version", "objects", *SCAN_ID_FIELDS}
MESH_SUFFIXES = (".obj", ".ply", ".stl")


def parse_ground_truth(data: bytes, source: str | None = None) -> LandmarkFile:
    """Decode a ground-truth landmark file.

    Args:
        data: UTF-8 encoded JSON
        source: Optional file name used in error messages

    Returns:
        Validated LandmarkFile whose objects are Landmarks

    Raises:
        LandmarkFileError: On malformed JSON or missing fields
        DuplicateKeyError: If two objects share a key
        UnknownClassError: If a class string is not recognised
    """
    return _parse(data, source, scored=False)


def parse_predictions(data: bytes, source: str | None = None) -> LandmarkFile:
    """Decode a prediction file: the ground-truth schema plus a per-object score.

    Raises:
        MissingScoreError: If an object has no numeric score
        ScoreRangeError: If a score lies outside [0, 1]
        LandmarkFileError: For every ground-truth schema violation
    """
    return _parse(data, source, scored=True)


def write_landmark_file(landmark_file: LandmarkFile) -> bytes:
    """Encode a LandmarkFile as UTF-8 JSON.

    Object order is kept and floats are written with Python's shortest round-trip
    representation, so decoding the output yields an equal LandmarkFile.
    """
    objects: list[dict[str, Any]] = []
    for obj in landmark_file.objects:
        landmark = obj.landmark if isinstance(obj, Prediction) else obj
        record: dict[str, Any] = {
            "key": landmark.key,
            "class": landmark.landmark_class.value,
            "coordinates": list(landmark.position),
        }
        if isinstance(obj, Prediction):
            record["score"] = obj.score
        objects.append(record)

    document: dict[str, Any] = {
        "version": landmark_file.version,
        "scan_id": landmark_file.scan_id,
        **landmark_file.extra,
        "objects": objects,
    }
    return json.dumps(document, indent=2, allow_nan=False).encode("utf-8")


def dataset_stats(files: Iterable[LandmarkFile]) -> dict[LandmarkClass, int]:
    """Count landmarks per class across ground-truth files.

    Returns:
        Mapping with an entry for each of the six classes (zero when absent)
    """
    counts: Counter[LandmarkClass] = Counter()
    for landmark_file in files:
        counts.update(landmark.landmark_class for landmark in landmark_file.landmarks())
    return {cls: counts.get(cls, 0) for cls in LandmarkClass}


def _parse(data: bytes, source: str | None, scored: bool) -> LandmarkFile:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise LandmarkFileError(f"input is not UTF-8: {e}", source)

    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise LandmarkFileError(f"malformed JSON: {e}", source)

    if not isinstance(document, dict):
        raise LandmarkFileError("top level must be a JSON object", source)

    version = document.get("version")
    if not isinstance(version, str):
        raise LandmarkFileError("missing or non-string 'version'", source)

    scan_id = next((document[f] for f in SCAN_ID_FIELDS if f in document), None)
    if not isinstance(scan_id, str) or not scan_id.strip():
        raise LandmarkFileError("missing or empty 'scan_id'", source)

    raw_objects = document.get("objects")
    if not isinstance(raw_objects, list):
        raise LandmarkFileError("missing 'objects' array", source)

    objects: list[Landmark] | list[Prediction] = []
    seen: set[str] = set()
    for index, raw in enumerate(raw_objects):
        landmark = _parse_landmark(raw, index, source)
        if landmark.key in seen:
            raise DuplicateKeyError(landmark.key, source)
        seen.add(landmark.key)
        if scored:
            objects.append(_attach_score(landmark, raw, source))  # type: ignore[arg-type]
        else:
            objects.append(landmark)  # type: ignore[arg-type]

    extra = {k: v for k, v in document.items() if k not in KNOWN_TOP_LEVEL}
    try:
        return LandmarkFile(version=version, scan_id=scan_id, objects=tuple(objects), extra=extra)
    except PydanticValidationError as e:
        raise LandmarkFileError(f"invalid file: {e}", source)


def _parse_landmark(raw: Any, index: int, source: str | None) -> Landmark:
    if not isinstance(raw, dict):
        raise LandmarkFileError(f"object #{index} is not a JSON object", source)

    key = raw.get("key")
    if not isinstance(key, str) or not key:
        raise LandmarkFileError(f"object #{index} has no string 'key'", source)

    landmark_class = LandmarkClass.parse(raw.get("class"), source)

    coordinates = next((raw[f] for f in COORDINATE_FIELDS if f in raw), None)
    if (
        not isinstance(coordinates, list)
        or len(coordinates) != 3
        or not all(_is_number(c) for c in coordinates)
    ):
        raise LandmarkFileError(f"object '{key}' needs three numeric coordinates", source)
    try:
        position = tuple(float(c) for c in coordinates)
    except OverflowError:
        raise LandmarkFileError(f"object '{key}' has a coordinate beyond float range", source)
    if not all(math.isfinite(c) for c in position):
        raise LandmarkFileError(f"object '{key}' has a non-finite coordinate", source)

    return Landmark(key=key, landmark_class=landmark_class, position=position)


def _attach_score(landmark: Landmark, raw: dict[str, Any], source: str | None) -> Prediction:
    score = raw.get("score")
    if not _is_number(score):
        raise MissingScoreError(landmark.key, source)
    try:
        score = float(score)
    except OverflowError:
        raise ScoreRangeError(landmark.key, math.inf if score > 0 else -math.inf, source)
    if not math.isfinite(score) or score < 0.0 or score > 1.0:
        raise ScoreRangeError(landmark.key, score, source)
    return Prediction(landmark=landmark, score=score)


def _is_number(value: Any) -> bool:
    return isinstance(value, int | float) and not isinstance(value, bool)


class DatasetStore:
    """Reads and writes landmark files kept as `<scan_id>.json` in a directory."""

    def __init__(self, root: Path | str):
        """Initialize the store.

        Args:
            root: Directory holding one JSON file per scan
        """
        self.root = Path(root)

    def get_path(self, scan_id: str) -> Path:
        """Path of the file for a scan."""
        return self.root / f"{scan_id}.json"

    def write(self, landmark_file: LandmarkFile) -> Path:
        """Write a file under its scan id, creating the directory if needed."""
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.get_path(landmark_file.scan_id)
        path.write_bytes(write_landmark_file(landmark_file))
        logger.debug(f"Wrote {len(landmark_file.objects)} objects to {path}")
        return path

    def paths(self) -> list[Path]:
        """All JSON files in the store, sorted by name."""
        if not self.root.is_dir():
            return []
        return sorted(p for p in self.root.iterdir() if p.suffix.lower() == ".json")

    def read_ground_truth(self) -> dict[str, LandmarkFile]:
        """Decode every file as ground truth, keyed by scan id.

        Raises:
            LandmarkFileError: On decoding errors or duplicate scan ids
        """
        return self._read_all(parse_ground_truth)

    def read_predictions(self) -> dict[str, LandmarkFile]:
        """Decode every file as a prediction file, keyed by scan id.

        Raises:
            LandmarkFileError: On decoding errors or duplicate scan ids
        """
        return self._read_all(parse_predictions)

    def _read_all(self, parser) -> dict[str, LandmarkFile]:
        return {scan_id: lf for scan_id, (_, lf) in self._read_with_paths(parser).items()}

    def _read_with_paths(self, parser) -> dict[str, tuple[Path, LandmarkFile]]:
        files: dict[str, tuple[Path, LandmarkFile]] = {}
        for path in self.paths():
            landmark_file = parser(path.read_bytes(), str(path))
            if landmark_file.scan_id in files:
                raise LandmarkFileError(
                    f"scan '{landmark_file.scan_id}' appears in more than one file", str(path)
                )
            files[landmark_file.scan_id] = (path, landmark_file)
        logger.info(f"Read {len(files)} landmark files from {self.root}")
        return files

    def load_dataset(
        self, mesh_dir: Path | str | None = None
    ) -> tuple[DatasetIndex, dict[str, LandmarkFile]]:
        """Decode the ground truth once and index it.

        Each scan is paired with `<scan_id>.{obj,ply,stl}` under `mesh_dir` when present.

        Returns:
            (index, ground-truth files keyed by scan id in index order)

        Raises:
            LandmarkFileError: If a file cannot be decoded or a scan id repeats
        """
        read = self._read_with_paths(parse_ground_truth)
        mesh_root = Path(mesh_dir) if mesh_dir else None
        index = DatasetIndex.from_pairs(
            [(scan_id, path, _find_mesh(mesh_root, scan_id)) for scan_id, (path, _) in read.items()]
        )
        if mesh_root is not None:
            unpaired = [s for s in index.scan_ids if index.entries[s].mesh is None]
            if unpaired:
                logger.warning(f"{len(unpaired)} scans have no mesh in {mesh_root}")
        return index, {scan_id: read[scan_id][1] for scan_id in index.scan_ids}

    def build_index(self, mesh_dir: Path | str | None = None) -> DatasetIndex:
        """Index the ground-truth files, pairing each scan with its mesh.

        Raises:
            LandmarkFileError: If a file cannot be decoded or a scan id repeats
        """
        return self.load_dataset(mesh_dir)[0]


def _find_mesh(mesh_root: Path | None, scan_id: str) -> Path | None:
    if mesh_root is None:
        return None
    return next(
        (
            mesh_root / f"{scan_id}{suffix}"
            for suffix in MESH_SUFFIXES
            if (mesh_root / f"{scan_id}{suffix}").exists()
        ),
        None,
    )

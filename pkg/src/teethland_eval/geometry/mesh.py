"""Triangle mesh IO, vertex normals and cotangent mean curvature."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import trimesh

from ..exceptions import MeshLoadError, ValidationError

logger = logging.getLogger(__name__)

MESH_FORMATS = (".obj", ".ply", ".stl")
CURVATURE_CLAMP = 100.0


@dataclass(eq=False)
class TriangleMesh:
    """Vertices in mm and triangles as vertex index triples.

    Attributes:
        vertices: (N, 3) float array
        faces: (M, 3) int array, every index < N, no repeated index within a face
        normals: Optional (N, 3) per-vertex unit normals
        dropped_faces: Degenerate faces removed while loading
    """

    vertices: np.ndarray
    faces: np.ndarray
    normals: np.ndarray | None = None
    dropped_faces: int = 0

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValidationError("face index out of range")

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def face_count(self) -> int:
        return len(self.faces)

    def to_trimesh(self) -> trimesh.Trimesh:
        return trimesh.Trimesh(vertices=self.vertices, faces=self.faces, process=False)


def drop_degenerate_faces(faces: np.ndarray) -> tuple[np.ndarray, int]:
    """Remove faces that repeat a vertex index; returns the kept faces and the drop count."""
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    valid = (
        (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])
    )
    return faces[valid], int((~valid).sum())


def load_mesh(path: Path | str) -> TriangleMesh:
    """Load an OBJ, PLY or STL mesh without reprocessing its vertices.

    STL stores each triangle separately, so coincident vertices are merged.

    Args:
        path: Mesh file

    Returns:
        TriangleMesh with degenerate faces removed

    Raises:
        MeshLoadError: If the file is missing, unreadable, of another format or empty
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in MESH_FORMATS:
        raise MeshLoadError(f"unsupported format '{suffix}'", str(path))
    if not path.is_file():
        raise MeshLoadError("file not found", str(path))

    try:
        loaded = trimesh.load(path, force="mesh", process=False)
    except Exception as e:
        raise MeshLoadError(f"cannot read mesh: {e}", str(path))

    if not isinstance(loaded, trimesh.Trimesh) or len(loaded.vertices) == 0:
        raise MeshLoadError("mesh is empty", str(path))
    if suffix == ".stl":
        loaded.merge_vertices()

    faces, dropped = drop_degenerate_faces(loaded.faces)
    if dropped:
        logger.warning(f"Dropped {dropped} degenerate faces from {path}")
    if len(faces) == 0:
        raise MeshLoadError("mesh has no valid faces", str(path))

    mesh = TriangleMesh(vertices=np.array(loaded.vertices), faces=faces, dropped_faces=dropped)
    logger.debug(f"Loaded {path}: {mesh.vertex_count} vertices, {mesh.face_count} faces")
    return mesh


def write_mesh(mesh: TriangleMesh, path: Path | str) -> Path:
    """Write a mesh as OBJ (ascii), PLY (binary little-endian) or STL (binary).

    Raises:
        MeshLoadError: If the suffix names an unsupported format
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in MESH_FORMATS:
        raise MeshLoadError(f"unsupported format '{suffix}'", str(path))
    path.parent.mkdir(parents=True, exist_ok=True)
    mesh.to_trimesh().export(path)
    return path


def face_normals(mesh: TriangleMesh) -> np.ndarray:
    """Unnormalized face normals; their length is twice the face area."""
    v = mesh.vertices[mesh.faces]
    return np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])


def vertex_normals(mesh: TriangleMesh) -> np.ndarray:
    """Area-weighted average of incident face normals, normalized.

    Vertices without incident faces get a zero normal and are reported in the log.
    """
    accumulated = np.zeros_like(mesh.vertices)
    weighted = face_normals(mesh)
    for corner in range(3):
        np.add.at(accumulated, mesh.faces[:, corner], weighted)

    lengths = np.linalg.norm(accumulated, axis=1)
    isolated = lengths == 0.0
    normals = np.zeros_like(accumulated)
    normals[~isolated] = accumulated[~isolated] / lengths[~isolated, None]
    if isolated.any():
        logger.warning(f"{int(isolated.sum())} vertices have no incident face; normal set to 0")
    return normals


def vertex_areas(mesh: TriangleMesh) -> np.ndarray:
    """Barycentric area per vertex: one third of each incident face's area."""
    areas = np.linalg.norm(face_normals(mesh), axis=1) / 2.0
    result = np.zeros(mesh.vertex_count)
    for corner in range(3):
        np.add.at(result, mesh.faces[:, corner], areas / 3.0)
    return result


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Per-vertex mean curvature (1/mm), finite after clamping."""

    values: np.ndarray
    clamped: int = 0
    non_finite: int = 0

    def __len__(self) -> int:
        return len(self.values)


def cotangent_laplacian(mesh: TriangleMesh) -> np.ndarray:
    """Sum over neighbours j of (cot a_ij + cot b_ij) (x_j - x_i), per vertex.

    Corners of zero-area faces contribute nothing.
    """
    v = mesh.vertices
    f = mesh.faces
    result = np.zeros_like(v)
    for k in range(3):
        i, j, o = f[:, (k + 1) % 3], f[:, (k + 2) % 3], f[:, k]
        e1 = v[i] - v[o]
        e2 = v[j] - v[o]
        cross = np.linalg.norm(np.cross(e1, e2), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            cot = np.where(cross > 0.0, np.sum(e1 * e2, axis=1) / cross, 0.0)
        edge = v[j] - v[i]
        np.add.at(result, i, cot[:, None] * edge)
        np.add.at(result, j, -cot[:, None] * edge)
    return result


def mean_curvature(mesh: TriangleMesh, normals: np.ndarray | None = None) -> CurvatureField:
    """Mean curvature from the cotangent Laplace-Beltrami of the vertex positions.

    H = -(K . n) / 2 with K = laplacian / (2 A): positive on convex regions when
    normals point outwards. Values are clamped to +-100 per mm and non-finite values
    are replaced by 0; both are counted.
    """
    normals = vertex_normals(mesh) if normals is None else normals
    areas = vertex_areas(mesh)
    laplacian = cotangent_laplacian(mesh)

    with np.errstate(divide="ignore", invalid="ignore"):
        k = laplacian / (2.0 * areas[:, None])
        values = -0.5 * np.sum(k * normals, axis=1)

    bad = ~np.isfinite(values)
    values[bad] = 0.0
    over = np.abs(values) > CURVATURE_CLAMP
    values = np.clip(values, -CURVATURE_CLAMP, CURVATURE_CLAMP)
    if bad.any() or over.any():
        logger.warning(
            f"Curvature: {int(bad.sum())} non-finite values zeroed, {int(over.sum())} clamped"
        )
    return CurvatureField(values=values, clamped=int(over.sum()), non_finite=int(bad.sum()))

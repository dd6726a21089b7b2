"""Per-point prediction fields and vertex adjacency graphs."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from ..exceptions import MissingChannelError, ValidationError
from ..models import LandmarkClass

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PointField:
    """Positions with optional confidence, distance and offset channels.

    Attributes:
        points: (N, 3) positions in mm
        confidence: (N,) values in [0, 1], or None
        distance: (N,) predicted distance to the nearest landmark in mm, or None
        offsets: (N, 3) predicted displacement to the nearest landmark in mm, or None
        landmark_class: Class the channels were predicted for, if known
    """

    points: np.ndarray
    confidence: np.ndarray | None = None
    distance: np.ndarray | None = None
    offsets: np.ndarray | None = None
    landmark_class: LandmarkClass | None = None

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "points", points)
        n = len(points)
        if not np.all(np.isfinite(points)):
            raise ValidationError("point positions must be finite")

        for name in ("confidence", "distance"):
            channel = getattr(self, name)
            if channel is None:
                continue
            channel = np.asarray(channel, dtype=np.float64).reshape(-1)
            if len(channel) != n:
                raise ValidationError(f"{name} has {len(channel)} entries for {n} points")
            object.__setattr__(self, name, channel)

        if self.offsets is not None:
            offsets = np.asarray(self.offsets, dtype=np.float64).reshape(-1, 3)
            if len(offsets) != n:
                raise ValidationError(f"offsets has {len(offsets)} rows for {n} points")
            object.__setattr__(self, "offsets", offsets)

        if self.confidence is not None and (
            np.any(self.confidence < 0.0) or np.any(self.confidence > 1.0)
        ):
            raise ValidationError("confidence values must lie in [0, 1]")
        if self.distance is not None and np.any(self.distance < 0.0):
            raise ValidationError("distance values must be non-negative")

    def __len__(self) -> int:
        return len(self.points)

    def require(self, channel: str, procedure: str) -> np.ndarray:
        """Return a channel, raising MissingChannelError if it is absent."""
        values = getattr(self, channel)
        if values is None:
            raise MissingChannelError(channel, procedure)
        return values

    def proposals(self) -> np.ndarray:
        """Positions displaced by their offsets (the positions themselves without offsets)."""
        if self.offsets is None:
            return self.points
        return self.points + self.offsets

    def subset(self, mask: np.ndarray) -> "PointField":
        """Field restricted to the points selected by a boolean mask or index array."""
        return PointField(
            points=self.points[mask],
            confidence=None if self.confidence is None else self.confidence[mask],
            distance=None if self.distance is None else self.distance[mask],
            offsets=None if self.offsets is None else self.offsets[mask],
            landmark_class=self.landmark_class,
        )


class MeshGraph:
    """Undirected vertex adjacency stored as a symmetric CSR matrix without self-loops."""

    def __init__(self, vertices: np.ndarray, adjacency: sparse.spmatrix):
        """Initialize the graph.

        Args:
            vertices: (N, 3) vertex positions
            adjacency: (N, N) sparse adjacency; made boolean

        Raises:
            ValidationError: If the adjacency is not square N x N, not symmetric,
                or has self-loops
        """
        self.vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        n = len(self.vertices)
        adjacency = sparse.csr_matrix(adjacency, dtype=bool)
        if adjacency.shape != (n, n):
            raise ValidationError(f"adjacency shape {adjacency.shape} does not match {n} vertices")
        if adjacency.diagonal().any():
            raise ValidationError("adjacency must not contain self-loops")
        if (adjacency != adjacency.T).nnz:
            raise ValidationError("adjacency must be symmetric")
        adjacency.sort_indices()
        self.adjacency = adjacency

    @classmethod
    def from_faces(cls, vertices: np.ndarray, faces: np.ndarray) -> "MeshGraph":
        """Graph of the triangle edges of a mesh."""
        faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        n = len(np.asarray(vertices).reshape(-1, 3))
        edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        edges = edges[edges[:, 0] != edges[:, 1]]
        return cls(vertices, _symmetric(edges, n))

    @classmethod
    def from_edges(cls, vertices: np.ndarray, edges: np.ndarray) -> "MeshGraph":
        """Graph from an explicit (E, 2) edge list; duplicates and self-loops are dropped."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        edges = edges[edges[:, 0] != edges[:, 1]]
        n = len(np.asarray(vertices).reshape(-1, 3))
        return cls(vertices, _symmetric(edges, n))

    @classmethod
    def from_knn(cls, points: np.ndarray, k: int = 8) -> "MeshGraph":
        """Symmetrized k-nearest-neighbour graph over a bare point set."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        n = len(points)
        if n < 2:
            return cls(points, sparse.csr_matrix((n, n), dtype=bool))
        k = min(k, n - 1)
        _, idx = cKDTree(points).query(points, k=k + 1)
        rows = np.repeat(np.arange(n), k + 1)
        edges = np.stack([rows, idx.reshape(-1)], axis=1)
        edges = edges[edges[:, 0] != edges[:, 1]]
        return cls(points, _symmetric(edges, n))

    def __len__(self) -> int:
        return len(self.vertices)

    def neighbors(self, vertex: int) -> np.ndarray:
        """Indices adjacent to a vertex."""
        start, end = self.adjacency.indptr[vertex], self.adjacency.indptr[vertex + 1]
        return self.adjacency.indices[start:end]

    def edge_count(self) -> int:
        return int(self.adjacency.nnz // 2)


def _symmetric(edges: np.ndarray, n: int) -> sparse.csr_matrix:
    data = np.ones(len(edges), dtype=bool)
    matrix = sparse.coo_matrix((data, (edges[:, 0], edges[:, 1])), shape=(n, n)).tocsr()
    return (matrix + matrix.T).astype(bool).tocsr()

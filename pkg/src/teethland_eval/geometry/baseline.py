"""Heuristic landmark detector: height maxima for cusps, crown extremes for the rest."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from sklearn.cluster import DBSCAN

from ..config import DetectorConfig
from ..exceptions import DegenerateGeometryError
from ..models import Landmark, LandmarkClass, LandmarkFile, Prediction
from ..utils.landmark_file import FORMAT_VERSION
from .mesh import TriangleMesh, mean_curvature, vertex_normals

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-9
BAND_TOLERANCE = 0.08
MIN_BAND_VERTICES = 3
FALLBACK_BAND_VERTICES = 10


@dataclass(frozen=True)
class OcclusalFrame:
    """Principal frame of a jaw: in-plane axes and the occlusal axis pointing at the crowns."""

    center: np.ndarray
    axis: np.ndarray
    plane: np.ndarray
    rank: int


def occlusal_frame(vertices: np.ndarray, normals: np.ndarray | None = None) -> OcclusalFrame:
    """Principal component frame whose third axis is the occlusal direction.

    The occlusal axis is oriented along the mean vertex normal (an open scan faces
    its occlusal side), or towards the long tail of the height distribution when the
    normals cancel out.
    """
    center = vertices.mean(axis=0)
    centered = vertices - center
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(singular > RANK_TOLERANCE * singular[0])) if singular[0] > 0 else 0

    axis = vt[2] if len(vt) == 3 else np.array([0.0, 0.0, 1.0])
    sign = 0.0
    if normals is not None:
        sign = float(np.sign(normals.mean(axis=0) @ axis))
    if sign == 0.0:
        heights = centered @ axis
        sign = 1.0 if np.mean(heights**3) >= 0 else -1.0
    return OcclusalFrame(center=center, axis=axis * sign, plane=vt[:2], rank=rank)


def _fit_circle(points: np.ndarray) -> np.ndarray | None:
    """Least-squares circle centre through 2-D points; None when degenerate."""
    if len(points) < 3:
        return None
    a = np.column_stack([points, np.ones(len(points))])
    b = -np.sum(points**2, axis=1)
    solution, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < 3:
        return None
    return -solution[:2] / 2.0


def _detect_cusps(
    vertices: np.ndarray,
    heights: np.ndarray,
    relative: np.ndarray,
    curvature: np.ndarray,
    config: DetectorConfig,
) -> list[tuple[int, float]]:
    candidates = np.flatnonzero(
        (relative > config.tooth_height_fraction) & (curvature > config.curvature_min)
    )
    if len(candidates) == 0:
        return []

    tree = cKDTree(vertices)
    peaks = []
    for vertex, neighbors in zip(
        candidates, tree.query_ball_point(vertices[candidates], config.local_max_radius), strict=True
    ):
        if heights[vertex] >= heights[neighbors].max():
            peaks.append(int(vertex))

    peaks.sort(key=lambda v: (-heights[v], v))
    accepted: list[int] = []
    for vertex in peaks:
        if accepted:
            gaps = np.linalg.norm(vertices[accepted] - vertices[vertex], axis=1)
            if gaps.min() < config.cusp_nms_radius:
                continue
        accepted.append(vertex)

    strength = np.clip(curvature[accepted] / (4.0 * config.curvature_min), 0.0, 1.0)
    scores = 0.4 + 0.3 * relative[accepted] + 0.3 * strength
    return [(v, float(np.clip(s, 0.0, 1.0))) for v, s in zip(accepted, scores, strict=True)]


def _extreme(
    members: np.ndarray,
    fraction: np.ndarray,
    planar: np.ndarray,
    target: float,
    direction: np.ndarray,
) -> int:
    """Member at about `target` relative height lying furthest along `direction`."""
    gap = np.abs(fraction - target)
    band = np.flatnonzero(gap <= BAND_TOLERANCE)
    if len(band) < MIN_BAND_VERTICES:
        band = np.argsort(gap, kind="stable")[:FALLBACK_BAND_VERTICES]
    best = band[int(np.argmax(planar[band] @ direction))]
    return int(members[best])


def baseline_detect(
    mesh: TriangleMesh, scan_id: str, config: DetectorConfig | None = None
) -> LandmarkFile:
    """Detect landmarks on a jaw mesh without learning.

    Steps: occlusal axis by PCA; cusps at convex local height maxima; crowns
    segmented by density clustering of high vertices; an arch circle through the
    crown centroids giving each crown its outward and along-arch directions; flank
    landmarks at the crown's extreme points at fixed relative heights, mesial being
    the end nearer the arch midline.

    Args:
        mesh: Jaw mesh
        scan_id: Scan id of the returned file
        config: Detector parameters

    Returns:
        Prediction LandmarkFile; empty for a flat mesh

    Raises:
        DegenerateGeometryError: If the vertices span fewer than two dimensions
    """
    config = config or DetectorConfig()
    vertices = mesh.vertices
    normals = vertex_normals(mesh)
    frame = occlusal_frame(vertices, normals)

    if frame.rank < 2:
        raise DegenerateGeometryError(f"vertices of {scan_id} span rank {frame.rank} < 2")
    if frame.rank == 2:
        logger.warning(f"{scan_id}: mesh is flat, no landmarks detected")
        return LandmarkFile(version=FORMAT_VERSION, scan_id=scan_id, objects=())

    heights = (vertices - frame.center) @ frame.axis
    base = heights.min()
    span = heights.max() - base
    relative = (heights - base) / span
    planar = (vertices - frame.center) @ frame.plane.T

    # curvature sign follows the oriented occlusal axis
    orientation = 1.0 if normals.mean(axis=0) @ frame.axis >= 0 else -1.0
    curvature = mean_curvature(mesh, normals).values * orientation

    predictions: list[Prediction] = []
    for i, (vertex, score) in enumerate(
        _detect_cusps(vertices, heights, relative, curvature, config)
    ):
        predictions.append(_prediction(f"cusp-{i}", LandmarkClass.CUSP, vertices[vertex], score))

    crown = np.flatnonzero(relative > config.tooth_height_fraction)
    segments: list[np.ndarray] = []
    if len(crown):
        labels = DBSCAN(eps=config.segment_eps, min_samples=1).fit_predict(planar[crown])
        for label in np.unique(labels):
            members = crown[labels == label]
            if len(members) >= config.min_segment_vertices:
                segments.append(members)

    if segments:
        centroids = np.array([planar[m].mean(axis=0) for m in segments])
        center = _fit_circle(centroids)
        if center is None:
            center = planar.mean(axis=0) - np.array([0.0, 1.0])
        front = centroids.mean(axis=0) - center
        radius = float(np.mean(np.linalg.norm(centroids - center, axis=1)))
        norm = np.linalg.norm(front)
        midline = center + (front / norm * radius if norm > 0 else np.zeros(2))

        order = np.argsort(np.arctan2(*(centroids - center).T[::-1]), kind="stable")
        typical = float(np.median([len(m) for m in segments]))
        for rank, s in enumerate(order):
            predictions.extend(
                _crown_landmarks(
                    rank, segments[s], centroids[s], center, midline, vertices, planar,
                    heights - base, config, min(1.0, len(segments[s]) / typical),
                )
            )

    logger.info(f"{scan_id}: detected {len(predictions)} landmarks on {len(segments)} crowns")
    return LandmarkFile(version=FORMAT_VERSION, scan_id=scan_id, objects=tuple(predictions))


def _crown_landmarks(
    index: int,
    members: np.ndarray,
    centroid: np.ndarray,
    center: np.ndarray,
    midline: np.ndarray,
    vertices: np.ndarray,
    planar: np.ndarray,
    lifted: np.ndarray,
    config: DetectorConfig,
    size: float,
) -> list[Prediction]:
    outward = centroid - center
    length = np.linalg.norm(outward)
    outward = outward / length if length > 0 else np.array([0.0, 1.0])
    along = np.array([-outward[1], outward[0]])

    fraction = lifted[members] / max(lifted[members].max(), 1e-12)
    local = planar[members]

    facial = _extreme(members, fraction, local, config.facial_height, outward)
    outer = _extreme(members, fraction, local, config.rim_height, outward)
    inner = _extreme(members, fraction, local, config.rim_height, -outward)
    end_a = _extreme(members, fraction, local, config.contact_height, along)
    end_b = _extreme(members, fraction, local, config.contact_height, -along)
    if np.linalg.norm(planar[end_a] - midline) <= np.linalg.norm(planar[end_b] - midline):
        mesial, distal = end_a, end_b
    else:
        mesial, distal = end_b, end_a

    score = 0.5 + 0.4 * size
    prefix = f"t{index:02d}"
    return [
        _prediction(f"{prefix}-M", LandmarkClass.MESIAL, vertices[mesial], score),
        _prediction(f"{prefix}-D", LandmarkClass.DISTAL, vertices[distal], score),
        _prediction(f"{prefix}-I", LandmarkClass.INNER_POINT, vertices[inner], score),
        _prediction(f"{prefix}-O", LandmarkClass.OUTER_POINT, vertices[outer], score),
        _prediction(f"{prefix}-F", LandmarkClass.FACIAL_POINT, vertices[facial], score),
    ]


def _prediction(
    key: str, landmark_class: LandmarkClass, position: np.ndarray, score: float
) -> Prediction:
    x, y, z = (float(c) for c in position)
    return Prediction(
        landmark=Landmark(key=key, landmark_class=landmark_class, position=(x, y, z)),
        score=float(np.clip(score, 0.0, 1.0)),
    )

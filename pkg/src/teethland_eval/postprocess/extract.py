"""Landmark extraction from per-point prediction fields."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.sparse.csgraph import connected_components
from sklearn.cluster import DBSCAN

from ..config import PostprocessConfig
from ..exceptions import EmptyInputError, ValidationError
from ..models import Landmark, LandmarkClass, Prediction
from .fields import MeshGraph, PointField

logger = logging.getLogger(__name__)

# bounds the weight of a proposal whose predicted distance is 0
WEIGHT_EPSILON = 1e-3

WeightMode = Literal["core", "average"]
Procedure = Literal["weighted_dbscan", "confidence_nms", "density_peak", "cluster_vote", "ctd_nms"]
PROCEDURES: tuple[str, ...] = (
    "weighted_dbscan",
    "confidence_nms",
    "density_peak",
    "cluster_vote",
    "ctd_nms",
)


@dataclass(frozen=True)
class Detection:
    """An extracted landmark position with its score and the number of points behind it."""

    position: tuple[float, float, float]
    score: float
    support: int = 1


@dataclass(frozen=True)
class CtdResult:
    """Outcome of CTD-NMS on a vertex graph.

    Attributes:
        landmarks: One vertex per plateau, sorted
        qualifying: Every vertex whose value survived relaxation below the threshold
        converged: Whether a fixpoint was reached within the iteration budget
        iterations: Relaxation passes that lowered at least one value
        plateaus: Number of qualifying groups holding more than one vertex
    """

    landmarks: tuple[int, ...]
    qualifying: tuple[int, ...]
    converged: bool
    iterations: int
    plateaus: int = 0


def _detection(position: np.ndarray, score: float, support: int) -> Detection:
    x, y, z = (float(c) for c in position)
    return Detection(position=(x, y, z), score=float(np.clip(score, 0.0, 1.0)), support=support)


def _clusters(labels: np.ndarray) -> list[np.ndarray]:
    """Member indices per cluster label in ascending label order; noise (-1) is dropped."""
    return [np.flatnonzero(labels == label) for label in np.unique(labels) if label >= 0]


def weighted_dbscan_extract(
    field: PointField,
    d_thresh: float = 1.0,
    eps: float = 1.0,
    min_weight: float = 1.0,
    weight_mode: WeightMode = "core",
) -> list[Detection]:
    """Cluster offset-displaced proposals with distance-derived weights.

    Points whose predicted distance is below `d_thresh` are moved by their offsets.
    Each proposal weighs 1 / (distance + 1e-3). In "core" mode a proposal is a core
    point when the weights within `eps` sum to at least `min_weight`; in "average"
    mode every proposal is core and weights only enter the per-cluster mean.

    Raises:
        MissingChannelError: Without distance or offset channels
    """
    distance = field.require("distance", "weighted_dbscan_extract")
    field.require("offsets", "weighted_dbscan_extract")
    mask = distance < d_thresh
    if not mask.any():
        return []

    proposals = field.proposals()[mask]
    dist = distance[mask]
    weights = 1.0 / (dist + WEIGHT_EPSILON)

    if weight_mode == "core":
        # sklearn counts sample weights against min_samples
        labels = DBSCAN(eps=eps, min_samples=1).fit_predict(
            proposals, sample_weight=weights / min_weight
        )
    elif weight_mode == "average":
        labels = DBSCAN(eps=eps, min_samples=1).fit_predict(proposals)
    else:
        raise ValidationError(f"unknown weight mode '{weight_mode}'")

    detections = [
        _detection(
            np.average(proposals[members], axis=0, weights=weights[members]),
            np.exp(-dist[members].min()),
            len(members),
        )
        for members in _clusters(labels)
    ]
    logger.debug(f"weighted DBSCAN: {mask.sum()} proposals -> {len(detections)} landmarks")
    return detections


def confidence_nms(
    field: PointField, conf_thresh: float = 0.7, radius: float = 2.0
) -> list[Detection]:
    """Greedy non-maximum suppression over confident points.

    Offsets, when present, are applied before suppression. Accepted detections are
    pairwise at least `radius` apart.

    Raises:
        MissingChannelError: Without a confidence channel
    """
    confidence = field.require("confidence", "confidence_nms")
    keep = np.flatnonzero(confidence >= conf_thresh)
    if len(keep) == 0:
        return []

    candidates = field.proposals()[keep]
    scores = confidence[keep]
    order = np.argsort(-scores, kind="stable")

    accepted: list[int] = []
    for i in order:
        if accepted:
            diff = candidates[accepted] - candidates[i]
            if np.min(np.sqrt(np.sum(diff * diff, axis=1))) < radius:
                continue
        accepted.append(int(i))
    return [_detection(candidates[i], scores[i], 1) for i in accepted]


def density_cluster_peak(
    field: PointField, conf_thresh: float = 0.7, eps: float = 1.0
) -> list[Detection]:
    """Emit the most confident point of each density cluster of confident points.

    Raises:
        MissingChannelError: Without a confidence channel
    """
    confidence = field.require("confidence", "density_cluster_peak")
    keep = np.flatnonzero(confidence >= conf_thresh)
    if len(keep) == 0:
        return []

    points = field.points[keep]
    scores = confidence[keep]
    labels = DBSCAN(eps=eps, min_samples=1).fit_predict(points)

    detections = []
    for members in _clusters(labels):
        peak = members[int(np.argmax(scores[members]))]
        detections.append(_detection(points[peak], scores[peak], len(members)))
    return detections


def gaussian_weighted_vote(
    cluster: np.ndarray | Sequence[Sequence[float]],
    center_estimate: np.ndarray | Sequence[float] | None = None,
    sigma: float = 0.5,
) -> np.ndarray:
    """Gaussian-weighted mean of a cluster around a centre estimate.

    w_i = exp(-|p_i - c|^2 / (2 sigma^2)), with c the unweighted centroid when no
    estimate is given.

    Raises:
        EmptyInputError: If the cluster is empty
        ValidationError: If sigma is not positive
    """
    points = np.asarray(cluster, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        raise EmptyInputError("cluster")
    if not sigma > 0:
        raise ValidationError(f"sigma must be positive, got {sigma}")

    center = points.mean(axis=0) if center_estimate is None else np.asarray(center_estimate)
    sq = np.sum((points - center) ** 2, axis=1)
    # shifting by the minimum leaves the normalized weights unchanged and avoids underflow
    weights = np.exp(-(sq - sq.min()) / (2.0 * sigma * sigma))
    return (weights[:, None] * points).sum(axis=0) / weights.sum()


def cluster_vote_extract(
    field: PointField,
    d_thresh: float = 1.0,
    conf_thresh: float = 0.7,
    eps: float = 1.0,
    sigma: float = 0.5,
) -> list[Detection]:
    """Density-cluster selected proposals, then place each landmark by Gaussian vote.

    Points are selected by distance below `d_thresh` when a distance channel exists,
    otherwise by confidence of at least `conf_thresh`. Offsets are applied when present.

    Raises:
        MissingChannelError: Without either a distance or a confidence channel
    """
    if field.distance is not None:
        mask = field.distance < d_thresh
        point_scores = np.exp(-field.distance)
    else:
        confidence = field.require("confidence", "cluster_vote_extract")
        mask = confidence >= conf_thresh
        point_scores = confidence
    if not mask.any():
        return []

    proposals = field.proposals()[mask]
    scores = point_scores[mask]
    labels = DBSCAN(eps=eps, min_samples=1).fit_predict(proposals)
    return [
        _detection(
            gaussian_weighted_vote(proposals[members], sigma=sigma),
            scores[members].max(),
            len(members),
        )
        for members in _clusters(labels)
    ]


def relax_to_fixpoint(
    graph: MeshGraph, values: np.ndarray, max_iters: int
) -> tuple[np.ndarray, bool, int]:
    """Repeat v <- min(v, min over neighbours) until nothing changes or the budget ends.

    The pass that confirms the fixpoint changes nothing and is not counted.

    Returns:
        (relaxed values, converged, passes that lowered a value)
    """
    current = np.asarray(values, dtype=np.float64).copy()
    indptr, indices = graph.adjacency.indptr, graph.adjacency.indices
    has_neighbors = np.diff(indptr) > 0
    starts = indptr[:-1][has_neighbors]

    for iteration in range(1, max_iters + 1):
        updated = current.copy()
        if len(starts):
            neighbor_min = np.minimum.reduceat(current[indices], starts)
            updated[has_neighbors] = np.minimum(current[has_neighbors], neighbor_min)
        if np.array_equal(updated, current):
            return current, True, iteration - 1
        current = updated
    return current, False, max_iters


def ctd_nms(
    graph: MeshGraph, values: np.ndarray, d_thresh: float = 1.0, max_iters: int = 50
) -> CtdResult:
    """Non-maximum suppression on a per-vertex distance field by neighbour-min relaxation.

    A vertex qualifies when relaxation never lowered its value and that value is below
    `d_thresh`. Adjacent qualifying vertices share one value, so each connected group
    is a plateau; it is reported once, as the member nearest the group's centroid.
    An exhausted budget is logged and the partial result returned.

    Raises:
        ValidationError: If values are non-finite or do not match the graph
    """
    original = np.asarray(values, dtype=np.float64).reshape(-1)
    if len(original) != len(graph):
        raise ValidationError(f"{len(original)} values for {len(graph)} vertices")
    if not np.all(np.isfinite(original)):
        raise ValidationError("distance values must be finite")

    relaxed, converged, iterations = relax_to_fixpoint(graph, original, max_iters)
    if not converged:
        logger.warning(f"CTD-NMS did not reach a fixpoint within {max_iters} iterations")

    qualifying = np.flatnonzero((relaxed == original) & (original < d_thresh))
    if len(qualifying) == 0:
        return CtdResult((), (), converged, iterations)

    induced = graph.adjacency[qualifying][:, qualifying]
    count, labels = connected_components(induced, directed=False)
    landmarks: list[int] = []
    plateaus = 0
    for label in range(count):
        members = qualifying[labels == label]
        if len(members) > 1:
            plateaus += 1
        positions = graph.vertices[members]
        offsets = np.sum((positions - positions.mean(axis=0)) ** 2, axis=1)
        landmarks.append(int(members[int(np.argmin(offsets))]))

    if plateaus:
        logger.info(f"CTD-NMS collapsed {plateaus} plateaus")
    return CtdResult(
        landmarks=tuple(sorted(landmarks)),
        qualifying=tuple(int(v) for v in qualifying),
        converged=converged,
        iterations=iterations,
        plateaus=plateaus,
    )


def ctd_detections(graph: MeshGraph, values: np.ndarray, result: CtdResult) -> list[Detection]:
    """CTD-NMS landmark vertices as detections scored exp(-value)."""
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    return [_detection(graph.vertices[v], np.exp(-values[v]), 1) for v in result.landmarks]


def extract(
    field: PointField,
    procedure: Procedure,
    config: PostprocessConfig | None = None,
    graph: MeshGraph | None = None,
) -> list[Detection]:
    """Run one extraction procedure with parameters from a PostprocessConfig.

    `ctd_nms` runs on `graph` when given, else on a k-NN graph of the field's points.
    """
    config = config or PostprocessConfig()
    if procedure == "weighted_dbscan":
        return weighted_dbscan_extract(
            field, config.d_thresh, config.eps, config.min_weight, config.weight_mode
        )
    if procedure == "confidence_nms":
        return confidence_nms(field, config.conf_thresh, config.nms_radius)
    if procedure == "density_peak":
        return density_cluster_peak(field, config.conf_thresh, config.eps)
    if procedure == "cluster_vote":
        return cluster_vote_extract(
            field, config.d_thresh, config.conf_thresh, config.eps, config.vote_sigma
        )
    if procedure == "ctd_nms":
        distance = field.require("distance", "ctd_nms")
        graph = graph or MeshGraph.from_knn(field.points)
        result = ctd_nms(graph, distance, config.d_thresh, config.ctd_max_iters)
        return ctd_detections(graph, distance, result)
    raise ValidationError(f"unknown extraction procedure '{procedure}'")


def to_predictions(
    detections: Sequence[Detection], landmark_class: LandmarkClass, prefix: str = "p"
) -> list[Prediction]:
    """Wrap detections as scored predictions keyed `<prefix><class>-<index>`."""
    return [
        Prediction(
            landmark=Landmark(
                key=f"{prefix}{landmark_class.value}-{i}",
                landmark_class=landmark_class,
                position=d.position,
            ),
            score=d.score,
        )
        for i, d in enumerate(detections)
    ]

"""Unit tests for landmark extraction from point fields."""

import numpy as np
import pytest
from scipy import sparse

from teethland_eval.config import PostprocessConfig
from teethland_eval.exceptions import EmptyInputError, MissingChannelError, ValidationError
from teethland_eval.models import LandmarkClass
from teethland_eval.postprocess.extract import (
    PROCEDURES,
    confidence_nms,
    ctd_nms,
    density_cluster_peak,
    extract,
    gaussian_weighted_vote,
    to_predictions,
    weighted_dbscan_extract,
)
from teethland_eval.postprocess.fields import MeshGraph, PointField
from teethland_eval.synth.generator import plant_field
from tests.helpers import landmark, landmark_file


def path_graph(count: int) -> MeshGraph:
    vertices = np.column_stack([np.arange(count, dtype=float), np.zeros(count), np.zeros(count)])
    edges = np.column_stack([np.arange(count - 1), np.arange(1, count)])
    return MeshGraph.from_edges(vertices, edges)


def nearest_error(detections, anchors: np.ndarray) -> np.ndarray:
    """Distance from each anchor to its closest detection."""
    found = np.array([d.position for d in detections])
    return np.min(np.linalg.norm(found[None, :, :] - anchors[:, None, :], axis=2), axis=1)


class TestPointField:
    """Tests for PointField validation."""

    def test_channel_length_mismatch(self):
        """Test that channels must have one entry per point."""
        with pytest.raises(ValidationError):
            PointField(points=np.zeros((3, 3)), confidence=np.ones(2))

    def test_confidence_range(self):
        """Test that confidences lie in [0, 1]."""
        with pytest.raises(ValidationError):
            PointField(points=np.zeros((1, 3)), confidence=np.array([1.2]))

    def test_negative_distance(self):
        """Test that distances are non-negative."""
        with pytest.raises(ValidationError):
            PointField(points=np.zeros((1, 3)), distance=np.array([-0.1]))

    def test_proposals_apply_offsets(self):
        """Test that proposals are positions plus offsets."""
        field = PointField(points=np.zeros((1, 3)), offsets=np.array([[1.0, 2.0, 3.0]]))
        assert field.proposals().tolist() == [[1.0, 2.0, 3.0]]

    def test_subset(self):
        """Test that subset keeps every channel aligned."""
        field = PointField(
            points=np.arange(6, dtype=float).reshape(2, 3), confidence=np.array([0.1, 0.9])
        )
        sub = field.subset(np.array([False, True]))
        assert len(sub) == 1 and sub.confidence.tolist() == [0.9]

    def test_missing_channel(self):
        """Test that procedures name the absent channel."""
        field = PointField(points=np.zeros((2, 3)))
        with pytest.raises(MissingChannelError, match="confidence"):
            confidence_nms(field)
        with pytest.raises(MissingChannelError, match="distance"):
            weighted_dbscan_extract(field)


class TestMeshGraph:
    """Tests for MeshGraph construction."""

    def test_from_faces(self):
        """Test that a tetrahedron has six undirected edges."""
        vertices = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
        faces = np.array([[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]])
        graph = MeshGraph.from_faces(vertices, faces)
        assert graph.edge_count() == 6
        assert graph.neighbors(0).tolist() == [1, 2, 3]

    def test_asymmetric_rejected(self):
        """Test that a directed adjacency is rejected."""
        adjacency = sparse.csr_matrix(np.array([[0, 1], [0, 0]]))
        with pytest.raises(ValidationError, match="symmetric"):
            MeshGraph(np.zeros((2, 3)), adjacency)

    def test_self_loop_rejected(self):
        """Test that self-loops are rejected."""
        with pytest.raises(ValidationError, match="self-loops"):
            MeshGraph(np.zeros((2, 3)), sparse.identity(2))

    def test_knn_is_symmetric(self):
        """Test that the k-NN graph is undirected."""
        points = np.random.default_rng(0).normal(size=(50, 3))
        graph = MeshGraph.from_knn(points, k=4)
        assert (graph.adjacency != graph.adjacency.T).nnz == 0
        assert all(len(graph.neighbors(v)) >= 4 for v in range(50))


class TestWeightedDbscan:
    """Tests for weighted_dbscan_extract."""

    def test_all_above_threshold(self):
        """Test that nothing is extracted when every distance exceeds the threshold."""
        field = PointField(
            points=np.zeros((3, 3)), distance=np.full(3, 2.0), offsets=np.zeros((3, 3))
        )
        assert weighted_dbscan_extract(field, d_thresh=1.0) == []

    def test_symmetric_blob(self):
        """Test that an equal-weight blob yields its centroid."""
        center = np.array([1.0, 2.0, 3.0])
        points = center + 0.1 * np.array(
            [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float
        )
        field = PointField(points=points, distance=np.full(6, 0.1), offsets=np.zeros((6, 3)))
        (detection,) = weighted_dbscan_extract(field)
        assert np.allclose(detection.position, center)
        assert detection.support == 6

    def test_two_blobs(self):
        """Test that two planted blobs 5 mm apart give two landmarks near their generators."""
        gt = landmark_file(
            "pair",
            [
                landmark("a", LandmarkClass.CUSP, (0.0, 0.0, 0.0)),
                landmark("b", LandmarkClass.CUSP, (5.0, 0.0, 0.0)),
            ],
        )
        field = plant_field(gt, density=30, sigma=0.02, seed=3)
        detections = weighted_dbscan_extract(field, d_thresh=1.0, eps=1.0)
        anchors = np.array([lm.position for lm in gt.landmarks()])
        assert len(detections) == 2
        assert np.all(nearest_error(detections, anchors) < 0.05)

    def test_average_mode(self):
        """Test that average mode treats every proposal as core."""
        field = PointField(
            points=np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]),
            distance=np.array([0.5, 0.5]),
            offsets=np.zeros((2, 3)),
        )
        assert len(weighted_dbscan_extract(field, min_weight=100.0, weight_mode="average")) == 2


class TestConfidenceNms:
    """Tests for confidence_nms."""

    def test_below_threshold(self):
        """Test that low confidences give no detection."""
        field = PointField(points=np.zeros((2, 3)), confidence=np.array([0.1, 0.2]))
        assert confidence_nms(field) == []

    def test_single_point(self):
        """Test that a lone confident point is kept."""
        field = PointField(points=np.array([[1.0, 1.0, 1.0]]), confidence=np.array([0.9]))
        (detection,) = confidence_nms(field)
        assert detection.position == (1.0, 1.0, 1.0)

    def test_suppression(self):
        """Test that three points within 1 mm keep only the most confident."""
        points = np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 0.5, 0.0]])
        field = PointField(points=points, confidence=np.array([0.8, 0.9, 0.7]))
        (detection,) = confidence_nms(field, conf_thresh=0.7, radius=2.0)
        assert detection.position == (0.5, 0.0, 0.0)
        assert detection.score == 0.9


class TestDensityClusterPeak:
    """Tests for density_cluster_peak."""

    def test_two_clusters(self):
        """Test that each cluster contributes its most confident point."""
        points = np.array(
            [[0, 0, 0], [0.3, 0, 0], [0.6, 0, 0], [10, 0, 0], [10.3, 0, 0]], dtype=float
        )
        field = PointField(points=points, confidence=np.array([0.9, 0.95, 0.75, 0.8, 0.72]))
        detections = density_cluster_peak(field, conf_thresh=0.7, eps=1.0)
        assert sorted(d.position for d in detections) == [(0.3, 0.0, 0.0), (10.0, 0.0, 0.0)]

    def test_empty(self):
        """Test that no survivors give no detection."""
        field = PointField(points=np.zeros((1, 3)), confidence=np.array([0.2]))
        assert density_cluster_peak(field) == []


class TestGaussianWeightedVote:
    """Tests for gaussian_weighted_vote."""

    def test_single_point(self):
        """Test that a single point votes for itself."""
        assert gaussian_weighted_vote([[1.0, 2.0, 3.0]]).tolist() == [1.0, 2.0, 3.0]

    def test_symmetric_cluster(self):
        """Test that a symmetric cluster votes for its centre."""
        c = np.array([2.0, -1.0, 0.5])
        cluster = c + np.array([[1, 0, 0], [-1, 0, 0], [0, 2, 0], [0, -2, 0]], dtype=float)
        assert np.allclose(gaussian_weighted_vote(cluster, sigma=1.0), c)

    def test_outlier_downweighted(self):
        """Test the vote of {0, 1, 10} against direct evaluation."""
        xs = np.array([0.0, 1.0, 10.0])
        cluster = np.column_stack([xs, np.zeros(3), np.zeros(3)])
        centroid = xs.mean()
        w = np.exp(-((xs - centroid) ** 2) / (2.0 * 2.0**2))
        expected = float(np.sum(w * xs) / np.sum(w))
        vote = gaussian_weighted_vote(cluster, sigma=2.0)[0]
        assert vote == pytest.approx(expected, rel=1e-12)
        assert 0.0 < vote < centroid
        assert abs(vote - 0.5) < abs(centroid - 0.5)

    def test_empty_cluster(self):
        """Test that an empty cluster is rejected."""
        with pytest.raises(EmptyInputError):
            gaussian_weighted_vote(np.zeros((0, 3)))

    def test_bad_sigma(self):
        """Test that sigma must be positive."""
        with pytest.raises(ValidationError):
            gaussian_weighted_vote([[0.0, 0.0, 0.0]], sigma=0.0)


class TestCtdNms:
    """Tests for ctd_nms."""

    def test_valley(self):
        """Test values [3, 1, 2] on a path give the middle vertex."""
        result = ctd_nms(path_graph(3), np.array([3.0, 1.0, 2.0]), d_thresh=2.0)
        assert result.landmarks == (1,)
        assert result.converged

    def test_constant_plateau(self):
        """Test a constant field qualifies every vertex and collapses to one landmark."""
        result = ctd_nms(path_graph(5), np.full(5, 0.5), d_thresh=1.0)
        assert result.qualifying == (0, 1, 2, 3, 4)
        assert result.landmarks == (2,)
        assert result.plateaus == 1

    def test_monotone_chain(self):
        """Test that increasing values leave only the first vertex."""
        result = ctd_nms(path_graph(4), np.array([0.1, 0.2, 0.3, 0.4]), d_thresh=1.0)
        assert result.landmarks == (0,)

    @pytest.mark.parametrize(
        ("values", "expected"),
        [([0.5, 0.5, 0.5], 0), ([3.0, 1.0, 2.0], 1), ([0.1, 0.2, 0.3, 0.4, 0.5], 4)],
    )
    def test_iterations_count_changing_passes(self, values, expected):
        """Test that the reported count excludes the pass confirming the fixpoint."""
        result = ctd_nms(path_graph(len(values)), np.array(values), d_thresh=5.0)
        assert result.converged
        assert result.iterations == expected

    def test_iteration_budget(self):
        """Test that an exhausted budget returns a partial, non-converged result."""
        values = np.linspace(0.0, 0.9, 10)
        result = ctd_nms(path_graph(10), values, d_thresh=1.0, max_iters=2)
        assert not result.converged
        assert result.iterations == 2
        assert 0 in result.landmarks

    def test_value_count_mismatch(self):
        """Test that values must match the vertex count."""
        with pytest.raises(ValidationError):
            ctd_nms(path_graph(3), np.zeros(2))


class TestRecovery:
    """Recovery of planted landmarks by every extraction procedure."""

    def config_for(self, procedure: str) -> PostprocessConfig:
        # shell samples lie at least 0.4 mm away, so CTD-NMS is cut below that
        if procedure == "ctd_nms":
            return PostprocessConfig(d_thresh=0.3)
        return PostprocessConfig()

    @pytest.mark.parametrize("procedure", PROCEDURES)
    def test_noiseless(self, cusp_file, procedure):
        """Test exact recovery without spurious landmarks on a noiseless field."""
        field = plant_field(cusp_file, density=20, sigma=0.0, seed=11)
        detections = extract(field, procedure, self.config_for(procedure))
        anchors = np.array([lm.position for lm in cusp_file.landmarks()])
        assert len(detections) == len(anchors)
        assert np.all(nearest_error(detections, anchors) < 1e-6)

    @pytest.mark.parametrize("procedure", ["cluster_vote", "weighted_dbscan"])
    def test_small_noise(self, cusp_file, procedure):
        """Test recovery within 0.3 mm under 0.1 mm channel noise."""
        field = plant_field(cusp_file, density=20, sigma=0.1, seed=5)
        detections = extract(field, procedure, PostprocessConfig(weight_mode="average"))
        anchors = np.array([lm.position for lm in cusp_file.landmarks()])
        assert len(detections) == len(anchors)
        assert np.all(nearest_error(detections, anchors) < 0.3)

    def test_no_landmarks(self):
        """Test that an empty ground truth plants an empty field."""
        field = plant_field(landmark_file("none", []))
        assert len(field) == 0
        assert extract(field, "weighted_dbscan") == []

    def test_unknown_procedure(self, cusp_file):
        """Test that unknown procedures are rejected."""
        with pytest.raises(ValidationError):
            extract(plant_field(cusp_file), "magic")  # type: ignore[arg-type]

    def test_to_predictions(self, cusp_file):
        """Test wrapping detections as scored predictions."""
        field = plant_field(cusp_file, seed=1)
        predictions = to_predictions(extract(field, "confidence_nms"), LandmarkClass.CUSP)
        assert [p.key for p in predictions] == [f"pCusp-{i}" for i in range(4)]
        assert all(p.score == 1.0 for p in predictions)

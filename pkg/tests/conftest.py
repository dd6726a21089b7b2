"""Pytest configuration and fixtures for the Teethland evaluation toolkit tests."""

from pathlib import Path

import pytest

from teethland_eval.config import AppConfig, ExecutionConfig, SynthConfig
from teethland_eval.geometry.mesh import TriangleMesh
from teethland_eval.models import LandmarkClass, LandmarkFile
from teethland_eval.synth.generator import ArchSpec, generate_arch

from tests.helpers import landmark, landmark_file


@pytest.fixture
def test_config() -> AppConfig:
    """Default configuration with a single worker."""
    return AppConfig(execution=ExecutionConfig(workers=1))


@pytest.fixture
def small_synth_config() -> SynthConfig:
    """Synthetic fixture settings small enough for fast tests."""
    return SynthConfig(scans=3, tooth_count=4, arch_radius=12.0, resolution=0.4, seed=7)


@pytest.fixture(scope="session")
def arch() -> tuple[LandmarkFile, TriangleMesh]:
    """A default 14-tooth synthetic arch and its ground truth."""
    return generate_arch(ArchSpec(), seed=0, scan_id="arch-000")


@pytest.fixture
def temp_dir(tmp_path: Path) -> Path:
    """Create temporary directory for tests."""
    test_dir = tmp_path / "teethland-eval-test"
    test_dir.mkdir(parents=True, exist_ok=True)
    return test_dir


@pytest.fixture
def cusp_file() -> LandmarkFile:
    """Ground truth with four well separated cusps."""
    return landmark_file(
        "cusps",
        [
            landmark(f"c{i}", LandmarkClass.CUSP, (10.0 * i, 5.0 * (i % 2), 1.0))
            for i in range(4)
        ],
    )


@pytest.fixture
def sphere_mesh() -> TriangleMesh:
    """Icosphere of radius 1 with about 2.5k vertices."""
    import trimesh

    sphere = trimesh.creation.icosphere(subdivisions=4, radius=1.0)
    return TriangleMesh(vertices=sphere.vertices, faces=sphere.faces)

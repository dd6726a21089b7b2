"""The detect command: run the baseline detector over a mesh directory."""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

from ..config import AppConfig
from ..geometry.baseline import baseline_detect
from ..geometry.mesh import MESH_FORMATS, load_mesh
from ..models import LandmarkFile
from ..utils.landmark_file import DatasetStore
from .common import prepare_output, require_dir

logger = logging.getLogger(__name__)


class DetectCommand:
    """Writes one prediction file per mesh, named after the mesh stem."""

    def __init__(self, config: AppConfig):
        """Initialize detect command.

        Args:
            config: Resolved application configuration
        """
        self.config = config

    def detect(self, path: Path) -> LandmarkFile:
        return baseline_detect(load_mesh(path), path.stem, self.config.detector)

    def handle(self, meshes: Path, output: Path) -> dict[str, Any]:
        """Detect landmarks on every OBJ/PLY/STL file of a directory.

        Args:
            meshes: Directory of meshes
            output: Directory receiving the prediction files

        Returns:
            Result with the number of files and landmarks written
        """
        paths = sorted(
            p for p in require_dir(meshes, "mesh").iterdir() if p.suffix.lower() in MESH_FORMATS
        )
        with ThreadPoolExecutor(max_workers=self.config.execution.workers) as pool:
            detections = list(pool.map(self.detect, paths))

        out = prepare_output(output, self.config)
        store = DatasetStore(out)
        for landmark_file in detections:
            store.write(landmark_file)

        total = sum(len(f.objects) for f in detections)
        logger.info(f"Detected {total} landmarks on {len(paths)} meshes")
        return {"success": True, "output": str(out), "scans": len(paths), "landmarks": total}

"""The synth command: write a synthetic fixture tree."""

import logging
from pathlib import Path
from typing import Any

from ..config import AppConfig
from ..geometry.mesh import write_mesh
from ..synth.generator import generate_dataset, perturb, scan_seed
from ..utils.landmark_file import DatasetStore
from .common import prepare_output

logger = logging.getLogger(__name__)


class SynthCommand:
    """Generates ground truth, meshes and degraded team predictions."""

    def __init__(self, config: AppConfig):
        """Initialize synth command.

        Args:
            config: Resolved application configuration
        """
        self.config = config

    def handle(self, output: Path) -> dict[str, Any]:
        """Write gt/<scan>.json, meshes/<scan>.<format> and predictions/<team>/<scan>.json.

        Args:
            output: Root of the fixture tree

        Returns:
            Result with the scan and team counts
        """
        synth = self.config.synth
        out = prepare_output(output, self.config)
        gt_store = DatasetStore(out / "gt")
        team_stores = {team: DatasetStore(out / "predictions" / team) for team in synth.teams}

        for scan_index, (gt, mesh) in enumerate(generate_dataset(synth)):
            gt_store.write(gt)
            write_mesh(mesh, out / "meshes" / f"{gt.scan_id}.{synth.mesh_format}")
            for team_index, (team, noise) in enumerate(sorted(synth.teams.items())):
                seed = scan_seed(synth.seed, scan_index, team_index + 1)
                team_stores[team].write(perturb(gt, noise, seed))

        logger.info(f"Wrote {synth.scans} scans and {len(synth.teams)} teams to {out}")
        return {
            "success": True,
            "output": str(out),
            "scans": synth.scans,
            "teams": sorted(synth.teams),
        }

"""End-to-end integration tests for complete workflows."""

import numpy as np
import pytest

from teethland_eval.commands import EvalCommand, RankCommand, ReportCommand, SynthCommand
from teethland_eval.config import (
    AppConfig,
    NoiseSpec,
    PostprocessConfig,
    RankingConfig,
    SynthConfig,
)
from teethland_eval.evaluation.submission import evaluate_submission
from teethland_eval.models import LandmarkClass, LandmarkFile
from teethland_eval.postprocess.extract import extract, to_predictions
from teethland_eval.ranking.bootstrap import bootstrap_rank_with_config, samples_from_report
from teethland_eval.synth.generator import (
    ArchSpec,
    generate_arch,
    perturb,
    plant_field,
    scan_seed,
)
from teethland_eval.utils.landmark_file import FORMAT_VERSION, DatasetStore
from teethland_eval.utils.point_field_file import read_point_field, write_point_field


@pytest.mark.slow
class TestEndToEndWorkflow:
    """Test complete end-to-end workflows."""

    @pytest.fixture
    def config(self) -> AppConfig:
        return AppConfig(
            synth=SynthConfig(
                scans=10,
                tooth_count=4,
                arch_radius=12.0,
                resolution=0.6,
                seed=21,
                teams={
                    "sharp": NoiseSpec(sigma=0.05),
                    "blurry": NoiseSpec(sigma=0.8, drop_probability=0.2, spurious_rate=2.0),
                },
            )
        )

    def test_synth_eval_rank_report(self, config, temp_dir):
        """Test the full challenge workflow from fixtures to the report bundle."""
        config = config.with_overrides({"ranking": {"iterations": 10, "p_threshold": 0.05}})
        data = temp_dir / "data"
        SynthCommand(config).handle(data)

        sharp = EvalCommand(config).handle(data / "gt", data / "predictions" / "sharp",
                                           temp_dir / "eval-sharp")
        blurry = EvalCommand(config).handle(data / "gt", data / "predictions" / "blurry",
                                            temp_dir / "eval-blurry")
        assert sharp["summary"]["mAP"] > blurry["summary"]["mAP"]
        assert sharp["summary"]["mAR"] > blurry["summary"]["mAR"]

        ranked = RankCommand(config).handle(
            data / "gt",
            [data / "predictions" / "blurry", data / "predictions" / "sharp"],
            temp_dir / "rank",
        )
        assert [row["team"] for row in ranked["leaderboard"]] == ["sharp", "blurry"]
        assert ranked["leaderboard"][0]["rank_score"] > 0.9

        bundle = ReportCommand(config).handle(
            temp_dir / "eval-sharp", temp_dir / "report", temp_dir / "rank"
        )
        assert "leaderboard.svg" in bundle["files"]
        assert all((temp_dir / "report" / name).is_file() for name in bundle["files"])

    def test_point_fields_to_submission(self, temp_dir):
        """Test extracting landmarks from stored point fields and scoring them."""
        spec = ArchSpec(tooth_count=4, arch_radius=12.0, resolution=0.6)
        ground_truth: dict[str, LandmarkFile] = {}
        submissions: list[LandmarkFile] = []

        for i in range(3):
            gt, _ = generate_arch(spec, seed=i, scan_id=f"scan-{i}")
            ground_truth[gt.scan_id] = gt
            predictions = []
            for cls in LandmarkClass:
                path = write_point_field(
                    plant_field(gt, density=15, sigma=0.0, seed=i, landmark_class=cls),
                    temp_dir / "fields" / gt.scan_id / f"{cls.value}.npz",
                )
                field = read_point_field(path)
                detections = extract(field, "cluster_vote", PostprocessConfig())
                predictions.extend(to_predictions(detections, cls, prefix=f"{gt.scan_id}-"))
            submissions.append(
                LandmarkFile(version=FORMAT_VERSION, scan_id=gt.scan_id, objects=tuple(predictions))
            )

        store = DatasetStore(temp_dir / "submission")
        for submission in submissions:
            store.write(submission)
        report = evaluate_submission(ground_truth, list(store.read_predictions().values()))

        assert report.grand_mar > 0.8
        assert report.grand_map > 0.8
        assert np.all(np.array(report.grand_values("ar")) <= 1.0)

    def test_default_ranking_follows_noise_level(self):
        """Test that default ranking settings order 50-scan teams by their noise level."""
        spec = ArchSpec(tooth_count=4, arch_radius=12.0, resolution=0.6)
        truth = {
            f"scan-{i:02d}": generate_arch(spec, scan_seed(3, i), f"scan-{i:02d}")[0]
            for i in range(50)
        }
        teams = {"s01": 0.1, "s05": 0.5, "s10": 1.0}

        samples = []
        for t, (team, sigma) in enumerate(teams.items()):
            preds = [
                perturb(gt, NoiseSpec(sigma=sigma), seed=scan_seed(3, i, t))
                for i, gt in enumerate(truth.values())
            ]
            samples.extend(samples_from_report(team, evaluate_submission(truth, preds)))

        config = RankingConfig()
        assert len({s.stream for s in samples}) == 8
        assert config.p_threshold == 0.001
        result = bootstrap_rank_with_config(samples, config)

        assert result.ordering() == ["s01", "s05", "s10"]
        scores = [result.rank_scores[team] for team in result.ordering()]
        assert all(a - b > 0.1 for a, b in zip(scores, scores[1:], strict=False))

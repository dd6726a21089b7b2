"""Pairwise-significance point awards and bootstrap rank scores."""

import logging
import math
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from ..config import RankingConfig
from ..evaluation.submission import MetricReport
from ..exceptions import RankingError
from ..models import Category
from .wilcoxon import EXACT_MAX_N, ZeroMethod, wilcoxon_signed_rank

logger = logging.getLogger(__name__)

StreamMode = Literal["categories", "grand"]

CATEGORY_STREAMS: tuple[str, ...] = tuple(
    f"{category.value}/{metric}" for category in Category for metric in ("AP", "AR")
)
GRAND_STREAMS: tuple[str, ...] = ("mAP", "mAR")


@dataclass(frozen=True)
class MetricSample:
    """Per-scan values of one team in one metric stream."""

    team: str
    stream: str
    scan_ids: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.scan_ids) != len(self.values):
            raise RankingError(
                f"{self.team}/{self.stream}: {len(self.scan_ids)} scans but "
                f"{len(self.values)} values"
            )


def stream_names(mode: StreamMode) -> tuple[str, ...]:
    """Stream ids of a stream mode: 8 category streams or the 2 grand streams."""
    return CATEGORY_STREAMS if mode == "categories" else GRAND_STREAMS


def samples_from_report(
    team: str, report: MetricReport, mode: StreamMode = "categories"
) -> list[MetricSample]:
    """Turn a team's MetricReport into its metric samples, scans in sorted order."""
    scan_ids = tuple(report.scan_ids())
    if mode == "grand":
        series = {"mAP": report.grand_values("ap"), "mAR": report.grand_values("ar")}
    else:
        series = {}
        for category in Category:
            series[f"{category.value}/AP"] = report.values(category, "ap")
            series[f"{category.value}/AR"] = report.values(category, "ar")
    return [
        MetricSample(team=team, stream=stream, scan_ids=scan_ids, values=tuple(values))
        for stream, values in series.items()
    ]


class _SampleTable:
    """Samples arranged as team -> stream -> value array over a shared scan order."""

    def __init__(self, samples: Sequence[MetricSample]):
        if not samples:
            raise RankingError("no metric samples given")

        self.teams: list[str] = sorted({s.team for s in samples})
        if len(self.teams) < 2:
            raise RankingError("ranking needs at least two teams")

        self.streams: list[str] = sorted({s.stream for s in samples})
        self.values: dict[str, dict[str, np.ndarray]] = {team: {} for team in self.teams}
        scan_order: dict[str, tuple[str, ...]] = {}

        for sample in samples:
            if sample.stream in self.values[sample.team]:
                raise RankingError(f"{sample.team} has stream '{sample.stream}' twice")
            expected = scan_order.setdefault(sample.stream, sample.scan_ids)
            if sample.scan_ids != expected:
                raise RankingError(
                    f"{sample.team}/{sample.stream}: scan order differs from other teams"
                )
            self.values[sample.team][sample.stream] = np.asarray(sample.values, dtype=np.float64)

        for team in self.teams:
            missing = set(self.streams) - set(self.values[team])
            if missing:
                raise RankingError(f"{team} lacks streams {sorted(missing)}")

        lengths = {len(order) for order in scan_order.values()}
        if len(lengths) != 1:
            raise RankingError("streams cover different numbers of scans")
        self.scan_count = lengths.pop()
        if self.scan_count == 0:
            raise RankingError("metric samples contain no scans")

    @property
    def comparisons_per_team(self) -> int:
        return (len(self.teams) - 1) * len(self.streams)


def pairwise_pvalues(
    samples: Sequence[MetricSample],
    zero_method: ZeroMethod = "wilcox",
    exact_max_n: int = EXACT_MAX_N,
) -> dict[str, dict[str, dict[str, float]]]:
    """p-value of "row team greater than column team" per stream, on all scans.

    Returns:
        stream -> team -> other team -> one-sided p-value
    """
    table = _SampleTable(samples)
    matrix: dict[str, dict[str, dict[str, float]]] = {}
    for stream in table.streams:
        matrix[stream] = {team: {} for team in table.teams}
        for a, b in combinations(table.teams, 2):
            x, y = table.values[a][stream], table.values[b][stream]
            matrix[stream][a][b] = wilcoxon_signed_rank(x, y, zero_method, exact_max_n).p_value
            matrix[stream][b][a] = wilcoxon_signed_rank(y, x, zero_method, exact_max_n).p_value
    return matrix


def _points(
    table: _SampleTable,
    indices: np.ndarray | None,
    p_threshold: float,
    zero_method: ZeroMethod,
    exact_max_n: int,
) -> dict[str, int]:
    points = dict.fromkeys(table.teams, 0)
    for stream in table.streams:
        for a, b in combinations(table.teams, 2):
            x, y = table.values[a][stream], table.values[b][stream]
            if indices is not None:
                x, y = x[indices], y[indices]
            if wilcoxon_signed_rank(x, y, zero_method, exact_max_n).p_value < p_threshold:
                points[a] += 1
            if wilcoxon_signed_rank(y, x, zero_method, exact_max_n).p_value < p_threshold:
                points[b] += 1
    return points


def points_round(
    samples: Sequence[MetricSample],
    p_threshold: float = 0.001,
    zero_method: ZeroMethod = "wilcox",
    exact_max_n: int = EXACT_MAX_N,
) -> dict[str, int]:
    """Award one point per (opponent, stream) in which a team is significantly better.

    Both one-sided directions are tested for every unordered pair of teams, so a team
    can earn at most (T - 1) x streams points.

    Raises:
        RankingError: With fewer than two teams or inconsistent samples
    """
    table = _SampleTable(samples)
    return _points(table, None, p_threshold, zero_method, exact_max_n)


class RankingResult(BaseModel):
    """Bootstrap point totals, normalized scores and the full-data p-value matrices."""

    teams: list[str]
    streams: list[str]
    iterations: int
    comparisons_per_team: int
    raw_points: dict[str, list[int]] = Field(..., description="Points per iteration")
    normalized: dict[str, list[float]] = Field(..., description="Points / comparisons")
    rank_scores: dict[str, float] = Field(..., description="Mean normalized score")
    pvalues: dict[str, dict[str, dict[str, float]]] = Field(
        default_factory=dict, description="stream -> team -> opponent -> p"
    )
    seed: int = 0
    resample_mode: str = "drop"

    def ordering(self) -> list[str]:
        """Teams by descending rank score, ties broken by name."""
        return sorted(self.teams, key=lambda team: (-self.rank_scores[team], team))


def bootstrap_rank(
    samples: Sequence[MetricSample],
    iterations: int = 100,
    drop_fraction: float = 0.10,
    seed: int = 0,
    p_threshold: float = 0.001,
    resample_mode: Literal["drop", "bootstrap"] = "drop",
    zero_method: ZeroMethod = "wilcox",
    exact_max_n: int = EXACT_MAX_N,
    workers: int = 1,
) -> RankingResult:
    """Repeat the point round on resampled scan subsets and average the normalized scores.

    Iteration i draws from the i-th child of `SeedSequence(seed)`, and results are
    reduced in iteration order, so the outcome does not depend on `workers`.

    Args:
        samples: Metric samples of every team and stream
        iterations: Number of resampling rounds
        drop_fraction: Share of scans removed per round ("drop" mode)
        seed: Master seed
        p_threshold: Significance level for a point
        resample_mode: "drop" removes floor(drop_fraction * S) scans without
            replacement; "bootstrap" draws S scans with replacement
        zero_method: Zero-difference handling of the signed-rank test
        exact_max_n: Largest non-zero pair count using the exact null
        workers: Threads running iterations

    Returns:
        RankingResult

    Raises:
        RankingError: On invalid parameters or when fewer than two scans would remain
    """
    if iterations < 1:
        raise RankingError("iterations must be at least 1")
    if not 0.0 <= drop_fraction < 1.0:
        raise RankingError(f"drop_fraction must lie in [0, 1), got {drop_fraction}")

    table = _SampleTable(samples)
    scans = table.scan_count
    dropped = math.floor(drop_fraction * scans)
    if resample_mode == "drop" and scans - dropped < 2:
        raise RankingError(f"dropping {dropped} of {scans} scans leaves fewer than 2")
    if resample_mode == "bootstrap" and scans < 2:
        raise RankingError("bootstrap resampling needs at least 2 scans")

    children = np.random.SeedSequence(seed).spawn(iterations)

    def run(child: np.random.SeedSequence) -> dict[str, int]:
        rng = np.random.default_rng(child)
        if resample_mode == "bootstrap":
            indices = rng.integers(0, scans, size=scans)
        else:
            removed = rng.choice(scans, size=dropped, replace=False)
            indices = np.setdiff1d(np.arange(scans), removed)
        return _points(table, indices, p_threshold, zero_method, exact_max_n)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rounds = list(pool.map(run, children))

    denominator = table.comparisons_per_team
    raw = {team: [r[team] for r in rounds] for team in table.teams}
    normalized = {team: [p / denominator for p in raw[team]] for team in table.teams}
    scores = {team: float(np.mean(normalized[team])) for team in table.teams}

    logger.info(
        f"Ranked {len(table.teams)} teams over {len(table.streams)} streams, "
        f"{scans} scans, {iterations} iterations ({resample_mode})"
    )
    return RankingResult(
        teams=table.teams,
        streams=table.streams,
        iterations=iterations,
        comparisons_per_team=denominator,
        raw_points=raw,
        normalized=normalized,
        rank_scores=scores,
        pvalues=pairwise_pvalues(samples, zero_method, exact_max_n),
        seed=seed,
        resample_mode=resample_mode,
    )


def bootstrap_rank_with_config(
    samples: Sequence[MetricSample], config: RankingConfig, workers: int = 1
) -> RankingResult:
    """`bootstrap_rank` with every parameter taken from a RankingConfig."""
    return bootstrap_rank(
        samples,
        iterations=config.iterations,
        drop_fraction=config.drop_fraction,
        seed=config.seed,
        p_threshold=config.p_threshold,
        resample_mode=config.resample_mode,
        zero_method=config.zero_method,
        exact_max_n=config.exact_max_n,
        workers=workers,
    )


class LeaderboardRow(BaseModel):
    """One leaderboard line: rank, rank score and the team's grand metrics."""

    rank: int
    team: str
    rank_score: float
    mAP: float | None = None  # noqa: N815
    mAR: float | None = None  # noqa: N815


def leaderboard(
    result: RankingResult, reports: Mapping[str, MetricReport] | None = None
) -> list[LeaderboardRow]:
    """Leaderboard rows in rank order; mAP/mAR are filled when reports are given.

    Teams with equal rank scores share a rank (1, 1, 3, ...).
    """
    rows: list[LeaderboardRow] = []
    scores = result.rank_scores
    for team in result.ordering():
        position = 1 + sum(1 for other in result.teams if scores[other] > scores[team])
        report = reports.get(team) if reports else None
        rows.append(
            LeaderboardRow(
                rank=position,
                team=team,
                rank_score=result.rank_scores[team],
                mAP=report.grand_map if report else None,
                mAR=report.grand_mar if report else None,
            )
        )
    return rows

"""One-sided Wilcoxon signed-rank test with an exact null for small samples."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.stats import norm, rankdata

from ..exceptions import ValidationError

logger = logging.getLogger(__name__)

ZeroMethod = Literal["wilcox", "pratt"]

EXACT_MAX_N = 25


@dataclass(frozen=True)
class WilcoxonResult:
    """Outcome of a one-sided test of "x stochastically greater than y".

    `statistic` is W+, the rank sum of the positive differences; `w_minus` is the
    rank sum of the negative ones.
    """

    statistic: float
    w_minus: float
    p_value: float
    n: int
    method: Literal["exact", "normal", "none"]

    @property
    def no_evidence(self) -> bool:
        """True when every difference was zero."""
        return self.method == "none"


def signed_ranks(diffs: np.ndarray, zero_method: ZeroMethod = "wilcox") -> np.ndarray:
    """Average ranks of |diffs| carrying the sign of each difference.

    With "wilcox" zero differences are discarded before ranking; with "pratt" they are
    ranked and then dropped. Zeros never appear in the result.
    """
    if zero_method == "wilcox":
        nonzero = diffs[diffs != 0]
        return np.sign(nonzero) * rankdata(np.abs(nonzero))
    if zero_method == "pratt":
        ranks = rankdata(np.abs(diffs))
        keep = diffs != 0
        return np.sign(diffs[keep]) * ranks[keep]
    raise ValidationError(f"unknown zero method '{zero_method}'")


def exact_upper_tail(ranks: np.ndarray, observed: float) -> float:
    """P(W+ >= observed) under the sign-flip null, by subset-sum counting.

    Average ranks are multiples of 1/2, so the counting runs on doubled ranks.
    """
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    counts = np.zeros(int(doubled.sum()) + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled:
        counts[r:] = counts[r:] + counts[: len(counts) - r].copy()
    target = int(np.rint(2.0 * observed))
    return float(counts[target:].sum() / 2.0 ** len(doubled))


def normal_upper_tail(ranks: np.ndarray, observed: float) -> float:
    """Normal approximation of P(W+ >= observed) with continuity correction.

    The variance sum(r^2)/4 is the exact null variance for the given ranks, which
    folds in the tie correction.
    """
    mean = float(ranks.sum()) / 2.0
    sd = float(np.sqrt(np.sum(ranks**2) / 4.0))
    if sd == 0.0:
        return 1.0
    z = (observed - mean - 0.5) / sd
    return float(norm.sf(z))


def wilcoxon_signed_rank(
    x: Sequence[float] | np.ndarray,
    y: Sequence[float] | np.ndarray,
    zero_method: ZeroMethod = "wilcox",
    exact_max_n: int = EXACT_MAX_N,
) -> WilcoxonResult:
    """Paired signed-rank test, alternative "x greater than y".

    Args:
        x: Per-scan values of the first team
        y: Per-scan values of the second team, paired with `x`
        zero_method: "wilcox" discards zero differences, "pratt" ranks them first
        exact_max_n: Largest count of non-zero pairs that uses the exact null

    Returns:
        WilcoxonResult; p = 1 with method "none" when every difference is zero

    Raises:
        ValidationError: If the samples are empty or of unequal length
    """
    x_arr = np.asarray(x, dtype=np.float64)
    y_arr = np.asarray(y, dtype=np.float64)
    if x_arr.shape != y_arr.shape or x_arr.ndim != 1:
        raise ValidationError("paired samples must be 1-D and of equal length")
    if len(x_arr) == 0:
        raise ValidationError("paired samples must not be empty")

    ranks = signed_ranks(x_arr - y_arr, zero_method)
    if len(ranks) == 0:
        return WilcoxonResult(statistic=0.0, w_minus=0.0, p_value=1.0, n=0, method="none")

    magnitudes = np.abs(ranks)
    w_plus = float(magnitudes[ranks > 0].sum())
    w_minus = float(magnitudes[ranks < 0].sum())

    if len(ranks) <= exact_max_n:
        p_value = exact_upper_tail(magnitudes, w_plus)
        method: Literal["exact", "normal"] = "exact"
    else:
        p_value = normal_upper_tail(magnitudes, w_plus)
        method = "normal"

    return WilcoxonResult(
        statistic=w_plus,
        w_minus=w_minus,
        p_value=min(1.0, p_value),
        n=len(ranks),
        method=method,
    )

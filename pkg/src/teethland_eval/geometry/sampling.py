"""Farthest point sampling."""

import numpy as np

from ..exceptions import ValidationError


def fps(points: np.ndarray, k: int, seed: int = 0) -> np.ndarray:
    """Pick k well-spread indices by farthest point sampling.

    A seeded random point starts the sweep; the first sample is the point farthest
    from it, and every later sample maximizes the distance to those already chosen.
    Ties go to the lowest index.

    Args:
        points: (N, 3) positions
        k: Number of samples, 1 <= k <= N
        seed: Seed of the starting point

    Returns:
        (k,) int64 indices, all distinct

    Raises:
        ValidationError: If k is out of range
    """
    points = np.asarray(points, dtype=np.float64).reshape(len(points), -1)
    n = len(points)
    if not 1 <= k <= n:
        raise ValidationError(f"sample size must lie in [1, {n}], got {k}")

    start = int(np.random.default_rng(seed).integers(n))
    nearest = np.linalg.norm(points - points[start], axis=1)
    chosen = np.empty(k, dtype=np.int64)
    picked = np.zeros(n, dtype=bool)
    for i in range(k):
        # chosen points are masked so duplicates in the cloud cannot be re-picked
        candidate = np.where(picked, -1.0, nearest)
        index = int(np.argmax(candidate))
        chosen[i] = index
        picked[index] = True
        distance = np.linalg.norm(points - points[index], axis=1)
        nearest = distance if i == 0 else np.minimum(nearest, distance)
    return chosen

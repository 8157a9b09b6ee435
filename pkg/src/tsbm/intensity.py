"""Non-parametric ML estimates of block integrated intensities.

Increments are events per ordered node pair per interval. Blocks without any
node pair (the diagonal block of a singleton cluster) have no estimate and are
reported as NaN rather than 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BlockStatsA,
    BlockStatsB,
    InteractionTensor,
    Partition,
    TimeGrid,
    block_stats_a,
    block_stats_b,
)

__all__ = [
    "IntensityEstimate",
    "estimate_pi_a",
    "estimate_pi_b",
    "expand_time_clusters",
    "cumulative",
    "interpolate",
    "estimate_intensities",
]


@dataclass(frozen=True, eq=False)
class IntensityEstimate:
    """Estimated integrated intensity of one block pair at the grid breakpoints."""

    block: tuple[int, int]
    increments: np.ndarray  # (U,)
    values: np.ndarray  # (U + 1,), values[0] == 0
    grid: TimeGrid

    @property
    def defined(self) -> bool:
        return not np.isnan(self.values).any()

    def __call__(self, t):
        return interpolate(self, t)


def _safe_ratio(S, exposure):
    S = np.asarray(S, dtype=float)
    exposure = np.broadcast_to(np.asarray(exposure, dtype=float), S.shape)
    out = np.full(S.shape, np.nan)
    ok = exposure > 0
    out[ok] = S[ok] / exposure[ok]
    return out


def estimate_pi_a(stats: BlockStatsA) -> np.ndarray:
    """``S[k, g, u] / pair_count[k, g]``, shape ``(K, K, U)``."""
    return _safe_ratio(stats.S, stats.pair_count[:, :, None])


def estimate_pi_b(stats: BlockStatsB, y: Partition | None = None) -> np.ndarray:
    """``S[k, g, d] / (pair_count[k, g] |C_d|)``, shape ``(K, K, D)``."""
    occ = stats.time_occupancy if y is None else y.occupancy
    if occ.size != stats.S.shape[2]:
        raise ValueError("time partition does not match the statistics")
    return _safe_ratio(stats.S, stats.pair_count[:, :, None] * occ[None, None, :])


def expand_time_clusters(pi_b: np.ndarray, y: Partition) -> np.ndarray:
    """Per-interval increments from per-time-cluster ones."""
    return pi_b[:, :, y.labels]


def cumulative(increments, grid: TimeGrid, block=(0, 0)) -> IntensityEstimate:
    inc = np.asarray(increments, dtype=float)
    if inc.shape != (grid.n_intervals,):
        raise ValueError(f"expected {grid.n_intervals} increments, got shape {inc.shape}")
    values = np.concatenate([[0.0], np.cumsum(inc)])
    return IntensityEstimate(tuple(int(b) for b in block), inc, values, grid)


def interpolate(est: IntensityEstimate, t):
    """Piecewise-linear interpolation of the cumulative estimate; exact at breakpoints."""
    t_arr = np.asarray(t, dtype=float)
    if np.any((t_arr < 0) | (t_arr > est.grid.horizon)):
        raise ValueError(f"t must lie in [0, {est.grid.horizon}]")
    out = np.interp(t_arr, est.grid.breakpoints, est.values)
    return float(out) if np.ndim(out) == 0 else out


def estimate_intensities(tensor: InteractionTensor, z: Partition,
                         y: Partition | None = None) -> dict[tuple[int, int], IntensityEstimate]:
    """Estimates for every block pair; model B when a time partition is given."""
    if y is None:
        pi = estimate_pi_a(block_stats_a(tensor, z))
    else:
        pi = expand_time_clusters(estimate_pi_b(block_stats_b(tensor, z, y), y), y)
    K = z.n_clusters
    return {(k, g): cumulative(pi[k, g], tensor.grid, (k, g)) for k in range(K) for g in range(K)}

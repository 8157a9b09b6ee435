"""Partition agreement and the brute-force ICL optimum used as a test oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .core import (
    InteractionTensor,
    Partition,
    Priors,
    block_stats_a,
    log_icl_a,
    log_lik_b,
    BlockStatsB,
    log_partition_prior,
)

__all__ = [
    "contingency_table",
    "adjusted_rand_index",
    "set_partitions",
    "ExhaustiveResult",
    "exhaustive_icl_optimum",
]

MAX_EXHAUSTIVE_NODES = 8
MAX_EXHAUSTIVE_INTERVALS = 5


def contingency_table(p1, p2) -> np.ndarray:
    p1 = np.asarray(p1)
    p2 = np.asarray(p2)
    if p1.shape != p2.shape or p1.ndim != 1:
        raise ValueError(f"partitions must be vectors of equal length, got {p1.shape} and {p2.shape}")
    _, a = np.unique(p1, return_inverse=True)
    _, b = np.unique(p2, return_inverse=True)
    table = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    return table


def adjusted_rand_index(p1, p2) -> float:
    """Hubert-Arabie adjusted Rand index; 1 for identical partitions up to relabelling.

    Not clamped: values below zero mean less agreement than chance.
    """
    table = contingency_table(p1, p2)
    n = table.sum()
    sum_cells = comb(table, 2).sum()
    sum_rows = comb(table.sum(axis=1), 2).sum()
    sum_cols = comb(table.sum(axis=0), 2).sum()
    total = comb(n, 2)
    expected = sum_rows * sum_cols / total if total else 0.0
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        # both partitions trivial (all-in-one or all-singletons)
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def set_partitions(n: int, max_blocks: int | None = None):
    """Yield every partition of ``n`` items as a restricted-growth label array."""
    max_blocks = n if max_blocks is None else max_blocks
    labels = np.zeros(n, dtype=np.int64)

    def rec(pos, used):
        if pos == n:
            yield labels.copy()
            return
        for k in range(min(used + 1, max_blocks)):
            labels[pos] = k
            yield from rec(pos + 1, max(used, k + 1))

    if n == 0:
        return
    yield from rec(0, 0)


@dataclass
class ExhaustiveResult:
    icl: float
    z: Partition
    y: Partition | None
    n_evaluated: int


def exhaustive_icl_optimum(tensor: InteractionTensor, priors: Priors = Priors(),
                           k_max: int | None = None, model: str = "A",
                           d_max: int | None = None) -> ExhaustiveResult:
    """Global ICL maximum by enumerating all node (and time) partitions."""
    N, U = tensor.n_nodes, tensor.n_intervals
    if N > MAX_EXHAUSTIVE_NODES:
        raise ValueError(f"exhaustive search limited to N <= {MAX_EXHAUSTIVE_NODES}")
    if model not in ("A", "B"):
        raise ValueError("model must be 'A' or 'B'")
    if model == "B" and U > MAX_EXHAUSTIVE_INTERVALS:
        raise ValueError(f"exhaustive model-B search limited to U <= {MAX_EXHAUSTIVE_INTERVALS}")
    time_parts = list(set_partitions(U, d_max)) if model == "B" else [None]
    best = (-np.inf, None, None)
    count = 0
    for z in set_partitions(N, k_max):
        zp = Partition(z)
        stats = block_stats_a(tensor, zp)
        if model == "A":
            count += 1
            v = log_icl_a(stats, zp, priors)
            if v > best[0]:
                best = (v, zp, None)
            continue
        zprior = log_partition_prior(zp.occupancy, priors.alpha)
        for y in time_parts:
            yp = Partition(y)
            C = yp.one_hot()
            sb = BlockStatsB(stats.S @ C, stats.logP @ C, stats.pair_count, yp.occupancy)
            v = log_lik_b(sb, priors) + zprior + log_partition_prior(yp.occupancy, priors.beta)
            count += 1
            if v > best[0]:
                best = (v, zp, yp)
    return ExhaustiveResult(icl=float(best[0]), z=best[1], y=best[2], n_evaluated=count)

"""Data containers, block statistics and the exact ICL for models A and B.

Labels are 0-based throughout the Python API; file formats handle the
1-based conventions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

__all__ = [
    "TimeGrid",
    "InteractionTensor",
    "Partition",
    "NodePartition",
    "TimePartition",
    "Priors",
    "BlockStatsA",
    "BlockStatsB",
    "build_tensor",
    "block_stats_a",
    "block_stats_b",
    "pair_counts",
    "log_partition_prior",
    "log_lik_a",
    "log_lik_b",
    "log_icl_a",
    "log_icl_b",
]


def _frozen(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeGrid:
    """Breakpoints ``0 = t_0 < t_1 < ... < t_U = T`` of the observation window."""

    breakpoints: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("a time grid needs at least two breakpoints")
        if bp[0] != 0.0:
            raise ValueError("first breakpoint must be 0")
        if not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly ascending")
        object.__setattr__(self, "breakpoints", _frozen(bp))

    @classmethod
    def uniform(cls, n_intervals: int, length: float = 1.0) -> "TimeGrid":
        if n_intervals < 1:
            raise ValueError("n_intervals must be >= 1")
        return cls(np.arange(n_intervals + 1) * float(length))

    @property
    def n_intervals(self) -> int:
        return self.breakpoints.size - 1

    @property
    def horizon(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def locate(self, t) -> np.ndarray:
        """Interval index of each time in ``t``; ``T`` itself maps to the last interval."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        return np.minimum(idx, self.n_intervals - 1)

    def __eq__(self, other):
        if not isinstance(other, TimeGrid):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints)

    def __hash__(self):
        return hash(self.breakpoints.tobytes())


@dataclass(frozen=True, eq=False)
class InteractionTensor:
    """Counts ``Y[i, j, u]`` of interactions from ``i`` to ``j`` during interval ``u``."""

    counts: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        y = np.asarray(self.counts)
        if y.ndim != 3 or y.shape[0] != y.shape[1]:
            raise ValueError("counts must have shape (N, N, U)")
        if y.shape[2] != self.grid.n_intervals:
            raise ValueError(
                f"counts have {y.shape[2]} intervals, grid has {self.grid.n_intervals}"
            )
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.mod(y, 1) == 0):
                raise ValueError("counts must be integers")
        y = y.astype(np.int64)
        if np.any(y < 0):
            raise ValueError("counts must be non-negative")
        diag = np.arange(y.shape[0])
        if np.any(y[diag, diag, :] != 0):
            raise ValueError("self-loop counts must be zero")
        object.__setattr__(self, "counts", _frozen(y))

    @property
    def n_nodes(self) -> int:
        return self.counts.shape[0]

    @property
    def n_intervals(self) -> int:
        return self.counts.shape[2]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other):
        if not isinstance(other, InteractionTensor):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.counts, other.counts)


@dataclass(frozen=True, eq=False)
class Partition:
    """Cluster labels in ``{0, ..., n_clusters - 1}`` with their occupancy."""

    labels: np.ndarray
    n_clusters: int | None = None
    occupancy: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a non-empty vector")
        labels = labels.astype(np.int64)
        if labels.min() < 0:
            raise ValueError("labels must be non-negative")
        k = int(labels.max()) + 1 if self.n_clusters is None else int(self.n_clusters)
        if labels.max() >= k:
            raise ValueError(f"label {labels.max()} out of range for {k} clusters")
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "n_clusters", k)
        object.__setattr__(self, "occupancy", _frozen(np.bincount(labels, minlength=k)))

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Relabel arbitrary hashable labels to ``0..K-1`` in order of first appearance."""
        labels = np.asarray(labels)
        _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
        rank = np.empty(first.size, dtype=np.int64)
        rank[np.argsort(first)] = np.arange(first.size)
        return cls(rank[inverse.ravel()])

    @property
    def size(self) -> int:
        return self.labels.size

    def is_compact(self) -> bool:
        return bool(np.all(self.occupancy > 0))

    def compact(self) -> "Partition":
        return Partition.from_labels(self.labels)

    def one_hot(self) -> np.ndarray:
        out = np.zeros((self.size, self.n_clusters))
        out[np.arange(self.size), self.labels] = 1.0
        return out

    def __len__(self):
        return self.size

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.n_clusters == other.n_clusters and np.array_equal(self.labels, other.labels)


NodePartition = Partition
TimePartition = Partition


@dataclass(frozen=True)
class Priors:
    """Gamma(a, b) prior on block increments, symmetric Dirichlet(alpha) / Dirichlet(beta)
    priors on node and time cluster proportions."""

    a: float = 1.0
    b: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "alpha", "beta"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"prior hyperparameter {name} must be > 0, got {v}")


@dataclass(frozen=True, eq=False)
class BlockStatsA:
    S: np.ndarray  # (K, K, U) counts
    logP: np.ndarray  # (K, K, U) sum of log(Y!)
    pair_count: np.ndarray  # (K, K) ordered pairs, self-pairs excluded


@dataclass(frozen=True, eq=False)
class BlockStatsB:
    S: np.ndarray  # (K, K, D)
    logP: np.ndarray
    pair_count: np.ndarray
    time_occupancy: np.ndarray  # (D,)


def build_tensor(events, grid: TimeGrid, n_nodes: int) -> InteractionTensor:
    """Bin ``(source, target, time)`` events on ``grid``.

    Node ids are 0-based. Intervals are half-open ``[t_{u-1}, t_u)`` except the
    last, which also holds events at exactly ``T``.
    """
    counts = np.zeros((n_nodes, n_nodes, grid.n_intervals), dtype=np.int64)
    if len(events) == 0:
        return InteractionTensor(counts, grid)
    ev = np.asarray(events, dtype=float)
    if ev.ndim != 2 or ev.shape[1] != 3:
        raise ValueError("events must be (source, target, time) triples")
    src, dst, t = ev[:, 0], ev[:, 1], ev[:, 2]
    bad = np.flatnonzero(
        (src != np.floor(src)) | (dst != np.floor(dst))
        | (src < 0) | (src >= n_nodes) | (dst < 0) | (dst >= n_nodes)
    )
    if bad.size:
        raise ValueError(f"event {bad[0]}: node id out of range [0, {n_nodes})")
    bad = np.flatnonzero(~np.isfinite(t) | (t < 0) | (t > grid.horizon))
    if bad.size:
        raise ValueError(f"event {bad[0]}: timestamp {t[bad[0]]} outside [0, {grid.horizon}]")
    bad = np.flatnonzero(src == dst)
    if bad.size:
        raise ValueError(f"event {bad[0]}: self-loop on node {int(src[bad[0]])}")
    np.add.at(counts, (src.astype(np.int64), dst.astype(np.int64), grid.locate(t)), 1)
    return InteractionTensor(counts, grid)


def pair_counts(occupancy) -> np.ndarray:
    """Ordered node pairs per block: ``|A_k||A_g| - delta_kg |A_k|``."""
    n = np.asarray(occupancy, dtype=np.int64)
    return np.outer(n, n) - np.diag(n)


def _check_labels(part: Partition, length: int, what: str):
    if part.size != length:
        raise ValueError(f"{what} partition has length {part.size}, expected {length}")


def block_stats_a(Y: InteractionTensor, z: Partition) -> BlockStatsA:
    _check_labels(z, Y.n_nodes, "node")
    Z = z.one_hot()
    S = np.einsum("ik,iju,jg->kgu", Z, Y.counts, Z, optimize=True)
    logP = np.einsum("ik,iju,jg->kgu", Z, gammaln(Y.counts + 1.0), Z, optimize=True)
    return BlockStatsA(
        S=np.rint(S).astype(np.int64),
        logP=logP,
        pair_count=pair_counts(z.occupancy),
    )


def block_stats_b(Y: InteractionTensor, z: Partition, y: Partition) -> BlockStatsB:
    _check_labels(y, Y.n_intervals, "time")
    A = block_stats_a(Y, z)
    C = y.one_hot()
    return BlockStatsB(
        S=np.rint(A.S @ C).astype(np.int64),
        logP=A.logP @ C,
        pair_count=A.pair_count,
        time_occupancy=y.occupancy.copy(),
    )


def log_partition_prior(occupancy, concentration: float) -> float:
    """log of the Dirichlet-multinomial marginal of a labelling with ``K = len(occupancy)``."""
    n = np.asarray(occupancy, dtype=float)
    k = n.size
    c = concentration
    return float(
        gammaln(c * k) - k * gammaln(c) + gammaln(n + c).sum() - gammaln(n.sum() + c * k)
    )


def _block_log_marginals(S, logP, exposure, priors: Priors) -> np.ndarray:
    """Per-cell log marginal of the Poisson-Gamma model; cells with zero exposure give 0."""
    a, b = priors.a, priors.b
    val = (
        a * np.log(b) - gammaln(a) - logP + gammaln(S + a) - (S + a) * np.log(exposure + b)
    )
    return np.where(exposure > 0, val, 0.0)


def log_lik_a(stats: BlockStatsA, priors: Priors) -> float:
    exposure = np.broadcast_to(stats.pair_count[:, :, None], stats.S.shape)
    return float(_block_log_marginals(stats.S, stats.logP, exposure, priors).sum())


def log_lik_b(stats: BlockStatsB, priors: Priors) -> float:
    exposure = stats.pair_count[:, :, None] * stats.time_occupancy[None, None, :]
    return float(_block_log_marginals(stats.S, stats.logP, exposure, priors).sum())


def _check_stats(stats, z: Partition):
    K = z.n_clusters
    if stats.S.shape[:2] != (K, K):
        raise ValueError(f"stats are sized for {stats.S.shape[0]} clusters, partition has {K}")


def log_icl_a(stats: BlockStatsA, z: Partition, priors: Priors = Priors()) -> float:
    """Exact ICL ``log p(Y, z | K)`` of the unconstrained model."""
    _check_stats(stats, z)
    out = log_lik_a(stats, priors) + log_partition_prior(z.occupancy, priors.alpha)
    if not np.isfinite(out):
        raise FloatingPointError("non-finite ICL")
    return out


def log_icl_b(
    stats: BlockStatsB, z: Partition, y: Partition, priors: Priors = Priors()
) -> float:
    """Exact ICL ``log p(Y, z, y | K, D)`` of the time-clustered model."""
    _check_stats(stats, z)
    if stats.S.shape[2] != y.n_clusters:
        raise ValueError("stats and time partition disagree on the number of time clusters")
    out = (
        log_lik_b(stats, priors)
        + log_partition_prior(z.occupancy, priors.alpha)
        + log_partition_prior(y.occupancy, priors.beta)
    )
    if not np.isfinite(out):
        raise FloatingPointError("non-finite ICL")
    return out

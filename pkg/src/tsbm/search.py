"""Greedy maximisation of the exact ICL by node/interval exchanges and merges.

All sufficient statistics live in arrays sized ``K_max`` (and ``D_max``) that are
never resized; clusters that empty out are simply retired from the active set.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import _kernels as kern
from .core import (
    InteractionTensor,
    Partition,
    Priors,
    block_stats_a,
    block_stats_b,
    log_icl_a,
    log_icl_b,
    log_partition_prior,
)

__all__ = [
    "STRATEGIES",
    "SearchConfig",
    "SearchState",
    "RestartRecord",
    "FitResult",
    "greedy_exchange_pass",
    "greedy_exchange",
    "greedy_merge_pass",
    "fit_restart",
    "run",
]

log = logging.getLogger(__name__)

STRATEGIES = ("A-only", "TN", "NT", "M")
NODES, INTERVALS = "nodes", "intervals"


@dataclass
class SearchConfig:
    """Search settings. ``None`` sizes resolve to ``ceil(N/2)`` and ``ceil(sqrt(U))``."""

    k_max: int | None = None
    d_max: int | None = None
    n_restarts: int = 10
    strategy: str = "A-only"
    seed: int = 0
    epsilon: float = 0.0
    priors: Priors = field(default_factory=Priors)
    n_jobs: int = 1
    time_init: str = "segments"

    @property
    def model(self) -> str:
        return "A" if self.strategy == "A-only" else "B"

    def resolved(self, n_nodes: int, n_intervals: int) -> "SearchConfig":
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.model == "A" and self.d_max is not None:
            raise ValueError("d_max only applies to the time-clustered model")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be >= 1")
        k_max = math.ceil(n_nodes / 2) if self.k_max is None else int(self.k_max)
        d_max = math.ceil(math.sqrt(n_intervals)) if self.d_max is None else int(self.d_max)
        if not 1 <= k_max <= n_nodes:
            raise ValueError(f"k_max={k_max} must lie in [1, N={n_nodes}]")
        if self.model == "B" and not 1 <= d_max <= n_intervals:
            raise ValueError(f"d_max={d_max} must lie in [1, U={n_intervals}]")
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")
        if self.time_init not in ("segments", "random"):
            raise ValueError(f"time_init must be 'segments' or 'random', got {self.time_init!r}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        return SearchConfig(
            k_max=k_max,
            d_max=d_max if self.model == "B" else None,
            n_restarts=self.n_restarts,
            strategy=self.strategy,
            seed=self.seed,
            epsilon=self.epsilon,
            priors=self.priors,
            n_jobs=self.n_jobs,
            time_init=self.time_init,
        )


class SearchState:
    """Incrementally maintained sufficient statistics for one partition pair.

    Parameters
    ----------
    tensor : InteractionTensor
    z : array of int
        Initial node labels in ``[0, k_max)``; empty slots are allowed.
    k_max : int
    priors : Priors
    y : array of int, optional
        Initial time labels in ``[0, d_max)``. Given means model B.
    d_max : int, optional
    """

    def __init__(self, tensor: InteractionTensor, z, k_max: int, priors: Priors = Priors(),
                 y=None, d_max: int | None = None):
        self.tensor = tensor
        self.priors = priors
        self.Y = tensor.counts
        self.logfact = gammaln(self.Y + 1.0)
        self.N, _, self.U = self.Y.shape
        self.k_max = int(k_max)
        self.timed = y is not None

        z = np.asarray(z, dtype=np.int64)
        if z.shape != (self.N,) or z.min() < 0 or z.max() >= self.k_max:
            raise ValueError("node labels must be a length-N vector in [0, k_max)")
        self.z = z.copy()
        self.sizes = np.bincount(self.z, minlength=self.k_max).astype(np.int64)

        Z = np.zeros((self.N, self.k_max))
        Z[np.arange(self.N), self.z] = 1.0
        # Rout[i, g, u]: i -> cluster g; Rin[i, g, u]: cluster g -> i
        Yf = self.Y.astype(np.float64)
        self.Rout = _rint(_to_clusters(Yf, Z))
        self.Rin = _rint(_to_clusters(Yf.transpose(1, 0, 2), Z))
        self.Lout = _to_clusters(self.logfact, Z)
        self.Lin = _to_clusters(self.logfact.transpose(1, 0, 2), Z)
        self.Su = _rint(_from_clusters(self.Rout.astype(np.float64), Z))
        self.Lu = _from_clusters(self.Lout, Z)
        self.logfact_total = float(self.logfact.sum())

        if self.timed:
            self.d_max = int(d_max)
            y = np.asarray(y, dtype=np.int64)
            if y.shape != (self.U,) or y.min() < 0 or y.max() >= self.d_max:
                raise ValueError("time labels must be a length-U vector in [0, d_max)")
            self.y = y.copy()
            self.mult = np.bincount(self.y, minlength=self.d_max).astype(np.float64)
            C = np.zeros((self.U, self.d_max))
            C[np.arange(self.U), self.y] = 1.0
            self.Sd = np.rint(self.Su @ C).astype(np.int64)
            self.Ld = self.Lu @ C
        else:
            self.d_max = self.U
            self.y = np.arange(self.U, dtype=np.int64)
            self.mult = np.ones(self.U)
            self.Sd = self.Su
            self.Ld = self.Lu

        self.trace: list[float] = []
        self.n_moves = {NODES: 0, INTERVALS: 0}
        self.n_merges = {NODES: 0, INTERVALS: 0}
        self.icl = self.full_icl()
        self.trace.append(self.icl)

    # -- bookkeeping -------------------------------------------------------------------

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.sizes > 0)

    @property
    def dactive(self) -> np.ndarray:
        return np.flatnonzero(self.mult > 0)

    @property
    def K(self) -> int:
        return int(np.count_nonzero(self.sizes))

    @property
    def D(self) -> int:
        return int(np.count_nonzero(self.mult)) if self.timed else self.U

    def node_partition(self) -> Partition:
        return Partition.from_labels(self.z)

    def time_partition(self) -> Partition | None:
        return Partition.from_labels(self.y) if self.timed else None

    def _node_prior(self, sizes) -> float:
        return log_partition_prior(sizes[sizes > 0], self.priors.alpha)

    def _time_prior(self, mult) -> float:
        return log_partition_prior(mult[mult > 0], self.priors.beta) if self.timed else 0.0

    def _node_views(self, i):
        if self.timed:
            return (kern.aggregate_time(self.Rout[i], self.y, self.d_max),
                    kern.aggregate_time(self.Rin[i], self.y, self.d_max))
        return self.Rout[i], self.Rin[i]

    def block_values(self) -> np.ndarray:
        p = self.priors
        return kern.block_values(self.Sd, self.sizes, self.active, self.mult,
                                 not self.timed, p.a, p.b)

    def full_icl(self) -> float:
        """ICL from the maintained tables (no incremental deltas involved)."""
        lik = self.block_values().sum() - self.logfact_total
        return float(lik + self._node_prior(self.sizes) + self._time_prior(self.mult))

    # -- node moves --------------------------------------------------------------------

    def node_deltas(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """ICL change of moving node ``i`` to each active cluster.

        Returns ``(targets, deltas)``; the entry for the current cluster is 0.
        """
        k = int(self.z[i])
        act = self.active
        r, c = self._node_views(i)
        p = self.priors
        lik = kern.node_move_deltas(self.Sd, self.sizes, act, self.mult, not self.timed,
                                    r, c, k, p.a, p.b)
        alpha = p.alpha
        nk = self.sizes[k]
        base = self._node_prior(self.sizes)
        prior = np.zeros(act.size)
        if nk > 1:
            ns = self.sizes[act].astype(float)
            prior = (gammaln(nk - 1 + alpha) - gammaln(nk + alpha)
                     + gammaln(ns + 1 + alpha) - gammaln(ns + alpha))
        else:
            # the move empties k, so K drops by one
            for idx, l in enumerate(act):
                if l == k:
                    continue
                sizes = self.sizes.copy()
                sizes[k] -= 1
                sizes[l] += 1
                prior[idx] = self._node_prior(sizes) - base
        out = lik + prior
        out[act == k] = 0.0
        return act, out

    def delta_exchange_node(self, i: int, l: int) -> float:
        k = int(self.z[i])
        if l == k:
            raise ValueError("target cluster equals the current cluster")
        if not 0 <= l < self.k_max or self.sizes[l] == 0:
            raise ValueError(f"cluster {l} is not an active cluster")
        act, d = self.node_deltas(i)
        return float(d[np.searchsorted(act, l)])

    def apply_node_move(self, i: int, l: int, delta: float | None = None):
        k = int(self.z[i])
        if l == k:
            raise ValueError("target cluster equals the current cluster")
        if delta is None:
            delta = self.delta_exchange_node(i, l)
        if self.timed:
            r, c = self._node_views(i)
            lr = kern.aggregate_time(self.Lout[i], self.y, self.d_max)
            lc = kern.aggregate_time(self.Lin[i], self.y, self.d_max)
            for tab, rv, cv in ((self.Sd, r, c), (self.Ld, lr, lc)):
                tab[k] -= rv
                tab[l] += rv
                tab[:, k] -= cv
                tab[:, l] += cv
        kern.move_node(self.Y, self.Su, self.Rout, self.Rin, i, k, l)
        kern.move_node(self.logfact, self.Lu, self.Lout, self.Lin, i, k, l)
        self.sizes[k] -= 1
        self.sizes[l] += 1
        self.z[i] = l
        self._accept(delta)
        self.n_moves[NODES] += 1

    def merge_node_deltas(self) -> tuple[np.ndarray, np.ndarray]:
        """ICL change of merging every pair of active clusters (upper triangle of a
        ``K x K`` matrix, ``-inf`` elsewhere), with the active slot ids."""
        act = self.active
        p = self.priors
        F = self.block_values()
        lik = kern.node_merge_deltas(self.Sd, F, self.sizes, act, self.mult,
                                     not self.timed, p.a, p.b)
        base = self._node_prior(self.sizes)
        ns = self.sizes[act]
        kept = ns[None, :] + ns[:, None]
        rest = gammaln(ns + p.alpha).sum()
        K = act.size
        # K -> K-1 clusters, two occupancy terms replaced by the merged one
        new = (gammaln(p.alpha * (K - 1)) - (K - 1) * gammaln(p.alpha)
               + rest - gammaln(ns + p.alpha)[:, None] - gammaln(ns + p.alpha)[None, :]
               + gammaln(kept + p.alpha) - gammaln(self.N + p.alpha * (K - 1)))
        iu = np.triu_indices(K, 1)
        out = np.full((K, K), -np.inf)
        out[iu] = lik[iu] + new[iu] - base
        return act, out

    def delta_merge_nodes(self, k: int, l: int) -> float:
        if k == l:
            raise ValueError("cannot merge a cluster with itself")
        act = self.active
        if self.sizes[k] == 0 or self.sizes[l] == 0:
            raise ValueError("both clusters must be non-empty")
        _, d = self.merge_node_deltas()
        a, b = sorted((int(np.searchsorted(act, k)), int(np.searchsorted(act, l))))
        return float(d[a, b])

    def apply_node_merge(self, k: int, l: int, delta: float | None = None):
        """Fold cluster ``k`` into ``l``."""
        if delta is None:
            delta = self.delta_merge_nodes(k, l)
        tabs = [self.Su, self.Lu] + ([self.Sd, self.Ld] if self.timed else [])
        for tab in tabs:
            tab[l] += tab[k]
            tab[k] = 0
            tab[:, l] += tab[:, k]
            tab[:, k] = 0
        for agg in (self.Rout, self.Rin, self.Lout, self.Lin):
            agg[:, l] += agg[:, k]
            agg[:, k] = 0
        self.z[self.z == k] = l
        self.sizes[l] += self.sizes[k]
        self.sizes[k] = 0
        self._accept(delta)
        self.n_merges[NODES] += 1

    # -- interval moves ----------------------------------------------------------------

    def _require_timed(self):
        if not self.timed:
            raise ValueError("interval moves need a time partition (model B)")

    def interval_deltas(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        self._require_timed()
        d = int(self.y[u])
        dact = self.dactive
        p = self.priors
        lik = kern.interval_move_deltas(self.Sd, self.Su[:, :, u], self.sizes, self.active,
                                        dact, self.mult, d, p.a, p.b)
        beta = p.beta
        md = self.mult[d]
        if md > 1:
            ms = self.mult[dact]
            prior = (gammaln(md - 1 + beta) - gammaln(md + beta)
                     + gammaln(ms + 1 + beta) - gammaln(ms + beta))
        else:
            base = self._time_prior(self.mult)
            prior = np.zeros(dact.size)
            for idx, e in enumerate(dact):
                if e == d:
                    continue
                mult = self.mult.copy()
                mult[d] -= 1
                mult[e] += 1
                prior[idx] = self._time_prior(mult) - base
        out = lik + prior
        out[dact == d] = 0.0
        return dact, out

    def delta_exchange_interval(self, u: int, e: int) -> float:
        self._require_timed()
        if e == self.y[u]:
            raise ValueError("target time cluster equals the current one")
        if not 0 <= e < self.d_max or self.mult[e] == 0:
            raise ValueError(f"time cluster {e} is not active")
        dact, dl = self.interval_deltas(u)
        return float(dl[np.searchsorted(dact, e)])

    def apply_interval_move(self, u: int, e: int, delta: float | None = None):
        self._require_timed()
        d = int(self.y[u])
        if e == d:
            raise ValueError("target time cluster equals the current one")
        if delta is None:
            delta = self.delta_exchange_interval(u, e)
        self.Sd[:, :, d] -= self.Su[:, :, u]
        self.Sd[:, :, e] += self.Su[:, :, u]
        self.Ld[:, :, d] -= self.Lu[:, :, u]
        self.Ld[:, :, e] += self.Lu[:, :, u]
        self.mult[d] -= 1
        self.mult[e] += 1
        self.y[u] = e
        self._accept(delta)
        self.n_moves[INTERVALS] += 1

    def merge_interval_deltas(self) -> tuple[np.ndarray, np.ndarray]:
        self._require_timed()
        dact = self.dactive
        p = self.priors
        lik = kern.interval_merge_deltas(self.Sd, self.sizes, self.active, dact,
                                         self.mult, p.a, p.b)
        ms = self.mult[dact]
        D = dact.size
        base = self._time_prior(self.mult)
        rest = gammaln(ms + p.beta).sum()
        new = (gammaln(p.beta * (D - 1)) - (D - 1) * gammaln(p.beta)
               + rest - gammaln(ms + p.beta)[:, None] - gammaln(ms + p.beta)[None, :]
               + gammaln(ms[:, None] + ms[None, :] + p.beta)
               - gammaln(self.U + p.beta * (D - 1)))
        iu = np.triu_indices(D, 1)
        out = np.full((D, D), -np.inf)
        out[iu] = lik[iu] + new[iu] - base
        return dact, out

    def delta_merge_intervals(self, d: int, e: int) -> float:
        self._require_timed()
        if d == e:
            raise ValueError("cannot merge a time cluster with itself")
        if self.mult[d] == 0 or self.mult[e] == 0:
            raise ValueError("both time clusters must be non-empty")
        dact, dl = self.merge_interval_deltas()
        a, b = sorted((int(np.searchsorted(dact, d)), int(np.searchsorted(dact, e))))
        return float(dl[a, b])

    def apply_interval_merge(self, d: int, e: int, delta: float | None = None):
        """Fold time cluster ``d`` into ``e``."""
        if delta is None:
            delta = self.delta_merge_intervals(d, e)
        for tab in (self.Sd, self.Ld):
            tab[:, :, e] += tab[:, :, d]
            tab[:, :, d] = 0
        self.y[self.y == d] = e
        self.mult[e] += self.mult[d]
        self.mult[d] = 0
        self._accept(delta)
        self.n_merges[INTERVALS] += 1

    # -- verification ------------------------------------------------------------------

    def _accept(self, delta: float):
        self.icl += float(delta)
        self.trace.append(self.icl)

    def recompute_icl(self) -> float:
        """ICL recomputed from scratch on the data and current labels."""
        z = self.node_partition()
        if self.timed:
            y = self.time_partition()
            return log_icl_b(block_stats_b(self.tensor, z, y), z, y, self.priors)
        return log_icl_a(block_stats_a(self.tensor, z), z, self.priors)

    def integrity_errors(self) -> list[str]:
        """Differences between the maintained tables and a from-scratch rebuild."""
        fresh = SearchState(self.tensor, self.z, self.k_max, self.priors,
                            y=self.y if self.timed else None,
                            d_max=self.d_max if self.timed else None)
        errors = []
        for name in ("sizes", "Rout", "Rin", "Su", "Sd"):
            if not np.array_equal(getattr(self, name), getattr(fresh, name)):
                errors.append(f"{name} differs from rebuild")
        if self.timed and not np.array_equal(self.mult, fresh.mult):
            errors.append("mult differs from rebuild")
        for name in ("Lout", "Lin", "Lu", "Ld"):
            if not np.allclose(getattr(self, name), getattr(fresh, name), rtol=0, atol=1e-8):
                errors.append(f"{name} differs from rebuild")
        stats = (block_stats_b(self.tensor, self.node_partition(), self.time_partition())
                 if self.timed else block_stats_a(self.tensor, self.node_partition()))
        # compact relabelling follows first appearance
        zmap = _first_appearance(self.z)
        tmap = _first_appearance(self.y)
        S = self.Sd[np.ix_(zmap, zmap, tmap)]
        if not np.array_equal(S, stats.S):
            errors.append("block counts differ from block_stats")
        return errors


def _to_clusters(X, Z):
    """``out[i, g, u] = sum_j X[i, j, u] Z[j, g]``."""
    return np.ascontiguousarray((X.transpose(0, 2, 1) @ Z).transpose(0, 2, 1))


def _from_clusters(R, Z):
    """``out[k, g, u] = sum_i Z[i, k] R[i, g, u]``."""
    N, K, U = R.shape
    return (Z.T @ R.reshape(N, K * U)).reshape(Z.shape[1], K, U)


def _rint(x):
    return np.rint(x).astype(np.int64)


def _first_appearance(labels) -> np.ndarray:
    _, first = np.unique(labels, return_index=True)
    return np.asarray(labels)[np.sort(first)]


# -- passes ----------------------------------------------------------------------------

def _best(targets, deltas, current, eps):
    deltas = np.where(targets == current, -np.inf, deltas)
    j = int(np.argmax(deltas))
    if deltas[j] > eps:
        return int(targets[j]), float(deltas[j])
    return None, 0.0


def greedy_exchange_pass(state: SearchState, axis: str, rng, eps: float = 0.0) -> int:
    """One sweep over all nodes (or intervals) in a fresh random order.

    Each item moves to the cluster with the largest ICL gain when that gain
    exceeds ``eps``; ties go to the lowest slot index. Returns the move count.
    """
    moved = 0
    if axis == NODES:
        for i in rng.permutation(state.N):
            if state.K < 2:
                break
            targets, deltas = state.node_deltas(int(i))
            l, gain = _best(targets, deltas, state.z[i], eps)
            if l is not None:
                state.apply_node_move(int(i), l, gain)
                moved += 1
    elif axis == INTERVALS:
        state._require_timed()
        for u in rng.permutation(state.U):
            if state.D < 2:
                break
            targets, deltas = state.interval_deltas(int(u))
            e, gain = _best(targets, deltas, state.y[u], eps)
            if e is not None:
                state.apply_interval_move(int(u), e, gain)
                moved += 1
    else:
        raise ValueError(f"axis must be {NODES!r} or {INTERVALS!r}")
    return moved


def greedy_exchange(state: SearchState, axis: str, rng, eps: float = 0.0) -> int:
    """Repeat exchange sweeps until one accepts no move."""
    total = 0
    while True:
        n = greedy_exchange_pass(state, axis, rng, eps)
        total += n
        if n == 0:
            return total


def greedy_merge_pass(state: SearchState, axis: str, eps: float = 0.0) -> int:
    """Apply the best improving merge until none improves the ICL."""
    merged = 0
    while True:
        if axis == NODES:
            if state.K < 2:
                return merged
            slots, d = state.merge_node_deltas()
        elif axis == INTERVALS:
            if state.D < 2:
                return merged
            slots, d = state.merge_interval_deltas()
        else:
            raise ValueError(f"axis must be {NODES!r} or {INTERVALS!r}")
        a, b = np.unravel_index(int(np.argmax(d)), d.shape)
        if not d[a, b] > eps:
            return merged
        # the larger-index slot is folded into the smaller one
        if axis == NODES:
            state.apply_node_merge(int(slots[b]), int(slots[a]), float(d[a, b]))
        else:
            state.apply_interval_merge(int(slots[b]), int(slots[a]), float(d[a, b]))
        merged += 1


# -- driver ----------------------------------------------------------------------------

@dataclass
class RestartRecord:
    seed: int
    icl: float
    n_clusters: int
    n_time_clusters: int | None
    node_moves: int
    interval_moves: int
    node_merges: int
    interval_merges: int
    seconds: float
    trace: list[float] = field(repr=False, default_factory=list)


@dataclass
class FitResult:
    """Outcome of :func:`run`. ``z``/``y`` are compact 0-based partitions."""

    z: Partition
    y: Partition | None
    icl: float
    model: str
    config: SearchConfig
    restarts: list[RestartRecord]
    best_restart: int
    integrity_errors: list[str] = field(default_factory=list)

    @property
    def n_clusters(self) -> int:
        return self.z.n_clusters

    @property
    def n_time_clusters(self) -> int | None:
        return None if self.y is None else self.y.n_clusters


def _run_strategy(state: SearchState, strategy: str, rng, eps: float):
    def ge_gm(axis):
        greedy_exchange(state, axis, rng, eps)
        greedy_merge_pass(state, axis, eps)

    if strategy == "A-only":
        ge_gm(NODES)
    elif strategy == "TN":
        ge_gm(NODES)
        ge_gm(INTERVALS)
    elif strategy == "NT":
        ge_gm(INTERVALS)
        ge_gm(NODES)
    elif strategy == "M":
        while True:
            n = greedy_exchange_pass(state, NODES, rng, eps)
            n += greedy_exchange_pass(state, INTERVALS, rng, eps)
            if n == 0:
                break
        greedy_merge_pass(state, NODES, eps)
        greedy_merge_pass(state, INTERVALS, eps)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")


def fit_restart(tensor: InteractionTensor, config: SearchConfig, seed) -> tuple[SearchState, RestartRecord]:
    """One random initialisation followed by the configured strategy.

    ``config`` must already be resolved.
    """
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    z0 = rng.integers(0, config.k_max, size=tensor.n_nodes)
    y0 = None
    if config.model == "B":
        if config.time_init == "random":
            y0 = rng.integers(0, config.d_max, size=tensor.n_intervals)
        else:
            y0 = np.arange(tensor.n_intervals) * config.d_max // tensor.n_intervals
    state = SearchState(tensor, z0, config.k_max, config.priors, y=y0, d_max=config.d_max)
    _run_strategy(state, config.strategy, rng, config.epsilon)
    rec = RestartRecord(
        seed=int(seed),
        icl=state.icl,
        n_clusters=state.K,
        n_time_clusters=state.D if state.timed else None,
        node_moves=state.n_moves[NODES],
        interval_moves=state.n_moves[INTERVALS],
        node_merges=state.n_merges[NODES],
        interval_merges=state.n_merges[INTERVALS],
        seconds=time.perf_counter() - t0,
        trace=list(state.trace),
    )
    return state, rec


def _restart_job(args):
    tensor, config, seed = args
    state, rec = fit_restart(tensor, config, seed)
    return state.z, (state.y if state.timed else None), rec, state.integrity_errors(), state.recompute_icl()


def run(tensor: InteractionTensor, config: SearchConfig = SearchConfig()) -> FitResult:
    """Best of ``n_restarts`` random-start greedy searches.

    The winning partition's ICL is recomputed from scratch and its maintained
    statistics are checked against a rebuild.
    """
    cfg = config.resolved(tensor.n_nodes, tensor.n_intervals)
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(cfg.seed).spawn(cfg.n_restarts)]
    jobs = [(tensor, cfg, s) for s in seeds]
    if cfg.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.n_jobs) as pool:
            outcomes = list(pool.map(_restart_job, jobs))
    else:
        outcomes = [_restart_job(j) for j in jobs]

    records = [o[2] for o in outcomes]
    errors = []
    for r, (_, _, rec, errs, icl) in enumerate(outcomes):
        if abs(icl - rec.icl) > 1e-8 * max(1.0, abs(icl)):
            errs = errs + [f"cached ICL {rec.icl!r} != recomputed {icl!r}"]
        if np.any(np.diff(rec.trace) < 0):
            errs = errs + ["ICL trace decreases"]
        errors += [f"restart {r}: {e}" for e in errs]
    for e in errors:
        log.error("%s", e)
    best = max(range(len(records)), key=lambda r: (records[r].icl, -r))
    z, y, rec, _, icl = outcomes[best]
    log.info("best restart %d: ICL %.4f, K=%d", best, icl, rec.n_clusters)
    return FitResult(
        z=Partition.from_labels(z),
        y=Partition.from_labels(y) if y is not None else None,
        icl=icl,
        model=cfg.model,
        config=cfg,
        restarts=records,
        best_restart=best,
        integrity_errors=errors,
    )

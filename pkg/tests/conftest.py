import math
from pathlib import Path

import numpy as np
import pytest

from tsbm.core import InteractionTensor, Priors, TimeGrid

DATA = Path(__file__).parent / "data"
ACCEPTANCE_LINES = []


def random_tensor(rng, n_nodes, n_intervals, n_clusters=2, scale=1.5):
    """Small tensor with planted block structure and per-interval rates."""
    z = rng.integers(0, n_clusters, size=n_nodes)
    rates = rng.gamma(2.0, scale, size=(n_clusters, n_clusters, n_intervals))
    mean = rates[z][:, z]
    mean[np.arange(n_nodes), np.arange(n_nodes)] = 0
    return InteractionTensor(rng.poisson(mean), TimeGrid.uniform(n_intervals))


def _log_prior(labels, conc):
    _, n = np.unique(labels, return_counts=True)
    K, N = n.size, int(n.sum())
    return (math.lgamma(conc * K) - K * math.lgamma(conc)
            + sum(math.lgamma(m + conc) for m in n) - math.lgamma(N + conc * K))


def _cell(S, logP, x, p):
    return (p.a * math.log(p.b) - math.lgamma(p.a) - logP
            + math.lgamma(S + p.a) - (S + p.a) * math.log(x + p.b))


def oracle_icl(Y, z, y=None, priors=Priors()):
    """Reference ICL by explicit loops over ordered pairs."""
    Y = np.asarray(Y)
    N, _, U = Y.shape
    z = np.asarray(z)
    total = _log_prior(z, priors.alpha)
    if y is None:
        y = np.arange(U)
    else:
        y = np.asarray(y)
        total += _log_prior(y, priors.beta)
    for k in np.unique(z):
        for g in np.unique(z):
            pairs = [(i, j) for i in range(N) for j in range(N)
                     if i != j and z[i] == k and z[j] == g]
            if not pairs:
                continue
            for d in np.unique(y):
                us = np.flatnonzero(y == d)
                S = sum(int(Y[i, j, u]) for i, j in pairs for u in us)
                logP = sum(math.lgamma(Y[i, j, u] + 1) for i, j in pairs for u in us)
                total += _cell(S, logP, len(pairs) * us.size, priors)
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_state(rng, model="A", max_nodes=7, max_intervals=5):
    """Search state on a random small instance with a random starting labelling."""
    from tsbm.search import SearchState

    N = int(rng.integers(3, max_nodes + 1))
    U = int(rng.integers(2, max_intervals + 1))
    t = random_tensor(rng, N, U, int(rng.integers(1, 4)))
    k_max = int(rng.integers(2, N + 1))
    z = rng.integers(0, k_max, N)
    priors = Priors(*rng.uniform(0.3, 3.0, size=4))
    if model == "A":
        return SearchState(t, z, k_max, priors)
    d_max = int(rng.integers(2, U + 1))
    return SearchState(t, z, k_max, priors, y=rng.integers(0, d_max, U), d_max=d_max)


def check_random_proposal(state, rng):
    """Apply one random exchange or merge; return ``(kind, |delta - recomputed change|)``.

    Returns ``(kind, None)`` when the proposal is not applicable.
    """
    kinds = ["node", "node-merge"] + (["interval", "interval-merge"] if state.timed else [])
    kind = kinds[rng.integers(len(kinds))]
    before = state.recompute_icl()
    if kind == "node":
        i = int(rng.integers(state.N))
        targets = [l for l in state.active if l != state.z[i]]
        if not targets:
            return kind, None
        l = int(rng.choice(targets))
        delta = state.delta_exchange_node(i, l)
        state.apply_node_move(i, l, delta)
    elif kind == "node-merge":
        if state.K < 2:
            return kind, None
        k, l = rng.choice(state.active, 2, replace=False)
        delta = state.delta_merge_nodes(int(k), int(l))
        state.apply_node_merge(int(k), int(l), delta)
    elif kind == "interval":
        u = int(rng.integers(state.U))
        targets = [e for e in state.dactive if e != state.y[u]]
        if not targets:
            return kind, None
        e = int(rng.choice(targets))
        delta = state.delta_exchange_interval(u, e)
        state.apply_interval_move(u, e, delta)
    else:
        if state.D < 2:
            return kind, None
        d, e = rng.choice(state.dactive, 2, replace=False)
        delta = state.delta_merge_intervals(int(d), int(e))
        state.apply_interval_merge(int(d), int(e), delta)
    return kind, abs(state.recompute_icl() - before - delta)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsbm.core import (
    InteractionTensor,
    Partition,
    Priors,
    TimeGrid,
    block_stats_a,
    block_stats_b,
    build_tensor,
    log_icl_a,
    log_icl_b,
    log_lik_b,
    log_partition_prior,
    pair_counts,
)

from conftest import oracle_icl, random_tensor


def tensor_from(y12, y21):
    counts = np.zeros((2, 2, len(y12)), dtype=np.int64)
    counts[0, 1], counts[1, 0] = y12, y21
    return InteractionTensor(counts, TimeGrid.uniform(len(y12)))


# -- containers ------------------------------------------------------------------------

def test_grid_rejects_bad_breakpoints():
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 1.0, 1.0]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.5, 1.0]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0]))


def test_grid_locate_half_open_and_horizon():
    grid = TimeGrid(np.array([0.0, 1.0, 2.5]))
    np.testing.assert_array_equal(grid.locate([0.0, 0.999, 1.0, 2.4, 2.5]), [0, 0, 1, 1, 1])


def test_tensor_invariants():
    grid = TimeGrid.uniform(1)
    with pytest.raises(ValueError):
        InteractionTensor(np.ones((2, 2, 1), dtype=int), grid)  # diagonal
    with pytest.raises(ValueError):
        InteractionTensor(-np.eye(2, dtype=int)[:, ::-1, None], grid)
    with pytest.raises(ValueError):
        InteractionTensor(np.zeros((2, 2, 3), dtype=int), grid)
    t = InteractionTensor(np.zeros((2, 2, 1), dtype=int), grid)
    with pytest.raises(ValueError):
        t.counts[0, 1, 0] = 1


def test_partition_from_labels_first_appearance():
    p = Partition.from_labels(["b", "a", "b", "c"])
    np.testing.assert_array_equal(p.labels, [0, 1, 0, 2])
    np.testing.assert_array_equal(p.occupancy, [2, 1, 1])
    assert not Partition(np.array([0, 2]), 3).is_compact()
    assert Partition(np.array([2, 0])).compact() == Partition(np.array([0, 1]))


def test_priors_must_be_positive():
    with pytest.raises(ValueError):
        Priors(a=0)
    with pytest.raises(ValueError):
        Priors(beta=float("nan"))


# -- build_tensor ----------------------------------------------------------------------

def test_build_tensor_empty_and_single():
    grid = TimeGrid.uniform(2)
    assert build_tensor([], grid, 3).total == 0
    t = build_tensor([(0, 1, 0.5)], grid, 2)
    assert t.counts[0, 1, 0] == 1 and t.total == 1


def test_build_tensor_event_at_horizon_goes_last():
    t = build_tensor([(0, 1, 2.0), (1, 0, 1.0)], TimeGrid.uniform(2), 2)
    assert t.counts[0, 1, 1] == 1 and t.counts[1, 0, 1] == 1


@pytest.mark.parametrize("event, msg", [
    ((0, 5, 0.1), "event 1: node id"),
    ((0, 1, 3.0), "event 1: timestamp"),
    ((1, 1, 0.1), "event 1: self-loop"),
])
def test_build_tensor_errors_name_the_record(event, msg):
    with pytest.raises(ValueError, match=msg):
        build_tensor([(0, 1, 0.1), event], TimeGrid.uniform(2), 2)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.floats(0, 3)), max_size=40))
def test_build_tensor_conserves_events(raw):
    events = [e for e in raw if e[0] != e[1]]
    t = build_tensor(events, TimeGrid.uniform(3), 4)
    assert t.total == len(events)


# -- block statistics ------------------------------------------------------------------

def test_stats_two_nodes_one_cluster():
    st_a = block_stats_a(tensor_from([3], [2]), Partition(np.array([0, 0])))
    assert st_a.S[0, 0, 0] == 5
    assert st_a.logP[0, 0, 0] == pytest.approx(math.log(6) + math.log(2))
    assert st_a.pair_count[0, 0] == 2


def test_stats_zero_tensor():
    t = InteractionTensor(np.zeros((4, 4, 3), dtype=int), TimeGrid.uniform(3))
    s = block_stats_a(t, Partition(np.array([0, 1, 0, 1])))
    assert not s.S.any() and not s.logP.any()


def test_stats_singletons_reproduce_tensor(rng):
    t = random_tensor(rng, 5, 3)
    s = block_stats_a(t, Partition(np.arange(5)))
    np.testing.assert_array_equal(s.S, t.counts)
    np.testing.assert_array_equal(np.diag(s.pair_count), 0)


def test_pair_counts_exclude_self_pairs():
    np.testing.assert_array_equal(pair_counts([3, 2]), [[6, 6], [6, 2]])


def test_stats_b_extremes(rng):
    t = random_tensor(rng, 6, 4)
    z = Partition(np.array([0, 1, 1, 0, 2, 2]))
    a = block_stats_a(t, z)
    b_id = block_stats_b(t, z, Partition(np.arange(4)))
    np.testing.assert_array_equal(b_id.S, a.S)
    b_one = block_stats_b(t, z, Partition(np.zeros(4, dtype=int)))
    np.testing.assert_array_equal(b_one.S[:, :, 0], a.S.sum(axis=2))
    with pytest.raises(ValueError):
        block_stats_b(t, z, Partition(np.zeros(3, dtype=int)))


def test_stats_b_toy_case():
    s = block_stats_b(tensor_from([3, 1], [2, 0]), Partition(np.array([0, 0])),
                      Partition(np.array([0, 0])))
    assert s.S[0, 0, 0] == 6


# -- ICL -------------------------------------------------------------------------------

def test_icl_two_nodes_hand_value():
    z = Partition(np.array([0, 0]))
    icl = log_icl_a(block_stats_a(tensor_from([3], [2]), z), z)
    assert icl == pytest.approx(math.log(120 / 8748))
    assert round(icl, 3) == -4.289


def test_icl_zero_tensor_closed_form():
    N, U = 5, 4
    t = InteractionTensor(np.zeros((N, N, U), dtype=int), TimeGrid.uniform(U))
    z = Partition(np.zeros(N, dtype=int))
    assert log_icl_a(block_stats_a(t, z), z) == pytest.approx(-U * math.log(N * (N - 1) + 1))


def test_model_b_toy_likelihood():
    t = tensor_from([3, 1], [2, 0])
    z, y = Partition(np.array([0, 0])), Partition(np.array([0, 0]))
    lik = log_lik_b(block_stats_b(t, z, y), Priors())
    assert lik == pytest.approx(math.log(720 / (12 * 78125)))
    assert lik == pytest.approx(-7.172, abs=1e-3)
    # single clusters on both axes: priors vanish
    assert log_icl_b(block_stats_b(t, z, y), z, y) == pytest.approx(lik)


def test_single_time_cluster_prior_is_zero():
    assert log_partition_prior([7], 1.0) == pytest.approx(0.0)


def test_partition_prior_matches_direct_formula():
    n, c = np.array([3, 1, 2]), 0.7
    direct = (math.lgamma(3 * c) - 3 * math.lgamma(c) + sum(math.lgamma(m + c) for m in n)
              - math.lgamma(6 + 3 * c))
    assert log_partition_prior(n, c) == pytest.approx(direct)


@pytest.mark.parametrize("priors", [Priors(), Priors(a=0.5, b=2.0, alpha=0.3, beta=4.0)])
def test_icl_matches_loop_oracle(rng, priors):
    for _ in range(10):
        N, U = rng.integers(2, 7), rng.integers(1, 5)
        t = random_tensor(rng, N, U, 3)
        z = Partition.from_labels(rng.integers(0, 3, N))
        y = Partition.from_labels(rng.integers(0, 2, U))
        assert log_icl_a(block_stats_a(t, z), z, priors) == pytest.approx(
            oracle_icl(t.counts, z.labels, priors=priors), rel=1e-12)
        assert log_icl_b(block_stats_b(t, z, y), z, y, priors) == pytest.approx(
            oracle_icl(t.counts, z.labels, y.labels, priors), rel=1e-12)


def test_icl_rejects_mismatched_stats(rng):
    t = random_tensor(rng, 4, 2)
    s = block_stats_a(t, Partition(np.array([0, 1, 0, 1])))
    with pytest.raises(ValueError):
        log_icl_a(s, Partition(np.array([0, 1, 2, 1])))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 7), u=st.integers(1, 4))
def test_icl_invariant_under_relabelling_and_node_order(seed, n, u):
    rng = np.random.default_rng(seed)
    t = random_tensor(rng, n, u, 3)
    labels = rng.integers(0, 3, n)
    z = Partition.from_labels(labels)
    base = log_icl_a(block_stats_a(t, z), z)

    relabel = rng.permutation(3)
    z2 = Partition.from_labels(relabel[labels])
    assert log_icl_a(block_stats_a(t, z2), z2) == pytest.approx(base, rel=1e-12)

    perm = rng.permutation(n)
    t3 = InteractionTensor(t.counts[perm][:, perm], t.grid)
    z3 = Partition.from_labels(labels[perm])
    assert log_icl_a(block_stats_a(t3, z3), z3) == pytest.approx(base, rel=1e-12)

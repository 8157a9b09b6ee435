import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.metrics import adjusted_rand_score

from tsbm.core import InteractionTensor, Priors, TimeGrid
from tsbm.evaluation import adjusted_rand_index, contingency_table, exhaustive_icl_optimum, set_partitions
from tsbm.search import SearchConfig, run

from conftest import oracle_icl, random_tensor

labels = st.lists(st.integers(0, 4), min_size=2, max_size=30)


def test_identical_and_switched():
    assert adjusted_rand_index([1, 1, 2, 2], [1, 1, 2, 2]) == 1.0
    assert adjusted_rand_index([1, 1, 2, 2], [2, 2, 1, 1]) == 1.0


def test_hand_computed_value():
    # cells 2,1,1,2 -> 2 agreeing pairs; rows 3,3 -> 6; cols 2,2,2 -> 3; 15 pairs
    assert adjusted_rand_index([1, 1, 1, 2, 2, 2], [1, 1, 2, 2, 3, 3]) == pytest.approx(8 / 33)


def test_can_be_negative():
    assert adjusted_rand_index([0, 0, 1, 1], [0, 1, 0, 1]) < 0


def test_length_mismatch():
    with pytest.raises(ValueError):
        adjusted_rand_index([0, 1], [0, 1, 1])


def test_contingency_table():
    np.testing.assert_array_equal(contingency_table([0, 0, 1], [5, 6, 6]), [[1, 1], [0, 1]])


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_matches_sklearn_and_is_symmetric(data):
    p1 = data.draw(labels)
    p2 = data.draw(st.lists(st.integers(0, 4), min_size=len(p1), max_size=len(p1)))
    ari = adjusted_rand_index(p1, p2)
    assert ari == pytest.approx(adjusted_rand_score(p1, p2), abs=1e-12)
    assert ari == pytest.approx(adjusted_rand_index(p2, p1), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(labels, st.permutations(range(5)))
def test_relabelling_invariance(p, perm):
    p = np.array(p)
    assert adjusted_rand_index(p, np.array(perm)[p]) == 1.0


@pytest.mark.parametrize("n, bell", [(1, 1), (2, 2), (3, 5), (4, 15), (6, 203)])
def test_set_partitions_bell_numbers(n, bell):
    parts = list(set_partitions(n))
    assert len(parts) == bell
    assert len({p.tobytes() for p in parts}) == bell


def test_set_partitions_block_limit():
    assert len(list(set_partitions(4, 2))) == 8


def test_exhaustive_guards(rng):
    with pytest.raises(ValueError):
        exhaustive_icl_optimum(random_tensor(rng, 9, 1))
    with pytest.raises(ValueError):
        exhaustive_icl_optimum(random_tensor(rng, 3, 6), model="B")


def test_exhaustive_two_nodes(rng):
    t = random_tensor(rng, 2, 2)
    res = exhaustive_icl_optimum(t)
    assert res.n_evaluated == 2
    best = max(oracle_icl(t.counts, z) for z in ([0, 0], [0, 1]))
    assert res.icl == pytest.approx(best)


def test_exhaustive_model_b_matches_oracle(rng):
    t = random_tensor(rng, 4, 3)
    res = exhaustive_icl_optimum(t, Priors(), model="B")
    assert res.icl == pytest.approx(oracle_icl(t.counts, res.z.labels, res.y.labels))


def test_greedy_matches_exhaustive_on_separable_data():
    counts = np.zeros((6, 6, 2), dtype=int)
    for block in ([0, 1, 2], [3, 4, 5]):
        for i in block:
            for j in block:
                if i != j:
                    counts[i, j] = 8
    t = InteractionTensor(counts, TimeGrid.uniform(2))
    res = run(t, SearchConfig(n_restarts=5, k_max=3))
    assert res.icl == pytest.approx(exhaustive_icl_optimum(t, k_max=3).icl)
    assert adjusted_rand_index(res.z.labels, [0, 0, 0, 1, 1, 1]) == 1.0

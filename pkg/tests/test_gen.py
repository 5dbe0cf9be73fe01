import numpy as np
import pytest

from simulcsp.core import value
from simulcsp.errors import InputError
from simulcsp.formats import dumps, multi_to_dict
from simulcsp.gen import gap_k_partition, gap_three_cycle, max1sat_geometric, random_generic, random_planted
from simulcsp.verify import brute_force_opt_min, brute_force_pareto


@pytest.mark.parametrize("kind,q,w", [("cut", 2, 2), ("sat", 2, 3), ("conj", 3, 2)])
def test_planted_invariants(kind, q, w):
    b = random_planted(kind, 15, 3, q=q, w=w, m_per_instance=20, seed=2)
    for W, c in zip(b.multi.instances, b.multi.targets):
        assert W.is_normalized
        assert value(b.witness, W) == pytest.approx(c, abs=1e-12)
        if kind != "cut":
            assert all(len(C.variables) == w for C in W.constraints)


def test_planted_bias_extremes():
    b = random_planted("sat", 12, 2, m_per_instance=15, bias=1.0, seed=0)
    assert np.allclose(b.multi.targets, 1.0)
    b0 = random_planted("conj", 12, 2, m_per_instance=15, bias=0.0, seed=0)
    assert all(value(b0.witness, W) == pytest.approx(c) for W, c in zip(b0.multi.instances, b0.multi.targets))


def test_planted_deterministic():
    a = random_planted("conj", 12, 2, q=3, m_per_instance=10, seed=5, weights="power")
    b = random_planted("conj", 12, 2, q=3, m_per_instance=10, seed=5, weights="power")
    assert dumps(multi_to_dict(a.multi, witness=a.witness)) == dumps(multi_to_dict(b.multi, witness=b.witness))


def test_planted_validation():
    with pytest.raises(InputError):
        random_planted("xor", 10, 1)
    with pytest.raises(InputError):
        random_planted("cut", 10, 1, bias=1.5)
    with pytest.raises(InputError):
        random_planted("cut", 10, 1, weights="gauss")


def test_three_cycle():
    multi = gap_three_cycle(0.01)
    opt = brute_force_opt_min(multi)
    assert opt <= 0.02
    # each instance alone: cut the heavy edge
    for W in multi.instances:
        assert brute_force_opt_min([W]) >= 0.99 - 1e-12
    assert brute_force_opt_min(gap_three_cycle(1e-6)) <= 2e-6
    with pytest.raises(InputError):
        gap_three_cycle(0.5)


@pytest.mark.parametrize("k,s", [(3, 2), (3, 4), (5, 2), (7, 2)])
def test_k_partition_opt_half(k, s):
    multi = gap_k_partition(k, s)
    assert multi.n == k * s
    assert all(W.is_normalized for W in multi.instances)
    assert brute_force_opt_min(multi) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("k,s,opt", [(3, 1, 0.0), (5, 1, 0.0), (3, 3, 4 / 9)])
def test_k_partition_odd_parts(k, s, opt):
    # odd part sizes cannot be split evenly: s=1 is a plain odd cycle
    assert brute_force_opt_min(gap_k_partition(k, s)) == pytest.approx(opt, abs=1e-12)


def test_k_partition_alternating_halves():
    k, s = 5, 2
    multi = gap_k_partition(k, s)
    # each part split in half: every bipartite instance is cut exactly half
    f = np.array([j % 2 for _ in range(k) for j in range(s)])
    for W in multi.instances:
        assert value(f, W) == pytest.approx(0.5)
    with pytest.raises(InputError):
        gap_k_partition(4, 2)


def test_max1sat_geometric():
    multi = max1sat_geometric(2)
    assert np.allclose(sorted(multi.instances[0].weights, reverse=True), np.array([9, 3, 1]) / 13)
    ones = np.ones(3, dtype=np.int64)
    assert value(ones, multi.instances[1]) == 0.0
    res = brute_force_pareto(max1sat_geometric(4))
    assert res.best_assignment.tolist() == [1, 1, 1, 1, 0]
    smallest = multi.instances[1].weights.min()
    f = np.array([1, 1, 0])
    assert value(f, multi.instances[1]) == pytest.approx(smallest)
    assert value(f, multi.instances[0]) == pytest.approx(1 - smallest)


def test_random_generic_shape():
    instances, targets, f = random_generic(6, 2, q=3, w=3, m_per_instance=4, seed=0)
    assert len(instances) == 2 and len(targets) == 2
    for G, c in zip(instances, targets):
        assert G.total_weight == pytest.approx(1.0)
        assert G.value(f) == pytest.approx(c)
        assert all(1 <= C.arity <= 3 for C in G.constraints)

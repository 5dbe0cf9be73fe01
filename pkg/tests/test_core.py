import numpy as np
import pytest
from hypothesis import given

from simulcsp.core import (
    Clause,
    Cut,
    Instance,
    MultiInstance,
    PartialAssignment,
    Term,
    active_degree,
    active_degree_set,
    active_degree_total,
    active_mask,
    evaluate_constraint,
    fixed_value,
    is_active,
    normalize,
    ratios,
    shares_active_variable,
    val_partial,
    value,
)
from simulcsp.enumeration import assignments
from simulcsp.errors import InputError

from .conftest import instance_and_rho, instances


def star():
    return Instance("cut", 5, [(Cut(0, i), 0.25) for i in range(1, 5)])


# ---------------------------------------------------------------- constraints

def test_cut_canonical_and_distinct():
    assert Cut(3, 1) == Cut(1, 3)
    with pytest.raises(InputError):
        Cut(2, 2)


def test_clause_and_term_canonical():
    assert Clause(((2, True), (0, False))) == Clause(((0, False), (2, True)))
    assert Term({1: 0, 0: 1}) == Term(((0, 1), (1, 0)))
    with pytest.raises(InputError):
        Clause(((0, True), (0, False)))
    with pytest.raises(InputError):
        Term({})


def test_evaluate_constraint_semantics():
    assert evaluate_constraint(Cut(0, 1), [0, 1]) == 1
    assert evaluate_constraint(Cut(0, 1), [1, 1]) == 0
    assert evaluate_constraint(Clause(((0, True), (1, False))), [0, 1]) == 0
    assert evaluate_constraint(Clause(((0, True), (1, False))), [0, 0]) == 1
    # x and not y as a Boolean term
    t = Term({0: 1, 1: 0})
    for a in range(2):
        for b in range(2):
            assert evaluate_constraint(t, [a, b]) == int(a == 1 and b == 0)


def test_instance_validation():
    with pytest.raises(InputError):
        Instance("cut", 2, [(Cut(0, 2), 1.0)])
    with pytest.raises(InputError):
        Instance("sat", 2, [(Clause(((0, True),)), -1.0)])
    with pytest.raises(InputError):
        Instance("conj", 2, [(Term({0: 3}), 1.0)], q=3)
    with pytest.raises(InputError):
        Instance("sat", 3, [(Clause(((0, True), (1, True), (2, True))), 1.0)], w=2)
    with pytest.raises(InputError):
        Instance("bogus", 2, [])


def test_duplicates_merge():
    W = Instance("cut", 2, [(Cut(0, 1), 1.0), (Cut(1, 0), 2.0)])
    assert W.weight_map() == {Cut(0, 1): 3.0}


def test_normalize_examples():
    C1, C2 = Cut(0, 1), Cut(1, 2)
    assert normalize(Instance("cut", 3, [(C1, 2.0)])).weight_map() == {C1: 1.0}
    wm = normalize(Instance("cut", 3, [(C1, 1.0), (C2, 3.0)])).weight_map()
    assert wm[C1] == pytest.approx(0.25) and wm[C2] == pytest.approx(0.75)
    with pytest.raises(InputError):
        normalize(Instance("cut", 3, [(C1, 0.0)]))


@given(instances())
def test_normalize_idempotent(W):
    again = normalize(W)
    assert np.allclose(again.weights, W.weights, atol=1e-12)


# ------------------------------------------------------------------- values

def test_value_simple():
    W = Instance("cut", 3, [(Cut(0, 1), 0.5), (Cut(1, 2), 0.5)])
    assert value([0, 1, 0], W) == 1.0
    assert value([0, 0, 1], W) == 0.5
    with pytest.raises(InputError):
        value([0, 1], W)


def test_ratios_zero_target_is_inf():
    r = ratios([0.5, 0.2], [1.0, 0.0])
    assert r[0] == 0.5 and np.isinf(r[1])


def test_multi_values_match_single(rng):
    W1 = Instance("sat", 4, [(Clause(((0, True), (1, False))), 0.7), (Clause(((2, True),)), 0.3)])
    W2 = Instance("sat", 4, [(Clause(((3, True),)), 1.0)])
    multi = MultiInstance([W1, W2], [1.0, 1.0])
    X = assignments(2, 4)
    V = multi.values(X)
    for f, row in zip(X, V):
        assert row[0] == pytest.approx(value(f, W1))
        assert row[1] == pytest.approx(value(f, W2))


def test_multi_validation():
    W = Instance("cut", 3, [(Cut(0, 1), 1.0)])
    with pytest.raises(InputError):
        MultiInstance([W], [1.0, 1.0])
    with pytest.raises(InputError):
        MultiInstance([W, Instance("cut", 4, [(Cut(0, 1), 1.0)])], [1.0, 1.0])
    with pytest.raises(InputError):
        MultiInstance([W], [-1.0])


# ------------------------------------------------------------ activity rules

def test_activity_examples():
    rho = PartialAssignment({0: 1})
    assert is_active(Cut(0, 1), rho)
    assert not is_active(Cut(0, 1), PartialAssignment({0: 1, 1: 0}))
    assert fixed_value(Cut(0, 1), PartialAssignment({0: 1, 1: 0})) == 1
    # a term contradicted by rho is inactive with value 0
    t = Term({0: 0, 1: 1})
    assert not is_active(t, rho)
    assert fixed_value(t, rho) == 0
    assert is_active(Term({0: 1, 1: 1}), rho)


def test_active_degree_examples():
    W = Instance("cut", 2, [(Cut(0, 1), 1.0)])
    assert active_degree(0, set(), W) == 1.0
    assert active_degree(0, set(), star()) == 1.0
    assert active_degree(1, set(), star()) == 0.25
    assert active_degree(1, {0}, star()) == 0.25
    with pytest.raises(InputError):
        active_degree(0, {0}, star())


def test_active_degree_set_examples():
    T = Instance("conj", 2, [(Term({0: 1, 1: 0}), 1.0)])
    assert active_degree_set({0, 1}, PartialAssignment(), T) == 1.0
    assert active_degree_set({0}, set(), star()) == active_degree(0, set(), star())
    W = Instance("cut", 4, [(Cut(0, 1), 0.5), (Cut(2, 3), 0.5)])
    assert active_degree_set({0, 1, 2}, set(), W) == 0.0
    with pytest.raises(InputError):
        active_degree_set(set(), set(), W)


def test_active_degree_total_examples():
    assert active_degree_total(set(), star()) == pytest.approx(2.0)
    assert active_degree_total(set(range(5)), star()) == 0.0
    W = Instance("conj", 4, [(Term({0: 1, 1: 0}), 0.5), (Term({2: 1, 3: 1}), 0.5)])
    assert active_degree_total(PartialAssignment(), W) == pytest.approx(2.0)


def test_shares_active_variable_examples():
    assert shares_active_variable(Cut(0, 1), Cut(0, 1), set())
    assert not shares_active_variable(Cut(0, 1), Cut(2, 3), set())
    assert not shares_active_variable(Cut(0, 1), Cut(1, 2), {1})


@given(instance_and_rho())
def test_key_identity(data):
    """value(rho u g) - val_partial(rho) = active contribution, for every completion g."""
    W, rho = data
    hv = rho.as_array(W.n)
    free = np.nonzero(hv < 0)[0]
    act = active_mask(rho, W)
    G = assignments(W.q, len(free))
    X = np.tile(hv, (len(G), 1))
    X[:, free] = G
    sat = W.arrays.satisfied(X)
    lhs = sat.astype(float) @ W.weights - val_partial(rho, W)
    rhs = (sat & act).astype(float) @ W.weights
    assert np.allclose(lhs, rhs, atol=1e-9)


@given(instance_and_rho(kinds=("cut", "sat")))
def test_active_degree_total_monotone(data):
    W, rho = data
    S = list(rho.S)
    totals = [active_degree_total(S[:i], W) for i in range(len(S) + 1)]
    assert all(a >= b - 1e-12 for a, b in zip(totals, totals[1:]))


@given(instances(kinds=("cut",)))
def test_cut_total_degree_twice_weight(W):
    assert active_degree_total(set(), W) == pytest.approx(2 * W.total_weight)


@given(instance_and_rho())
def test_total_degree_bounded_by_w_times_active_weight(data):
    W, rho = data
    act = active_mask(rho, W)
    assert active_degree_total(rho, W) <= W.w * W.weights[act].sum() + 1e-12


@given(instance_and_rho(kinds=("cut", "sat")))
def test_shares_symmetric_and_active(data):
    W, rho = data
    S = set(rho.S)
    for C1 in W.constraints:
        for C2 in W.constraints:
            s = shares_active_variable(C1, C2, S)
            assert s == shares_active_variable(C2, C1, S)
            if s:
                assert is_active(C1, rho) and is_active(C2, rho)

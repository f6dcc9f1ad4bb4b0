import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symref import expr as ex
from symref.instances import signed_pairs_example
from symref.model import (Constraint, Minlp, SignedPermutation, Variable, all_signed_permutations,
                          apply_reflection, compose, compute_centers, enumerate_symmetries_bruteforce,
                          formulation_invariant, is_symmetry_oracle, preimage_arrays, variable_type)


@st.composite
def signed_perms(draw, n=None):
    n = draw(st.integers(1, 7)) if n is None else n
    perm = draw(st.permutations(range(1, n + 1)))
    signs = draw(st.lists(st.sampled_from([1, -1]), min_size=n, max_size=n))
    return SignedPermutation([s * v for s, v in zip(signs, perm)])


def test_from_cycles_adds_mirror_cycle():
    g = SignedPermutation.from_cycles("(1,-2)", 4)
    assert g.images == (-2, -1, 3, 4)
    assert g(-1) == 2
    assert g.cycle_notation() == "(1,-2)(2,-1)"


def test_cycle_notation_round_trip():
    for text in ["(1,-2)(2,-1)", "(3,-4)(4,-3)", "(1,2)(3,-3)", "(1,-1)(2,-2)"]:
        g = SignedPermutation.from_cycles(text, 4)
        assert SignedPermutation.from_cycles(g.cycle_notation(), 4) == g


def test_rejects_non_bijection():
    with pytest.raises(ValueError):
        SignedPermutation([1, 1])
    with pytest.raises(ValueError):
        SignedPermutation([1, 3])


def test_identity_and_support():
    e = SignedPermutation.identity(3)
    assert e.is_identity() and e.is_unsigned() and not e.support()
    g = SignedPermutation([1, -2, 3])
    assert not g.is_unsigned()
    assert g.support() == {2}


def test_compose_applies_first_argument_last():
    g1 = SignedPermutation([2, 1, 3])
    g2 = SignedPermutation([-1, 2, 3])
    h = compose(g2, g1)
    # h(1) = g2(g1(1)) = g2(2) = 2 ; h(2) = g2(1) = -1
    assert h.images == (2, -1, 3)
    assert g2 * g1 == h


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_inverse(data):
    g = data.draw(signed_perms())
    assert (g * g.inverse()).is_identity()
    assert (g.inverse() * g).is_identity()


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_action_is_a_group_action(data):
    n = data.draw(st.integers(1, 6))
    g1 = data.draw(signed_perms(n))
    g2 = data.draw(signed_perms(n))
    x = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=n, max_size=n)))
    xi = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=n, max_size=n)))
    lhs = apply_reflection(x, compose(g2, g1), xi)
    rhs = apply_reflection(apply_reflection(x, g1, xi), g2, xi)
    assert np.allclose(lhs, rhs, atol=1e-12)
    assert np.allclose(apply_reflection(x, SignedPermutation.identity(n), xi), x, atol=0)


def test_reflection_formula_single_coordinate():
    g = SignedPermutation.from_cycles("(1,-2)", 2)
    xi = np.array([0.5, 1.5])
    x = np.array([0.0, 2.0])
    # rho_1 = xi_1 + sign * (x_2 - xi_2) with gamma^-1(1) = -2
    y = apply_reflection(x, g, xi)
    assert y[0] == pytest.approx(0.5 - (2.0 - 1.5))
    assert y[1] == pytest.approx(1.5 - (0.0 - 0.5))


def test_preimage_arrays_match_action():
    g = SignedPermutation([3, -1, 2])
    src, sgn = preimage_arrays(g)
    x = np.array([1.0, 2.0, 3.0])
    y = apply_reflection(x, g, np.zeros(3))
    assert np.allclose(y, sgn * x[src])


def test_centers_and_types():
    p = signed_pairs_example()
    c = compute_centers(p)
    assert list(c.centers) == [0.0, 0.0, 2.0, -1.0]
    t3, t4 = variable_type(p, 3, c), variable_type(p, 4, c)
    assert t3.close(t4)
    assert variable_type(p, 1, c).close(t3)   # all four have width 2 about their center
    assert variable_type(p, -3, c).close(t3)


def test_infinite_bounds_give_zero_center():
    v = (Variable(1, -math.inf, 3.0), Variable(2, 0.0, 2.0))
    p = Minlp(v, (Constraint(ex.Sum(ex.Var(1), ex.Var(2)), "le", 1.0),))
    c = compute_centers(p)
    assert c.centers[0] == 0.0 and c.centers[1] == 1.0
    assert 1 not in c.centered_set


def test_constraint_sides_and_violation():
    c = Constraint(ex.Sum(ex.Var(1), ex.Var(2)), "le", 1.0)
    assert c.sides == (-math.inf, 1.0)
    assert c.violation([1.0, 1.0]) == pytest.approx(1.0)
    assert c.violation([0.0, 1.0]) == 0.0
    with pytest.raises(ValueError):
        Constraint(ex.Var(1), "lt", 0.0)


def test_model_rejects_unknown_variable():
    with pytest.raises(ValueError):
        Minlp((Variable(1, 0, 1),), (Constraint(ex.Var(2), "le", 1.0),))


def test_pairs_symmetry_oracle():
    p = signed_pairs_example()
    g1 = SignedPermutation.from_cycles("(1,-2)", 4)
    g2 = SignedPermutation.from_cycles("(3,-4)", 4)
    bad = SignedPermutation.from_cycles("(1,2)", 4)
    assert is_symmetry_oracle(p, g1) and is_symmetry_oracle(p, g2)
    assert is_symmetry_oracle(p, g1 * g2)
    assert not is_symmetry_oracle(p, bad)
    assert formulation_invariant(p, g1) and not formulation_invariant(p, bad)


def test_bruteforce_enumeration_pairs():
    group = set(enumerate_symmetries_bruteforce(signed_pairs_example()))
    assert len(group) == 4
    assert SignedPermutation.from_cycles("(1,-2)(3,-4)", 4) in group


def test_bruteforce_size_guard():
    v = tuple(Variable(i, 0, 1) for i in range(1, 8))
    with pytest.raises(ValueError):
        enumerate_symmetries_bruteforce(Minlp(v), max_n=6)


def test_all_signed_permutations_count():
    assert sum(1 for _ in all_signed_permutations(3)) == 2 ** 3 * 6

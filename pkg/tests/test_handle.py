import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symref.auto import detect_symmetries
from symref.groups import analyze_group, closure
from symref.handle import (BoundsBox, HandlerPlan, LexReduce, RestrictDomain, SortRows,
                           StaticInequality, build_plan, column_centers, compile_plan,
                           emit_simple_reflection_cut, halving_schedule, lex_reduce,
                           plan_conflicts, plan_reflection_restrictions, plan_row_column_sorting,
                           reflection_blocks, sort_rows_static)
from symref.instances import signed_pairs_example, gen_kissing, gen_maxcut, gen_packing
from symref.model import SignedPermutation, apply_reflection, compute_centers

from _oracles import action_holds, every_orbit_survives, grid_generators

S = SignedPermutation.from_cycles


def lex_ge(a, b):
    return tuple(a) >= tuple(b)


def test_single_binary_reflection():
    out = lex_reduce(S("(1,-1)", 1), [0.5], BoundsBox([0.0], [1.0]), integral=[True])
    assert out.lower[0] == 1.0 and out.upper[0] == 1.0


def test_identity_leaves_box():
    box = BoundsBox([0.0, -1.0], [1.0, 2.0])
    assert lex_reduce(SignedPermutation.identity(2), [0.0, 0.0], box) == box


def test_swap_with_first_fixed_to_zero():
    out = lex_reduce(S("(1,2)", 2), [0.5, 0.5], BoundsBox([0.0, 0.0], [0.0, 1.0]), integral=[True, True])
    assert out.upper[1] == 0.0


def test_infeasible_marker():
    # x1 = 0, x2 = 1 violates x >=lex (x2, x1)
    assert lex_reduce(S("(1,2)", 2), [0.5, 0.5], BoundsBox([0.0, 1.0], [0.0, 1.0])) is None


@st.composite
def gammas(draw, kmax=5):
    k = draw(st.integers(1, kmax))
    perm = draw(st.permutations(range(1, k + 1)))
    signs = draw(st.lists(st.sampled_from([1, -1]), min_size=k, max_size=k))
    return SignedPermutation([s * v for s, v in zip(signs, perm)])


def box_from_fixings(fix):
    lo = [0.0 if f == 2 else float(f) for f in fix]
    hi = [1.0 if f == 2 else float(f) for f in fix]
    return BoundsBox(lo, hi)


def check_gamma(gamma):
    k = gamma.n
    xi = np.full(k, 0.5)
    integral = np.ones(k, dtype=bool)
    group = closure([gamma], k)
    pts = [np.array(x, float) for x in itertools.product((0.0, 1.0), repeat=k)]
    reps = [x for x in pts if all(lex_ge(x, apply_reflection(x, g, xi)) for g in group)]
    for fix in itertools.product((0, 1, 2), repeat=k):
        box = box_from_fixings(fix)
        out = lex_reduce(gamma, xi, box, integral)
        inside = [x for x in reps if np.all(x >= box.lower) and np.all(x <= box.upper)]
        if out is None:
            assert not inside
            continue
        assert box.contains(out)
        for x in inside:
            assert np.all(x >= out.lower - 1e-12) and np.all(x <= out.upper + 1e-12)
        again = lex_reduce(gamma, xi, out, integral)
        assert again == out


@settings(max_examples=60, deadline=None)
@given(gammas())
def test_lex_reduce_keeps_orbit_maxima(gamma):
    check_gamma(gamma)


@settings(max_examples=100, deadline=None)
@given(gammas(4), st.data())
def test_lex_reduce_on_continuous_boxes(gamma, data):
    k = gamma.n
    xi = np.array(data.draw(st.lists(st.sampled_from([0.0, 0.5, 1.0]), min_size=k, max_size=k)))
    # centred boxes so that the reflections map the box onto itself
    rad = data.draw(st.sampled_from([1.0, 2.0]))
    lo = xi - rad
    hi = xi + rad
    for j in range(k):
        if data.draw(st.booleans()):
            lo[j] = hi[j] = xi[j] + data.draw(st.sampled_from([-rad, 0.0, rad]))
    box = BoundsBox(lo, hi)
    out = lex_reduce(gamma, xi, box)
    grid = [xi + rad * np.array(s) for s in itertools.product((-1.0, -0.5, 0.0, 0.5, 1.0), repeat=k)]
    for x in grid:
        if not (np.all(x >= lo) and np.all(x <= hi)):
            continue
        if lex_ge(x, apply_reflection(x, gamma, xi)):
            assert out is not None
            assert np.all(x >= out.lower - 1e-9) and np.all(x <= out.upper + 1e-9)
    if out is not None:
        assert box.contains(out)
        assert lex_reduce(gamma, xi, out) == out


def test_sort_rows_two_by_one():
    out = sort_rows_static([(1,), (2,)], BoundsBox([0.0, 0.5], [0.3, 1.0]), [0.5, 0.5])
    assert out is None
    out = sort_rows_static([(1,), (2,)], BoundsBox([0.0, 0.0], [0.3, 1.0]), [0.5, 0.5])
    assert out.upper[1] == pytest.approx(0.3)


def test_sort_rows_keeps_sorted_representatives():
    block = [(1, 2), (3, 4), (5, 6)]
    xi = np.full(6, 0.5)
    for fix in itertools.product((0, 1, 2), repeat=6):
        box = box_from_fixings(fix)
        out = sort_rows_static(block, box, xi, np.ones(6, bool))
        for x in itertools.product((0.0, 1.0), repeat=6):
            rows = [x[0:2], x[2:4], x[4:6]]
            inside = all(box.lower[i] <= x[i] <= box.upper[i] for i in range(6))
            if inside and rows[0] >= rows[1] >= rows[2]:
                assert out is not None and all(out.lower[i] <= x[i] <= out.upper[i] for i in range(6))


def test_sorted_fixed_matrix_unchanged():
    box = BoundsBox([1, 0, 0, 1], [1, 0, 0, 1])
    assert sort_rows_static([(1, 2), (3, 4)], box, np.zeros(4)) == box


def test_halving_schedule_and_blocks():
    assert halving_schedule(10, 2) == [10, 5, 3]
    assert reflection_blocks(10, 2) == [(5, 10), (3, 5), (0, 3)]
    M = [[2 * i + 1, 2 * i + 2] for i in range(10)]
    plan = plan_reflection_restrictions(M, np.zeros(20))
    restr = [a for a in plan.actions if isinstance(a, RestrictDomain)]
    assert len(restr) == 5 + 3
    assert {a.var for a in restr} == {M[i][0] for i in range(5)} | {M[i][1] for i in range(3)}
    blocks = [a.block for a in plan.actions if isinstance(a, SortRows)]
    assert [len(b) for b in blocks] == [5, 2, 3]


def test_single_row_reflection_plan():
    plan = plan_reflection_restrictions([[1, 2]], [0.0, 0.0])
    assert [type(a) for a in plan.actions] == [RestrictDomain, RestrictDomain]


def test_non_uniform_column_centers():
    with pytest.raises(ValueError):
        column_centers([[1], [2]], [0.0, 1.0])


def test_row_column_plan_counts():
    plan = plan_row_column_sorting([[1, 2], [3, 4]])
    kinds = [type(a).__name__ for a in plan.actions]
    assert kinds.count("SortRows") == 2 and kinds.count("StaticInequality") == 2
    props = compile_plan(plan, np.zeros(4), np.zeros(4, bool), 4)[2]
    assert len(props) == 2


def grid_group(p, q, cols, colrefl):
    gens, M = grid_generators(p, q, rows=True, cols=cols, colrefl=colrefl)
    return closure(gens, p * q), M


@pytest.mark.parametrize("p,q", [(3, 2), (4, 2)])
def test_reflection_plan_keeps_a_representative(p, q):
    group, M = grid_group(p, q, cols=False, colrefl=True)
    n = p * q
    for block_ineq in (False, True):
        plan = plan_reflection_restrictions(M, np.zeros(n), block_inequalities=block_ineq)
        assert every_orbit_survives(plan.actions, group, n, values=(-1.0, 0.0, 1.0))
        plan = plan_reflection_restrictions(M, np.full(n, 0.5), block_inequalities=block_ineq)
        assert every_orbit_survives(plan.actions, group, n, values=(0.0, 1.0), xi=np.full(n, 0.5))


def test_row_column_plan_keeps_a_representative():
    group, M = grid_group(3, 2, cols=True, colrefl=False)
    plan = plan_row_column_sorting(M)
    assert every_orbit_survives(plan.actions, group, 6, values=(0.0, 1.0))


@pytest.mark.parametrize("setting", ["sym1", "sym2", "sym3", "sym4", "sym5", "sym6", "auto"])
@pytest.mark.parametrize("p,q,cols", [(2, 2, False), (3, 2, False), (3, 2, True), (4, 2, True)])
def test_settings_are_valid_on_grids(setting, p, q, cols):
    gens, M = grid_generators(p, q, rows=True, cols=cols, colrefl=True)
    n = p * q
    rep = analyze_group(gens, n)
    plan = build_plan(rep, setting, np.zeros(n))
    group = closure(gens, n)
    assert every_orbit_survives(plan.actions, group, n, values=(-1.0, 0.0, 1.0))


def test_sym3_on_packing():
    p = gen_packing(3, 2)
    rep = analyze_group(detect_symmetries(p, enhanced=True).generators, p.n)
    plan = build_plan(rep, "sym3", compute_centers(p))
    text = [a.describe() for a in plan.actions]
    assert text == ["ineq + 1 x1 - 1 x2 >= 0", "restrict x1 >= 0", "restrict x2 >= 0",
                    "ineq + 1 x1 - 1 x3 >= 0", "ineq + 1 x3 - 1 x5 >= 0"]


def test_sym0_is_empty_and_unknown_setting_fails():
    rep = analyze_group(detect_symmetries(signed_pairs_example(), enhanced=True).generators, 4)
    assert build_plan(rep, "sym0", np.zeros(4)).actions == []
    assert build_plan(rep, "sym0", np.zeros(4)).to_text() == "plan sym0: no actions"
    with pytest.raises(ValueError):
        build_plan(rep, "sym9", np.zeros(4))


def test_pairs_auto_plan():
    p = signed_pairs_example()
    rep = analyze_group(detect_symmetries(p, enhanced=True).generators, 4)
    plan = build_plan(rep, "auto", compute_centers(p))
    assert [type(a) for a in plan.actions] == [LexReduce, LexReduce]
    assert {a.factor for a in plan.actions} == {0, 1}


def test_auto_picks_reflection_plan_for_packing():
    p = gen_kissing(3, 2)
    rep = analyze_group(detect_symmetries(p, enhanced=True).generators, p.n)
    plan = build_plan(rep, "auto", compute_centers(p))
    assert any(isinstance(a, RestrictDomain) for a in plan.actions)
    assert plan_conflicts(plan) == []


def test_auto_row_rules():
    # two rows without reflections: a single lexicographic reduction
    gens, M = grid_generators(2, 3, rows=True, cols=False)
    plan = build_plan(analyze_group(gens, 6), "auto", np.zeros(6))
    assert len(plan.actions) == 1 and isinstance(plan.actions[0], LexReduce)
    assert plan.actions[0].order == (1, 2, 3, 4, 5, 6)
    # one column: ordering inequalities
    gens, M = grid_generators(4, 1, rows=True, cols=False)
    plan = build_plan(analyze_group(gens, 4), "auto", np.zeros(4))
    assert all(isinstance(a, StaticInequality) for a in plan.actions) and len(plan.actions) == 3
    # more rows: row sorting
    gens, M = grid_generators(3, 2, rows=True, cols=False)
    plan = build_plan(analyze_group(gens, 6), "auto", np.zeros(6))
    assert [type(a) for a in plan.actions] == [SortRows]


def test_simple_reflection_cut():
    cut = emit_simple_reflection_cut([1, 2, 3, 4], np.full(4, 0.5))
    assert cut.coefs == ((1, 1.0), (2, 1.0), (3, 1.0), (4, 1.0)) and cut.rhs == 2.0
    single = emit_simple_reflection_cut([1], [0.0])
    assert single.rhs == 0.0 and single.sense == "ge"


def test_e1_witness():
    """The aggregated cut and lexicographic reduction for the full reflection
    can remove a whole orbit when combined."""
    n = 3
    xi = np.full(n, 0.5)
    gstar = SignedPermutation([-1, -2, -3])
    cut = emit_simple_reflection_cut(range(1, n + 1), xi)
    lex = LexReduce(gstar)
    e1 = np.array([1.0, 0.0, 0.0])
    assert action_holds(lex, e1, xi) and not cut.satisfied(e1)
    orbit = [e1, apply_reflection(e1, gstar, xi)]
    assert not any(action_holds(lex, x, xi) and cut.satisfied(x) for x in orbit)
    # each technique alone keeps a representative
    assert any(action_holds(lex, x, xi) for x in orbit)
    assert any(cut.satisfied(x) for x in orbit)


def test_plans_never_mix_the_cut_with_lex():
    p = gen_maxcut("K3")
    rep = analyze_group(detect_symmetries(p, enhanced=True).generators, p.n)
    for setting in ("sym1", "sym3", "sym6", "auto"):
        for simple in (False, True):
            plan = build_plan(rep, setting, compute_centers(p), simple_reflection=simple)
            assert plan_conflicts(plan) == []
    bad = HandlerPlan([emit_simple_reflection_cut([1, 2, 3], np.full(3, 0.5)),
                       LexReduce(SignedPermutation([2, 1, 3]))], "auto")
    assert plan_conflicts(bad) == [0]


def test_plan_serialization():
    plan = plan_row_column_sorting([[1, 2], [3, 4]])
    d = plan.to_dict()
    assert d["setting"] == "rowcolumn" and len(d["actions"]) == 4
    assert plan.to_text().splitlines()[0] == "plan rowcolumn: 4 actions"

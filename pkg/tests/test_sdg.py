import math

import numpy as np
import pytest

from symref import expr as ex
from symref.builders import build_problem_sdg
from symref.instances import signed_pairs_example, gen_packing
from symref.model import Constraint, Minlp, Variable
from symref.sdg import (CONSTRAINT, NO_VALUE, OPERATOR, PERMUTATION, REFLECTION, VALUE, VARIABLE,
                        LockedGraphError, new_sdg)


def box_model(n, lo=0.0, hi=1.0):
    return Minlp(tuple(Variable(i, lo, hi) for i in range(1, n + 1)))


def test_reflection_mode_has_paired_variable_nodes():
    g = new_sdg(box_model(4), REFLECTION)
    assert g.count(VARIABLE) == 8 and g.num_edges == 4
    for i in range(1, 5):
        pair = {g.edge_first[i - 1], g.edge_second[i - 1]}
        assert pair == {g.var_node(i), g.var_node(-i)}
        assert g.edge_values[i - 1] == NO_VALUE


def test_permutation_mode_has_no_negated_nodes():
    g = new_sdg(box_model(4), PERMUTATION)
    assert g.count(VARIABLE) == 4 and g.num_edges == 0
    with pytest.raises(IndexError):
        g.var_node(-3)


def test_empty_model():
    g = new_sdg(box_model(0), REFLECTION)
    assert g.num_nodes == 0
    g.compute_colors()
    assert len(g.node_colors) == 0


def test_var_node_is_unique_and_checked():
    g = new_sdg(box_model(4))
    assert g.var_node(3) == g.var_node(3)
    assert g.kind[g.var_node(-3)] == VARIABLE
    assert g.var_index[g.pos[g.var_node(-3)]] == -3
    with pytest.raises(IndexError):
        g.var_node(5)
    with pytest.raises(IndexError):
        g.var_node(0)


def test_add_nodes_and_payloads():
    g = new_sdg(signed_pairs_example())
    v = g.add_value_node(2.0)
    assert g.kind[v] == VALUE and g.payload(v) == 2.0
    c = g.add_constraint_node(1, -math.inf, 0.0)
    assert g.kind[c] == CONSTRAINT and g.payload(c) == (1, -math.inf, 0.0)
    o = g.add_operator_node(7)
    assert g.kind[o] == OPERATOR and g.payload(o) == 7


def test_edge_rules():
    g = new_sdg(box_model(2))
    o = g.add_operator_node(1)
    with pytest.raises(ValueError):
        g.add_edge(g.var_node(1), g.var_node(2))
    with pytest.raises(ValueError):
        g.add_edge(o, o)
    with pytest.raises(IndexError):
        g.add_edge(o, 99)
    g.add_edge(o, g.var_node(1), 3.0)
    g.add_edge(o, g.var_node(2))
    assert g.edge_values[-2:] == [3.0, NO_VALUE]


def test_locking():
    g = new_sdg(box_model(2))
    g.compute_colors()
    with pytest.raises(LockedGraphError):
        g.add_value_node(1.0)
    with pytest.raises(LockedGraphError):
        g.add_operator_node(1)
    with pytest.raises(LockedGraphError):
        g.add_edge(0, 1)


def colors_of_values(values, eps=1e-9):
    g = new_sdg(box_model(0))
    nodes = [g.add_value_node(v) for v in values]
    g.compute_colors(eps)
    return [int(g.node_colors[u]) for u in nodes]


def test_value_blocks():
    c = colors_of_values([1.0, 1.0 + 1e-12, 2.0])
    assert c[0] == c[1] != c[2]


def test_first_last_block_boundary():
    # the block opened at 0 admits 0.6e-9 but not 1.2e-9
    c = colors_of_values([0.0, 0.6e-9, 1.2e-9])
    assert c[0] == c[1] != c[2]
    # order of insertion does not matter
    assert len(set(colors_of_values([1.2e-9, 0.0, 0.6e-9]))) == 2


def test_kind_color_ranges_are_disjoint():
    g = build_problem_sdg(gen_packing(3, 2), enhanced=True)
    ranges = {}
    for u in range(g.num_nodes):
        ranges.setdefault(g.kind[u], set()).add(int(g.node_colors[u]))
    kinds = list(ranges)
    for a in range(len(kinds)):
        for b in range(a + 1, len(kinds)):
            assert not ranges[kinds[a]] & ranges[kinds[b]]
    # sentinel edges share one colour, distinct from every valued edge colour
    plain = {int(g.edge_colors[e]) for e in range(g.num_edges) if g.edge_values[e] == NO_VALUE}
    valued = {int(g.edge_colors[e]) for e in range(g.num_edges) if g.edge_values[e] != NO_VALUE}
    assert len(plain) == 1 and not plain & valued


def test_pair_edges_carry_sentinel_color():
    g = build_problem_sdg(signed_pairs_example(), enhanced=True)
    for i in range(g.n):
        assert g.edge_colors[i] == g.no_value_color


def test_pairs_enhanced_variables_share_a_color():
    g = build_problem_sdg(signed_pairs_example(), enhanced=True)
    cols = {int(g.node_colors[u]) for u in range(g.num_nodes) if g.kind[u] == VARIABLE}
    assert len(cols) == 1


def test_colors_are_deterministic():
    a = build_problem_sdg(gen_packing(3, 2), enhanced=True)
    b = build_problem_sdg(gen_packing(3, 2), enhanced=True)
    assert a.node_colors.tobytes() == b.node_colors.tobytes()
    assert a.edge_colors.tobytes() == b.edge_colors.tobytes()
    assert a.dump() == b.dump()


def test_distinct_variable_types_get_distinct_colors():
    v = (Variable(1, 0, 1), Variable(2, 0, 2), Variable(3, 0, 1, True))
    p = Minlp(v, (Constraint(ex.Sum(ex.Var(1), ex.Var(2), ex.Var(3)), "le", 2.0),))
    g = build_problem_sdg(p)
    cols = [int(g.node_colors[g.var_node(i)]) for i in (1, 2, 3)]
    assert len(set(cols)) == 3


def test_one_sided_constraints_use_infinite_sentinels():
    g = build_problem_sdg(signed_pairs_example())
    anchors = [g.payload(u) for u in range(g.num_nodes) if g.kind[u] == CONSTRAINT]
    assert len(anchors) == 1 and anchors[0][1] == -math.inf


def test_dump_lists_every_node_and_edge():
    g = build_problem_sdg(signed_pairs_example())
    text = g.dump().splitlines()
    assert text[0].startswith("sdg mode=refl")
    assert len(text) == 1 + g.num_nodes + g.num_edges
    assert np.all(g.node_colors >= 0)

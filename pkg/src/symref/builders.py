"""Per-constraint SDG builders and their composition into one problem graph."""
from __future__ import annotations

from typing import Callable

from . import expr as ex
from .model import Minlp
from .sdg import REFLECTION, Sdg, new_sdg

HANDLER_BASIC = 1
HANDLER_ENHANCED = 2
HANDLER_STABLESET = 3

# operator ids local to a handler; the handler id is added as a namespace
_LOCAL_OP = {"sum": 1, "prod": 2, "abs": 3, "neg": 4}
_POW_BASE = 1000
_DIFF_BASE = 5000
_BILINEAR = 7
_STABLE_NODE = 1
_NAMESPACE = 100_000


class BuildFailure(RuntimeError):
    """A constraint could not be encoded; detection is disabled."""


def op_id(handler: int, kind: str, exponent: int | None = None) -> int:
    if kind == "pow":
        local = _POW_BASE + int(exponent)
    else:
        local = _LOCAL_OP[kind]
    return handler * _NAMESPACE + local


def _diff_op_id(handler: int, kind: str, exponent) -> int:
    return handler * _NAMESPACE + _DIFF_BASE + (op_id(0, kind, exponent))


def _var_edges(g: Sdg, parent: int, i: int, alpha: float):
    g.add_edge(parent, g.var_node(i), alpha)
    if g.mode == REFLECTION:
        g.add_edge(parent, g.var_node(-i), -alpha)


def _copy_plain(g: Sdg, node, parent: int, handler: int, recurse):
    """Copy ``node`` below ``parent``; children are handed to ``recurse``."""
    if isinstance(node, ex.Value):
        u = g.add_value_node(node.value)
        g.add_edge(parent, u)
    elif isinstance(node, ex.Var):
        _var_edges(g, parent, node.index, node.weight)
    else:
        u = g.add_operator_node(op_id(handler, node.kind, node.exponent))
        g.add_edge(parent, u)
        for c in node.children:
            recurse(c, u)


def _prepared_tree(p: Minlp, k: int, g: Sdg):
    con = p.constraints[k]
    if con.tree is None:
        raise BuildFailure(f"constraint {k} has no expression tree")
    return ex.prepare(con.tree, g.centers.centers)


def build_expression_constraint(p: Minlp, k: int, g: Sdg) -> bool:
    """Plain copy of the shifted, hoisted tree with a constraint anchor."""
    try:
        tree = _prepared_tree(p, k, g)
    except (BuildFailure, ValueError):
        return False
    lhs, rhs = p.constraints[k].sides
    anchor = g.add_constraint_node(HANDLER_BASIC, lhs, rhs)

    def rec(node, parent):
        _copy_plain(g, node, parent, HANDLER_BASIC, rec)

    rec(tree, anchor)
    return True


def _gadget(g: Sdg, parent: int, op: int, i: int, j: int):
    u = g.add_operator_node(op)
    g.add_edge(parent, u)
    a1 = g.add_value_node(1.0)
    g.add_edge(u, a1)
    g.add_edge(a1, g.var_node(i))
    g.add_edge(a1, g.var_node(j))
    if g.mode == REFLECTION:
        a2 = g.add_value_node(1.0)
        g.add_edge(u, a2)
        g.add_edge(a2, g.var_node(-i))
        g.add_edge(a2, g.var_node(-j))


def build_enhanced_constraint(p: Minlp, k: int, g: Sdg) -> bool:
    """Like the plain builder, but recognized patterns become gadgets."""
    try:
        tree = _prepared_tree(p, k, g)
    except (BuildFailure, ValueError):
        return False
    h = HANDLER_ENHANCED
    lhs, rhs = p.constraints[k].sides
    root_form = ex.affine_form(tree)
    if root_form is not None and root_form[0]:
        # affine constraint: the constant moves into the anchor's sides
        const = root_form[1]
        anchor = g.add_constraint_node(h, lhs - const, rhs - const)
        u = g.add_operator_node(op_id(h, "sum"))
        g.add_edge(anchor, u)
        for i in sorted(root_form[0]):
            a = root_form[0][i]
            if a != 0.0:
                _var_edges(g, u, i, a)
        return True
    anchor = g.add_constraint_node(h, lhs, rhs)

    def rec(node, parent):
        m = ex.match_node(node)
        if m is None:
            _copy_plain(g, node, parent, h, rec)
        elif m.kind == "sum":
            u = g.add_operator_node(op_id(h, "sum"))
            g.add_edge(parent, u)
            for i, a in zip(m.variables, m.coefs):
                _var_edges(g, u, i, a)
            if m.constant != 0.0:
                v = g.add_value_node(m.constant)
                g.add_edge(u, v)
        elif m.kind == "difference":
            _gadget(g, parent, _diff_op_id(h, m.op_kind, m.exponent), *m.variables)
        elif m.kind == "bilinear":
            _gadget(g, parent, h * _NAMESPACE + _BILINEAR, *m.variables)
        else:  # even function of one variable
            u = g.add_operator_node(op_id(h, m.op_kind, m.exponent))
            g.add_edge(parent, u)
            w = abs(m.coefs[0])
            i = m.variables[0]
            g.add_edge(u, g.var_node(i), w)
            if g.mode == REFLECTION:
                g.add_edge(u, g.var_node(-i), w)

    rec(tree, anchor)
    return True


def build_stable_set_constraint(p: Minlp, k: int, g: Sdg) -> bool:
    con = p.constraints[k]
    H = con.payload
    if H is None:
        return False
    lhs, rhs = con.sides
    anchor = g.add_constraint_node(HANDLER_STABLESET, lhs, rhs)
    copies = []
    for var, w in zip(H.nodes, H.weights):
        u = g.add_operator_node(HANDLER_STABLESET * _NAMESPACE + _STABLE_NODE)
        g.add_edge(anchor, u)
        g.add_edge(u, g.var_node(var), w)
        copies.append(u)
    for a, b in H.edges:
        g.add_edge(copies[a], copies[b])
    return True


Builder = Callable[[Minlp, int, Sdg], bool]

BUILDERS: dict[str, Builder] = {
    "expr": build_expression_constraint,
    "expr-enhanced": build_enhanced_constraint,
    "stableset": build_stable_set_constraint,
}


def build_problem_sdg(p: Minlp, builders: dict[str, Builder] | None = None,
                      mode: str = REFLECTION, enhanced: bool = False,
                      epsilon: float = 1e-9) -> Sdg:
    """Compose per-constraint graphs into one locked, coloured SDG.

    With ``enhanced`` every constraint tagged ``expr`` uses the gadget builder.
    Raises BuildFailure when any constraint cannot be encoded.
    """
    table = dict(BUILDERS if builders is None else builders)
    if enhanced:
        table["expr"] = table.get("expr-enhanced", build_enhanced_constraint)
    g = new_sdg(p, mode)
    g.constraint_ranges = []
    for k, con in enumerate(p.constraints):
        fn = table.get(con.tag)
        if fn is None:
            raise BuildFailure(f"no builder registered for tag {con.tag!r}")
        start = g.num_nodes
        if not fn(p, k, g):
            raise BuildFailure(f"builder for constraint {k} ({con.tag}) failed")
        g.constraint_ranges.append((start, g.num_nodes))
    g.compute_colors(epsilon)
    return g

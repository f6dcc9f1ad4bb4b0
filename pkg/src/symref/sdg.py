"""Symmetry detection graphs.

Nodes are stored in per-kind payload lists plus a kind array and a position
array into the payload list of that kind.  Variable nodes are created
automatically: node ``i-1`` is Var(i) and, in reflection mode, node
``n+i-1`` is Var(-i) with an unvalued pair edge to Var(i).
"""
from __future__ import annotations

import math

import numpy as np

from .model import Minlp, ReflectionCenters, VariableType, compute_centers, variable_type

OPERATOR, VALUE, VARIABLE, CONSTRAINT = 0, 1, 2, 3
KIND_NAMES = ("op", "val", "var", "cons")
NO_VALUE = math.inf  # sentinel for an edge without value

PERMUTATION, REFLECTION = "perm", "refl"

# which payload components are compared exactly (ids, integrality flags)
_EXACT_COMPONENTS = {
    OPERATOR: (True,),
    VALUE: (False,),
    VARIABLE: (False, False, False, True),
    CONSTRAINT: (True, False, False),
}


class LockedGraphError(RuntimeError):
    pass


class Sdg:
    def __init__(self, p: Minlp, mode: str = REFLECTION, centers: ReflectionCenters | None = None):
        if mode not in (PERMUTATION, REFLECTION):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.n = p.n
        if mode == REFLECTION:
            self.centers = centers if centers is not None else compute_centers(p)
        else:
            # permutation mode types use the original bounds
            self.centers = ReflectionCenters(np.zeros(p.n), frozenset())
        self.locked = False
        self.node_colors: np.ndarray | None = None
        self.edge_colors: np.ndarray | None = None
        self.kind: list[int] = []
        self.pos: list[int] = []
        self.op_ids: list[int] = []
        self.values: list[float] = []
        self.var_types: list[VariableType] = []
        self.var_index: list[int] = []
        self.cons: list[tuple[int, float, float]] = []
        self.edge_first: list[int] = []
        self.edge_second: list[int] = []
        self.edge_values: list[float] = []
        signs = (1, -1) if mode == REFLECTION else (1,)
        for s in signs:
            for i in range(1, p.n + 1):
                self._append(VARIABLE, self.var_types)
                self.var_types[-1] = variable_type(p, s * i, self.centers)
                self.var_index.append(s * i)
        if mode == REFLECTION:
            for i in range(p.n):
                self._edge(i, p.n + i, NO_VALUE)

    # ------------------------------------------------------------ mutation
    def _append(self, kind, store, payload=None):
        if self.locked:
            raise LockedGraphError("graph is locked")
        self.kind.append(kind)
        self.pos.append(len(store))
        store.append(payload)
        return len(self.kind) - 1

    def add_operator_node(self, op_id: int) -> int:
        return self._append(OPERATOR, self.op_ids, int(op_id))

    def add_value_node(self, v: float) -> int:
        return self._append(VALUE, self.values, float(v))

    def add_constraint_node(self, handler_id: int, lhs: float, rhs: float) -> int:
        return self._append(CONSTRAINT, self.cons, (int(handler_id), float(lhs), float(rhs)))

    def var_node(self, i: int) -> int:
        if i == 0 or abs(i) > self.n:
            raise IndexError(f"variable {i} out of range")
        if i < 0:
            if self.mode == PERMUTATION:
                raise IndexError("no negated variable nodes in permutation mode")
            return self.n - i - 1
        return i - 1

    def is_var_node(self, u: int) -> bool:
        return self.kind[u] == VARIABLE

    def add_edge(self, u: int, v: int, value: float | None = None):
        if self.locked:
            raise LockedGraphError("graph is locked")
        if u == v:
            raise ValueError("self-loops are not allowed")
        nn = len(self.kind)
        if not (0 <= u < nn and 0 <= v < nn):
            raise IndexError("edge endpoint does not exist")
        if self.kind[u] == VARIABLE and self.kind[v] == VARIABLE:
            raise ValueError("edges between two variable nodes are not allowed")
        self._edge(u, v, NO_VALUE if value is None else float(value))

    def _edge(self, u, v, value):
        self.edge_first.append(u)
        self.edge_second.append(v)
        self.edge_values.append(value)

    # ------------------------------------------------------------- queries
    @property
    def num_nodes(self) -> int:
        return len(self.kind)

    @property
    def num_edges(self) -> int:
        return len(self.edge_first)

    def count(self, kind: int) -> int:
        return sum(1 for k in self.kind if k == kind)

    def payload(self, u: int):
        k, q = self.kind[u], self.pos[u]
        return (self.op_ids, self.values, self.var_types, self.cons)[k][q]

    def node_key(self, u: int) -> tuple:
        k = self.kind[u]
        p = self.payload(u)
        if k == OPERATOR:
            return (p,)
        if k == VALUE:
            return (p,)
        if k == VARIABLE:
            return (p.rel_lower, p.rel_upper, p.obj_coef, float(p.integral))
        return (float(p[0]), p[1], p[2])

    # ------------------------------------------------------------- colours
    def compute_colors(self, epsilon: float = 1e-9):
        """Assign node and edge colours and lock the graph."""
        self.locked = True
        colors = np.empty(self.num_nodes, dtype=np.int64)
        nxt = 0
        for kind in (OPERATOR, VALUE, VARIABLE, CONSTRAINT):
            members = [u for u in range(self.num_nodes) if self.kind[u] == kind]
            keys = [self.node_key(u) for u in members]
            exact = _EXACT_COMPONENTS[kind]
            block = _blocks(keys, epsilon, exact)
            for u, b in zip(members, block):
                colors[u] = nxt + b
            nxt += (max(block) + 1) if block else 0
        self.node_colors = colors
        ecol = np.empty(self.num_edges, dtype=np.int64)
        valued = [e for e in range(self.num_edges) if self.edge_values[e] != NO_VALUE]
        plain = [e for e in range(self.num_edges) if self.edge_values[e] == NO_VALUE]
        block = _blocks([(self.edge_values[e],) for e in valued], epsilon, (False,))
        for e, b in zip(valued, block):
            ecol[e] = nxt + b
        nxt += (max(block) + 1) if block else 0
        for e in plain:
            ecol[e] = nxt
        self.no_value_color = nxt
        self.edge_colors = ecol
        self.num_colors = nxt + 1
        return colors, ecol

    def dump(self) -> str:
        """Deterministic text listing of nodes and edges."""
        lines = [f"sdg mode={self.mode} nodes={self.num_nodes} edges={self.num_edges}"]
        for u in range(self.num_nodes):
            k = self.kind[u]
            p = self.payload(u)
            if k == VARIABLE:
                desc = f"var {self.var_index[self.pos[u]]} {_fmt_type(p)}"
            elif k == CONSTRAINT:
                desc = f"cons h={p[0]} lhs={_fmt(p[1])} rhs={_fmt(p[2])}"
            elif k == VALUE:
                desc = f"val {_fmt(p)}"
            else:
                desc = f"op {p}"
            col = "" if self.node_colors is None else f" color={self.node_colors[u]}"
            lines.append(f"n{u} {desc}{col}")
        for e in range(self.num_edges):
            v = self.edge_values[e]
            val = "-" if v == NO_VALUE else _fmt(v)
            col = "" if self.edge_colors is None else f" color={self.edge_colors[e]}"
            lines.append(f"e n{self.edge_first[e]} n{self.edge_second[e]} {val}{col}")
        return "\n".join(lines)


def _fmt(v: float) -> str:
    return repr(float(v))


def _fmt_type(t: VariableType) -> str:
    return f"({_fmt(t.rel_lower)},{_fmt(t.rel_upper)},{_fmt(t.obj_coef)},{'int' if t.integral else 'cont'})"


def new_sdg(p: Minlp, mode: str = REFLECTION, centers=None) -> Sdg:
    return Sdg(p, mode, centers)


def _comp_close(a: float, b: float, eps: float, exact: bool) -> bool:
    if exact or math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= eps


def _blocks(keys: list[tuple], eps: float, exact: tuple) -> list[int]:
    """Block id per key: sort, then cut whenever an element differs from the
    first element of the current block by more than eps in some component."""
    if not keys:
        return []
    order = sorted(range(len(keys)), key=lambda k: keys[k])
    out = [0] * len(keys)
    block = 0
    first = keys[order[0]]
    for k in order:
        key = keys[k]
        if not all(_comp_close(a, b, eps, ex) for a, b, ex in zip(first, key, exact)):
            block += 1
            first = key
        out[k] = block
    return out

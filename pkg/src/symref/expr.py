"""Expression trees for constraint functions.

Trees are immutable.  Leaves are ``Var`` and ``Value``; inner nodes are
``Op`` with kind ``sum``, ``prod``, ``pow``, ``abs`` or ``neg``.  A ``Var``
may carry a coefficient, which plays the role of the label on the arc into
the variable once coefficients have been hoisted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

OP_KINDS = ("sum", "prod", "pow", "abs", "neg")
EPS = 1e-9


class EvaluationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Var:
    index: int
    coef: float | None = None

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"variable index must be positive, got {self.index}")

    @property
    def weight(self) -> float:
        return 1.0 if self.coef is None else self.coef


@dataclass(frozen=True)
class Value:
    value: float


@dataclass(frozen=True)
class Op:
    kind: str
    children: tuple = field(default_factory=tuple)
    exponent: int | None = None

    def __post_init__(self):
        if self.kind not in OP_KINDS:
            raise ValueError(f"unknown operator {self.kind!r}")
        nc = len(self.children)
        if self.kind in ("sum", "prod"):
            if nc < 2:
                raise ValueError(f"{self.kind} needs at least two children")
        elif nc != 1:
            raise ValueError(f"{self.kind} takes exactly one child")
        if self.kind == "pow":
            if self.exponent is None or int(self.exponent) != self.exponent:
                raise ValueError("pow needs an integer exponent")
        elif self.exponent is not None:
            raise ValueError("only pow takes an exponent")


Node = Var | Value | Op


def Sum(*children) -> Op:
    return Op("sum", tuple(_lift(c) for c in children))


def Prod(*children) -> Op:
    return Op("prod", tuple(_lift(c) for c in children))


def Pow(child, k: int) -> Op:
    return Op("pow", (_lift(child),), int(k))


def Abs(child) -> Op:
    return Op("abs", (_lift(child),))


def Neg(child) -> Op:
    return Op("neg", (_lift(child),))


def _lift(c):
    if isinstance(c, (Var, Value, Op)):
        return c
    if isinstance(c, (int, float, np.floating, np.integer)):
        return Value(float(c))
    raise TypeError(f"cannot use {c!r} as an expression")


# --------------------------------------------------------------- evaluation

def evaluate(t: Node, x: Sequence[float]) -> float:
    """Evaluate ``t`` at ``x`` (0-based array, 1-based variable indices)."""
    if isinstance(t, Value):
        return t.value
    if isinstance(t, Var):
        return t.weight * float(x[t.index - 1])
    vals = [evaluate(c, x) for c in t.children]
    k = t.kind
    if k == "sum":
        return math.fsum(vals)
    if k == "prod":
        out = 1.0
        for v in vals:
            out *= v
        return out
    if k == "neg":
        return -vals[0]
    if k == "abs":
        return abs(vals[0])
    base = vals[0]
    if t.exponent < 0 and base == 0.0:
        raise EvaluationError("negative power of zero")
    return base ** t.exponent


def variables(t: Node) -> set[int]:
    out = set()
    for node in walk(t):
        if isinstance(node, Var):
            out.add(node.index)
    return out


def walk(t: Node) -> Iterator[Node]:
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Op):
            stack.extend(reversed(node.children))


def subtree(t: Node, path: tuple[int, ...]) -> Node:
    for step in path:
        t = t.children[step]
    return t


def is_linear(t: Node) -> bool:
    return affine_form(t) is not None


# ---------------------------------------------------------- transformations

def shift_to_centers(t: Node, centers) -> Node:
    """Rewrite ``t`` in shifted coordinates ``y = x - xi``.

    Every ``alpha * x_i`` (a bare variable or a binary product of a value and a
    variable) becomes ``alpha * x_i + alpha * xi_i`` when ``xi_i != 0``.
    """
    xi = np.asarray(centers, dtype=float)

    def rec(node):
        if isinstance(node, Value):
            return node
        if isinstance(node, Var):
            c = xi[node.index - 1]
            if c == 0.0:
                return node
            return Op("sum", (node, Value(node.weight * c)))
        pair = _value_var_pair(node)
        if pair is not None:
            val, var = pair
            c = xi[var.index - 1]
            if c == 0.0:
                return node
            return Op("sum", (node, Value(val.value * var.weight * c)))
        return Op(node.kind, tuple(rec(ch) for ch in node.children), node.exponent)

    return rec(t)


def _value_var_pair(node):
    if isinstance(node, Op) and node.kind == "prod" and len(node.children) == 2:
        a, b = node.children
        if isinstance(a, Value) and isinstance(b, Var):
            return a, b
        if isinstance(b, Value) and isinstance(a, Var):
            return b, a
    return None


def hoist_coefficients(t: Node) -> Node:
    """Collapse ``Product(Value a, Var x)`` into ``Var(x, coef=a)``."""
    if isinstance(t, (Var, Value)):
        return t
    pair = _value_var_pair(t)
    if pair is not None:
        val, var = pair
        return Var(var.index, val.value * var.weight)
    return Op(t.kind, tuple(hoist_coefficients(c) for c in t.children), t.exponent)


def prepare(t: Node, centers) -> Node:
    return hoist_coefficients(shift_to_centers(t, centers))


# ------------------------------------------------------------------ patterns

def affine_form(t: Node) -> tuple[dict[int, float], float] | None:
    """Return ``(coefficients, constant)`` if ``t`` is affine, else None."""
    if isinstance(t, Value):
        return {}, t.value
    if isinstance(t, Var):
        return {t.index: t.weight}, 0.0
    if t.kind == "sum":
        coefs: dict[int, float] = {}
        const = 0.0
        for c in t.children:
            f = affine_form(c)
            if f is None:
                return None
            for i, a in f[0].items():
                coefs[i] = coefs.get(i, 0.0) + a
            const += f[1]
        return coefs, const
    if t.kind == "neg":
        f = affine_form(t.children[0])
        if f is None:
            return None
        return {i: -a for i, a in f[0].items()}, -f[1]
    if t.kind == "prod":
        scale = 1.0
        inner = None
        for c in t.children:
            if isinstance(c, Value):
                scale *= c.value
            elif inner is None:
                inner = c
            else:
                return None
        if inner is None:
            return {}, scale
        f = affine_form(inner)
        if f is None:
            return None
        return {i: scale * a for i, a in f[0].items()}, scale * f[1]
    if t.kind == "pow" and t.exponent == 1:
        return affine_form(t.children[0])
    return None


def _even_operator(node) -> bool:
    if not isinstance(node, Op):
        return False
    if node.kind == "abs":
        return True
    return node.kind == "pow" and node.exponent != 0 and node.exponent % 2 == 0


@dataclass(frozen=True)
class PatternMatch:
    """A recognized subtree.

    kind is one of ``sum``, ``difference``, ``bilinear``, ``even``.
    For ``difference`` the operator is the enclosing even operator applied to
    ``x_i - x_j`` with ``variables == (i, j)``.
    """

    kind: str
    path: tuple[int, ...]
    variables: tuple[int, ...]
    coefs: tuple[float, ...] = ()
    constant: float = 0.0
    op_kind: str | None = None
    exponent: int | None = None


def match_node(node: Node, path=()) -> PatternMatch | None:
    if not isinstance(node, Op):
        return None
    form = affine_form(node)
    if form is not None:
        coefs = {i: a for i, a in form[0].items() if a != 0.0}
        if coefs:
            idx = tuple(sorted(coefs))
            return PatternMatch("sum", path, idx, tuple(coefs[i] for i in idx), form[1])
        return None
    if _even_operator(node):
        child = node.children[0]
        f = affine_form(child)
        if f is not None and not isinstance(child, Var):
            coefs = {i: a for i, a in f[0].items() if a != 0.0}
            if len(coefs) == 2 and abs(f[1]) <= EPS:
                (i, a), (j, b) = sorted(coefs.items())
                if abs(a + b) <= EPS and abs(abs(a) - 1.0) <= EPS:
                    pair = (i, j) if a > 0 else (j, i)
                    return PatternMatch("difference", path, pair, (1.0, -1.0), 0.0,
                                        node.kind, node.exponent)
    if node.kind == "prod" and len(node.children) == 2:
        a, b = node.children
        if (isinstance(a, Var) and isinstance(b, Var) and a.index != b.index
                and a.weight == 1.0 and b.weight == 1.0):
            return PatternMatch("bilinear", path, (a.index, b.index))
    if _even_operator(node) and isinstance(node.children[0], Var):
        v = node.children[0]
        return PatternMatch("even", path, (v.index,), (v.weight,), 0.0, node.kind, node.exponent)
    return None


def find_patterns(t: Node) -> list[PatternMatch]:
    """Greedy top-down pattern matching, outermost match wins."""
    out: list[PatternMatch] = []

    def rec(node, path):
        m = match_node(node, path)
        if m is not None:
            out.append(m)
            return
        if isinstance(node, Op):
            for k, c in enumerate(node.children):
                rec(c, path + (k,))

    rec(t, ())
    return out


def pattern_value(m: PatternMatch, x: Sequence[float]) -> float:
    """Evaluate the semantics a match stands for (used to check matching)."""
    if m.kind == "sum":
        return m.constant + sum(a * x[i - 1] for i, a in zip(m.variables, m.coefs))
    if m.kind == "bilinear":
        i, j = m.variables
        return x[i - 1] * x[j - 1]
    if m.kind == "difference":
        i, j = m.variables
        d = x[i - 1] - x[j - 1]
    else:
        d = m.coefs[0] * x[m.variables[0] - 1]
    if m.op_kind == "abs":
        return abs(d)
    if m.exponent < 0 and d == 0.0:
        raise EvaluationError("negative power of zero")
    return d ** m.exponent


# ------------------------------------------------------------ s-expressions

def _fmt_num(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def to_sexpr(t: Node, names: Sequence[str]) -> str:
    if isinstance(t, Value):
        return _fmt_num(t.value)
    if isinstance(t, Var):
        if t.coef is None:
            return names[t.index - 1]
        return f"(* {_fmt_num(t.coef)} {names[t.index - 1]})"
    head = {"sum": "+", "prod": "*", "pow": "pow", "abs": "abs", "neg": "neg"}[t.kind]
    parts = [to_sexpr(c, names) for c in t.children]
    if t.kind == "pow":
        parts.append(str(t.exponent))
    return "(" + head + " " + " ".join(parts) + ")"

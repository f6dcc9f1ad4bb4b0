"""Instance generators and the line-oriented instance text format.

Format::

    # comment
    var <name> <lb> <ub> <cont|int|bin> <objcoef>
    con <tag> <sexpr> <le|ge|eq> <rhs>

``sexpr`` is prefix notation over ``(+ ...)``, ``(* ...)``, ``(pow e k)``,
``(abs e)``, ``(neg e)``, variable names and numbers.  Constraints tagged
``stableset`` take a payload ``(stableset (node <var> <weight>)... (edge <var> <var>)...)``.
"""
from __future__ import annotations

import itertools
from importlib import resources
from pathlib import Path

from . import expr as ex
from .expr import Abs, Pow, Prod, Sum, Value, Var
from .model import Constraint, Minlp, StableSetGraph, Variable

TAGS = ("expr", "expr-enhanced", "stableset")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# ---------------------------------------------------------------- generators

def _point_vars(n: int, d: int, lo: float, hi: float) -> list[Variable]:
    out = []
    for s in range(1, n + 1):
        for i in range(1, d + 1):
            out.append(Variable(len(out) + 1, lo, hi, False, 0.0, f"x_{s}_{i}"))
    return out


def _idx(s: int, i: int, d: int) -> int:
    return (s - 1) * d + i


def gen_packing(n: int, d: int, widths=None) -> Minlp:
    """Pack n l1-balls of maximal radius r into a box.

    ``widths`` gives the half-width per coordinate (default 1).  Box
    membership x +- r within the half-width is written as linear constraints
    so that every plain variable bound stays constant.
    """
    w = [1.0] * d if widths is None else [float(v) for v in widths]
    if len(w) != d:
        raise ValueError("need one half-width per dimension")
    vs = []
    for s in range(1, n + 1):
        for i in range(1, d + 1):
            vs.append(Variable(len(vs) + 1, -w[i - 1], w[i - 1], False, 0.0, f"x_{s}_{i}"))
    r = len(vs) + 1
    vs.append(Variable(r, 0.0, min(w), False, -1.0, "r"))
    cons = []
    for s, t in itertools.combinations(range(1, n + 1), 2):
        terms = [Abs(Sum(Var(_idx(s, i, d)), Prod(-1, Var(_idx(t, i, d))))) for i in range(1, d + 1)]
        cons.append(Constraint(Sum(*terms, Prod(-2, Var(r))), "ge", 0.0))
    for s in range(1, n + 1):
        for i in range(1, d + 1):
            v = _idx(s, i, d)
            cons.append(Constraint(Sum(Var(v), Var(r)), "le", w[i - 1]))
            cons.append(Constraint(Sum(Prod(-1, Var(v)), Var(r)), "le", w[i - 1]))
    return Minlp(tuple(vs), tuple(cons), f"packing_{n}_{d}")


def gen_kissing(n: int, d: int) -> Minlp:
    """n points on the sphere of radius 2; maximize alpha with pairwise
    8 - 2<x^s, x^t> >= 4 alpha."""
    vs = _point_vars(n, d, -2.0, 2.0)
    a = len(vs) + 1
    vs.append(Variable(a, 0.0, 1.0, False, -1.0, "alpha"))
    cons = []
    for s in range(1, n + 1):
        cons.append(Constraint(Sum(*[Pow(Var(_idx(s, i, d)), 2) for i in range(1, d + 1)])
                               if d > 1 else Pow(Var(_idx(s, 1, d)), 2), "eq", 4.0))
    for s, t in itertools.combinations(range(1, n + 1), 2):
        terms = [Prod(-2, Prod(Var(_idx(s, i, d)), Var(_idx(t, i, d)))) for i in range(1, d + 1)]
        cons.append(Constraint(Sum(8, *terms, Prod(-4, Var(a))), "ge", 0.0))
    return Minlp(tuple(vs), tuple(cons), f"kissing_{n}_{d}")


def gen_energy(n: int, d: int, cap: float | None = None) -> Minlp:
    """n points on the unit sphere minimizing sum 1/|x^s - x^t|^2, with the
    objective lifted into an auxiliary variable."""
    vs = _point_vars(n, d, -1.0, 1.0)
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    a = len(vs) + 1
    vs.append(Variable(a, 0.0, cap if cap is not None else 100.0 * max(1, len(pairs)),
                       False, 1.0, "energy"))
    cons = []
    for s in range(1, n + 1):
        cons.append(Constraint(Sum(*[Pow(Var(_idx(s, i, d)), 2) for i in range(1, d + 1)])
                               if d > 1 else Pow(Var(_idx(s, 1, d)), 2), "eq", 1.0))
    terms = []
    for s, t in pairs:
        sq = [Pow(Sum(Var(_idx(s, i, d)), Prod(-1, Var(_idx(t, i, d)))), 2) for i in range(1, d + 1)]
        dist2 = Sum(*sq) if d > 1 else sq[0]
        terms.append(Pow(dist2, -1))
    cons.append(Constraint(Sum(*terms, Prod(-1, Var(a))), "le", 0.0))
    return Minlp(tuple(vs), tuple(cons), f"energy_{n}_{d}")


GRAPHS = {
    "K3": (3, [(0, 1), (0, 2), (1, 2)]),
    "C5": (5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]),
    "petersen": (10, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4),
                      (0, 5), (1, 6), (2, 7), (3, 8), (4, 9),
                      (5, 7), (7, 9), (6, 9), (6, 8), (5, 8)]),
    "K2": (2, [(0, 1)]),
}


def gen_maxcut(graph) -> Minlp:
    """Max-cut with binary node sides x and edge indicators y.

    ``graph`` is a name from GRAPHS or a pair (num_nodes, edge list)."""
    if isinstance(graph, str):
        try:
            nv, edges = GRAPHS[graph if graph in GRAPHS else graph.lower()]
        except KeyError:
            raise ValueError(f"unknown graph {graph!r}; known: {sorted(GRAPHS)}") from None
        name = graph
    else:
        nv, edges = graph
        name = "graph"
    vs = [Variable(v + 1, 0.0, 1.0, True, 0.0, f"x_{v + 1}") for v in range(nv)]
    cons = []
    for u, v in edges:
        y = len(vs) + 1
        vs.append(Variable(y, 0.0, 1.0, True, -1.0, f"y_{u + 1}_{v + 1}"))
        cons.append(Constraint(Sum(Var(u + 1), Var(v + 1), Var(y)), "le", 2.0))
        cons.append(Constraint(Sum(Prod(-1, Var(u + 1)), Prod(-1, Var(v + 1)), Var(y)), "le", 0.0))
    return Minlp(tuple(vs), tuple(cons), f"maxcut_{name}")


def gen_disk_packing(n: int, width: float = 2.0, height: float = 2.0) -> Minlp:
    """Euclidean disk packing in a centred box: (x_s - x_t)^2 + (y_s - y_t)^2 >= 4 r^2."""
    hw, hh = width / 2.0, height / 2.0
    vs = []
    for s in range(1, n + 1):
        vs.append(Variable(len(vs) + 1, -hw, hw, False, 0.0, f"x_{s}"))
        vs.append(Variable(len(vs) + 1, -hh, hh, False, 0.0, f"y_{s}"))
    r = len(vs) + 1
    vs.append(Variable(r, 0.0, min(hw, hh), False, -1.0, "r"))
    cons = []
    for s, t in itertools.combinations(range(1, n + 1), 2):
        dx = Pow(Sum(Var(2 * s - 1), Prod(-1, Var(2 * t - 1))), 2)
        dy = Pow(Sum(Var(2 * s), Prod(-1, Var(2 * t))), 2)
        cons.append(Constraint(Sum(dx, dy, Prod(-4, Pow(Var(r), 2))), "ge", 0.0))
    for s in range(1, n + 1):
        for v, h in ((2 * s - 1, hw), (2 * s, hh)):
            cons.append(Constraint(Sum(Var(v), Var(r)), "le", h))
            cons.append(Constraint(Sum(Prod(-1, Var(v)), Var(r)), "le", h))
    return Minlp(tuple(vs), tuple(cons), f"disks_{n}")


def gen_stable_set(num_nodes: int, edges, weights=None) -> Minlp:
    w = [1.0] * num_nodes if weights is None else [float(v) for v in weights]
    vs = tuple(Variable(v + 1, 0.0, 1.0, True, -w[v], f"x_{v + 1}") for v in range(num_nodes))
    H = StableSetGraph(tuple(range(1, num_nodes + 1)), tuple(w), tuple(tuple(e) for e in edges))
    return Minlp(vs, (Constraint(None, "le", 1.0, "stableset", H),), "stableset")


def signed_pairs_example() -> Minlp:
    """min 0 s.t. 4x1 - 4x2 + x3 - x4 <= 0 on the box used in the docs."""
    text = resources.files("symref").joinpath("data/signed_pairs.inst").read_text()
    return parse(text)


# ------------------------------------------------------------------- writing

def _num(v: float) -> str:
    return ex._fmt_num(float(v))


def _vtype(v: Variable) -> str:
    if v.integral:
        return "bin" if (v.lower, v.upper) == (0.0, 1.0) else "int"
    return "cont"


def write(p: Minlp) -> str:
    names = p.names()
    lines = []
    for v in p.variables:
        lines.append(f"var {v.label} {_num(v.lower)} {_num(v.upper)} {_vtype(v)} {_num(v.obj_coef)}")
    for c in p.constraints:
        if c.payload is not None:
            H = c.payload
            parts = [f"(node {names[v - 1]} {_num(w)})" for v, w in zip(H.nodes, H.weights)]
            parts += [f"(edge {names[H.nodes[a] - 1]} {names[H.nodes[b] - 1]})" for a, b in H.edges]
            body = "(stableset " + " ".join(parts) + ")"
        else:
            body = ex.to_sexpr(c.tree, names)
        lines.append(f"con {c.tag} {body} {c.relation} {_num(c.rhs)}")
    return "\n".join(lines) + "\n"


def save(p: Minlp, path) -> None:
    Path(path).write_text(write(p))


# ------------------------------------------------------------------- parsing

def _tokens(text: str, line: int) -> list[str]:
    out = []
    cur = ""
    for ch in text:
        if ch in "()":
            if cur:
                out.append(cur)
                cur = ""
            out.append(ch)
        elif ch.isspace():
            if cur:
                out.append(cur)
                cur = ""
        else:
            cur += ch
    if cur:
        out.append(cur)
    return out


def _number(tok: str, line: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"expected a number, got {tok!r}", line) from None


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


class _Reader:
    def __init__(self, toks, names, line):
        self.toks, self.k, self.names, self.line = toks, 0, names, line

    def peek(self):
        if self.k >= len(self.toks):
            raise ParseError("unexpected end of expression", self.line)
        return self.toks[self.k]

    def take(self):
        t = self.peek()
        self.k += 1
        return t

    def expect(self, tok):
        t = self.take()
        if t != tok:
            raise ParseError(f"expected {tok!r}, got {t!r}", self.line)

    def var(self, tok):
        if tok not in self.names:
            raise ParseError(f"undeclared variable {tok!r}", self.line)
        return self.names[tok]

    def expr(self):
        t = self.take()
        if t == ")":
            raise ParseError("unbalanced ')'", self.line)
        if t != "(":
            if _is_number(t):
                return Value(float(t))
            return Var(self.var(t))
        head = self.take()
        args = []
        if head == "pow":
            args.append(self.expr())
            k = self.take()
            if not _is_number(k) or float(k) != int(float(k)):
                raise ParseError(f"pow needs an integer exponent, got {k!r}", self.line)
            self.expect(")")
            return Pow(args[0], int(float(k)))
        while self.peek() != ")":
            args.append(self.expr())
        self.take()
        try:
            if head == "+":
                return args[0] if len(args) == 1 else Sum(*args)
            if head == "*":
                return args[0] if len(args) == 1 else Prod(*args)
            if head == "abs" and len(args) == 1:
                return Abs(args[0])
            if head == "neg" and len(args) == 1:
                return ex.Neg(args[0])
        except ValueError as e:
            raise ParseError(str(e), self.line) from None
        raise ParseError(f"unknown or malformed operator {head!r}", self.line)

    def stableset(self):
        self.expect("(")
        if self.take() != "stableset":
            raise ParseError("stableset payload must start with (stableset", self.line)
        nodes, weights, edges = [], [], []
        while self.peek() != ")":
            self.expect("(")
            kind = self.take()
            a, b = self.take(), self.take()
            self.expect(")")
            if kind == "node":
                nodes.append(self.var(a))
                weights.append(_number(b, self.line))
            elif kind == "edge":
                edges.append((self.var(a), self.var(b)))
            else:
                raise ParseError(f"unknown stableset item {kind!r}", self.line)
        self.take()
        pos = {v: k for k, v in enumerate(nodes)}
        try:
            e = tuple((pos[a], pos[b]) for a, b in edges)
        except KeyError:
            raise ParseError("edge uses a variable that is not a node", self.line) from None
        return StableSetGraph(tuple(nodes), tuple(weights), e)


def parse(text: str) -> Minlp:
    variables: list[Variable] = []
    names: dict[str, int] = {}
    cons: list[Constraint] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = _tokens(line, lineno)
        if toks[0] == "var":
            if len(toks) != 6:
                raise ParseError("var needs: name lb ub type objcoef", lineno)
            _, name, lb, ub, kind, c = toks
            if name in names:
                raise ParseError(f"duplicate variable {name!r}", lineno)
            if kind not in ("cont", "int", "bin"):
                raise ParseError(f"unknown variable type {kind!r}", lineno)
            lo, hi = _number(lb, lineno), _number(ub, lineno)
            if kind == "bin":
                lo, hi = max(lo, 0.0), min(hi, 1.0)
            try:
                v = Variable(len(variables) + 1, lo, hi, kind != "cont", _number(c, lineno), name)
            except ValueError as e:
                raise ParseError(str(e), lineno) from None
            names[name] = v.index
            variables.append(v)
        elif toks[0] == "con":
            if len(toks) < 5:
                raise ParseError("con needs: tag sexpr relation rhs", lineno)
            tag = toks[1]
            if tag not in TAGS:
                raise ParseError(f"unknown constraint tag {tag!r}", lineno)
            rd = _Reader(toks[2:-2], names, lineno)
            if tag == "stableset":
                payload, tree = rd.stableset(), None
            else:
                payload, tree = None, rd.expr()
            if rd.k != len(rd.toks):
                raise ParseError("trailing tokens after expression", lineno)
            rel = toks[-2]
            if rel not in ("le", "ge", "eq"):
                raise ParseError(f"unknown relation {rel!r}", lineno)
            cons.append(Constraint(tree, rel, _number(toks[-1], lineno), tag, payload))
        else:
            raise ParseError(f"unknown record {toks[0]!r}", lineno)
    return Minlp(tuple(variables), tuple(cons))


def load(path) -> Minlp:
    return parse(Path(path).read_text())

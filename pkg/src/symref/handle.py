"""Symmetry handling: lexicographic reduction for signed permutations, static
row sorting, domain restrictions for reflected columns, and the plans that
combine them per group factor."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import lex_reduce_kernel
from .groups import FactorReport, GroupReport
from .model import SignedPermutation, preimage_arrays

TOL = 1e-9
SETTINGS = ("sym0", "sym1", "sym2", "sym3", "sym4", "sym5", "sym6", "auto")


@dataclass
class BoundsBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.array(self.lower, dtype=float)
        self.upper = np.array(self.upper, dtype=float)

    def copy(self) -> "BoundsBox":
        return BoundsBox(self.lower.copy(), self.upper.copy())

    @property
    def empty(self) -> bool:
        return bool(np.any(self.lower > self.upper + TOL))

    def contains(self, other: "BoundsBox", tol=TOL) -> bool:
        return bool(np.all(other.lower >= self.lower - tol) and np.all(other.upper <= self.upper + tol))

    def __eq__(self, other):
        return (isinstance(other, BoundsBox) and np.array_equal(self.lower, other.lower)
                and np.array_equal(self.upper, other.upper))


# ------------------------------------------------------------------ actions

@dataclass(frozen=True)
class LexReduce:
    gamma: SignedPermutation
    order: tuple[int, ...] | None = None   # 1-based variables, lex order
    factor: int = 0

    def describe(self) -> str:
        o = "" if self.order is None else f" order={list(self.order)}"
        return f"lexreduce {self.gamma.cycle_notation()}{o}"


@dataclass(frozen=True)
class SortRows:
    block: tuple[tuple[int, ...], ...]    # rows of variable indices
    factor: int = 0

    def describe(self) -> str:
        return f"sortrows {[list(r) for r in self.block]}"


@dataclass(frozen=True)
class RestrictDomain:
    var: int
    lower: float
    factor: int = 0

    def describe(self) -> str:
        return f"restrict x{self.var} >= {self.lower:g}"


@dataclass(frozen=True)
class StaticInequality:
    coefs: tuple[tuple[int, float], ...]
    rhs: float
    sense: str = "ge"
    factor: int = 0

    def describe(self) -> str:
        lhs = " ".join(f"{'+' if c >= 0 else '-'} {abs(c):g} x{v}" for v, c in self.coefs)
        return f"ineq {lhs} {'>=' if self.sense == 'ge' else '<='} {self.rhs:g}"

    def satisfied(self, x, tol=1e-9) -> bool:
        val = sum(c * x[v - 1] for v, c in self.coefs)
        return val >= self.rhs - tol if self.sense == "ge" else val <= self.rhs + tol


Action = LexReduce | SortRows | RestrictDomain | StaticInequality


@dataclass
class HandlerPlan:
    actions: list = field(default_factory=list)
    setting: str = "sym0"

    def for_factor(self, k: int) -> list:
        return [a for a in self.actions if a.factor == k]

    def to_text(self) -> str:
        if not self.actions:
            return f"plan {self.setting}: no actions"
        lines = [f"plan {self.setting}: {len(self.actions)} actions"]
        lines += [f"  [factor {a.factor}] {a.describe()}" for a in self.actions]
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"setting": self.setting,
                "actions": [{"factor": a.factor, "kind": type(a).__name__, "text": a.describe()}
                            for a in self.actions]}


# -------------------------------------------------------------- propagators

def _xi(centers) -> np.ndarray:
    return np.asarray(getattr(centers, "centers", centers), dtype=float)


def lex_reduce(gamma: SignedPermutation, centers, box: BoundsBox, integral=None,
               order=None) -> BoundsBox | None:
    """Tighten ``box`` so that x >=lex rho(x; gamma) holds on the bounds.

    Returns a new box, or None when the bounds rule out every x with
    x >=lex rho(x).  ``order`` lists 1-based variables in lex order (default
    1..n)."""
    n = gamma.n
    src, sgn = preimage_arrays(gamma)
    integ = np.zeros(n, dtype=np.bool_) if integral is None else np.asarray(integral, dtype=np.bool_)
    ordr = np.arange(n, dtype=np.int64) if order is None else np.asarray(order, dtype=np.int64) - 1
    lo, hi = box.lower.copy(), box.upper.copy()
    if lex_reduce_kernel(lo, hi, src, sgn, _xi(centers), integ, ordr, TOL):
        return None
    return BoundsBox(lo, hi)


def row_swap(block, a: int, b: int, n: int) -> SignedPermutation:
    img = list(range(1, n + 1))
    for u, v in zip(block[a], block[b]):
        img[u - 1], img[v - 1] = v, u
    return SignedPermutation(img)


class CompiledLex:
    """Arrays for one lex constraint, reused across solver nodes."""

    __slots__ = ("src", "sgn", "order", "xi", "integral")

    def __init__(self, gamma, centers, integral, order=None):
        self.src, self.sgn = preimage_arrays(gamma)
        n = gamma.n
        self.order = (np.arange(n, dtype=np.int64) if order is None
                      else np.asarray(order, dtype=np.int64) - 1)
        self.xi = _xi(centers)
        self.integral = np.asarray(integral, dtype=np.bool_)

    def __call__(self, lo, hi) -> bool:
        """Propagate in place; False means infeasible."""
        return lex_reduce_kernel(lo, hi, self.src, self.sgn, self.xi, self.integral,
                                 self.order, TOL) == 0


def _sort_rows_lex(block, centers, integral, n):
    out = []
    for r in range(len(block) - 1):
        order = tuple(block[r]) + tuple(block[r + 1])
        out.append(CompiledLex(row_swap(block, r, r + 1, n), centers, integral, order))
    return out


def _fixpoint(props, lo, hi, rounds):
    for _ in range(max(1, rounds)):
        before_lo, before_hi = lo.copy(), hi.copy()
        for prop in props:
            if not prop(lo, hi):
                return False
        if np.array_equal(before_lo, lo) and np.array_equal(before_hi, hi):
            break
    return True


def sort_rows_static(block, box: BoundsBox, centers, integral=None) -> BoundsBox | None:
    """Lex-sort the rows of ``block`` (decreasing) via adjacent row swaps."""
    n = len(box.lower)
    integ = np.zeros(n, dtype=bool) if integral is None else np.asarray(integral, dtype=bool)
    block = [tuple(r) for r in block]
    props = _sort_rows_lex(block, centers, integ, n)
    lo, hi = box.lower.copy(), box.upper.copy()
    if not _fixpoint(props, lo, hi, len(block) * len(block[0])):
        return None
    return BoundsBox(lo, hi)


# -------------------------------------------------------------------- plans

def halving_schedule(p: int, q: int) -> list[int]:
    """n_0 = p and n_j = ceil(n_{j-1} / 2) for j = 1..q."""
    ns = [p]
    for _ in range(q):
        ns.append(math.ceil(ns[-1] / 2))
    return ns


def column_centers(M, centers) -> list[float]:
    xi = _xi(centers)
    out = []
    for j in range(len(M[0])):
        vals = {float(xi[row[j] - 1]) for row in M}
        if max(vals) - min(vals) > TOL:
            raise ValueError(f"column {j + 1} has non-uniform reflection centers {sorted(vals)}")
        out.append(vals.pop())
    return out


def reflection_blocks(p: int, q: int) -> list[tuple[int, int]]:
    """Row ranges (0-based, half-open) whose rows share a restriction pattern."""
    ns = halving_schedule(p, q)
    blocks = [(ns[j], ns[j - 1]) for j in range(1, q + 1)] + [(0, ns[q])]
    return [(a, b) for a, b in blocks if b > a]


def _ineq(pairs, factor):
    """x_a >= x_b for each (a, b)."""
    return [StaticInequality(((a, 1.0), (b, -1.0)), 0.0, "ge", factor) for a, b in pairs]


def plan_reflection_restrictions(M, centers, factor: int = 0, block_inequalities: bool = False) -> HandlerPlan:
    """Upper-half restrictions on a halving staircase plus row sorting inside
    the blocks of rows that share a restriction pattern."""
    p, q = len(M), len(M[0])
    xic = column_centers(M, centers)
    ns = halving_schedule(p, q)
    acts: list = []
    for j in range(q):
        for i in range(ns[j + 1]):
            acts.append(RestrictDomain(M[i][j], xic[j], factor))
    for a, b in reflection_blocks(p, q):
        if b - a >= 2:
            acts.append(SortRows(tuple(tuple(M[i]) for i in range(a, b)), factor))
            if block_inequalities:
                acts += _ineq([(M[i][0], M[i + 1][0]) for i in range(a, b - 1)], factor)
    return HandlerPlan(acts, "reflection")


def plan_row_column_sorting(M, factor: int = 0) -> HandlerPlan:
    p, q = len(M), len(M[0])
    T = tuple(tuple(M[i][j] for i in range(p)) for j in range(q))
    acts: list = []
    if p >= 2:
        acts.append(SortRows(tuple(tuple(r) for r in M), factor))
    if q >= 2:
        acts.append(SortRows(T, factor))
    acts += _ineq([(M[i][0], M[i + 1][0]) for i in range(p - 1)], factor)
    acts += _ineq([(M[0][j], M[0][j + 1]) for j in range(q - 1)], factor)
    return HandlerPlan(acts, "rowcolumn")


def emit_simple_reflection_cut(support, centers, factor: int = 0) -> StaticInequality:
    xi = _xi(centers)
    sup = sorted(support)
    return StaticInequality(tuple((i, 1.0) for i in sup), float(sum(xi[i - 1] for i in sup)), "ge", factor)


def _oriented(f: FactorReport):
    """Matrix with reflected lines as columns, plus the column-reflection flag."""
    if f.matrix is None:
        return None, False
    M = [list(r) for r in f.matrix]
    if f.row_reflections and not f.column_reflections:
        M = [list(c) for c in zip(*M)]
        return M, True
    return M, f.column_reflections


def _setting_actions(f: FactorReport, k: int, setting: str, centers) -> list:
    M, colrefl = _oriented(f)
    if M is None:
        return []
    p, q = len(M), len(M[0])
    col_exchange = f.classification == "RowColumn"
    xi = _xi(centers)
    s1 = _ineq([(M[0][j], M[0][j + 1]) for j in range(q - 1)], k) if col_exchange else []
    s2 = [RestrictDomain(M[0][j], float(xi[M[0][j] - 1]), k) for j in range(q)] if colrefl else []
    s3 = _ineq([(M[i][0], M[i + 1][0]) for i in range(p - 1)], k)
    s4, s5 = [], []
    if colrefl:
        plan = plan_reflection_restrictions(M, centers, k)
        s4 = [a for a in plan.actions if isinstance(a, RestrictDomain)]
        blocks = []
        for a, b in reflection_blocks(p, q):
            blocks += [(M[i][0], M[i + 1][0]) for i in range(a, b - 1)]
        s5 = s4 + _ineq(blocks, k)
    table = {"sym1": s1, "sym2": s1 + s2, "sym3": s1 + s2 + s3,
             "sym4": s4, "sym5": s5, "sym6": s1 + s5}
    return table[setting]


def _auto_actions(f: FactorReport, k: int, centers, simple_reflection: bool) -> list:
    M, colrefl = _oriented(f)
    if M is not None:
        p, q = len(M), len(M[0])
        if colrefl:
            acts = plan_reflection_restrictions(M, centers, k, block_inequalities=True).actions
            if f.classification == "RowColumn":
                acts += _ineq([(M[0][j], M[0][j + 1]) for j in range(q - 1)], k)
            return acts
        if f.classification == "RowColumn":
            return plan_row_column_sorting(M, k).actions
        if 1.0 - f.signed_fraction > 0.8:
            if q == 1:
                return _ineq([(M[i][0], M[i + 1][0]) for i in range(p - 1)], k)
            if p == 2:
                n = f.generators[0].n
                return [LexReduce(row_swap(M, 0, 1, n), tuple(M[0]) + tuple(M[1]), k)]
            return [SortRows(tuple(tuple(r) for r in M), k)]
    if simple_reflection and f.has_full_reflection:
        # the aggregated cut replaces every other handler on this factor
        return [emit_simple_reflection_cut(f.reflected_support, centers, k)]
    return [LexReduce(g, None, k) for g in f.generators]


def build_plan(report: GroupReport, setting: str, centers, simple_reflection: bool = False) -> HandlerPlan:
    """Handler plan for every factor of ``report`` under ``setting``.

    ``simple_reflection`` lets the automatic setting use the aggregated
    reflection inequality on unstructured factors that contain the full
    reflection, instead of lexicographic reduction."""
    if setting not in SETTINGS:
        raise ValueError(f"unknown setting {setting!r}; choose from {SETTINGS}")
    plan = HandlerPlan([], setting)
    if setting == "sym0":
        return plan
    for k, f in enumerate(report.factors):
        if setting == "auto":
            plan.actions += _auto_actions(f, k, centers, simple_reflection)
        else:
            plan.actions += _setting_actions(f, k, setting, centers)
    return plan


def plan_conflicts(plan: HandlerPlan) -> list[int]:
    """Factors on which the aggregated reflection cut is combined with
    lexicographic reduction (never valid in general)."""
    bad = []
    factors = {a.factor for a in plan.actions}
    for k in sorted(factors):
        acts = plan.for_factor(k)
        has_cut = any(isinstance(a, StaticInequality) and len(a.coefs) > 2
                      and all(c == 1.0 for _, c in a.coefs) for a in acts)
        has_lex = any(isinstance(a, (LexReduce, SortRows)) for a in acts)
        if has_cut and has_lex:
            bad.append(k)
    return bad


def compile_plan(plan: HandlerPlan, centers, integral, n: int):
    """Split a plan into root-level changes and per-node propagators.

    Returns (restrictions: list of (var, lower)), inequalities, propagators)."""
    restrictions, inequalities, props = [], [], []
    integral = np.asarray(integral, dtype=bool)
    for a in plan.actions:
        if isinstance(a, RestrictDomain):
            restrictions.append((a.var, a.lower))
        elif isinstance(a, StaticInequality):
            inequalities.append(a)
        elif isinstance(a, LexReduce):
            props.append(CompiledLex(a.gamma, centers, integral, a.order))
        elif isinstance(a, SortRows):
            props += _sort_rows_lex([tuple(r) for r in a.block], centers, integral, n)
    return restrictions, inequalities, props

"""Problem representation, reflection centers and the signed-permutation action."""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import expr as ex

TOL = 1e-9
RELATIONS = ("le", "ge", "eq")


@dataclass(frozen=True)
class Variable:
    index: int
    lower: float
    upper: float
    integral: bool = False
    obj_coef: float = 0.0
    name: str | None = None

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise ValueError("NaN bound")
        if self.lower > self.upper:
            raise ValueError(f"x{self.index}: lower {self.lower} > upper {self.upper}")
        if (self.integral and math.isfinite(self.lower) and math.isfinite(self.upper)
                and math.ceil(self.lower - TOL) > math.floor(self.upper + TOL)):
            raise ValueError(f"x{self.index}: no integer in [{self.lower}, {self.upper}]")

    @property
    def label(self) -> str:
        return self.name or f"x{self.index}"


@dataclass(frozen=True)
class StableSetGraph:
    """Payload of a stable-set constraint: x_u + x_v <= 1 for each edge."""

    nodes: tuple[int, ...]          # variable index per graph node
    weights: tuple[float, ...]
    edges: tuple[tuple[int, int], ...]  # pairs of graph node positions

    def satisfied(self, x, tol=TOL) -> bool:
        return all(x[self.nodes[a] - 1] + x[self.nodes[b] - 1] <= 1 + tol for a, b in self.edges)


@dataclass(frozen=True)
class Constraint:
    tree: object | None
    relation: str
    rhs: float
    tag: str = "expr"
    payload: StableSetGraph | None = None

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"relation must be one of {RELATIONS}")

    @property
    def sides(self) -> tuple[float, float]:
        if self.relation == "le":
            return -math.inf, self.rhs
        if self.relation == "ge":
            return self.rhs, math.inf
        return self.rhs, self.rhs

    def value(self, x) -> float:
        return ex.evaluate(self.tree, x)

    def violation(self, x) -> float:
        if self.payload is not None:
            return max([0.0] + [x[self.payload.nodes[a] - 1] + x[self.payload.nodes[b] - 1] - 1.0
                                for a, b in self.payload.edges])
        try:
            v = self.value(x)
        except (ex.EvaluationError, OverflowError, ZeroDivisionError):
            return math.inf
        lo, hi = self.sides
        return max(0.0, lo - v, v - hi)

    def variables(self) -> set[int]:
        if self.payload is not None:
            return set(self.payload.nodes)
        return ex.variables(self.tree)


@dataclass(frozen=True)
class Minlp:
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...] = ()
    name: str = ""

    def __post_init__(self):
        for k, v in enumerate(self.variables, start=1):
            if v.index != k:
                raise ValueError("variables must be indexed 1..n in order")
        n = len(self.variables)
        for c in self.constraints:
            bad = [i for i in c.variables() if not 1 <= i <= n]
            if bad:
                raise ValueError(f"constraint references unknown variable(s) {bad}")

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def lower(self) -> np.ndarray:
        return np.array([v.lower for v in self.variables], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([v.upper for v in self.variables], dtype=float)

    @property
    def objective(self) -> np.ndarray:
        return np.array([v.obj_coef for v in self.variables], dtype=float)

    @property
    def integral(self) -> np.ndarray:
        return np.array([v.integral for v in self.variables], dtype=bool)

    def names(self) -> list[str]:
        return [v.label for v in self.variables]

    def objective_value(self, x) -> float:
        return float(np.dot(self.objective, x))

    def max_violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        worst = float(np.max(np.maximum(self.lower - x, x - self.upper), initial=0.0))
        for c in self.constraints:
            worst = max(worst, c.violation(x))
        return max(worst, 0.0)

    def is_feasible(self, x, tol=TOL) -> bool:
        x = np.asarray(x, dtype=float)
        integ = self.integral
        if np.any(np.abs(x[integ] - np.round(x[integ])) > tol):
            return False
        return self.max_violation(x) <= tol


@dataclass(frozen=True)
class ReflectionCenters:
    centers: np.ndarray
    centered_set: frozenset[int]

    def __len__(self):
        return len(self.centers)


@dataclass(frozen=True)
class VariableType:
    rel_lower: float
    rel_upper: float
    obj_coef: float
    integral: bool

    def key(self) -> tuple:
        return (self.rel_lower, self.rel_upper, self.obj_coef, self.integral)

    def close(self, other: "VariableType", tol=TOL) -> bool:
        if self.integral != other.integral:
            return False
        return all(_close(a, b, tol) for a, b in zip(self.key()[:3], other.key()[:3]))


def _close(a: float, b: float, tol: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol


def compute_centers(p: Minlp) -> ReflectionCenters:
    xi = np.zeros(p.n)
    cset = set()
    for v in p.variables:
        lo, hi = v.lower, v.upper
        if math.isfinite(lo) and math.isfinite(hi):
            xi[v.index - 1] = 0.5 * (lo + hi)
            cset.add(v.index)
        elif lo == -math.inf and hi == math.inf:
            cset.add(v.index)  # -inf + inf is taken as 0 here only
    return ReflectionCenters(xi, frozenset(cset))


def _rel(bound: float, center: float) -> float:
    return bound if math.isinf(bound) else bound - center


def variable_type(p: Minlp, i: int, centers: ReflectionCenters | None = None) -> VariableType:
    if i == 0 or abs(i) > p.n:
        raise IndexError(f"signed index {i} out of range for n={p.n}")
    if centers is None:
        centers = compute_centers(p)
    v = p.variables[abs(i) - 1]
    xi = float(centers.centers[abs(i) - 1])
    lo, hi = _rel(v.lower, xi), _rel(v.upper, xi)
    if i > 0:
        return VariableType(lo, hi, v.obj_coef, v.integral)
    return VariableType(-hi, -lo, -v.obj_coef, v.integral)


# ------------------------------------------------------- signed permutations

class SignedPermutation:
    """Bijection on {±1..±n} with g(-i) = -g(i), stored as images of 1..n."""

    __slots__ = ("_img", "_hash")

    def __init__(self, images: Iterable[int]):
        img = tuple(int(v) for v in images)
        n = len(img)
        if sorted(abs(v) for v in img) != list(range(1, n + 1)):
            raise ValueError(f"not a signed permutation: {img}")
        self._img = img
        self._hash = hash(img)

    @classmethod
    def identity(cls, n: int) -> "SignedPermutation":
        return cls(range(1, n + 1))

    @classmethod
    def from_cycles(cls, text: str, n: int) -> "SignedPermutation":
        """Parse signed cycle notation such as ``(1,-2)(2,-1)``.

        A cycle of positive entries implies its negated mirror.
        """
        img = {i: i for i in range(-n, n + 1) if i}
        seen = {}
        for body in re.findall(r"\(([^()]*)\)", text):
            elems = [int(s) for s in body.replace(" ", "").split(",") if s]
            for a, b in zip(elems, elems[1:] + elems[:1]):
                for u, v in ((a, b), (-a, -b)):
                    if abs(u) > n or abs(v) > n:
                        raise ValueError(f"entry out of range in {text!r}")
                    if u in seen and seen[u] != v:
                        raise ValueError(f"inconsistent cycle notation {text!r}")
                    seen[u] = v
                    img[u] = v
        return cls(img[i] for i in range(1, n + 1))

    @property
    def n(self) -> int:
        return len(self._img)

    @property
    def images(self) -> tuple[int, ...]:
        return self._img

    def __call__(self, i: int) -> int:
        return self._img[i - 1] if i > 0 else -self._img[-i - 1]

    def inverse(self) -> "SignedPermutation":
        inv = [0] * self.n
        for i, v in enumerate(self._img, start=1):
            inv[abs(v) - 1] = i if v > 0 else -i
        return SignedPermutation(inv)

    def is_identity(self) -> bool:
        return all(v == i for i, v in enumerate(self._img, start=1))

    def is_unsigned(self) -> bool:
        return all(v > 0 for v in self._img)

    def support(self) -> set[int]:
        return {i for i, v in enumerate(self._img, start=1) if v != i}

    def __mul__(self, other: "SignedPermutation") -> "SignedPermutation":
        return compose(self, other)

    def __eq__(self, other):
        return isinstance(other, SignedPermutation) and self._img == other._img

    def __hash__(self):
        return self._hash

    def cycles(self) -> list[tuple[int, ...]]:
        """Cycles on {±1..±n}, omitting fixed points and all-negative mirrors."""
        seen = set()
        out = []
        for start in [i for i in range(1, self.n + 1)] + [-i for i in range(1, self.n + 1)]:
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            nxt = self(start)
            while nxt != start:
                cyc.append(nxt)
                seen.add(nxt)
                nxt = self(nxt)
            if len(cyc) == 1 or all(v < 0 for v in cyc):
                continue
            pos = [v for v in cyc if v > 0]
            first = cyc.index(min(pos))
            out.append(tuple(cyc[first:] + cyc[:first]))
        return sorted(out, key=lambda c: (abs(c[0]), c))

    def cycle_notation(self) -> str:
        cyc = self.cycles()
        if not cyc:
            return "()"
        return "".join("(" + ",".join(str(v) for v in c) + ")" for c in cyc)

    def __repr__(self):
        return f"SignedPermutation({self.cycle_notation()}, n={self.n})"

    __str__ = cycle_notation


def compose(g2: SignedPermutation, g1: SignedPermutation) -> SignedPermutation:
    """Return g2 ∘ g1 (apply g1 first)."""
    if g1.n != g2.n:
        raise ValueError(f"mismatched sizes {g1.n} and {g2.n}")
    return SignedPermutation(g2(v) for v in g1.images)


def apply_reflection(x, g: SignedPermutation, centers) -> np.ndarray:
    """rho(x; g)_i = xi_i + sign(g^-1(i)) * (x_j - xi_j) with j = |g^-1(i)|."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(getattr(centers, "centers", centers), dtype=float)
    src, sgn = preimage_arrays(g)
    # x_j + (xi_i - xi_j) keeps fixed coordinates exact
    return np.where(sgn > 0, x[src] + (xi - xi[src]), xi - (x[src] - xi[src]))


def preimage_arrays(g: SignedPermutation) -> tuple[np.ndarray, np.ndarray]:
    """0-based source index and sign of g^-1(i) for every position i."""
    src = np.empty(g.n, dtype=np.int64)
    sgn = np.empty(g.n, dtype=float)
    for i, v in enumerate(g.images):
        src[abs(v) - 1] = i
        sgn[abs(v) - 1] = 1.0 if v > 0 else -1.0
    return src, sgn


# -------------------------------------------------------------- the oracle

def _require_bounded(p: Minlp):
    if not (np.all(np.isfinite(p.lower)) and np.all(np.isfinite(p.upper))):
        raise ValueError("sampling oracle needs finite bounds on every variable")


def _sample_box(p: Minlp, rng: np.random.Generator, k: int) -> np.ndarray:
    lo, hi, integ = p.lower, p.upper, p.integral
    pts = lo + (hi - lo) * rng.random((k, p.n))
    if integ.any():
        ilo = np.ceil(lo[integ] - TOL)
        ihi = np.floor(hi[integ] + TOL)
        pts[:, integ] = rng.integers(ilo.astype(np.int64), ihi.astype(np.int64) + 1,
                                     size=(k, int(integ.sum())))
    return pts


def _grid_points(p: Minlp, per_axis: int = 3, max_points: int = 256) -> np.ndarray:
    axes = []
    for v in p.variables:
        if v.integral:
            vals = np.arange(math.ceil(v.lower - TOL), math.floor(v.upper + TOL) + 1, dtype=float)
            if len(vals) > per_axis:
                vals = vals[np.linspace(0, len(vals) - 1, per_axis).round().astype(int)]
        else:
            # irregular interior fractions avoid accidental ties
            vals = v.lower + (v.upper - v.lower) * np.array([0.0, 0.37, 0.81, 1.0][:max(per_axis, 2)])
        axes.append(vals)
    pts = np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, p.n)
    if len(pts) > max_points:
        keep = np.random.default_rng(12345).choice(len(pts), max_points, replace=False)
        pts = pts[np.sort(keep)]
    return pts


def is_symmetry_oracle(p: Minlp, g: SignedPermutation, samples: int = 200, seed: int = 0,
                       points: np.ndarray | None = None) -> bool:
    """Necessary-condition test for g being a symmetry of p.

    Random points x in the box are compared with rho(x; g): feasibility must
    agree (tolerance 1e-9) and the objective value must be unchanged.  A
    passing result does not prove g is a symmetry.
    """
    _require_bounded(p)
    if g.n != p.n:
        raise ValueError("permutation size does not match problem")
    if g.is_identity():
        return True
    centers = compute_centers(p)
    c = p.objective
    if points is None:
        points = _sample_box(p, np.random.default_rng(seed), samples)
    src, sgn = preimage_arrays(g)
    xi = centers.centers
    for x in points:
        y = xi + sgn * (x[src] - xi[src])
        if abs(c @ x - c @ y) > TOL * max(1.0, abs(c @ x)):
            return False
        if p.is_feasible(x) != p.is_feasible(y):
            return False
    return True


def _linear_signature(p: Minlp, k: int):
    con = p.constraints[k]
    if con.payload is not None or con.tree is None:
        return None
    form = ex.affine_form(con.tree)
    if form is None:
        return None
    coefs, const = form
    lo, hi = con.sides
    return {i: a for i, a in coefs.items() if a != 0.0}, lo - const, hi - const


def _mapped_linear(sig, g: SignedPermutation, xi: np.ndarray):
    """Linear constraint obtained by substituting rho(x; g) into sig."""
    coefs, lo, hi = sig
    out: dict[int, float] = {}
    shift = 0.0
    # a . rho(x) = sum_i a_i (xi_i + s_i (x_j - xi_j)), j = |g^-1(i)|
    inv = g.inverse()
    for i, a in coefs.items():
        pre = inv(i)
        j, s = abs(pre), (1.0 if pre > 0 else -1.0)
        out[j] = out.get(j, 0.0) + a * s
        shift += a * (xi[i - 1] - s * xi[j - 1])
    return {j: a for j, a in out.items() if a != 0.0}, lo - shift, hi - shift


def _sig_key(sig, digits=9):
    coefs, lo, hi = sig
    r = lambda v: v if math.isinf(v) else round(v, digits) + 0.0
    return (tuple(sorted((j, r(a)) for j, a in coefs.items())), r(lo), r(hi))


def formulation_invariant(p: Minlp, g: SignedPermutation, centers=None, points=None) -> bool:
    """Exact check that g maps the formulation onto itself.

    Variable types must be preserved.  Linear constraints must be permuted
    among themselves (compared coefficient by coefficient).  Nonlinear
    constraints are compared through the multiset of their values on a
    deterministic point set.
    """
    if centers is None:
        centers = compute_centers(p)
    for i in range(1, p.n + 1):
        if not variable_type(p, i, centers).close(variable_type(p, g(i), centers)):
            return False
    xi = centers.centers
    lin, other = [], []
    for k in range(len(p.constraints)):
        sig = _linear_signature(p, k)
        (lin if sig is not None else other).append((k, sig))
    before = sorted(_sig_key(s) for _, s in lin)
    after = sorted(_sig_key(_mapped_linear(s, g, xi)) for _, s in lin)
    if before != after:
        return False
    if other:
        if points is None:
            points = _grid_points(p)
        src, sgn = preimage_arrays(g)
        for x in points:
            y = xi + sgn * (x[src] - xi[src])
            vx = sorted(_constraint_key(p.constraints[k], x) for k, _ in other)
            vy = sorted(_constraint_key(p.constraints[k], y) for k, _ in other)
            if vx != vy:
                return False
    return True


def _constraint_key(con: Constraint, x):
    if con.payload is not None:
        return ("ss", con.payload.satisfied(x))
    try:
        v = round(con.value(x), 7) + 0.0
    except (ex.EvaluationError, ZeroDivisionError, OverflowError):
        v = math.nan
    lo, hi = con.sides
    return (con.relation, lo, hi, repr(v))


def all_signed_permutations(n: int) -> Iterable[SignedPermutation]:
    for perm in itertools.permutations(range(1, n + 1)):
        for signs in itertools.product((1, -1), repeat=n):
            yield SignedPermutation(s * v for s, v in zip(signs, perm))


def enumerate_symmetries_bruteforce(p: Minlp, max_n: int = 6, samples: int = 64,
                                    seed: int = 0) -> set[SignedPermutation]:
    """Every signed permutation that is a formulation symmetry of p.

    Candidates are built position by position, pruned by variable types, then
    checked with ``formulation_invariant`` and finally with the sampling
    oracle.  Exponential in n; refuses n > max_n.
    """
    if p.n > max_n:
        raise ValueError(f"brute force limited to n <= {max_n}, got {p.n}")
    _require_bounded(p)
    centers = compute_centers(p)
    n = p.n
    types = {i: variable_type(p, i, centers) for i in range(-n, n + 1) if i}
    grid = _grid_points(p)
    rng_pts = _sample_box(p, np.random.default_rng(seed), samples)
    found = set()

    def rec(prefix, used):
        if len(prefix) == n:
            g = SignedPermutation(prefix)
            if formulation_invariant(p, g, centers, grid) and \
                    is_symmetry_oracle(p, g, points=rng_pts):
                found.add(g)
            return
        i = len(prefix) + 1
        for j in range(1, n + 1):
            if j in used:
                continue
            for s in (1, -1):
                if types[i].close(types[s * j]):
                    rec(prefix + [s * j], used | {j})

    rec([], frozenset())
    return found

"""Spatial branch-and-bound over interval arithmetic.

Constraints are compiled into one flat tape that the interval kernels walk.
Each node runs bound tightening together with the symmetry propagators of a
handler plan, is bounded by the linear objective over its box, and is split
on the variable of widest relative width.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize

from . import expr as ex
from ._kernels import (T_ABS, T_CONST, T_NEG, T_POW, T_PROD, T_SUM, T_VAR, fbbt_kernel,
                       interval_forward)
from .handle import BoundsBox, HandlerPlan, compile_plan
from .model import Minlp, compute_centers

log = logging.getLogger(__name__)

FEAS_TOL = 1e-6
_KIND_CODE = {"sum": T_SUM, "prod": T_PROD, "pow": T_POW, "abs": T_ABS, "neg": T_NEG}


class Tape:
    """Forest of expression trees in postorder with CSR child lists."""

    def __init__(self):
        self.op: list[int] = []
        self.arg: list[int] = []
        self.val: list[float] = []
        self.children: list[list[int]] = []
        self.roots: list[int] = []
        self.slo: list[float] = []
        self.shi: list[float] = []

    def _push(self, op, arg=0, val=0.0, children=()):
        self.op.append(op)
        self.arg.append(arg)
        self.val.append(val)
        self.children.append(list(children))
        return len(self.op) - 1

    def add_tree(self, t) -> int:
        if isinstance(t, ex.Value):
            return self._push(T_CONST, val=float(t.value))
        if isinstance(t, ex.Var):
            return self._push(T_VAR, arg=t.index - 1, val=float(t.weight))
        kids = [self.add_tree(c) for c in t.children]
        return self._push(_KIND_CODE[t.kind], arg=int(t.exponent or 0), children=kids)

    def add_linear(self, coefs, lo, hi) -> int:
        kids = [self._push(T_VAR, arg=v - 1, val=float(c)) for v, c in coefs]
        if len(kids) == 1:
            root = kids[0]
        else:
            root = self._push(T_SUM, children=kids)
        return self.add_row(root, lo, hi)

    def add_row(self, root, lo, hi) -> int:
        self.roots.append(root)
        self.slo.append(float(lo))
        self.shi.append(float(hi))
        return len(self.roots) - 1

    def arrays(self):
        cptr = np.zeros(len(self.op) + 1, dtype=np.int64)
        for k, ch in enumerate(self.children):
            cptr[k + 1] = cptr[k] + len(ch)
        cidx = np.array([c for ch in self.children for c in ch], dtype=np.int64)
        return (np.array(self.op, dtype=np.int64), np.array(self.arg, dtype=np.int64),
                np.array(self.val, dtype=float), cptr, cidx,
                np.array(self.roots, dtype=np.int64), np.array(self.slo, dtype=float),
                np.array(self.shi, dtype=float))


def interval_eval(t, box: BoundsBox) -> tuple[float, float]:
    """Natural interval extension of ``t`` over ``box``."""
    tape = Tape()
    root = tape.add_tree(t)
    op, arg, val, cptr, cidx, *_ = tape.arrays()
    L = np.empty(len(op))
    U = np.empty(len(op))
    interval_forward(op, arg, val, cptr, cidx, np.asarray(box.lower, float),
                     np.asarray(box.upper, float), L, U)
    return float(L[root]), float(U[root])


@dataclass(frozen=True)
class SolveResult:
    status: str                     # optimal, infeasible or limit
    x: np.ndarray | None
    value: float | None
    node_count: int
    primal_dual_integral: float
    lower_bound: float

    def to_dict(self) -> dict:
        return {"status": self.status,
                "x": None if self.x is None else [float(v) for v in self.x],
                "value": self.value, "node_count": self.node_count,
                "primal_dual_integral": self.primal_dual_integral,
                "lower_bound": self.lower_bound}


def _gap(ub, lb) -> float:
    """Normalised primal-dual gap in [0, 1]."""
    if ub is None or not math.isfinite(lb):
        return 1.0
    if abs(ub - lb) <= 1e-12:
        return 0.0
    if ub * lb < 0:
        return 1.0
    return min(1.0, abs(ub - lb) / max(abs(ub), abs(lb)))


class _Problem:
    """Compiled problem data shared by every node."""

    def __init__(self, p: Minlp, plan: HandlerPlan | None):
        self.p = p
        self.n = p.n
        self.c = p.objective
        self.integral = p.integral
        centers = compute_centers(p)
        tape = Tape()
        for con in p.constraints:
            if con.payload is not None:
                nodes = con.payload.nodes
                for a, b in con.payload.edges:
                    tape.add_linear([(nodes[a], 1.0), (nodes[b], 1.0)], -np.inf, 1.0)
                continue
            lo, hi = con.sides
            tape.add_row(tape.add_tree(con.tree), lo, hi)
        self.model_rows = len(tape.roots)
        restrictions, inequalities, props = compile_plan(
            plan or HandlerPlan(), centers, self.integral, self.n)
        for ineq in inequalities:
            lo, hi = (ineq.rhs, np.inf) if ineq.sense == "ge" else (-np.inf, ineq.rhs)
            tape.add_linear(list(ineq.coefs), lo, hi)
        nz = [(i + 1, float(ci)) for i, ci in enumerate(self.c) if ci != 0.0]
        self.cutoff_row = tape.add_linear(nz, -np.inf, np.inf) if nz else None
        (self.op, self.arg, self.val, self.cptr, self.cidx,
         self.roots, self.slo, self.shi) = tape.arrays()
        self.restrictions = restrictions
        self.props = props
        self.orig_lo = p.lower
        self.orig_hi = p.upper
        self.width = np.where(self.orig_hi > self.orig_lo, self.orig_hi - self.orig_lo, 1.0)
        self._L = np.empty(len(self.op))
        self._U = np.empty(len(self.op))
        m = self.model_rows
        self.eq_rows = np.where(self.slo[:m] == self.shi[:m])[0]
        self.lo_rows = np.where((self.slo[:m] != self.shi[:m]) & np.isfinite(self.slo[:m]))[0]
        self.hi_rows = np.where((self.slo[:m] != self.shi[:m]) & np.isfinite(self.shi[:m]))[0]

    def set_cutoff(self, value: float):
        if self.cutoff_row is not None:
            self.shi[self.cutoff_row] = value

    def propagate(self, lo, hi) -> bool:
        for _ in range(4):
            if fbbt_kernel(self.op, self.arg, self.val, self.cptr, self.cidx, self.roots,
                           self.slo, self.shi, lo, hi, self.integral, 10, 1e-10, 1e-7):
                return False
            if not self.props:
                return True
            before = np.concatenate((lo, hi))
            for prop in self.props:
                if not prop(lo, hi):
                    return False
            if np.any(lo > hi + 1e-9):
                return False
            if np.allclose(before, np.concatenate((lo, hi)), rtol=0, atol=1e-9):
                return True
        return True

    def bound(self, lo, hi) -> float:
        return float(np.sum(np.where(self.c > 0, self.c * lo, self.c * hi)))

    def row_values(self, x) -> np.ndarray:
        """Values of the model constraint rows at the point ``x``."""
        interval_forward(self.op, self.arg, self.val, self.cptr, self.cidx, x, x,
                         self._L, self._U)
        v = self._L[self.roots[:self.model_rows]]
        return np.where(np.isfinite(v), v, np.nan)

    def feasible(self, x) -> bool:
        m = self.model_rows
        v = self.row_values(x)
        if np.any(np.isnan(v)):
            return False
        if np.any(v < self.slo[:m] - FEAS_TOL) or np.any(v > self.shi[:m] + FEAS_TOL):
            return False
        # exact check on the original model
        return self.p.is_feasible(x, FEAS_TOL)


def _candidates(prob: _Problem, lo, hi):
    mid = 0.5 * (lo + hi)
    corner = np.where(prob.c > 0, lo, np.where(prob.c < 0, hi, mid))
    for x in (corner, mid):
        x = np.where(prob.integral, np.round(x), x)
        yield np.clip(x, lo, hi)


def _local_solve(prob: _Problem, lo, hi, x0):
    """Local NLP solve inside [lo, hi] with integral variables fixed."""
    integ = prob.integral
    x0 = np.clip(np.where(integ, np.round(x0), x0), lo, hi)
    free = ~integ & (hi > lo)
    if not free.any():
        return x0
    idx = np.where(free)[0]

    def full(z):
        x = x0.copy()
        x[idx] = z
        return x

    def rows(z):
        return np.nan_to_num(prob.row_values(full(z)), nan=-1e6)

    cons = []
    if len(prob.eq_rows):
        cons.append({"type": "eq", "fun": lambda z: rows(z)[prob.eq_rows] - prob.slo[prob.eq_rows]})
    if len(prob.lo_rows) or len(prob.hi_rows):
        cons.append({"type": "ineq", "fun": lambda z: np.concatenate((
            rows(z)[prob.lo_rows] - prob.slo[prob.lo_rows],
            prob.shi[prob.hi_rows] - rows(z)[prob.hi_rows]))})
    c = prob.c[idx]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = minimize(lambda z: float(c @ z), x0[idx], jac=lambda z: c, method="SLSQP",
                       bounds=list(zip(lo[idx], hi[idx])), constraints=cons,
                       options={"maxiter": 200, "ftol": 1e-12})
    return full(np.clip(res.x, lo[idx], hi[idx]))


def solve(p: Minlp, plan: HandlerPlan | None = None, max_nodes: int = 100_000,
          gap: float = 1e-4, time_limit: float | None = None, local_every: int = 200,
          seed: int = 0) -> SolveResult:
    """Minimise ``p`` by best-first branch and bound, pruning with ``plan``."""
    if not (np.all(np.isfinite(p.lower)) and np.all(np.isfinite(p.upper))):
        raise ValueError("all variable bounds must be finite")
    prob = _Problem(p, plan)
    t0 = time.perf_counter()
    lo, hi = prob.orig_lo.copy(), prob.orig_hi.copy()
    for var, lower in prob.restrictions:
        lo[var - 1] = max(lo[var - 1], lower)

    best_x, best_v = None, None
    counter = itertools.count()
    history: list[float] = []
    rng = np.random.default_rng(seed)

    def offer(x):
        nonlocal best_x, best_v
        if not prob.feasible(x):
            return
        v = float(prob.c @ x)
        if best_v is None or v < best_v - 1e-12:
            best_x, best_v = np.array(x, dtype=float), v
            prob.set_cutoff(v - gap * max(abs(v), 1e-9) + 1e-12)

    def heuristics(lo, hi, starts=1):
        for x in _candidates(prob, lo, hi):
            offer(x)
        if (~prob.integral).any():
            offer(_local_solve(prob, lo, hi, 0.5 * (lo + hi)))
            for _ in range(starts - 1):
                offer(_local_solve(prob, lo, hi, lo + rng.random(prob.n) * (hi - lo)))

    heap = []
    nodes = 0
    global_lb = -math.inf
    status = None
    if prob.propagate(lo, hi):
        heuristics(lo, hi, starts=8)
        heapq.heappush(heap, (prob.bound(lo, hi), next(counter), lo, hi))
    while heap:
        node_lb, _, lo, hi = heapq.heappop(heap)
        global_lb = max(global_lb, node_lb)
        if best_v is not None and best_v - node_lb <= gap * max(abs(best_v), 1e-9) + 1e-12:
            # node_lb is the smallest bound left, so it is the global one
            status = "optimal"
            break
        if nodes >= max_nodes or (time_limit is not None and time.perf_counter() - t0 > time_limit):
            heapq.heappush(heap, (node_lb, next(counter), lo, hi))
            status = "limit"
            break
        nodes += 1
        history.append(_gap(best_v, global_lb))
        lo, hi = lo.copy(), hi.copy()
        if not prob.propagate(lo, hi):
            continue
        lb = max(node_lb, prob.bound(lo, hi))
        for x in _candidates(prob, lo, hi):
            offer(x)
        if local_every and nodes % local_every == 0 and (~prob.integral).any():
            offer(_local_solve(prob, lo, hi, 0.5 * (lo + hi)))
        if best_v is not None and lb >= best_v - gap * max(abs(best_v), 1e-9):
            continue
        rel = np.where(hi > lo, (hi - lo) / prob.width, 0.0)
        rel[prob.integral & (hi - lo < 0.5)] = 0.0
        j = int(np.argmax(rel))
        if rel[j] <= 0.0 or np.max(hi - lo) <= 1e-6:
            continue
        mid = 0.5 * (lo[j] + hi[j])
        if prob.integral[j]:
            left_hi, right_lo = math.floor(mid), math.floor(mid) + 1.0
        else:
            left_hi = right_lo = mid
        for a, b in ((lo[j], left_hi), (right_lo, hi[j])):
            clo, chi = lo.copy(), hi.copy()
            clo[j], chi[j] = a, b
            heapq.heappush(heap, (lb, next(counter), clo, chi))
    if status is None:
        status = "infeasible" if best_v is None else "optimal"
        if best_v is not None:
            # every remaining node was pruned against the incumbent
            global_lb = best_v
    elif status == "limit":
        global_lb = max(global_lb, min(h[0] for h in heap))
    if best_v is not None:
        global_lb = min(global_lb, best_v)
    history.append(_gap(best_v, global_lb))
    integral = float(trapezoid(history)) if len(history) > 1 else 0.0
    log.info("solve %s: %s value=%s nodes=%d", p.name, status, best_v, nodes)
    return SolveResult(status, best_x, best_v, nodes, integral,
                       global_lb if math.isfinite(global_lb) else -math.inf)

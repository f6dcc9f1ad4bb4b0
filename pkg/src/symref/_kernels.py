"""Array kernels shared by the automorphism search, lexicographic reduction
and interval propagation.  See ``_accel`` for how compilation is selected."""
from __future__ import annotations

import numpy as np

from ._accel import HAVE_NUMBA, maybe_njit

# ---------------------------------------------------------------- refinement


@maybe_njit
def _relabel(keys, cells):
    order = np.argsort(keys, kind="mergesort")
    r = 0
    prev = keys[order[0]]
    for t in range(order.shape[0]):
        idx = order[t]
        if keys[idx] != prev:
            r += 1
            prev = keys[idx]
        cells[idx] = r
    return r + 1


@maybe_njit
def refine_loops(indptr, indices, cells):
    """Coarsest equitable refinement by repeated splitting against each cell.

    ``cells`` holds ordered labels 0..k-1 and is refined in place; labels stay
    isomorphism invariant because every split is keyed by (label, count).
    """
    n = cells.shape[0]
    if n == 0:
        return 0
    k = 0
    for v in range(n):
        if cells[v] + 1 > k:
            k = cells[v] + 1
    cnt = np.zeros(n, dtype=np.int64)
    keys = np.empty(n, dtype=np.int64)
    changed = True
    while changed:
        changed = False
        s = 0
        while s < k and k < n:
            for v in range(n):
                cnt[v] = 0
            for v in range(n):
                if cells[v] == s:
                    for e in range(indptr[v], indptr[v + 1]):
                        cnt[indices[e]] += 1
            for v in range(n):
                keys[v] = cells[v] * (n + 1) + cnt[v]
            newk = _relabel(keys, cells)
            if newk != k:
                changed = True
                k = newk
            s += 1
    return k


def refine_numpy(indptr, indices, cells):
    """Vectorised colour refinement (1-dimensional Weisfeiler-Leman).

    Each round keys a vertex by its label and the count of neighbours in every
    cell; rows are ranked lexicographically.  Same fixpoint as the loop
    version as a set partition, possibly with a different label order.
    """
    n = cells.shape[0]
    if n == 0:
        return 0
    deg = np.diff(indptr)
    src = np.repeat(np.arange(n), deg)
    k = int(cells.max()) + 1
    while True:
        counts = np.zeros((n, k + 1), dtype=np.int64)
        counts[:, 0] = cells
        if len(indices):
            np.add.at(counts, (src, cells[indices] + 1), 1)
        _, inv = np.unique(counts, axis=0, return_inverse=True)
        inv = inv.reshape(-1).astype(np.int64)
        newk = int(inv.max()) + 1
        cells[:] = inv
        if newk == k:
            return k
        k = newk


def refine(indptr, indices, cells, use_loops: bool | None = None) -> int:
    if use_loops is None:
        use_loops = HAVE_NUMBA
    if use_loops:
        return int(refine_loops(indptr, indices, cells))
    return refine_numpy(indptr, indices, cells)


# ------------------------------------------------------- lexicographic order

@maybe_njit
def _round_int(lo, hi, integral, j, tol):
    if integral[j]:
        lo[j] = np.ceil(lo[j] - tol)
        hi[j] = np.floor(hi[j] + tol)


@maybe_njit
def _image_bounds(lo, hi, src, sgn, xi, i):
    j = src[i]
    if sgn[i] > 0:
        return xi[i] + lo[j] - xi[j], xi[i] + hi[j] - xi[j]
    return xi[i] - (hi[j] - xi[j]), xi[i] - (lo[j] - xi[j])


@maybe_njit
def _set_image_lower(lo, hi, src, sgn, xi, i, bound):
    # rho_i >= bound, translated to the source variable
    j = src[i]
    if sgn[i] > 0:
        v = bound - xi[i] + xi[j]
        if v > lo[j]:
            lo[j] = v
    else:
        v = xi[j] - (bound - xi[i])
        if v < hi[j]:
            hi[j] = v


@maybe_njit
def _set_image_upper(lo, hi, src, sgn, xi, i, bound):
    j = src[i]
    if sgn[i] > 0:
        v = bound - xi[i] + xi[j]
        if v < hi[j]:
            hi[j] = v
    else:
        v = xi[j] - (bound - xi[i])
        if v > lo[j]:
            lo[j] = v


@maybe_njit
def _lex_walk(lo, hi, src, sgn, xi, integral, order, start, tol, tighten):
    """Walk positions from ``start``.

    Returns (status, position): status 0 = stopped at a free position that
    is returned, 1 = infeasible, 2 = strict inequality implied (stop), 3 = all
    positions equal.  With ``tighten`` the free position is tightened and the
    walk continues while equality becomes forced.
    """
    m = order.shape[0]
    t = start
    while t < m:
        i = order[t]
        j = src[i]
        if j == i and sgn[i] > 0:
            t += 1
            continue
        rl, rh = _image_bounds(lo, hi, src, sgn, xi, i)
        if hi[i] < rl - tol:
            return 1, t
        if lo[i] > rh + tol:
            return 2, t
        if lo[i] >= hi[i] - tol and rl >= rh - tol and abs(lo[i] - rl) <= tol:
            t += 1
            continue
        if not tighten:
            return 0, t
        if j == i:
            # x_i >= 2 xi_i - x_i  <=>  x_i >= xi_i
            if xi[i] > lo[i]:
                lo[i] = xi[i]
        else:
            if rl > lo[i]:
                lo[i] = rl
            _set_image_upper(lo, hi, src, sgn, xi, i, hi[i])
        _round_int(lo, hi, integral, i, tol)
        _round_int(lo, hi, integral, j, tol)
        if lo[i] > hi[i] + tol or lo[j] > hi[j] + tol:
            return 1, t
        rl, rh = _image_bounds(lo, hi, src, sgn, xi, i)
        if lo[i] >= hi[i] - tol and rl >= rh - tol and abs(lo[i] - rl) <= tol:
            t += 1
            continue
        return 0, t
    return 3, m


@maybe_njit
def lex_reduce_kernel(lo, hi, src, sgn, xi, integral, order, tol):
    """Enforce x >=lex rho(x) on the bounds (in place).  Returns 1 if
    infeasible, else 0."""
    status, t = _lex_walk(lo, hi, src, sgn, xi, integral, order, 0, tol, True)
    if status == 1:
        return 1
    if status != 0:
        return 0
    # could x_i = rho_i hold at the stopping position?  Test the rest of the
    # order under that hypothesis on a scratch copy.
    i = order[t]
    j = src[i]
    rl, rh = _image_bounds(lo, hi, src, sgn, xi, i)
    a = max(lo[i], rl)
    b = min(hi[i], rh)
    if j == i:
        a = max(lo[i], xi[i])
        b = min(hi[i], xi[i])
    lo2 = lo.copy()
    hi2 = hi.copy()
    lo2[i] = a
    hi2[i] = b
    _set_image_lower(lo2, hi2, src, sgn, xi, i, a)
    _set_image_upper(lo2, hi2, src, sgn, xi, i, b)
    _round_int(lo2, hi2, integral, i, tol)
    _round_int(lo2, hi2, integral, j, tol)
    infeasible = lo2[i] > hi2[i] + tol or lo2[j] > hi2[j] + tol
    if not infeasible:
        s2, t2 = _lex_walk(lo2, hi2, src, sgn, xi, integral, order, t + 1, tol, False)
        infeasible = s2 == 1
    if infeasible and j == i and integral[i]:
        v = np.floor(xi[i] + tol) + 1.0
        if v > lo[i]:
            lo[i] = v
        if lo[i] > hi[i] + tol:
            return 1
    elif infeasible and integral[i] and integral[j]:
        off = xi[i] - sgn[i] * xi[j]
        if abs(off - np.round(off)) <= tol:
            # x_i > rho_i on the integer lattice means x_i >= rho_i + 1
            rl, rh = _image_bounds(lo, hi, src, sgn, xi, i)
            if rl + 1.0 > lo[i]:
                lo[i] = rl + 1.0
            _set_image_upper(lo, hi, src, sgn, xi, i, hi[i] - 1.0)
            _round_int(lo, hi, integral, i, tol)
            _round_int(lo, hi, integral, j, tol)
            if lo[i] > hi[i] + tol or lo[j] > hi[j] + tol:
                return 1
    return 0


# ------------------------------------------------------- interval propagation
# tape op codes (postorder, children before parents)
T_VAR, T_CONST, T_SUM, T_PROD, T_POW, T_ABS, T_NEG = 0, 1, 2, 3, 4, 5, 6


@maybe_njit
def _imul(a, b, c, d):
    lo = np.inf
    hi = -np.inf
    for u in (a, b):
        for v in (c, d):
            w = u * v
            if w != w:          # 0 * inf
                w = 0.0
            if w < lo:
                lo = w
            if w > hi:
                hi = w
    return lo, hi


@maybe_njit
def _idiv(a, b, c, d):
    """[a,b] / [c,d] for 0 outside [c,d]; nan signals 'no information'."""
    lo = np.inf
    hi = -np.inf
    for u in (a, b):
        for v in (c, d):
            if np.isinf(u) and np.isinf(v):
                return np.nan, np.nan
            w = u / v
            if w != w:
                return np.nan, np.nan
            if w < lo:
                lo = w
            if w > hi:
                hi = w
    return lo, hi


@maybe_njit
def _ipow_pos(lo, hi, e):
    if e == 0:
        return 1.0, 1.0
    if e % 2 == 1:
        return lo ** e, hi ** e
    if lo >= 0.0:
        return lo ** e, hi ** e
    if hi <= 0.0:
        return hi ** e, lo ** e
    a = lo ** e
    b = hi ** e
    return 0.0, a if a > b else b


@maybe_njit
def _irecip(lo, hi):
    if lo > 0.0:
        return 1.0 / hi, (np.inf if lo == 0.0 else 1.0 / lo)
    if hi < 0.0:
        return 1.0 / hi if hi != 0.0 else -np.inf, 1.0 / lo
    if lo == 0.0 and hi > 0.0:
        return 1.0 / hi, np.inf
    if hi == 0.0 and lo < 0.0:
        return -np.inf, 1.0 / lo
    return -np.inf, np.inf


@maybe_njit
def _iroot(v, e):
    # real e-th root, sign-aware for odd e
    if v == np.inf or v == -np.inf:
        return v
    if v < 0.0:
        return -((-v) ** (1.0 / e))
    return v ** (1.0 / e)


@maybe_njit
def interval_forward(op, arg, val, cptr, cidx, lo, hi, L, U):
    """Evaluate every tape node over the box [lo, hi]."""
    K = op.shape[0]
    for k in range(K):
        o = op[k]
        if o == 0:
            c = val[k]
            a = lo[arg[k]] * c
            b = hi[arg[k]] * c
            if a != a:
                a = 0.0
            if b != b:
                b = 0.0
            if a <= b:
                L[k] = a
                U[k] = b
            else:
                L[k] = b
                U[k] = a
        elif o == 1:
            L[k] = val[k]
            U[k] = val[k]
        elif o == 2:
            s = 0.0
            t = 0.0
            for e in range(cptr[k], cptr[k + 1]):
                s += L[cidx[e]]
                t += U[cidx[e]]
            L[k] = s
            U[k] = t
        elif o == 3:
            a = 1.0
            b = 1.0
            for e in range(cptr[k], cptr[k + 1]):
                a, b = _imul(a, b, L[cidx[e]], U[cidx[e]])
            L[k] = a
            U[k] = b
        elif o == 4:
            ch = cidx[cptr[k]]
            ex = arg[k]
            if ex >= 0:
                L[k], U[k] = _ipow_pos(L[ch], U[ch], ex)
            else:
                a, b = _ipow_pos(L[ch], U[ch], -ex)
                L[k], U[k] = _irecip(a, b)
        elif o == 5:
            ch = cidx[cptr[k]]
            a = L[ch]
            b = U[ch]
            if a >= 0.0:
                L[k] = a
                U[k] = b
            elif b <= 0.0:
                L[k] = -b
                U[k] = -a
            else:
                L[k] = 0.0
                U[k] = -a if -a > b else b
        else:
            ch = cidx[cptr[k]]
            L[k] = -U[ch]
            U[k] = -L[ch]


@maybe_njit
def _narrow(L, U, k, a, b, eps):
    """Intersect node k with [a, b] widened by eps; False if empty."""
    if a == a:
        a = a - eps * (1.0 + abs(a))
        if a > L[k]:
            L[k] = a
    if b == b:
        b = b + eps * (1.0 + abs(b))
        if b < U[k]:
            U[k] = b
    return L[k] <= U[k]


@maybe_njit
def _pow_back(L, U, ch, nl, nh, e, eps):
    if e % 2 == 1:
        return _narrow(L, U, ch, _iroot(nl, e), _iroot(nh, e), eps)
    if nh < 0.0:
        return False
    ha = _iroot(nh, e)
    la = _iroot(nl, e) if nl > 0.0 else 0.0
    if L[ch] >= 0.0:
        return _narrow(L, U, ch, la, ha, eps)
    if U[ch] <= 0.0:
        return _narrow(L, U, ch, -ha, -la, eps)
    if not _narrow(L, U, ch, -ha, ha, eps):
        return False
    if la > 0.0:
        if L[ch] > -la:
            return _narrow(L, U, ch, la, np.inf, eps)
        if U[ch] < la:
            return _narrow(L, U, ch, -np.inf, -la, eps)
    return True


@maybe_njit
def interval_backward(op, arg, val, cptr, cidx, L, U, eps):
    """One reverse sweep projecting node ranges onto children.  Root ranges
    must already be intersected with the constraint sides.  Returns False on
    an empty range."""
    K = op.shape[0]
    for k in range(K - 1, -1, -1):
        if L[k] > U[k]:
            return False
        o = op[k]
        nl = L[k]
        nh = U[k]
        if o <= 1:
            continue
        if o == 2:
            s0 = cptr[k]
            s1 = cptr[k + 1]
            sl = 0.0
            su = 0.0
            nli = 0
            nui = 0
            for e in range(s0, s1):
                c = cidx[e]
                if np.isinf(L[c]):
                    nli += 1
                else:
                    sl += L[c]
                if np.isinf(U[c]):
                    nui += 1
                else:
                    su += U[c]
            for e in range(s0, s1):
                c = cidx[e]
                # child <= nh - (sum of other lowers), child >= nl - (sum of other uppers)
                ol_inf = nli - (1 if np.isinf(L[c]) else 0)
                ou_inf = nui - (1 if np.isinf(U[c]) else 0)
                a = np.nan
                b = np.nan
                if ou_inf == 0 and not np.isinf(nl):
                    a = nl - (su - (0.0 if np.isinf(U[c]) else U[c]))
                if ol_inf == 0 and not np.isinf(nh):
                    b = nh - (sl - (0.0 if np.isinf(L[c]) else L[c]))
                if not _narrow(L, U, c, a, b, eps):
                    return False
        elif o == 3:
            s0 = cptr[k]
            s1 = cptr[k + 1]
            for e in range(s0, s1):
                c = cidx[e]
                a = 1.0
                b = 1.0
                for f in range(s0, s1):
                    if f != e:
                        a, b = _imul(a, b, L[cidx[f]], U[cidx[f]])
                if a > 0.0 or b < 0.0:
                    qa, qb = _idiv(nl, nh, a, b)
                    if not _narrow(L, U, c, qa, qb, eps):
                        return False
        elif o == 4:
            ch = cidx[cptr[k]]
            ex = arg[k]
            if ex == 0:
                continue
            if ex > 0:
                if not _pow_back(L, U, ch, nl, nh, ex, eps):
                    return False
            else:
                m = -ex
                if m % 2 == 0:
                    if nh <= 0.0:
                        return False
                    pa = 1.0 / nh if not np.isinf(nh) else 0.0
                    pb = 1.0 / nl if nl > 0.0 else np.inf
                elif nl > 0.0 or nh < 0.0:
                    pa, pb = _irecip(nl, nh)
                else:
                    continue
                if not _pow_back(L, U, ch, pa, pb, m, eps):
                    return False
        elif o == 5:
            ch = cidx[cptr[k]]
            if nh < 0.0:
                return False
            lo_abs = nl if nl > 0.0 else 0.0
            if L[ch] >= 0.0:
                ok = _narrow(L, U, ch, lo_abs, nh, eps)
            elif U[ch] <= 0.0:
                ok = _narrow(L, U, ch, -nh, -lo_abs, eps)
            else:
                ok = _narrow(L, U, ch, -nh, nh, eps)
                if ok and lo_abs > 0.0:
                    if L[ch] > -lo_abs:
                        ok = _narrow(L, U, ch, lo_abs, np.inf, eps)
                    elif U[ch] < lo_abs:
                        ok = _narrow(L, U, ch, -np.inf, -lo_abs, eps)
            if not ok:
                return False
        else:
            ch = cidx[cptr[k]]
            if not _narrow(L, U, ch, -nh, -nl, eps):
                return False
    return True


@maybe_njit
def fbbt_kernel(op, arg, val, cptr, cidx, roots, slo, shi, lo, hi, integral,
                rounds, eps, feas_tol):
    """Feasibility-based bound tightening over all constraints, in place.

    Returns 1 if the box is proven infeasible, else 0."""
    K = op.shape[0]
    n = lo.shape[0]
    L = np.empty(K)
    U = np.empty(K)
    for _ in range(rounds):
        interval_forward(op, arg, val, cptr, cidx, lo, hi, L, U)
        for r in range(roots.shape[0]):
            k = roots[r]
            a = slo[r] - feas_tol
            b = shi[r] + feas_tol
            if U[k] < a or L[k] > b:
                return 1
            if a > L[k]:
                L[k] = a
            if b < U[k]:
                U[k] = b
        if not interval_backward(op, arg, val, cptr, cidx, L, U, eps):
            return 1
        # collect variable ranges from the leaves
        nlo = lo.copy()
        nhi = hi.copy()
        for k in range(K):
            if op[k] == 0 and val[k] != 0.0:
                c = val[k]
                a = L[k] / c
                b = U[k] / c
                if c < 0.0:
                    a, b = b, a
                j = arg[k]
                if a > nlo[j]:
                    nlo[j] = a
                if b < nhi[j]:
                    nhi[j] = b
        changed = False
        for j in range(n):
            if integral[j]:
                nlo[j] = np.ceil(nlo[j] - 1e-9)
                nhi[j] = np.floor(nhi[j] + 1e-9)
            if nlo[j] > nhi[j]:
                if nlo[j] - nhi[j] > feas_tol * (1.0 + abs(nlo[j])) or integral[j]:
                    return 1
                m = 0.5 * (nlo[j] + nhi[j])
                nlo[j] = m
                nhi[j] = m
            w = hi[j] - lo[j]
            thr = 1e-3 * w if w > 1e-9 else 1e-12
            if nlo[j] - lo[j] > thr or hi[j] - nhi[j] > thr:
                changed = True
            lo[j] = nlo[j]
            hi[j] = nhi[j]
        if not changed:
            break
    return 0

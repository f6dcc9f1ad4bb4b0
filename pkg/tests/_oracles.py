"""Independent reference implementations used by the tests."""
from __future__ import annotations

import itertools

import numpy as np

from symref import expr as ex
from symref.handle import LexReduce, RestrictDomain, SortRows, StaticInequality
from symref.model import Constraint, Minlp, SignedPermutation, Variable, apply_reflection


def brute_force_automorphisms(colors, edges, limit: int | None = None):
    """All colour-preserving vertex permutations preserving the edge set.

    Exhaustive backtracking: vertices are assigned in index order and a
    partial map is extended only while it keeps colours and adjacency among
    the assigned vertices.  Returns None once more than ``limit`` are found.
    """
    n = len(colors)
    colors = [int(c) for c in colors]
    adj = [[False] * n for _ in range(n)]
    for u, v in edges:
        adj[u][v] = adj[v][u] = True
    out: set[tuple[int, ...]] = set()
    img = [-1] * n
    used = [False] * n

    def extend(u):
        if limit is not None and len(out) > limit:
            return
        if u == n:
            out.add(tuple(img))
            return
        for w in range(n):
            if used[w] or colors[w] != colors[u]:
                continue
            if any(adj[u][a] != adj[w][img[a]] for a in range(u)):
                continue
            img[u], used[w] = w, True
            extend(u + 1)
            img[u], used[w] = -1, False

    extend(0)
    if limit is not None and len(out) > limit:
        return None
    return out


def perm_closure(gens, n) -> set[tuple[int, ...]]:
    ident = tuple(range(n))
    seen = {ident}
    frontier = [ident]
    gens = [tuple(int(v) for v in g) for g in gens]
    while frontier:
        nxt = []
        for cur in frontier:
            for g in gens:
                h = tuple(g[cur[v]] for v in range(n))
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
        frontier = nxt
    return seen


def random_colored_graph(rng: np.random.Generator, n: int):
    colors = rng.integers(0, rng.integers(1, 4), size=n)
    density = rng.uniform(0.1, 0.7)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < density]
    return colors, edges


def max_cut_bruteforce(num_nodes: int, edges) -> int:
    best = 0
    for mask in range(1 << num_nodes):
        cut = sum(1 for u, v in edges if ((mask >> u) & 1) != ((mask >> v) & 1))
        best = max(best, cut)
    return best


BOUNDS = [(-1.0, 1.0), (0.0, 2.0), (0.0, 1.0), (-2.0, 2.0)]


def random_linear_minlp(rng: np.random.Generator) -> Minlp:
    """Small linear model drawn from a coarse grid so symmetries are common."""
    n = int(rng.integers(1, 4))
    structured = rng.random() < 0.5
    if structured:
        kinds = np.full(n, rng.integers(0, len(BOUNDS)))
        objs = np.full(n, rng.choice([0.0, 1.0]))
    else:
        kinds = rng.integers(0, len(BOUNDS), size=n)
        objs = rng.choice([0.0, 0.0, 1.0, -1.0], size=n)
    variables = [Variable(i + 1, *BOUNDS[int(kinds[i])], False, float(objs[i])) for i in range(n)]
    cons = []
    for _ in range(int(rng.integers(1, 3))):
        if structured:
            coefs = rng.choice([-1.0, 1.0], size=n)
        else:
            coefs = rng.choice([-1.0, 1.0, 1.0, 2.0, 0.0], size=n)
        if not coefs.any():
            coefs[0] = 1.0
        terms = [ex.Prod(float(a), ex.Var(i + 1)) if a != 1.0 else ex.Var(i + 1)
                 for i, a in enumerate(coefs) if a != 0.0]
        tree = terms[0] if len(terms) == 1 else ex.Sum(*terms)
        rel = str(rng.choice(["le", "ge", "eq"]))
        cons.append(Constraint(tree, rel, float(rng.choice([-1.0, 0.0, 1.0]))))
    return Minlp(tuple(variables), tuple(cons), "random")


# ------------------------------------------------------------- plan checks

def action_holds(a, x, xi) -> bool:
    """Whether point ``x`` satisfies a handling action exactly."""
    if isinstance(a, RestrictDomain):
        return x[a.var - 1] >= a.lower - 1e-9
    if isinstance(a, StaticInequality):
        return a.satisfied(x)
    if isinstance(a, LexReduce):
        y = apply_reflection(x, a.gamma, xi)
        order = range(1, len(x) + 1) if a.order is None else a.order
        return tuple(x[i - 1] for i in order) >= tuple(y[i - 1] for i in order)
    if isinstance(a, SortRows):
        rows = [tuple(x[v - 1] for v in r) for r in a.block]
        return all(rows[i] >= rows[i + 1] for i in range(len(rows) - 1))
    raise TypeError(a)


def grid_generators(p: int, q: int, rows=True, cols=True, colrefl=False):
    """Adjacent row/column swaps and column reflections on a p x q grid of
    variables numbered row by row."""
    n = p * q
    M = [[i * q + j + 1 for j in range(q)] for i in range(p)]

    def perm(pairs, neg=()):
        img = list(range(1, n + 1))
        for a, b in pairs:
            img[a - 1], img[b - 1] = b, a
        for a in neg:
            img[a - 1] = -a
        return SignedPermutation(img)

    gens = []
    if rows:
        gens += [perm([(M[i][j], M[i + 1][j]) for j in range(q)]) for i in range(p - 1)]
    if cols:
        gens += [perm([(M[i][j], M[i][j + 1]) for i in range(p)]) for j in range(q - 1)]
    if colrefl:
        gens += [perm([], [M[i][j] for i in range(p)]) for j in range(q)]
    return gens, M


def every_orbit_survives(actions, group, n, values=(-1.0, 0.0, 1.0), xi=None) -> bool:
    xi = np.zeros(n) if xi is None else np.asarray(xi, float)
    for x in itertools.product(values, repeat=n):
        x = np.array(x, dtype=float)
        if not any(all(action_holds(a, apply_reflection(x, g, xi), xi) for a in actions)
                   for g in group):
            return False
    return True

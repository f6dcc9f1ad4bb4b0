"""Automorphisms of symmetry detection graphs.

The edge-coloured SDG is first turned into a node-coloured simple graph, then
an individualisation-refinement search computes generators of its
colour-preserving automorphism group, and finally the generators are mapped
back to signed permutations of the problem variables.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ._kernels import refine
from .model import Minlp, SignedPermutation
from .sdg import CONSTRAINT, REFLECTION, VARIABLE, Sdg

log = logging.getLogger(__name__)


class AutomorphismBudgetExceeded(RuntimeError):
    pass


@dataclass
class QuotientGraph:
    colors: np.ndarray      # int64 colour per node
    indptr: np.ndarray      # CSR adjacency
    indices: np.ndarray
    back_map: np.ndarray    # original SDG node per node, -1 for auxiliary nodes

    @property
    def num_nodes(self) -> int:
        return len(self.colors)

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for u in range(self.num_nodes):
            for v in self.indices[self.indptr[u]:self.indptr[u + 1]]:
                if u < v:
                    out.append((u, int(v)))
        return out

    @classmethod
    def from_edges(cls, colors, edges, back_map=None) -> "QuotientGraph":
        colors = np.asarray(colors, dtype=np.int64)
        n = len(colors)
        adj = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise ValueError("self-loop")
            adj[u].add(v)
            adj[v].add(u)
        indptr = np.zeros(n + 1, dtype=np.int64)
        for u in range(n):
            indptr[u + 1] = indptr[u] + len(adj[u])
        indices = np.array([v for u in range(n) for v in sorted(adj[u])], dtype=np.int64)
        if back_map is None:
            back_map = np.arange(n, dtype=np.int64)
        return cls(colors, indptr, indices, np.asarray(back_map, dtype=np.int64))


def eliminate_edge_colors(g: Sdg) -> QuotientGraph:
    """Replace coloured edges by coloured auxiliary nodes.

    Parallel edges are merged first (their colours form a sorted tuple).
    Auxiliary nodes sharing a hub and a colour are merged; the hub is the
    variable endpoint when there are fewer constraint nodes than variable
    nodes, otherwise the other endpoint.  Unvalued edges stay plain edges.
    """
    if not g.locked or g.edge_colors is None:
        raise RuntimeError("SDG must be locked and coloured")
    N = g.num_nodes
    merged: dict[tuple[int, int], list[int]] = {}
    for e in range(g.num_edges):
        u, v = g.edge_first[e], g.edge_second[e]
        key = (u, v) if u < v else (v, u)
        merged.setdefault(key, []).append(int(g.edge_colors[e]))
    plain_color = g.no_value_color
    combos = sorted({tuple(sorted(cs)) for cs in merged.values()
                     if tuple(cs) != (plain_color,)})
    combo_id = {c: k for k, c in enumerate(combos)}
    by_constraints = g.count(CONSTRAINT) < g.count(VARIABLE)
    is_var = [k == VARIABLE for k in g.kind]

    base = int(g.node_colors.max()) + 1 if N else 0
    colors = list(int(c) for c in g.node_colors)
    back = list(range(N))
    edges: list[tuple[int, int]] = []
    hubs: dict[tuple[int, int], int] = {}

    def new_aux(color):
        colors.append(color)
        back.append(-1)
        return len(colors) - 1

    for (u, v) in sorted(merged):
        cs = tuple(sorted(merged[(u, v)]))
        if cs == (plain_color,):
            edges.append((u, v))
            continue
        cid = combo_id[cs]
        if is_var[u] != is_var[v]:
            var_end, other = (u, v) if is_var[u] else (v, u)
            hub, spoke = (var_end, other) if by_constraints else (other, var_end)
            key = (hub, cid)
            if key not in hubs:
                hubs[key] = new_aux(base + 2 * cid)
                edges.append((hub, hubs[key]))
            edges.append((hubs[key], spoke))
        else:
            w = new_aux(base + 2 * cid + 1)
            edges.append((u, w))
            edges.append((w, v))
    _, ranked = np.unique(np.asarray(colors, dtype=np.int64), return_inverse=True)
    q = QuotientGraph.from_edges(ranked.reshape(-1), edges, back)
    q.grouping = "constraints" if by_constraints else "variables"
    return q


# ------------------------------------------------------------------ search

class _Search:
    def __init__(self, q: QuotientGraph, budget: int, use_loops=None):
        self.q = q
        self.n = q.num_nodes
        self.budget = budget
        self.nodes = 0
        self.use_loops = use_loops
        codes = []
        for u in range(self.n):
            for v in q.indices[q.indptr[u]:q.indptr[u + 1]]:
                codes.append(u * self.n + int(v))
        self.edge_codes = np.sort(np.asarray(codes, dtype=np.int64))
        self.src = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(q.indptr))

    def refine(self, cells):
        self.nodes += 1
        if self.nodes > self.budget:
            raise AutomorphismBudgetExceeded(f"more than {self.budget} search nodes")
        cells = cells.copy()
        k = refine(self.q.indptr, self.q.indices, cells, self.use_loops)
        return cells, k

    @staticmethod
    def individualize(cells, v):
        keys = cells * 2 + 1
        keys[v] -= 1
        _, inv = np.unique(keys, return_inverse=True)
        return inv.reshape(-1).astype(np.int64)

    @staticmethod
    def target_cell(cells, k):
        sizes = np.bincount(cells, minlength=k)
        cand = np.where(sizes > 1)[0]
        best = cand[np.argmin(sizes[cand])]
        return np.where(cells == best)[0]

    def is_automorphism(self, perm) -> bool:
        mapped = perm[self.src] * self.n + perm[self.q.indices]
        return np.array_equal(np.sort(mapped), self.edge_codes)

    def run(self) -> list[np.ndarray]:
        if self.n == 0:
            return []
        _, c0 = np.unique(self.q.colors, return_inverse=True)
        cells, k = self.refine(c0.reshape(-1).astype(np.int64))
        path = []
        self.signature = [np.bincount(cells, minlength=k)]
        while k < self.n:
            tc = self.target_cell(cells, k)
            v = int(tc[0])
            path.append((cells, k, tc, v))
            cells, k = self.refine(self.individualize(cells, v))
            self.signature.append(np.bincount(cells, minlength=k))
        self.path = path
        self.leaf_inv = np.empty(self.n, dtype=np.int64)
        self.leaf_inv[cells] = np.arange(self.n)   # label -> vertex
        self.leaf = cells
        parent = list(range(self.n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        gens = []
        for level in reversed(range(len(path))):
            cells_l, _, tc, v = path[level]
            for w in tc[1:]:
                w = int(w)
                if find(w) == find(v):
                    continue
                perm = self._explore(level + 1, self.individualize(cells_l, w))
                if perm is None:
                    continue
                gens.append(perm)
                for a in range(self.n):
                    ra, rb = find(a), find(int(perm[a]))
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
        return gens

    def _explore(self, level, cells):
        cells, k = self.refine(cells)
        sig = self.signature[level]
        if k != len(sig) or not np.array_equal(np.bincount(cells, minlength=k), sig):
            return None
        if k == self.n:
            perm = np.empty(self.n, dtype=np.int64)
            # vertex with label L in the first leaf maps to label L here
            inv = np.empty(self.n, dtype=np.int64)
            inv[cells] = np.arange(self.n)
            perm[self.leaf_inv] = inv
            return perm if self.is_automorphism(perm) else None
        tc = self.target_cell(cells, k)
        preferred = self.path[level][3] if level < len(self.path) else -1
        order = sorted((int(u) for u in tc), key=lambda u: (u != preferred, u))
        for u in order:
            res = self._explore(level + 1, self.individualize(cells, u))
            if res is not None:
                return res
        return None


def find_automorphism_generators(q: QuotientGraph, budget: int = 200_000,
                                 use_loops: bool | None = None) -> list[np.ndarray]:
    """Generators of the colour-preserving automorphism group of ``q``.

    Each generator is an int array ``perm`` with ``perm[u]`` the image of
    node ``u``.  Deterministic for a given graph.
    """
    return _Search(q, budget, use_loops).run()


def extract_signed_permutations(gens, g: Sdg, q: QuotientGraph | None = None) -> list[SignedPermutation]:
    """Restrict node permutations to the variable nodes of ``g``."""
    out: list[SignedPermutation] = []
    seen = set()
    n = g.n
    if q is not None:
        pos_of = {int(o): k for k, o in enumerate(q.back_map) if o >= 0}
    else:
        pos_of = {u: u for u in range(g.num_nodes)}
    orig_of = {k: o for o, k in pos_of.items()}
    for perm in gens:
        img = []
        for i in range(1, n + 1):
            w = orig_of.get(int(perm[pos_of[g.var_node(i)]]), -1)
            if w < 0 or g.kind[w] != VARIABLE:
                raise RuntimeError("automorphism does not preserve variable nodes")
            j = g.var_index[g.pos[w]]
            if g.mode == REFLECTION:
                wn = orig_of.get(int(perm[pos_of[g.var_node(-i)]]), -1)
                if wn != g.var_node(-j):
                    raise RuntimeError("automorphism breaks the v_i / v_-i pairing")
            img.append(j)
        gamma = SignedPermutation(img)
        if gamma.is_identity() or gamma in seen:
            continue
        seen.add(gamma)
        out.append(gamma)
    return out


def prune_generators(gens: list[SignedPermutation], limit: int = 1_000_000) -> list[SignedPermutation]:
    """Drop generators already inside the closure of the earlier ones, when
    the closure stays below ``limit`` elements."""
    from .groups import closure

    kept: list[SignedPermutation] = []
    for g in gens:
        if kept:
            group = closure(kept, limit=limit)
            if group is None:
                return list(gens)
            if g in group:
                continue
        kept.append(g)
    return kept


@dataclass
class DetectionResult:
    generators: list[SignedPermutation]
    sdg: Sdg
    quotient: QuotientGraph
    search_nodes: int


def detect_symmetries(p: Minlp, mode: str = REFLECTION, enhanced: bool = False,
                      epsilon: float = 1e-9, budget: int = 200_000) -> DetectionResult:
    from .builders import build_problem_sdg

    g = build_problem_sdg(p, mode=mode, enhanced=enhanced, epsilon=epsilon)
    q = eliminate_edge_colors(g)
    search = _Search(q, budget, None)
    perms = search.run()
    gens = prune_generators(extract_signed_permutations(perms, g, q))
    log.info("detected %d generators (%d search nodes, %d graph nodes)",
             len(gens), search.nodes, q.num_nodes)
    return DetectionResult(gens, g, q, search.nodes)

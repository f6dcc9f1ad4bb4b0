"""Structure of detected symmetry groups: independent factors, matrix
(row/column) symmetries, column reflections and the full reflection."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .model import SignedPermutation

CLOSURE_LIMIT = 1_000_000


def closure(gens: list[SignedPermutation], n: int | None = None,
            limit: int = CLOSURE_LIMIT) -> set[SignedPermutation] | None:
    """All elements of the generated group, or None if it exceeds ``limit``."""
    if not gens:
        if n is None:
            return None
        return {SignedPermutation.identity(n)}
    n = gens[0].n
    ident = tuple(range(1, n + 1))
    gen_imgs = [g.images for g in gens]
    seen = {ident}
    queue = deque([ident])
    while queue:
        cur = queue.popleft()
        for gi in gen_imgs:
            # gi ∘ cur
            nxt = tuple(gi[v - 1] if v > 0 else -gi[-v - 1] for v in cur)
            if nxt not in seen:
                seen.add(nxt)
                if len(seen) > limit:
                    return None
                queue.append(nxt)
    return {SignedPermutation(t) for t in seen}


def group_order(gens, n, limit=CLOSURE_LIMIT) -> int | None:
    c = closure(gens, n, limit)
    return None if c is None else len(c)


def moved(g: SignedPermutation) -> set[int]:
    return {abs(i) for i in g.support()} | {abs(g(i)) for i in g.support()}


def split_components(gens: list[SignedPermutation]) -> list[list[SignedPermutation]]:
    """Group generators whose supports are linked through shared variables."""
    parent: dict[int, int] = {}

    def find(a):
        parent.setdefault(a, a)
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    supports = [sorted(moved(g)) for g in gens]
    for sup in supports:
        for a in sup[1:]:
            ra, rb = find(sup[0]), find(a)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[SignedPermutation]] = {}
    for g, sup in zip(gens, supports):
        if sup:
            groups.setdefault(find(sup[0]), []).append(g)
    return [groups[k] for k in sorted(groups)]


def orbits(gens: list[SignedPermutation], n: int | None = None) -> list[frozenset[int]]:
    """Orbits of the generated group on the signed indices ±1..±n."""
    if n is None:
        if not gens:
            return []
        n = gens[0].n
    parent = {i: i for i in range(-n, n + 1) if i}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for g in gens:
        for i in parent:
            ra, rb = find(i), find(g(i))
            if ra != rb:
                parent[ra] = rb
    out: dict[int, set[int]] = {}
    for i in parent:
        out.setdefault(find(i), set()).add(i)
    return sorted((frozenset(s) for s in out.values()), key=lambda s: min(abs(v) for v in s))


def _two_cycles(g: SignedPermutation) -> list[tuple[int, int]] | None:
    """The 2-cycles of an unsigned involution, or None."""
    pairs = []
    for i in range(1, g.n + 1):
        j = g(i)
        if j == i:
            continue
        if j < 0 or g(j) != i:
            return None
        if i < j:
            pairs.append((i, j))
    return pairs


def _components(pairs_per_gen: list[list[tuple[int, int]]]) -> list[list[int]]:
    parent: dict[int, int] = {}

    def find(a):
        parent.setdefault(a, a)
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for pairs in pairs_per_gen:
        for a, b in pairs:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    comps: dict[int, list[int]] = {}
    for v in parent:
        comps.setdefault(find(v), []).append(v)
    return sorted((sorted(c) for c in comps.values()), key=lambda c: c[0])


def _path_order(edges: list[tuple[int, int]], k: int, key) -> list[int] | None:
    """Order 0..k-1 along the path formed by ``edges`` (duplicates allowed),
    starting from the end with the smaller ``key``; None if not a path."""
    if k == 1:
        return [0]
    adj = {i: set() for i in range(k)}
    for a, b in set(edges):
        adj[a].add(b)
        adj[b].add(a)
    if sum(len(v) for v in adj.values()) != 2 * (k - 1) or any(len(v) > 2 for v in adj.values()):
        return None
    ends = sorted((i for i in range(k) if len(adj[i]) == 1), key=key)
    if len(ends) != 2:
        return None
    order, prev = [ends[0]], None
    while len(order) < k:
        nxt = [b for b in adj[order[-1]] if b != prev]
        if not nxt:
            return None
        prev = order[-1]
        order.append(nxt[0])
    return order


def _swap_lines(pairs, line_of, cross_of) -> tuple[int, int] | None:
    """If the 2-cycles exchange two whole lines position by position, return
    the pair of line ids, else None."""
    lines = set()
    for a, b in pairs:
        if cross_of[a] != cross_of[b]:
            return None
        lines.add(frozenset((line_of[a], line_of[b])))
    if len(lines) != 1:
        return None
    pair = next(iter(lines))
    if len(pair) != 2:
        return None
    return tuple(sorted(pair))


def _row_column_grid(row_gens, col_gens):
    """Grid whose rows are exchanged by ``row_gens`` and columns by ``col_gens``."""
    columns = _components(row_gens)   # a row swap moves entries inside a column
    rows = _components(col_gens)
    if not rows or not columns:
        return None
    cells = set().union(*map(set, rows))
    if cells != set().union(*map(set, columns)):
        return None
    col_of = {v: c for c, col in enumerate(columns) for v in col}
    row_of = {v: r for r, row in enumerate(rows) for v in row}
    p, q = len(rows), len(columns)
    if p * q != len(cells):
        return None
    grid = [[0] * q for _ in range(p)]
    for v in cells:
        r, c = row_of[v], col_of[v]
        if grid[r][c]:
            return None
        grid[r][c] = v
    row_edges, col_edges = [], []
    for pairs in row_gens:
        if len(pairs) != q:
            return None
        sw = _swap_lines(pairs, row_of, col_of)
        if sw is None:
            return None
        row_edges.append(sw)
    for pairs in col_gens:
        if len(pairs) != p:
            return None
        sw = _swap_lines(pairs, col_of, row_of)
        if sw is None:
            return None
        col_edges.append(sw)
    row_order = _path_order(row_edges, p, key=lambda r: min(grid[r]))
    if row_order is None:
        return None
    grid = [grid[r] for r in row_order]
    col_order = _path_order(col_edges, q, key=lambda c: grid[0][c])
    if col_order is None:
        return None
    return [[row[c] for c in col_order] for row in grid]


def _row_grid(row_gens):
    """Grid for a family of row swaps without column exchanges."""
    columns = _components(row_gens)
    p = len(columns[0])
    if any(len(c) != p for c in columns):
        return None
    q = len(columns)
    col_of = {v: c for c, col in enumerate(columns) for v in col}
    maps = []
    for pairs in row_gens:
        if len(pairs) != q or len({col_of[a] for a, _ in pairs}) != q:
            return None
        m = {}
        for a, b in pairs:
            if col_of[a] != col_of[b]:
                return None
            m[a], m[b] = b, a
        maps.append(m)
    base = columns[0]
    rows = [[v] for v in base]
    for col in columns[1:]:
        phi = _intertwiner(base, col, maps)
        if phi is None:
            return None
        for r, v in enumerate(base):
            rows[r].append(phi[v])
    # every generator must now exchange two whole rows
    row_of = {v: r for r, row in enumerate(rows) for v in row}
    cross = {v: c for row in rows for c, v in enumerate(row)}
    edges = []
    for pairs in row_gens:
        sw = _swap_lines(pairs, row_of, cross)
        if sw is None:
            return None
        edges.append(sw)
    row_order = _path_order(edges, p, key=lambda r: min(rows[r]))
    if row_order is None:
        return None
    rows = [rows[r] for r in row_order]
    order = sorted(range(q), key=lambda c: rows[0][c])
    return [[row[c] for c in order] for row in rows]


def _intertwiner(base, col, maps):
    """Bijection phi: base -> col with phi(g(x)) = g(phi(x)) for all maps."""
    for start in col:
        phi = {base[0]: start}
        queue = [base[0]]
        ok = True
        while queue and ok:
            x = queue.pop()
            for m in maps:
                gx = m.get(x, x)
                gy = m.get(phi[x], phi[x])
                if gx in phi:
                    if phi[gx] != gy:
                        ok = False
                        break
                else:
                    phi[gx] = gy
                    queue.append(gx)
        if ok and len(phi) == len(base) and len(set(phi.values())) == len(base):
            return phi
    return None


@dataclass
class FactorReport:
    generators: list[SignedPermutation]
    support: list[int]
    classification: str = "Unstructured"      # RowColumn, Row or Unstructured
    matrix: list[list[int]] | None = None
    column_reflections: bool = False
    row_reflections: bool = False
    column_reflection_flags: list[bool] = field(default_factory=list)
    has_full_reflection: bool = False
    reflected_support: list[int] = field(default_factory=list)
    signed_fraction: float = 0.0
    order: int | None = None

    def to_dict(self) -> dict:
        return {
            "generators": [g.cycle_notation() for g in self.generators],
            "support": self.support,
            "classification": self.classification,
            "matrix": self.matrix,
            "column_reflections": self.column_reflections,
            "row_reflections": self.row_reflections,
            "has_full_reflection": self.has_full_reflection,
            "reflected_support": self.reflected_support,
            "signed_fraction": self.signed_fraction,
            "order": self.order,
        }


@dataclass
class GroupReport:
    n: int
    factors: list[FactorReport]

    def to_dict(self) -> dict:
        return {"n": self.n, "factors": [f.to_dict() for f in self.factors]}

    def to_text(self) -> str:
        lines = []
        for k, f in enumerate(self.factors):
            lines.append(f"factor {k}: {f.classification} support={f.support} "
                         f"order={f.order} signed_fraction={f.signed_fraction:.3f}")
            if f.matrix:
                lines.append(f"  matrix {len(f.matrix)}x{len(f.matrix[0])}: {f.matrix}")
                lines.append(f"  column_reflections={f.column_reflections} "
                             f"row_reflections={f.row_reflections}")
            lines.append(f"  full_reflection={f.has_full_reflection} on {f.reflected_support}")
            for g in f.generators:
                lines.append(f"  gen {g.cycle_notation()}")
        return "\n".join(lines) if lines else "trivial group"


def detect_matrix_symmetry(gens: list[SignedPermutation]) -> tuple[str, list[list[int]] | None]:
    """Classify the unsigned generators as row/column or row symmetries."""
    unsigned = [g for g in gens if g.is_unsigned()]
    if not unsigned:
        return "Unstructured", None
    cyc = []
    for g in unsigned:
        pairs = _two_cycles(g)
        if pairs is None:
            return "Unstructured", None
        cyc.append(pairs)
    classes: dict[int, list] = {}
    for pairs in cyc:
        classes.setdefault(len(pairs), []).append(pairs)
    if len(classes) == 2:
        small, large = sorted(classes)
        grid = _row_column_grid(classes[large], classes[small])
        if grid is not None:
            return "RowColumn", grid
        return "Unstructured", None
    if len(classes) == 1:
        grid = _row_grid(cyc)
        if grid is not None:
            return "Row", grid
    return "Unstructured", None


def _line_reflection(cells: list[int], n: int) -> SignedPermutation:
    s = set(cells)
    return SignedPermutation(-i if i in s else i for i in range(1, n + 1))


def _in_group(target: SignedPermutation, gens, group) -> bool:
    if target in gens:
        return True
    return group is not None and target in group


def detect_full_reflection(gens: list[SignedPermutation], support, group=None,
                           limit: int = CLOSURE_LIMIT) -> bool:
    """Whether the map i -> -i on ``support`` lies in the generated group."""
    if not gens or not support:
        return False
    target = _line_reflection(list(support), gens[0].n)
    if target in gens:
        return True
    if group is None:
        group = closure(gens, limit=limit)
    return group is not None and target in group


def reflected_support(gens: list[SignedPermutation]) -> list[int]:
    out = set()
    for g in gens:
        for i in range(1, g.n + 1):
            if g(i) < 0:
                out.add(i)
                out.add(abs(g(i)))
    return sorted(out)


def _line_flags(grid, gens, group, n) -> list[bool]:
    cols = [[row[c] for row in grid] for c in range(len(grid[0]))]
    return [_in_group(_line_reflection(c, n), gens, group) for c in cols]


def analyze_factor(gens: list[SignedPermutation], limit: int = CLOSURE_LIMIT) -> FactorReport:
    n = gens[0].n
    support = sorted(set().union(*(moved(g) for g in gens)))
    rep = FactorReport(list(gens), support)
    rep.signed_fraction = sum(1 for g in gens if not g.is_unsigned()) / len(gens)
    group = closure(gens, limit=limit)
    rep.order = None if group is None else len(group)
    kind, grid = detect_matrix_symmetry(gens)
    if grid is not None:
        cells = {v for row in grid for v in row}
        if not cells >= set(support):
            kind, grid = "Unstructured", None
    if grid is not None:
        flags = _line_flags(grid, gens, group, n)
        rows_reflected = all(_in_group(_line_reflection(r, n), gens, group) for r in grid)
        if rows_reflected and not all(flags):
            # keep reflected lines as columns
            grid = [list(c) for c in zip(*grid)]
            flags = _line_flags(grid, gens, group, n)
            rows_reflected = all(_in_group(_line_reflection(r, n), gens, group) for r in grid)
        rep.column_reflection_flags = flags
        rep.column_reflections = all(flags)
        rep.row_reflections = rows_reflected
    rep.classification, rep.matrix = kind, grid
    rep.reflected_support = reflected_support(gens)
    rep.has_full_reflection = bool(rep.reflected_support) and _in_group(
        _line_reflection(rep.reflected_support, n), gens, group)
    return rep


def analyze_group(gens: list[SignedPermutation], n: int,
                  limit: int = CLOSURE_LIMIT) -> GroupReport:
    return GroupReport(n, [analyze_factor(f, limit) for f in split_components(gens)])

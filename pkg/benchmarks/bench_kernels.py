"""Time the compiled kernels against their plain Python/numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat N]

The compiled side needs numba; the fallback side is what runs when numba is
missing or SYMREF_DISABLE_NUMBA=1 is set.
"""
import argparse
import time

import numpy as np

from symref._accel import HAVE_NUMBA, python_version
from symref._kernels import fbbt_kernel, lex_reduce_kernel, refine_loops, refine_numpy
from symref.auto import QuotientGraph, eliminate_edge_colors, find_automorphism_generators
from symref.builders import build_problem_sdg
from symref.instances import gen_energy, gen_packing
from symref.model import SignedPermutation, preimage_arrays
from symref.solve import _Problem


def timeit(fn, repeat):
    fn()                                      # warm-up (compilation)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def refinement_case():
    rng = np.random.default_rng(0)
    n = 400
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.02]
    q = QuotientGraph.from_edges(np.zeros(n, dtype=np.int64), edges)
    cells = np.zeros(n, dtype=np.int64)
    return q, cells


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    r = args.repeat
    rows = []

    q, cells = refinement_case()
    rows.append(("refine (400 nodes)",
                 timeit(lambda: refine_loops(q.indptr, q.indices, cells.copy()), r),
                 timeit(lambda: refine_numpy(q.indptr, q.indices, cells.copy()), r)))

    qs = eliminate_edge_colors(build_problem_sdg(gen_packing(6, 2), enhanced=True))
    rows.append(("automorphism search, packing(6,2)",
                 timeit(lambda: find_automorphism_generators(qs, use_loops=True), max(1, r // 4)),
                 timeit(lambda: find_automorphism_generators(qs, use_loops=False), max(1, r // 4))))

    n = 200
    rng = np.random.default_rng(1)
    gamma = SignedPermutation((rng.permutation(n) + 1) * rng.choice([-1, 1], size=n))
    src, sgn = preimage_arrays(gamma)
    xi = np.full(n, 0.5)
    integ = np.ones(n, dtype=np.bool_)
    order = np.arange(n, dtype=np.int64)

    def lex(fn):
        return lambda: fn(np.zeros(n), np.ones(n), src, sgn, xi, integ, order, 1e-9)

    rows.append(("lex reduction (n=200)", timeit(lex(lex_reduce_kernel), r * 10),
                 timeit(lex(python_version(lex_reduce_kernel)), r)))

    prob = _Problem(gen_energy(4, 3), None)

    def fbbt(fn):
        return lambda: fn(prob.op, prob.arg, prob.val, prob.cptr, prob.cidx, prob.roots, prob.slo,
                          prob.shi, prob.orig_lo.copy(), prob.orig_hi.copy(), prob.integral,
                          10, 1e-10, 1e-7)

    rows.append(("bound tightening, energy(4,3)", timeit(fbbt(fbbt_kernel), r * 10),
                 timeit(fbbt(python_version(fbbt_kernel)), r)))

    label = "numba" if HAVE_NUMBA else "numba (disabled)"
    print(f"{'kernel':38s} {label:>16s} {'fallback':>12s} {'speed-up':>9s}")
    for name, fast, slow in rows:
        print(f"{name:38s} {fast * 1e3:13.3f} ms {slow * 1e3:9.3f} ms {slow / fast:8.1f}x")


if __name__ == "__main__":
    main()

"""Command line driver: ``symref detect``, ``symref solve`` and ``symref gen``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import instances
from .auto import detect_symmetries
from .groups import analyze_group, group_order
from .handle import SETTINGS, build_plan
from .model import compute_centers
from .sdg import PERMUTATION, REFLECTION

EXIT_OK, EXIT_INFEASIBLE, EXIT_PARSE, EXIT_LIMIT = 0, 1, 2, 3


def _load(path):
    try:
        return instances.load(path)
    except instances.ParseError as err:
        print(f"{path}: {err}", file=sys.stderr)
    except OSError as err:
        print(f"cannot read {path}: {err.strerror}", file=sys.stderr)
    return None


def _detect(args) -> int:
    p = _load(args.file)
    if p is None:
        return EXIT_PARSE
    res = detect_symmetries(p, mode=args.mode, enhanced=args.enhanced)
    report = analyze_group(res.generators, p.n)
    order = group_order(res.generators, p.n)
    plan = build_plan(report, args.setting, compute_centers(p),
                      simple_reflection=args.simple_reflection) if args.plan else None
    if args.json:
        out = {"instance": p.name or args.file, "mode": args.mode, "enhanced": args.enhanced,
               "generators": [g.cycle_notation() for g in res.generators],
               "group_order": order, "report": report.to_dict()}
        if plan is not None:
            out["plan"] = plan.to_dict()
        print(json.dumps(out, indent=2))
        return EXIT_OK
    print(f"generators ({len(res.generators)}), group order {order}:")
    for g in res.generators:
        print(f"  {g.cycle_notation()}")
    print(report.to_text())
    if plan is not None:
        print(plan.to_text())
    return EXIT_OK


def _solve(args) -> int:
    from .solve import solve

    p = _load(args.file)
    if p is None:
        return EXIT_PARSE
    plan = None
    if args.setting != "sym0":
        gens = detect_symmetries(p, mode=REFLECTION, enhanced=True).generators
        plan = build_plan(analyze_group(gens, p.n), args.setting, compute_centers(p),
                          simple_reflection=args.simple_reflection)
    res = solve(p, plan, max_nodes=args.nodes, gap=args.gap, time_limit=args.time)
    if args.json:
        out = res.to_dict()
        out["setting"] = args.setting
        out["instance"] = p.name or args.file
        print(json.dumps(out, indent=2))
    else:
        print(f"status      {res.status}")
        print(f"value       {res.value}")
        print(f"lower bound {res.lower_bound}")
        print(f"nodes       {res.node_count}")
        print(f"pd integral {res.primal_dual_integral:.4f}")
        if res.x is not None:
            print("solution    " + " ".join(f"{nm}={v:.6g}" for nm, v in zip(p.names(), res.x)))
    return {"optimal": EXIT_OK, "infeasible": EXIT_INFEASIBLE, "limit": EXIT_LIMIT}[res.status]


def _gen(args) -> int:
    fam = args.family
    if fam == "packing":
        p = instances.gen_packing(args.n, args.d)
    elif fam == "kissing":
        p = instances.gen_kissing(args.n, args.d)
    elif fam == "energy":
        p = instances.gen_energy(args.n, args.d)
    elif fam == "maxcut":
        p = instances.gen_maxcut(args.graph)
    else:
        p = instances.signed_pairs_example()
    text = instances.write(p)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="symref", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="detect symmetries of an instance file")
    d.add_argument("file")
    d.add_argument("--mode", choices=[PERMUTATION, REFLECTION], default=REFLECTION)
    d.add_argument("--enhanced", action="store_true", help="use the pattern gadgets")
    d.add_argument("--json", action="store_true")
    d.add_argument("--plan", action="store_true", help="also print the handling plan")
    d.add_argument("--setting", choices=SETTINGS, default="auto")
    d.add_argument("--simple-reflection", action="store_true")
    d.set_defaults(func=_detect)

    s = sub.add_parser("solve", help="solve an instance with symmetry handling")
    s.add_argument("file")
    s.add_argument("--setting", choices=SETTINGS, default="auto")
    s.add_argument("--nodes", type=int, default=100_000)
    s.add_argument("--gap", type=float, default=1e-4)
    s.add_argument("--time", type=float, default=None, help="wall-clock limit in seconds")
    s.add_argument("--simple-reflection", action="store_true")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=_solve)

    g = sub.add_parser("gen", help="write a generated instance")
    gs = g.add_subparsers(dest="family", required=True)
    for fam in ("packing", "kissing", "energy"):
        f = gs.add_parser(fam)
        f.add_argument("n", type=int)
        f.add_argument("d", type=int)
        f.add_argument("-o", "--output")
    f = gs.add_parser("maxcut")
    f.add_argument("graph", choices=sorted(instances.GRAPHS))
    f.add_argument("-o", "--output")
    f = gs.add_parser("pairs")
    f.add_argument("-o", "--output")
    g.set_defaults(func=_gen)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver.

Exit codes: 0 success, 1 unreadable or malformed input (including bad
arguments), 2 inconsistent linear system, 3 repetition cap reached,
4 verification failure.
"""
from __future__ import annotations

import argparse
import math
import os
import sys as _sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__, numerics
from .instances import diagonal_example, make_random_consistent, make_welded_tree, welded_tree_ground_truth
from .io import ParseError, dump_report, parse_edge_list, parse_matrix, parse_polynomials, parse_vector, read_text
from .kernel import run_kernel_qls
from .macaulay import (
    RecoveryError,
    make_mis_instance,
    mis_encode,
    planted_mis_instance,
    predicted_et_mis,
    rescale,
    solve_polynomial_system,
    solve_unknown_weight,
    build_macaulay,
)
from .qpe import SCHEMA_VERSION, RepetitionCapError, build_phase_model, run_qls
from .system import AugmentedSystem, build_augmented, compute_metrics, condition_number_relation, verify_vector_decomposition
from .walk import build_star_states, build_walk_graph, spectral_gap_residual, verify_lemmas

EXIT_OK, EXIT_PARSE, EXIT_INCONSISTENT, EXIT_CAP, EXIT_VERIFY = 0, 1, 2, 3, 4
LEMMA_TOL = 1e-8
GAP_DELTAS = (0.01, 0.05, 0.1, 0.5)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2, which is reserved
        raise UsageError(message)


def thread_cap() -> int:
    raw = os.environ.get("QLS_WALK_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"QLS_WALK_THREADS must be an integer, got {raw!r}") from None


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Order-preserving map over at most ``QLS_WALK_THREADS`` workers."""
    workers = min(thread_cap(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _report(kind: str, body: dict) -> dict:
    return {"schema": SCHEMA_VERSION, "command": kind, **body}


def _load_system(args) -> AugmentedSystem:
    a = parse_matrix(read_text(args.matrix), str(args.matrix))
    b = parse_vector(read_text(args.vector), str(args.vector))
    if b.size != a.shape[0]:
        raise ParseError(str(args.vector), 1, 1, f"vector has {b.size} entries, matrix has {a.shape[0]} rows")
    try:
        return build_augmented(a, b)
    except ValueError as exc:
        raise ParseError(str(args.vector), 1, 1, str(exc)) from None


def _check_eps(eps: float) -> None:
    if not (0.0 < eps < 1.0):
        raise UsageError("--epsilon must lie in (0, 1)")


def _solve_report(sys: AugmentedSystem, backend: str, eps: float, seed: int, norm_known: bool) -> dict:
    if backend == "walk":
        return run_qls(sys, eps, norm_known=norm_known, seed=seed).to_report()
    if backend == "kernel":
        return run_kernel_qls(sys, eps, seed=seed).to_report()
    m = compute_metrics(sys)
    return {
        "schema": SCHEMA_VERSION, "backend": "oracle", "epsilon": eps, "delta": None,
        "gamma": m.gamma, "ET": m.et, "s": m.sparsity, "kappa_A": m.kappa_a, "kappa_H": m.kappa_h,
        "y_state": m.y / math.sqrt(m.y_norm_sq), "trace_distance": 0.0, "repetitions": 0,
    }


def cmd_solve(args) -> tuple[int, dict]:
    _check_eps(args.epsilon)
    sys = _load_system(args)
    rep = _solve_report(sys, args.backend, args.epsilon, args.seed, args.norm_known)
    return EXIT_OK, _report("solve", rep)


def cmd_metrics(args) -> tuple[int, dict]:
    sys = _load_system(args)
    m = compute_metrics(sys)
    return EXIT_OK, _report("metrics", {
        "y": m.y, "p": m.p, "y_norm_sq": m.y_norm_sq, "ET": m.et, "kappa_A": m.kappa_a,
        "kappa_H": m.kappa_h, "gamma": m.gamma, "s": m.sparsity, "d": sys.row_sq_norms,
    })


def _welded_row(n: int, seed: int, bottleneck: bool) -> dict:
    t = make_welded_tree(n, seed, bottleneck)
    m = compute_metrics(t.system())
    gt = welded_tree_ground_truth(t)
    return {
        "n": n,
        "edges": len(t.edges),
        "resistance": gt.resistance,
        "resistance_computed": m.y_norm_sq,
        "root_potential": gt.root_potential,
        "root_potential_computed": float(m.p[0]),
        "potential_max_error": float(np.max(np.abs(m.p - gt.potentials))),
        "ET": m.et,
        "p_norm_sq": float(m.p @ m.p),
        "kappa_B": m.kappa_a,
    }


def cmd_welded(args) -> tuple[int, dict]:
    if not 2 <= args.n <= 7:
        raise UsageError("--n must lie in 2..7")
    rows = parallel_map(lambda k: _welded_row(k, args.seed, args.bottleneck), list(range(2, args.n + 1)))
    kappas = [r["kappa_B"] for r in rows]
    growth = [b / a for a, b in zip(kappas, kappas[1:])]
    body = dict(rows[-1])
    body.update({
        "seed": args.seed,
        "bottleneck": args.bottleneck,
        "table": rows,
        "kappa_growth": growth,
        "kappa_strictly_increasing": all(g > 1.0 for g in growth),
    })
    return EXIT_OK, _report("welded", body)


def _poly_body(F, args, extra: dict) -> tuple[int, dict]:
    backend = {"walk": "walk", "kernel": "kernel", "oracle": "oracle"}[args.backend]
    try:
        if args.h is None:
            res = solve_unknown_weight(F, args.delta_fail, args.seed, backend, prune=args.prune)
        else:
            res = solve_polynomial_system(F, args.h, args.delta_fail, args.seed, backend, prune=args.prune)
    except RecoveryError as exc:
        return EXIT_VERIFY, {
            "assignment": "".join(map(str, exc.assignment)), "verified": False,
            "supports": [[v + 1 for v in s] for s in exc.supports], **extra,
        }
    sys = rescale(build_macaulay(F, res.h, args.prune))
    body = {
        "assignment": "".join(map(str, res.assignment)),
        "verified": res.verified,
        "h": res.h,
        "samples": res.samples_used,
        "samples_used": res.samples_used,
        "supports": [[v + 1 for v in s] for s in res.supports],
        "ET_direct": res.et_direct,
        "kappa_AD": numerics.condition_number(sys.a),
        "backend": res.backend,
        "trace_distance": res.trace_distance,
    }
    body.update(extra)
    return EXIT_OK, body


def cmd_poly(args) -> tuple[int, dict]:
    F = parse_polynomials(read_text(args.system), str(args.system), n=args.vars)
    code, body = _poly_body(F, args, {})
    return code, _report("poly", body)


def cmd_mis(args) -> tuple[int, dict]:
    if args.graph is not None:
        n, edges = parse_edge_list(read_text(args.graph), str(args.graph))
        if args.planted is None:
            raise UsageError("--planted is required with a graph file (comma-separated 0-based vertices)")
        planted = [int(v) for v in args.planted.split(",") if v.strip()]
        inst = make_mis_instance(n, edges, planted)
    else:
        if args.random is None or args.h is None:
            raise UsageError("give a graph file or --random N with --h")
        inst = planted_mis_instance(args.random, args.h, args.seed)
    if args.h is not None and args.h != inst.h:
        raise UsageError(f"--h {args.h} disagrees with the planted set size {inst.h}")
    args.h = inst.h
    pred = predicted_et_mis(inst)
    extra = {
        "n": inst.n,
        "edges": [list(e) for e in inst.edges],
        "planted": sorted(inst.planted),
        "unique": inst.unique,
        "ET_predicted": pred.et_predicted,
    }
    code, body = _poly_body(mis_encode(inst), args, extra)
    return code, _report("mis", body)


def _verify_one(sys: AugmentedSystem) -> dict:
    m = compute_metrics(sys)
    dec = verify_vector_decomposition(sys, m)
    states = build_star_states(build_walk_graph(sys), sys)
    lem = verify_lemmas(states, m)
    gap = {}
    for d in GAP_DELTAS:
        model = build_phase_model(states, d)
        lhs, rhs = spectral_gap_residual(states, m, d, model.project)
        gap[str(d)] = {"lhs": lhs, "bound": rhs, "pass": lhs <= rhs + 1e-12}
    rel = condition_number_relation(sys)
    checks = {
        "vector_decomposition": {"residual": dec.max_residual, "pass": dec.max_residual <= LEMMA_TOL},
        **{k: {"residual": v, "pass": v <= LEMMA_TOL} for k, v in lem.residuals.items()},
        "spectral_gap": {"cases": gap, "pass": all(g["pass"] for g in gap.values())},
        "kappa_bracket": {"kappa_A": rel.kappa_a, "kappa_H": rel.kappa_h, "pass": rel.in_bounds},
    }
    return {"checks": checks, "pass": all(c["pass"] for c in checks.values())}


def cmd_verify(args) -> tuple[int, dict]:
    kind = args.instance
    if kind == "file":
        if args.matrix is None or args.vector is None:
            raise UsageError("--instance file needs --matrix and --vector")
        systems = [("file", _load_system(args))]
    elif kind == "identity":
        systems = [("identity", build_augmented(np.eye(2), [1.0, 0.0]))]
    elif kind == "diagonal":
        systems = [("diagonal", diagonal_example(args.n).system())]
    elif kind == "welded":
        if not 2 <= args.n <= 7:
            raise UsageError("--n must lie in 2..7")
        systems = [("welded", make_welded_tree(args.n, args.seed).system())]
    else:
        systems = [
            (f"random:{s}", make_random_consistent(args.rows, args.cols, args.density, s))
            for s in range(args.seed, args.seed + args.count)
        ]
    results = parallel_map(lambda item: {"instance": item[0], **_verify_one(item[1])}, systems)
    ok = all(r["pass"] for r in results)
    return (EXIT_OK if ok else EXIT_VERIFY), _report("verify", {"instances": results, "pass": ok})


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qlswalk", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, eps=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", type=Path, default=None, help="write the JSON report here")
        if eps:
            sp.add_argument("--epsilon", type=float, default=0.1)

    s = sub.add_parser("solve", help="solve A y = b with a chosen backend")
    s.add_argument("matrix", type=Path)
    s.add_argument("vector", type=Path)
    s.add_argument("--backend", choices=("walk", "kernel", "oracle"), default="walk")
    s.add_argument("--norm-known", action="store_true", help="rescale to a unit-norm solution first")
    common(s)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("metrics", help="instance metrics of A y = b")
    s.add_argument("matrix", type=Path)
    s.add_argument("vector", type=Path)
    common(s, eps=False)
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("welded", help="welded-tree instance against its closed forms")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--bottleneck", action="store_true", help="shuffle each leaf half separately")
    common(s, eps=False)
    s.set_defaults(func=cmd_welded)

    for name, helptext in (("poly", "Boolean polynomial system"), ("mis", "planted maximum independent set")):
        s = sub.add_parser(name, help=helptext)
        if name == "poly":
            s.add_argument("system", type=Path)
            s.add_argument("--vars", type=int, default=None, help="number of variables (default: largest index used)")
        else:
            s.add_argument("graph", type=Path, nargs="?")
            s.add_argument("--planted", default=None)
            s.add_argument("--random", type=int, default=None, metavar="N")
        s.add_argument("--h", type=int, default=None)
        s.add_argument("--delta-fail", type=float, default=0.05)
        s.add_argument("--backend", choices=("walk", "kernel", "oracle"), default="walk")
        s.add_argument("--prune", action=argparse.BooleanOptionalAction, default=True)
        common(s, eps=False)
        s.set_defaults(func=cmd_poly if name == "poly" else cmd_mis)

    s = sub.add_parser("verify", help="run the structural checks on an instance")
    s.add_argument("--instance", choices=("random", "welded", "identity", "diagonal", "file"), default="random")
    s.add_argument("--matrix", type=Path)
    s.add_argument("--vector", type=Path)
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--rows", type=int, default=8)
    s.add_argument("--cols", type=int, default=5)
    s.add_argument("--density", type=float, default=0.6)
    common(s, eps=False)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.seed < 0 or args.seed >= 2**64:
            raise UsageError("--seed must be an unsigned 64-bit value")
        code, report = args.func(args)
    except (UsageError, ParseError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_PARSE
    except numerics.InconsistentSystemError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INCONSISTENT
    except RepetitionCapError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_CAP
    except ValueError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_PARSE
    text = dump_report(report)
    if args.out is not None:
        args.out.write_text(text)
    else:
        _sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    _sys.exit(main())

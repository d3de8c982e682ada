"""Command line front end.

Every subcommand emits a list of records (plain dicts).  ``--format
json-lines`` writes one sorted-key JSON object per line; ``--format human``
renders the same records as indented text.

Exit status: 0 when every recomputed inequality holds, 1 when one fails
(its name goes to stderr), 2 for unreadable input or violated preconditions.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Callable

import numpy as np

from . import io
from .asq import asq_certificate, asq_family, refute_s_asq
from .decomposer import c_bound, decompose, verify_decomposition
from .errors import DomainError, PreconditionError, VerificationError
from .free_space import (
    FreeVector,
    lipschitz_constant_on,
    mcshane_extend,
    pair,
    transport,
)
from .lasq import lasq_witness
from .metric_graph import TOL, GraphPoint, MetricGraph
from .sampling import random_combination, random_point

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _unit_interval(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1]")
    return v


def _tolerance(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1e-3:
        raise argparse.ArgumentTypeError("must lie in (0, 1e-3]")
    return v


def _count(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _check(name: str, value: float, bound: float, op: str, tol: float = 0.0) -> dict:
    if op == "<=":
        passed = value <= bound + tol
    elif op == ">=":
        passed = value >= bound - tol
    elif op == ">":
        passed = value > bound
    else:
        passed = abs(value - bound) <= tol
    return {"name": name, "value": value, "bound": bound, "op": op, "passed": bool(passed)}


def _failed(records: list[dict]) -> list[str]:
    out = []
    for rec in records:
        for c in rec.get("checks", []):
            if not c["passed"]:
                out.append(c["name"])
    return out


# subcommands -------------------------------------------------------------


def cmd_norm(args, G: MetricGraph) -> list[dict]:
    v = _need_vector(args, G)
    res = transport(G, v)
    checks = [_check("f(v) = ||v||", pair(res.dual, v), res.value, "==", args.tol * max(1.0, res.value))]
    if len(res.dual.anchors) > 1:
        checks.append(_check("Lip(f) <= 1", lipschitz_constant_on(G, res.dual), 1.0, "<=", args.tol))
    rec = {"record": "norm", **res.to_dict(), "checks": checks}
    return [rec]


def cmd_decompose(args, G: MetricGraph) -> list[dict]:
    x = io.load_combination(G, _need(args, "vector"))
    eps = _need(args, "epsilon")
    D = decompose(G, x, eps)
    rep = verify_decomposition(G, x, D, eps, args.tol)
    n = len(x.terms)
    checks = [
        {"name": name, **{k: v for k, v in cond.items() if k != "name"}}
        for name, cond in rep.conditions.items()
    ]
    return [
        {"record": "decomposition", "epsilon": eps, "n": n, "m": D.m, "C_n": c_bound(n), **D.to_dict()},
        {"record": "verification", "checks": checks},
    ]


def cmd_lasq(args, G: MetricGraph) -> list[dict]:
    x = _need_vector(args, G)
    eps = _need(args, "epsilon")
    if args.normalize:
        nx = transport(G, x).value
        if nx <= 0:
            raise PreconditionError("x is zero")
        x = x * (1.0 / nx)
    try:
        bundle = lasq_witness(G, x, eps, args.tol)
    except VerificationError as exc:
        if exc.report is None or not hasattr(exc.report, "to_dict"):
            raise
        bundle = exc.report
    return [{"record": "lasq_witness", **bundle.to_dict()}]


def _endpoints(args, G: MetricGraph) -> tuple[GraphPoint, GraphPoint]:
    p = G.parse_point(args.p) if args.p else G.basepoint
    if args.q:
        q = G.parse_point(args.q)
    else:
        far = [G.distance(p, G.vertex(v)) for v in G.vertices]
        q = G.vertex(G.vertices[int(np.argmax(far))])
    return p, q


def cmd_asq(args, G: MetricGraph) -> list[dict]:
    eps = _need(args, "epsilon")
    p, q = _endpoints(args, G)
    fam = asq_family(G, eps, p, q)
    records = [{"record": "asq_family", **fam.to_dict()}]
    if args.vector:
        ys = [io.load_vector(G, args.vector)]
    else:
        rng = np.random.default_rng(args.seed)
        ys = [random_combination(G, rng, max_terms=3) for _ in range(args.trials)]
    worst = None
    for k, y in enumerate(ys):
        cert = asq_certificate(G, fam, y, tol=args.tol)
        records.append(
            {
                "record": "asq_trial",
                "trial": k,
                "index": cert.index + 1,
                "norm_y": cert.norm_y,
                "bound": cert.bound,
                "true_norm": cert.true_norm,
                "checks": cert.checks,
            }
        )
        if worst is None or cert.bound - (1 + cert.norm_y) < worst[1].bound - (1 + worst[1].norm_y):
            worst = (k, cert)
    records.append({"record": "asq_worst", "trial": worst[0], "certificate": worst[1].to_dict()})
    return records


def cmd_refute(args, G: MetricGraph) -> list[dict]:
    eps = _need(args, "epsilon")
    p, q = _endpoints(args, G)
    fam = asq_family(G, eps, p, q)
    rep = refute_s_asq(G, fam, args.s, args.trials, seed=args.seed, tol=args.tol)
    checks = [
        _check("max_i ||m_{p_i,q_i} + s y|| > 1+s-eps (worst trial)", 1 + args.s + rep.min_margin, 1 + args.s - eps, ">"),
        _check("failed trials", float(len(rep.failures)), 0.0, "=="),
    ]
    return [
        {"record": "asq_family", **fam.to_dict()},
        {"record": "refute_s_asq", **rep.to_dict(), "checks": checks},
    ]


def cmd_check_lipschitz(args, G: MetricGraph) -> list[dict]:
    anchors, L = io.load_function(G, _need(args, "function"))
    if len(anchors) < 2:
        raise PreconditionError("need at least two anchors")
    lip = lipschitz_constant_on(G, anchors)
    checks = [_check("Lip(f) on anchors <= L", lip, L, "<=", args.tol)]
    rec = {"record": "check_lipschitz", "constant": L, "anchor_constant": lip, "checks": checks}
    if lip <= L + args.tol:
        ext = mcshane_extend(G, anchors, L, args.tol)
        rng = np.random.default_rng(args.seed)
        pts = list(anchors) + [random_point(G, rng) for _ in range(args.trials)]
        vals = ext.evaluate(pts)
        D = G.distance_matrix(pts)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(D > 0, np.abs(vals[:, None] - vals[None, :]) / np.where(D > 0, D, 1), 0.0)
        exact = max(abs(float(vals[k]) - anchors[p]) for k, p in enumerate(anchors))
        checks.append(_check("extension Lipschitz constant <= L", float(ratio.max()), L, "<=", args.tol))
        checks.append(_check("extension restricted to anchors", exact, 0.0, "==", args.tol))
        rec["samples"] = args.trials
    return [rec]


COMMANDS: dict[str, Callable] = {
    "norm": cmd_norm,
    "decompose": cmd_decompose,
    "lasq-witness": cmd_lasq,
    "asq-certificate": cmd_asq,
    "refute-s-asq": cmd_refute,
    "check-lipschitz": cmd_check_lipschitz,
}


def _need(args, name: str):
    val = getattr(args, name, None)
    if val is None:
        raise PreconditionError(f"--{name.replace('_', '-')} is required for {args.command}")
    return val


def _need_vector(args, G: MetricGraph) -> FreeVector:
    return io.load_vector(G, _need(args, "vector"))


# output ------------------------------------------------------------------


def _human(rec: dict, out) -> None:
    out.write(f"[{rec.get('record', 'record')}]\n")
    for key in sorted(rec):
        if key in ("record", "checks"):
            continue
        val = rec[key]
        if isinstance(val, (list, dict)):
            text = json.dumps(val, sort_keys=True)
            if len(text) > 100:
                text = f"<{len(val)} entries>"
            out.write(f"  {key}: {text}\n")
        else:
            out.write(f"  {key}: {val}\n")
    for c in rec.get("checks", []):
        mark = "PASS" if c["passed"] else "FAIL"
        op = c.get("op", "")
        out.write(f"  {mark} {c['name']}: {c.get('value')} {op} {c.get('bound')}\n".replace("  \n", "\n"))


def emit(records: list[dict], fmt: str, out=None) -> None:
    out = out or sys.stdout
    for rec in records:
        if fmt == "json-lines":
            out.write(json.dumps(rec, sort_keys=True) + "\n")
        else:
            _human(rec, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lipfree", description="Lipschitz-free space computations on metric graphs.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", required=True, help="graph JSON file")
    common.add_argument("--vector", help="vector JSON file (atoms or terms)")
    common.add_argument("--epsilon", type=_positive)
    common.add_argument("--s", type=_unit_interval, default=1.0)
    common.add_argument("--trials", type=_count, default=100)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=_tolerance, default=TOL)
    common.add_argument("--format", choices=("human", "json-lines"), default="human")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("norm", parents=[common], help="transport norm with plan and dual")
    sub.add_parser("decompose", parents=[common], help="disjoint-path decomposition of a molecular combination")
    p = sub.add_parser("lasq-witness", parents=[common], help="local almost-squareness witness")
    p.add_argument("--normalize", action="store_true", help="scale the input vector to norm one")
    for name, text in (("asq-certificate", "certificates against almost-squareness"),
                       ("refute-s-asq", "sampled refutation of s-almost-squareness")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--p", help="start point of the family (default: basepoint)")
        p.add_argument("--q", help="end point of the family (default: farthest vertex)")
    p = sub.add_parser("check-lipschitz", parents=[common], help="Lipschitz constant and McShane extension check")
    p.add_argument("--function", help="function JSON file (anchors and constant)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        G = io.load_graph(args.graph)
        records = COMMANDS[args.command](args, G)
    except (DomainError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    emit(records, args.format)
    failed = _failed(records)
    if failed:
        print("verification failed: " + "; ".join(dict.fromkeys(failed)), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()

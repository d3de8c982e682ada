"""Local almost-squareness witnesses on metric graphs.

For a unit vector ``x`` and ``eps > 0``, :func:`lasq_witness` produces a
vector ``y`` such that ``||x +- y/||y|| || <= 1 + eps``.  The vector ``y`` is a
weighted sum of "zig-zags", one per path of a disjoint-path decomposition of
``x``: along each path the zig-zag alternates short molecules of equal length
so that it nearly cancels against the path molecule in both signs, while a
single 1-Lipschitz function ``g`` evaluates to exactly one on every zig-zag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .decomposer import Decomposition, decompose, verify_decomposition
from .errors import PreconditionError, VerificationError
from .free_space import (
    FreeVector,
    LipschitzFn,
    lipschitz_constant_on,
    mcshane_extend,
    molecular_representation,
    molecule_vector,
    pair,
    transport,
)
from .metric_graph import TOL, GraphPath, GraphPoint, MetricGraph, clearance_radii

__all__ = [
    "PathPartition",
    "WitnessBundle",
    "partition_points",
    "zigzag",
    "norming_values",
    "assemble_global_g",
    "lasq_witness",
]


@dataclass
class PathPartition:
    K: int
    s: float
    params: list[float]
    points: list[GraphPoint]
    order_ok: bool = True

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "s": self.s,
            "params": self.params,
            "points": [str(p) for p in self.points],
        }


def _snap(G: MetricGraph, p: GraphPoint, known) -> GraphPoint:
    for k in known:
        if k == p or G.distance(p, k) <= TOL:
            return k
    return p


def partition_points(G: MetricGraph, gamma: GraphPath, R: float, r: float) -> PathPartition:
    """Points u_0..u_2K along ``gamma`` for the zig-zag construction.

    K is the least integer with ``2 (K - 2) r > d(a, b) - 2R`` and
    ``s = (d(a, b) - 2R) / (2 (K - 2))``, so that ``0 < s < r``.
    """
    a, b = gamma.start, gamma.end
    d = G.distance(a, b)
    if not 0 < r < R:
        raise PreconditionError("need 0 < r < R")
    if d <= 2 * R:
        raise PreconditionError(f"d(a, b) = {d} must exceed 2R = {2 * R}")
    K = math.floor((d - 2 * R) / (2 * r)) + 3
    s = (d - 2 * R) / (2 * (K - 2))

    t = [0.0] * (2 * K + 1)
    u: list[GraphPoint | None] = [None] * (2 * K + 1)
    t[0], u[0] = 0.0, a
    t[2 * K], u[2 * K] = 1.0, b

    def at(tk):
        return _snap(G, gamma.point_at(tk), [p for p in u if p is not None])

    t1 = gamma.params_at_distance(a, R, last=True)
    tlast = gamma.params_at_distance(b, R, last=False)
    if t1 is None or tlast is None:
        raise VerificationError("path never reaches distance R from its endpoints")
    t[1], u[1] = t1, at(t1)
    t[2 * K - 1], u[2 * K - 1] = tlast, at(tlast)
    for k in range(1, 2 * K - 3):
        tk = gamma.params_at_distance(u[k], s, last=True)
        if tk is None:
            raise VerificationError(f"no point at distance s from u_{k}")
        t[k + 1], u[k + 1] = tk, at(tk)

    lo, hi = t[2 * K - 3], t[2 * K - 1]
    order_ok = lo <= hi + TOL / gamma.length
    if not order_ok:
        raise VerificationError(
            f"partition order violated: t_(2K-3) = {lo} > t_(2K-1) = {hi}",
            report={"K": K, "s": s, "params": t},
        )
    p3, p1 = u[2 * K - 3], u[2 * K - 1]

    def h(tt):
        x = gamma.point_at(tt)
        return G.distance(x, p3) - G.distance(x, p1)

    if p3 == p1 or abs(h(lo)) <= TOL:
        tm = lo
    elif abs(h(hi)) <= TOL:
        tm = hi
    else:
        a_, b_ = lo, max(lo, hi)
        for _ in range(200):
            mid = 0.5 * (a_ + b_)
            if h(mid) < 0:
                a_ = mid
            else:
                b_ = mid
        tm = 0.5 * (a_ + b_)
    t[2 * K - 2] = tm
    u[2 * K - 2] = p3 if tm == lo else (p1 if tm == hi else at(tm))
    return PathPartition(K, s, t, list(u), order_ok)


def zigzag(G: MetricGraph, points: list[GraphPoint], d_ab: float) -> FreeVector:
    """sum_k [ d(u_{2k-2},u_{2k-1}) m_{u_{2k-2},u_{2k-1}} - d(u_{2k-1},u_{2k}) m_{u_{2k-1},u_{2k}} ] / d_ab"""
    atoms = []
    c = 1.0 / d_ab
    for k in range(1, (len(points) - 1) // 2 + 1):
        p0, p1, p2 = points[2 * k - 2], points[2 * k - 1], points[2 * k]
        if p0 != p1:
            atoms += [(c, p0), (-c, p1)]
        if p1 != p2:
            atoms += [(-c, p1), (c, p2)]
    return FreeVector(tuple(atoms))


def norming_values(K: int, R: float, s: float) -> list[float]:
    """Values of g on u_0..u_2K: R at both ends, 0 at odd indices and u_{2K-2}, s otherwise."""
    vals = []
    for k in range(2 * K + 1):
        if k in (0, 2 * K):
            vals.append(R)
        elif k % 2 == 1 or k == 2 * K - 2:
            vals.append(0.0)
        else:
            vals.append(s)
    return vals


def assemble_global_g(
    G: MetricGraph,
    per_path: list[tuple[list[GraphPoint], list[float]]],
    tol: float = TOL,
) -> LipschitzFn:
    """Union of per-path anchors, McShane-extended and shifted to vanish at the basepoint."""
    anchors: dict[GraphPoint, float] = {}
    for points, values in per_path:
        for p, v in zip(points, values):
            if p in anchors and abs(anchors[p] - v) > tol:
                raise VerificationError(f"conflicting values of g at {p}: {anchors[p]} vs {v}")
            anchors[p] = v
    g = mcshane_extend(G, anchors, 1.0, tol)
    shift = g(G.basepoint)
    shifted = {p: v - shift for p, v in anchors.items()}
    shifted[G.basepoint] = 0.0
    return LipschitzFn(G, shifted, 1.0)


@dataclass
class WitnessBundle:
    x: FreeVector
    eps: float
    y: FreeVector
    y_terms: list[FreeVector]
    g: LipschitzFn
    decomposition: Decomposition
    R: float
    r: float
    partitions: list[PathPartition]
    diagnostics: dict = field(default_factory=dict)
    checks: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.eps,
            "R": self.R,
            "r": self.r,
            "m": self.decomposition.m,
            "decomposition": self.decomposition.to_dict(),
            "partitions": [p.to_dict() for p in self.partitions],
            "y": self.y.to_list(),
            "g": self.g.to_list(),
            "diagnostics": self.diagnostics,
            "checks": self.checks,
        }


def _check(checks: list, name: str, value: float, bound: float, op: str, tol: float = 0.0) -> None:
    if op == "<=":
        passed = value <= bound + tol
    elif op == "<":
        passed = value < bound
    elif op == ">":
        passed = value > bound
    else:  # "=="
        passed = abs(value - bound) <= tol
    checks.append({"name": name, "value": value, "bound": bound, "op": op, "passed": bool(passed)})


def lasq_witness(G: MetricGraph, x: FreeVector, eps: float, tol: float = TOL) -> WitnessBundle:
    """Build and verify y with ||x +- y/||y|| || <= 1 + eps for a unit vector x."""
    if eps <= 0:
        raise PreconditionError("epsilon must be positive")
    nx = transport(G, x).value
    if abs(nx - 1.0) > tol:
        raise PreconditionError(f"x must have norm 1, got {nx}")

    comb = molecular_representation(G, x)
    D = decompose(G, comb, eps / 5)
    m = D.m
    terms = D.terms
    checks: list[dict] = []
    lemma = verify_decomposition(G, comb, D, eps / 5, tol)
    _check(checks, "decomposition (a)-(d)", float(lemma.ok), 1.0, "==")

    paths = [t.path for t in terms]
    R, r = clearance_radii(G, paths)
    R = min([R] + [G.distance(t.start, t.end) / 4 for t in terms])
    r = min(r, R / 2)

    partitions, y_terms, per_path = [], [], []
    for t in terms:
        part = partition_points(G, t.path, R, r)
        d_ab = G.distance(t.start, t.end)
        partitions.append(part)
        y_terms.append(zigzag(G, part.points, d_ab))
        per_path.append((part.points, norming_values(part.K, R, part.s)))
        # path-length bound with delta_j = d(a_j, b_j) / (m alpha_j)
        _check(
            checks,
            "L(gamma_j) < d(a_j,b_j) + eps*delta_j/5",
            t.path.length,
            d_ab + eps * d_ab / (m * t.weight) / 5,
            "<",
        )
    g = assemble_global_g(G, per_path, tol)

    y = FreeVector()
    for t, yj in zip(terms, y_terms):
        y = y + t.weight * yj

    diag: dict = {"R": R, "r": r, "m": m}
    ny = transport(G, y).value
    plus = transport(G, x + y * (1.0 / ny)).value
    minus = transport(G, x - y * (1.0 / ny)).value
    alpha_sum = sum(t.weight for t in terms)
    diag.update({"norm_y": ny, "norm_x_plus": plus, "norm_x_minus": minus, "g(y)": pair(g, y)})
    _check(checks, "||x + y/||y|| || <= 1+eps", plus, 1 + eps, "<=", tol)
    _check(checks, "||x - y/||y|| || <= 1+eps", minus, 1 + eps, "<=", tol)
    _check(checks, "||y|| > 1-eps/5", ny, 1 - eps / 5, ">")
    _check(checks, "||y|| < 1+2eps/5", ny, 1 + 2 * eps / 5, "<")
    _check(checks, "g(y) = sum alpha_j", pair(g, y), alpha_sum, "==", tol)

    per_term = []
    for t, yj in zip(terms, y_terms):
        mv = molecule_vector(G, t.start, t.end)
        bound = 1 + eps / (5 * m * t.weight)
        np_, nm_ = transport(G, mv + yj).value, transport(G, mv - yj).value
        gy = pair(g, yj)
        per_term.append({"plus": np_, "minus": nm_, "bound": bound, "g(y_j)": gy})
        _check(checks, "||m_ab + y_j|| <= 1+eps/(5 m alpha_j)", np_, bound, "<=", tol)
        _check(checks, "||m_ab - y_j|| <= 1+eps/(5 m alpha_j)", nm_, bound, "<=", tol)
        _check(checks, "g(y_j) = 1", gy, 1.0, "==", tol)
    diag["per_term"] = per_term

    if len(g.anchors) > 1:
        lip = lipschitz_constant_on(G, g)
        diag["g_lipschitz_on_anchors"] = lip
        _check(checks, "Lipschitz constant of g on anchors = 1", lip, 1.0, "==", tol)

    bundle = WitnessBundle(x, eps, y, y_terms, g, D, R, r, partitions, diag, checks)
    if not bundle.ok:
        failed = [c["name"] for c in checks if not c["passed"]]
        raise VerificationError("witness bounds failed: " + "; ".join(failed), report=bundle)
    return bundle

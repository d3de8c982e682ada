"""Certificates that a Lipschitz-free space is not (s-)almost square.

:func:`asq_family` places ``n >= 8/eps`` short molecules ``m_{p_i,q_i}`` along a
geodesic, each inside its own ball ``B(p_i, r)``.  Any ``y`` with ``||y|| <= 1``
can only load a few of those balls, so for some ``i`` the norming function
of ``y`` can be rebuilt inside ``B_i`` to also norm ``m_{p_i,q_i}``.
:func:`asq_certificate` performs that rebuild and returns the resulting
lower bound on ``||m_{p_i,q_i} + y||``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError, VerificationError
from .free_space import (
    FreeVector,
    LipschitzFn,
    MolecularCombination,
    lipschitz_constant_on,
    mcshane_extend,
    molecular_representation,
    molecule_vector,
    norm_dual_lp,
    pair,
    transport,
)
from .metric_graph import TOL, GraphPath, GraphPoint, MetricGraph
from .sampling import random_combination

__all__ = ["AsqFamily", "AsqCertificate", "asq_family", "asq_certificate", "refute_s_asq"]


@dataclass
class AsqFamily:
    eps: float
    n: int
    theta: float
    p: GraphPoint
    q: GraphPoint
    r: float
    gamma: GraphPath
    ps: list[GraphPoint]
    qs: list[GraphPoint]

    def molecule(self, G: MetricGraph, i: int) -> FreeVector:
        return molecule_vector(G, self.ps[i], self.qs[i])

    def to_dict(self) -> dict:
        return {
            "epsilon": self.eps,
            "n": self.n,
            "theta": self.theta,
            "p": str(self.p),
            "q": str(self.q),
            "r": self.r,
            "pairs": [[str(a), str(b)] for a, b in zip(self.ps, self.qs)],
        }


def asq_family(G: MetricGraph, eps: float, p: GraphPoint, q: GraphPoint) -> AsqFamily:
    """n = ceil(8/eps) point pairs along the geodesic from p to q."""
    if eps <= 0:
        raise PreconditionError("epsilon must be positive")
    if p == q:
        raise PreconditionError("p and q must differ")
    n = max(1, math.ceil(8 / eps - 1e-12))
    while 8 / n > eps:
        n += 1
    theta = eps / 8
    gamma = G.geodesic(p, q)
    dpq = G.distance(p, q)
    r = dpq / (2 * n)

    ps = [p]
    for _ in range(n - 1):
        t = gamma.params_at_distance(ps[-1], dpq / n, last=True)
        if t is None:
            raise VerificationError("no point at distance d(p,q)/n along the geodesic")
        ps.append(gamma.point_at(t))

    qs = []
    step = theta * r / 2
    for i, pi in enumerate(ps):
        ti = gamma.locate(pi)
        arc = ti * gamma.length + (step if i < n - 1 or n == 1 else -step)
        qi = gamma.point_at(arc / gamma.length)
        dq = G.distance(pi, qi)
        if not 0 < dq < theta * r:
            raise DomainError(
                f"cannot place q_{i + 1} in B(p_{i + 1}, theta r) minus p_{i + 1}; subdivide the graph"
            )
        qs.append(qi)

    for i in range(n):
        for j in range(i + 1, n):
            if G.distance(ps[i], ps[j]) < 2 * r - TOL:
                raise VerificationError(f"balls B_{i + 1} and B_{j + 1} overlap")
    return AsqFamily(eps, n, theta, p, q, r, gamma, ps, qs)


@dataclass
class AsqCertificate:
    index: int
    J: list[int]
    crossing_weight: float
    m: int
    norm_y: float
    bound: float
    chain_bound: float
    g_constant: float
    g: LipschitzFn
    f: LipschitzFn
    true_norm: float | None = None
    checks: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "index": self.index + 1,
            "J": [j + 1 for j in self.J],
            "crossing_weight": self.crossing_weight,
            "m": self.m,
            "norm_y": self.norm_y,
            "bound": self.bound,
            "chain_bound": self.chain_bound,
            "g_constant": self.g_constant,
            "true_norm": self.true_norm,
            "g": self.g.to_list(),
            "checks": self.checks,
        }


def _repair(G: MetricGraph, f: LipschitzFn) -> LipschitzFn:
    """Remove LP round-off: inf-convolve the anchors with d, then re-zero at the basepoint."""
    pts = list(f.anchors)
    vals = np.array([f.anchors[p] for p in pts])
    fixed = (vals[None, :] + G.distance_matrix(pts)).min(axis=1)
    anchors = dict(zip(pts, fixed.tolist()))
    shift = anchors.get(G.basepoint, 0.0)
    return LipschitzFn(G, {p: v - shift for p, v in anchors.items()})


def _crossing_sets(G: MetricGraph, fam: AsqFamily, y: MolecularCombination):
    pts = list(dict.fromkeys(p for t in y.terms for p in (t.p, t.q)))
    if not pts:
        return [[] for _ in range(fam.n)]
    D = G.distance_matrix(pts, fam.ps)
    inside = {p: set(np.nonzero(D[k] < fam.r)[0].tolist()) for k, p in enumerate(pts)}
    J = [[] for _ in range(fam.n)]
    for j, t in enumerate(y.terms):
        for i in sorted(inside[t.p] | inside[t.q]):
            J[i].append(j)
    return J


def asq_certificate(
    G: MetricGraph,
    fam: AsqFamily,
    y: MolecularCombination | FreeVector,
    f: LipschitzFn | None = None,
    tol: float = TOL,
    check_norm: bool = True,
) -> AsqCertificate:
    """Lower bound on some ||m_{p_i,q_i} + y|| exceeding 1 + ||y|| - eps.

    ``y`` may be any molecular combination with total weight at most one
    (equal weights 1/m being the textbook case) or a free vector, which is
    first put in optimal molecular form.  The ball index is chosen to
    minimise the weight of molecules touching it; with equal weights that is
    the smallest crossing count ``|J|``.
    """
    if isinstance(y, FreeVector):
        y = molecular_representation(G, y)
    if y.total_weight() > 1 + tol:
        raise PreconditionError("y must have total weight at most 1")
    yv = y.to_vector(G)
    if f is None:
        _, f = norm_dual_lp(G, yv)
        f = _repair(G, f)
    norm_y = pair(f, yv)
    supp = [p for _, p in yv.atoms] + [G.basepoint]
    if len(f.anchors) > 1 and lipschitz_constant_on(G, f) > 1 + tol:
        raise PreconditionError("f is not 1-Lipschitz")
    if check_norm:
        ny = transport(G, yv).value
        if abs(ny - norm_y) > 1e-7 * max(1.0, ny):
            raise PreconditionError(f"f does not norm y: f(y) = {norm_y}, ||y|| = {ny}")

    J = _crossing_sets(G, fam, y)
    weights = [sum(y.terms[j].weight for j in Ji) for Ji in J]
    best = min(weights)
    i = min(k for k, w in enumerate(weights) if w <= best + tol)
    pi, qi = fam.ps[i], fam.qs[i]

    fq = f(qi)
    dpq = G.distance(pi, qi)
    anchors = {}
    if supp:
        D = G.distance_matrix(list(dict.fromkeys(supp)), [pi])
        for k, p in enumerate(dict.fromkeys(supp)):
            if D[k, 0] >= fam.r:
                anchors[p] = f(p)
    anchors[qi] = fq
    anchors[pi] = fq + dpq
    L = 1 + 2 * fam.theta
    g_const = lipschitz_constant_on(G, anchors)
    checks: list[dict] = []
    checks.append({"name": "||g|| <= 1+2theta", "value": g_const, "bound": L, "passed": g_const <= L + tol})
    g = mcshane_extend(G, anchors, L, tol=max(tol, 1e-12))

    g_m = (g(pi) - g(qi)) / dpq
    g_y = pair(g, yv)
    bound = (g_m + g_y) / L
    n = fam.n
    m = len(y.terms)
    chain = 1 + norm_y - 2 * fam.theta * (1 + norm_y) - 4 / n
    checks.append(
        {"name": "crossing weight <= 2/n", "value": best, "bound": 2 * y.total_weight() / n,
         "passed": best <= 2 * y.total_weight() / n + tol}
    )
    checks.append(
        {"name": "(f-g)(y) <= 4(1+theta)/n", "value": norm_y - g_y, "bound": 4 * (1 + fam.theta) / n,
         "passed": norm_y - g_y <= 4 * (1 + fam.theta) / n + tol}
    )
    checks.append(
        {"name": "bound >= 1+||y||-2theta(1+||y||)-4/n", "value": bound, "bound": chain,
         "passed": bound >= chain - tol}
    )
    checks.append(
        {"name": "bound > 1+||y||-eps", "value": bound, "bound": 1 + norm_y - fam.eps,
         "passed": bound > 1 + norm_y - fam.eps}
    )
    cert = AsqCertificate(i, J[i], best, m, norm_y, bound, chain, g_const, g, f)
    cert.checks = checks
    if check_norm:
        true = transport(G, molecule_vector(G, pi, qi) + yv).value
        cert.true_norm = true
        checks.append(
            {"name": "bound <= ||m_{p_i,q_i}+y||", "value": bound, "bound": true,
             "passed": bound <= true + tol}
        )
    return cert


@dataclass
class RefutationReport:
    s: float
    eps: float
    trials: int
    seed: int
    min_margin: float
    all_passed: bool
    failures: list[int]
    worst_trial: int
    worst_certificate: AsqCertificate | None
    margins: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "epsilon": self.eps,
            "trials": self.trials,
            "seed": self.seed,
            "min_margin": self.min_margin,
            "all_passed": self.all_passed,
            "failures": self.failures,
            "worst_trial": self.worst_trial,
            "worst_certificate": self.worst_certificate.to_dict() if self.worst_certificate else None,
        }


def refute_s_asq(
    G: MetricGraph,
    fam: AsqFamily,
    s: float,
    trials: int,
    seed: int = 0,
    max_terms: int = 3,
    tol: float = TOL,
) -> RefutationReport:
    """Sample unit y and confirm max_i ||m_{p_i,q_i} + s y|| > 1 + s - eps each time."""
    if not 0 < s <= 1:
        raise PreconditionError("s must lie in (0, 1]")
    if trials < 1:
        raise PreconditionError("trials must be positive")
    rng = np.random.default_rng(seed)
    molecules = [fam.molecule(G, i) for i in range(fam.n)]
    margins, failures = [], []
    worst, worst_k, worst_cert = math.inf, -1, None
    for k in range(trials):
        y = random_combination(G, rng, max_terms=max_terms)
        yv = y.to_vector(G)
        ny = transport(G, yv).value
        sy = yv * (s / ny)
        unit = molecular_representation(G, sy)
        best = max(transport(G, mol + sy).value for mol in molecules)
        margin = best - (1 + s)
        cert = asq_certificate(G, fam, unit, tol=tol)
        passed = margin > -fam.eps and cert.ok and cert.true_norm <= best + tol
        margins.append(margin)
        if not passed:
            failures.append(k)
        if margin < worst:
            worst, worst_k, worst_cert = margin, k, cert
    return RefutationReport(
        s, fam.eps, trials, seed, worst, not failures, failures, worst_k, worst_cert, margins
    )

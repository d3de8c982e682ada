"""Disjoint-path decomposition of molecular combinations.

Given ``x = sum lambda_i m_{p_i,q_i}`` with positive weights summing to at
most one, :func:`decompose` rewrites ``x`` (up to epsilon) as a combination
``sum alpha_j m_{a_j,b_j}`` whose supporting simple paths are pairwise
disjoint except at common endpoints, using at most ``(4**n - 1) / 3`` terms.

The construction is inductive.  Each new molecule gets a near-geodesic path
``gamma``; wherever ``gamma`` runs into an already placed path it is cut and,
if it comes back to that path later, rerouted along it.  The placed paths are
then cut at the new partition points and overlapping pieces are merged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import DomainError, PreconditionError, VerificationError
from .free_space import FreeVector, MolecularCombination, molecule_vector, norm
from .metric_graph import TOL, GraphPath, GraphPoint, MetricGraph, check_endpoint_disjoint, path_intersection

__all__ = [
    "PathTerm",
    "StepReport",
    "Decomposition",
    "CrossingPartition",
    "c_bound",
    "decompose",
    "crossing_partition",
    "split_and_gather",
    "verify_decomposition",
    "DecompositionReport",
]

PathProvider = Callable[[MetricGraph, GraphPoint, GraphPoint, float], GraphPath]


def c_bound(n: int) -> int:
    """(4**n - 1) / 3, the bound on the number of output paths for n molecules."""
    if int(n) != n or n < 1:
        raise DomainError("c_bound needs a positive integer")
    return (4 ** int(n) - 1) // 3


@dataclass(frozen=True)
class PathTerm:
    weight: float
    start: GraphPoint
    end: GraphPoint
    path: GraphPath

    def to_dict(self) -> dict:
        return {
            "alpha": self.weight,
            "a": str(self.start),
            "b": str(self.end),
            "path": self.path.to_list(),
            "length": self.path.length,
        }


@dataclass
class StepReport:
    """Bookkeeping for one inductive step, used to audit the mass estimates."""

    n: int
    eps: float
    eps_prime: float | None
    weight: float
    distance: float
    path_length: float
    budget: float
    previous_weight: float  # sum of lambda_1..lambda_{n-1}
    split_mass: list[tuple[float, float]] = field(default_factory=list)
    alpha_mass: float = 0.0
    beta_mass: float = 0.0
    m_before: int = 0
    m_after: int = 0


@dataclass(frozen=True)
class Decomposition:
    terms: tuple[PathTerm, ...]
    x: MolecularCombination
    eps: float
    n: int
    steps: tuple[StepReport, ...] = ()

    @property
    def m(self) -> int:
        return len(self.terms)

    def to_vector(self, G: MetricGraph) -> FreeVector:
        out = FreeVector()
        for t in self.terms:
            out = out + t.weight * molecule_vector(G, t.start, t.end)
        return out

    def to_dict(self) -> dict:
        return {"n": self.n, "epsilon": self.eps, "m": self.m, "terms": [t.to_dict() for t in self.terms]}


@dataclass
class CrossingPartition:
    params: list[float]
    points: list[GraphPoint]
    # (subpath, index of the placed path it was rerouted along, or None)
    segments: list[tuple[GraphPath, int | None]]
    betas: list[float]


def _snap(G: MetricGraph, p: GraphPoint, known: Sequence[GraphPoint]) -> GraphPoint:
    for k in known:
        if k == p or G.distance(p, k) <= TOL:
            return k
    return p


def crossing_partition(
    G: MetricGraph,
    gamma: GraphPath,
    existing: Sequence[GraphPath],
    weight: float = 1.0,
    known: Sequence[GraphPoint] = (),
) -> CrossingPartition:
    """Cut ``gamma`` where it meets placed paths, rerouting returns along them.

    ``known`` lists points that computed partition points are snapped to when
    they agree within tolerance (the placed endpoints, typically).
    """
    L = gamma.length
    d_pq = G.distance(gamma.start, gamma.end)
    tt = TOL / L
    T = [path_intersection(gamma, g) for g in existing]
    known = list(known) + [gamma.start, gamma.end]

    t_prev = 0.0
    u_prev = gamma.start
    params, points, segments = [0.0], [u_prev], []
    for _ in range(4 * sum(len(x) for x in T) + 4):
        future = [any(hi > t_prev + tt for _, hi in ivs) for ivs in T]
        if not any(future):
            t_next, source = 1.0, None
        else:
            J = [j for j, ivs in enumerate(T) if any(lo - tt <= t_prev <= hi + tt for lo, hi in ivs)]
            later = [
                (max(hi for _, hi in T[j] if hi > t_prev + tt), j) for j in J if future[j]
            ]
            if later:
                t_next = max(t for t, _ in later)
                source = min(j for t, j in later if t == t_next)
            else:
                t_next = min(
                    lo for j, ivs in enumerate(T) if j not in J for lo, _ in ivs if lo > t_prev + tt
                )
                source = None
        if t_next >= 1.0 - tt:
            t_next = 1.0
        u_next = gamma.end if t_next == 1.0 else _snap(G, gamma.point_at(t_next), known + points)
        if source is None:
            seg = gamma.subpath(t_prev, t_next, start=u_prev, end=u_next)
        else:
            host = existing[source]
            r, s = host.locate(u_prev), host.locate(u_next)
            if r is None or s is None:
                raise VerificationError("reroute endpoints are not on the host path")
            seg = host.subpath(r, s, start=u_prev, end=u_next)
        params.append(t_next)
        points.append(u_next)
        segments.append((seg, source))
        t_prev, u_prev = t_next, u_next
        if t_next == 1.0:
            break
    else:  # pragma: no cover
        raise VerificationError("crossing partition did not terminate")
    betas = [weight * G.distance(a, b) / d_pq for a, b in zip(points, points[1:])]
    return CrossingPartition(params, points, segments, betas)


def split_and_gather(
    G: MetricGraph,
    existing: Sequence[PathTerm],
    part: CrossingPartition,
    report: StepReport | None = None,
) -> list[PathTerm]:
    """Cut the placed paths at the partition points and merge coinciding pieces."""
    firsts, middles, lasts = [], [], []
    mids_by_source: dict[int, int] = {}
    for j, term in enumerate(existing):
        g = term.path
        d_ab = G.distance(term.start, term.end)
        hits: dict[float, GraphPoint] = {}
        for u in part.points:
            t = g.locate(u)
            if t is not None and not any(abs(t - s) * g.length <= TOL for s in hits):
                hits[t] = u
        if len(hits) > 2:
            raise VerificationError(f"placed path {j} contains {len(hits)} partition points")
        if not hits:
            firsts.append(term)
            if report is not None:
                report.split_mass.append((term.weight, term.weight * g.length / d_ab))
            continue
        s_lo, s_hi = min(hits), max(hits)
        c, d = hits[s_lo], hits[s_hi]
        pieces = [
            (firsts, term.start, c, 0.0, s_lo),
            (middles, c, d, s_lo, s_hi),
            (lasts, d, term.end, s_hi, 1.0),
        ]
        split_sum = 0.0
        for bucket, a, b, t0, t1 in pieces:
            if a == b:
                continue
            w = term.weight * G.distance(a, b) / d_ab
            split_sum += w
            bucket.append(PathTerm(w, a, b, g.subpath(t0, t1, start=a, end=b)))
            if bucket is middles:
                mids_by_source[j] = len(middles) - 1
        if report is not None:
            report.split_mass.append((split_sum, term.weight * g.length / d_ab))

    if report is not None:
        report.alpha_mass = sum(t.weight for t in firsts + middles + lasts)
        report.beta_mass = sum(part.betas)

    news = []
    for (seg, source), beta in zip(part.segments, part.betas):
        if source is not None and source in mids_by_source:
            k = mids_by_source[source]
            mid = middles[k]
            if {seg.start, seg.end} != {mid.start, mid.end}:
                raise VerificationError("rerouted segment does not match the split piece")
            if seg.start == mid.start:
                middles[k] = PathTerm(mid.weight + beta, mid.start, mid.end, mid.path)
            elif mid.weight >= beta:
                middles[k] = PathTerm(mid.weight - beta, mid.start, mid.end, mid.path)
            else:
                middles[k] = PathTerm(beta - mid.weight, mid.end, mid.start, mid.path.reversed())
            continue
        if seg.start != seg.end and beta > 0:
            news.append(PathTerm(beta, seg.start, seg.end, seg))
    scale = max([1.0] + [t.weight for t in middles])
    middles = [t for t in middles if t.weight > 1e-15 * scale]
    return firsts + middles + lasts + news


def _geodesic_provider(G: MetricGraph, p: GraphPoint, q: GraphPoint, budget: float) -> GraphPath:
    return G.geodesic(p, q)


def decompose(
    G: MetricGraph,
    x: MolecularCombination,
    eps: float,
    path_provider: PathProvider | None = None,
) -> Decomposition:
    """Disjoint-path decomposition of ``x`` within ``eps``.

    ``path_provider(G, p, q, budget)`` must return a simple path from p to q
    of length below ``d(p, q) + budget``; it defaults to exact geodesics.
    """
    if eps <= 0:
        raise PreconditionError("epsilon must be positive")
    if any(t.weight <= 0 for t in x.terms):
        raise PreconditionError("all weights must be positive")
    if x.total_weight() > 1 + TOL:
        raise PreconditionError(f"sum of weights {x.total_weight()} exceeds 1")
    provider = path_provider or _geodesic_provider
    terms = [t for t in x.terms if t.p != t.q]
    n = len(terms)
    if n == 0:
        return Decomposition((), x, eps, 0)

    dists = [G.distance(t.p, t.q) for t in terms]
    # eps at level k (1-based) for the sub-combination of the first k molecules
    level_eps = [0.0] * (n + 1)
    level_eps[n] = eps
    for k in range(n, 1, -1):
        d = dists[k - 1]
        level_eps[k - 1] = level_eps[k] * d / (c_bound(k) * (1 + d))

    placed: list[PathTerm] = []
    steps = []
    prev_weight = 0.0
    for k in range(1, n + 1):
        term, d, e_k = terms[k - 1], dists[k - 1], level_eps[k]
        budget = e_k * min(1.0, d / (c_bound(k) * term.weight))
        gamma = provider(G, term.p, term.q, budget)
        if gamma.start != term.p or gamma.end != term.q or not gamma.is_simple():
            raise PreconditionError("path provider returned an invalid path")
        if not gamma.length < d + budget:
            raise PreconditionError("path provider exceeded the length budget")
        rep = StepReport(
            n=k,
            eps=e_k,
            eps_prime=level_eps[k - 1] if k > 1 else None,
            weight=term.weight,
            distance=d,
            path_length=gamma.length,
            budget=budget,
            previous_weight=prev_weight,
            m_before=len(placed),
        )
        known = [p for t in placed for p in (t.start, t.end)]
        part = crossing_partition(G, gamma, [t.path for t in placed], term.weight, known)
        placed = split_and_gather(G, placed, part, rep)
        rep.m_after = len(placed)
        steps.append(rep)
        prev_weight += term.weight
    return Decomposition(tuple(placed), x, eps, n, tuple(steps))


@dataclass
class DecompositionReport:
    ok: bool
    conditions: dict[str, dict]

    def failures(self) -> list[str]:
        return [k for k, v in self.conditions.items() if not v["passed"]]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "conditions": self.conditions}


def verify_decomposition(
    G: MetricGraph, x: MolecularCombination, D: Decomposition, eps: float, tol: float = TOL
) -> DecompositionReport:
    """Recompute the four decomposition guarantees and the term-count bound."""
    n = len([t for t in x.terms if t.p != t.q])
    cn = c_bound(n) if n else 0
    conds: dict[str, dict] = {}

    gap = norm(G, x.to_vector(G) - D.to_vector(G))
    conds["(a)"] = {"passed": gap < eps, "value": gap, "bound": eps, "slack": eps - gap}

    mass = sum(t.weight for t in D.terms)
    lam = x.total_weight()
    conds["(b)"] = {
        "passed": mass < lam + eps,
        "value": mass,
        "bound": lam + eps,
        "slack": lam + eps - mass,
    }

    problems = check_endpoint_disjoint([t.path for t in D.terms], tol)
    for k, t in enumerate(D.terms):
        if t.path.start != t.start or t.path.end != t.end or not t.path.is_simple(tol):
            problems.append(f"term {k} path is not a simple path from a to b")
        if t.weight <= 0:
            problems.append(f"term {k} has non-positive weight")
    conds["(c)"] = {"passed": not problems, "problems": problems}

    worst = float("inf")
    excess_max = 0.0
    for t in D.terms:
        d = G.distance(t.start, t.end)
        delta = min(1.0, d / (cn * t.weight)) if cn else 1.0
        excess = t.path.length - d
        excess_max = max(excess_max, excess)
        worst = min(worst, eps * delta - excess)
    if not D.terms:
        worst = eps
    conds["(d)"] = {"passed": worst > 0, "slack": worst, "max_excess": excess_max}
    conds["m<=C_n"] = {"passed": D.m <= max(cn, 0), "m": D.m, "C_n": cn}
    return DecompositionReport(all(c["passed"] for c in conds.values()), conds)

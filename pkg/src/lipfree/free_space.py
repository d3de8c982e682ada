"""Finitely supported elements of the Lipschitz-free space F(M).

The norm of a finitely supported vector is its Kantorovich-Rubinstein norm:
after sending the total-mass imbalance to the basepoint (where evaluation is
identically zero), it is the minimum cost of transporting the positive part
onto the negative part with cost equal to the geodesic distance.

On a metric graph that transport problem is a transshipment problem on the
graph itself, subdivided at the support points, so it is solved by
successive shortest paths with node potentials.  The final potentials form
a 1-Lipschitz function on every node of the subdivided graph, which is the
norming function returned alongside the value.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError, PreconditionError
from .metric_graph import TOL, GraphPoint, MetricGraph

__all__ = [
    "FreeVector",
    "Term",
    "MolecularCombination",
    "LipschitzFn",
    "TransportResult",
    "reduce",
    "molecule_vector",
    "norm",
    "transport",
    "norm_dual_lp",
    "pair",
    "mcshane_extend",
    "lipschitz_constant_on",
    "molecular_representation",
]


@dataclass(frozen=True)
class FreeVector:
    """Finite linear combination of evaluation functionals ``sum c * delta_p``."""

    atoms: tuple[tuple[float, GraphPoint], ...] = ()

    @classmethod
    def delta(cls, p: GraphPoint, c: float = 1.0) -> "FreeVector":
        return cls(((float(c), p),))

    def __add__(self, other: "FreeVector") -> "FreeVector":
        return FreeVector(self.atoms + other.atoms)

    def __neg__(self) -> "FreeVector":
        return FreeVector(tuple((-c, p) for c, p in self.atoms))

    def __sub__(self, other: "FreeVector") -> "FreeVector":
        return self + (-other)

    def __mul__(self, s: float) -> "FreeVector":
        return FreeVector(tuple((c * s, p) for c, p in self.atoms))

    __rmul__ = __mul__

    def __len__(self) -> int:
        return len(self.atoms)

    def support(self) -> list[GraphPoint]:
        return list(dict.fromkeys(p for _, p in self.atoms))

    def total_mass(self) -> float:
        return float(sum(c for c, _ in self.atoms))

    def to_list(self) -> list[dict]:
        return [{"coefficient": c, "point": str(p)} for c, p in self.atoms]


@dataclass(frozen=True)
class Term:
    weight: float
    p: GraphPoint
    q: GraphPoint


@dataclass(frozen=True)
class MolecularCombination:
    """``sum weight * m_{p,q}`` with positive weights."""

    terms: tuple[Term, ...] = ()

    @classmethod
    def of(cls, triples: Iterable[tuple[float, GraphPoint, GraphPoint]]) -> "MolecularCombination":
        return cls(tuple(Term(float(w), p, q) for w, p, q in triples))

    def total_weight(self) -> float:
        return float(sum(t.weight for t in self.terms))

    def to_vector(self, G: MetricGraph) -> FreeVector:
        out = FreeVector()
        for t in self.terms:
            out = out + t.weight * molecule_vector(G, t.p, t.q)
        return out

    def to_list(self) -> list[dict]:
        return [{"lambda": t.weight, "p": str(t.p), "q": str(t.q)} for t in self.terms]


def reduce(G: MetricGraph, v: FreeVector, tol: float = 1e-12) -> FreeVector:
    """Merge repeated points, drop the basepoint and (near-)zero coefficients.

    Coefficients below ``tol * max(1, max |c|)`` are treated as cancelled.
    Atoms are ordered by the graph's point order.
    """
    acc: dict[GraphPoint, float] = {}
    for c, p in v.atoms:
        G.validate(p)
        if p == G.basepoint:
            continue
        acc[p] = acc.get(p, 0.0) + float(c)
    if not acc:
        return FreeVector()
    cut = tol * max(1.0, max(abs(c) for c in acc.values()))
    kept = [(c, p) for p, c in acc.items() if abs(c) > cut]
    kept.sort(key=lambda a: G.point_key(a[1]))
    return FreeVector(tuple(kept))


def molecule_vector(G: MetricGraph, p: GraphPoint, q: GraphPoint) -> FreeVector:
    """``(delta_p - delta_q) / d(p, q)``, or the zero vector when p == q."""
    if p == q:
        return FreeVector()
    d = G.distance(p, q)
    return FreeVector(((1.0 / d, p), (-1.0 / d, q)))


class LipschitzFn:
    """Finitely anchored Lipschitz function, evaluated off the anchors by McShane's formula

    ``f(x) = min_p (f(p) + L * d(x, p))``.
    """

    def __init__(self, G: MetricGraph, anchors: Mapping[GraphPoint, float], constant: float = 1.0):
        if constant <= 0:
            raise DomainError("Lipschitz constant must be positive")
        if not anchors:
            raise DomainError("a Lipschitz function needs at least one anchor")
        self.graph = G
        self.anchors = {p: float(v) for p, v in anchors.items()}
        self.constant = float(constant)
        self._pts = list(self.anchors)
        self._vals = np.array([self.anchors[p] for p in self._pts])

    def __call__(self, x: GraphPoint) -> float:
        if x in self.anchors:
            return self.anchors[x]
        return float(self.evaluate([x])[0])

    def evaluate(self, xs: Sequence[GraphPoint]) -> np.ndarray:
        xs = list(xs)
        if not xs:
            return np.zeros(0)
        D = self.graph.distance_matrix(xs, self._pts)
        out = (self._vals[None, :] + self.constant * D).min(axis=1)
        for k, x in enumerate(xs):
            if x in self.anchors:
                out[k] = self.anchors[x]
        return out

    def shifted(self, c: float) -> "LipschitzFn":
        return LipschitzFn(self.graph, {p: v + c for p, v in self.anchors.items()}, self.constant)

    def to_list(self) -> list[dict]:
        return [
            {"point": str(p), "value": v}
            for p, v in sorted(self.anchors.items(), key=lambda a: self.graph.point_key(a[0]))
        ]


def pair(f: LipschitzFn, v: FreeVector) -> float:
    """``<f, v> = sum c * f(p)``."""
    if not v.atoms:
        return 0.0
    vals = f.evaluate([p for _, p in v.atoms])
    return float(sum(c * x for (c, _), x in zip(v.atoms, vals)))


def lipschitz_constant_on(
    G: MetricGraph, f: LipschitzFn | Mapping[GraphPoint, float], pts: Sequence[GraphPoint] | None = None
) -> float:
    """max |f(p) - f(q)| / d(p, q) over distinct pairs of ``pts`` (default: the anchors)."""
    if isinstance(f, LipschitzFn):
        pts = list(f.anchors) if pts is None else list(dict.fromkeys(pts))
        vals = f.evaluate(pts)
    else:
        pts = list(f) if pts is None else list(dict.fromkeys(pts))
        vals = np.array([f[p] for p in pts])
    if len(pts) < 2:
        raise DomainError("need at least two points")
    best = 0.0
    chunk = 512
    for s in range(0, len(pts), chunk):
        D = G.distance_matrix(pts[s : s + chunk], pts)
        diff = np.abs(vals[s : s + chunk, None] - vals[None, :])
        mask = D > 0
        if mask.any():
            best = max(best, float((diff[mask] / D[mask]).max()))
    return best


def mcshane_extend(
    G: MetricGraph, anchors: Mapping[GraphPoint, float], L: float = 1.0, tol: float = TOL
) -> LipschitzFn:
    """L-Lipschitz extension of anchor values; rejects anchors that are not L-Lipschitz."""
    pts = list(anchors)
    if len(pts) > 1:
        vals = np.array([anchors[p] for p in pts], dtype=float)
        D = G.distance_matrix(pts)
        excess = np.abs(vals[:, None] - vals[None, :]) - L * D
        i, j = np.unravel_index(np.argmax(excess), excess.shape)
        if excess[i, j] > tol * max(1.0, L * D[i, j]):
            raise PreconditionError(
                f"anchor values are not {L}-Lipschitz: |f({pts[i]}) - f({pts[j]})| = "
                f"{abs(vals[i] - vals[j])} > {L} * {D[i, j]}"
            )
    return LipschitzFn(G, anchors, L)


# -- transport ----------------------------------------------------------------


@dataclass
class TransportResult:
    value: float
    plan: list[tuple[GraphPoint, GraphPoint, float]] = field(default_factory=list)
    dual: LipschitzFn | None = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "plan": [{"from": str(p), "to": str(q), "mass": m} for p, q, m in self.plan],
            "dual": self.dual.to_list() if self.dual is not None else [],
        }


def _subdivide(G: MetricGraph, points: Iterable[GraphPoint]):
    """Nodes and links of G subdivided at the given interior points."""
    nodes: list[GraphPoint] = [GraphPoint(vertex=v) for v in G.vertices]
    index = {p: i for i, p in enumerate(nodes)}
    on_edge: dict[int, list[GraphPoint]] = {}
    for p in points:
        if p.edge is not None and p not in index:
            index[p] = len(nodes)
            nodes.append(p)
            on_edge.setdefault(p.edge, []).append(p)
    links = []
    for eid, e in enumerate(G.edges):
        chain = sorted(on_edge.get(eid, ()), key=lambda p: p.offset)
        prev, pos = G.index[e.u], 0.0
        for p in chain:
            links.append((prev, index[p], p.offset - pos))
            prev, pos = index[p], p.offset
        links.append((prev, G.index[e.v], e.length - pos))
    return nodes, index, links


def transport(G: MetricGraph, v: FreeVector) -> TransportResult:
    """Exact norm of ``v`` with an optimal plan and a norming 1-Lipschitz function."""
    v = reduce(G, v)
    base = G.basepoint
    if not v.atoms:
        return TransportResult(0.0, [], LipschitzFn(G, {base: 0.0}))
    supply = {p: c for c, p in v.atoms}
    imbalance = -sum(supply.values())
    if imbalance != 0.0:
        supply[base] = imbalance

    nodes, index, links = _subdivide(G, list(supply) + [base])
    n = len(nodes)
    adj: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
    for lid, (a, b, _) in enumerate(links):
        adj[a].append((b, lid, 1))
        adj[b].append((a, lid, -1))
    length = [l for _, _, l in links]
    flow = [0.0] * len(links)  # signed, positive means a -> b
    excess = [0.0] * n
    for p, c in supply.items():
        excess[index[p]] += c
    scale = max(1.0, sum(abs(c) for c in supply.values()))
    eps = 1e-13 * scale
    pot = [0.0] * n  # reduced cost of u -> w is cost + pot[u] - pot[w] >= 0

    sources = [i for i in range(n) if excess[i] > eps]
    while True:
        sources = [i for i in sources if excess[i] > eps]
        if not sources:
            break
        s = sources[0]
        dist = {s: 0.0}
        pred: dict[int, tuple[int, int, int]] = {}
        done: set[int] = set()
        heap = [(0.0, s)]
        t = -1
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            if excess[u] < -eps:
                t = u
                break
            pu = pot[u]
            for w, lid, sgn in adj[u]:
                if w in done:
                    continue
                # moving u -> w against existing flow cancels it at cost -length
                cost = -length[lid] if sgn * flow[lid] < -eps else length[lid]
                nd = d + max(cost + pu - pot[w], 0.0)
                if nd < dist.get(w, np.inf):
                    dist[w] = nd
                    pred[w] = (u, lid, sgn)
                    heapq.heappush(heap, (nd, w))
        if t < 0:  # pragma: no cover - total mass is balanced at the basepoint
            raise RuntimeError("transport: no reachable deficit node")
        D = dist[t]
        for u in done:
            pot[u] += dist[u] - D
        amount = min(excess[s], -excess[t])
        w = t
        path = []
        while w != s:
            u, lid, sgn = pred[w]
            if sgn * flow[lid] < -eps:
                amount = min(amount, abs(flow[lid]))
            path.append((lid, sgn))
            w = u
        for lid, sgn in path:
            flow[lid] += sgn * amount
        excess[s] -= amount
        excess[t] += amount

    value = float(sum(abs(f) * l for f, l in zip(flow, length)))
    f_vals = {p: -pot[index[p]] for p in supply}
    f_vals.setdefault(base, -pot[index[base]])
    shift = f_vals[base]
    dual = LipschitzFn(G, {p: val - shift for p, val in f_vals.items()})
    plan = _decompose_flow(G, nodes, links, flow, supply, index, eps)
    return TransportResult(value, plan, dual)


def _decompose_flow(G, nodes, links, flow, supply, index, eps):
    """Split a transshipment flow into source -> sink transfers."""
    out_arcs: dict[int, dict[int, float]] = {}
    for lid, (a, b, _) in enumerate(links):
        f = flow[lid]
        if f > eps:
            out_arcs.setdefault(a, {})[b] = out_arcs.get(a, {}).get(b, 0.0) + f
        elif f < -eps:
            out_arcs.setdefault(b, {})[a] = out_arcs.get(b, {}).get(a, 0.0) - f
    rem = {index[p]: c for p, c in supply.items()}
    transfers: dict[tuple[int, int], float] = {}
    for s in sorted((i for i, c in rem.items() if c > 0), key=lambda i: G.point_key(nodes[i])):
        guard = 0
        while rem[s] > eps:
            guard += 1
            if guard > 10 * len(links) + 10:  # pragma: no cover
                break
            walk = [s]
            seen = {s: 0}
            while True:
                u = walk[-1]
                if u != s and rem.get(u, 0.0) < -eps:
                    break
                nxt = [w for w, f in out_arcs.get(u, {}).items() if f > eps]
                if not nxt:
                    walk = None
                    break
                w = min(nxt)
                if w in seen:  # cancel a circulation and restart
                    cyc = walk[seen[w]:] + [w]
                    m = min(out_arcs[a][b] for a, b in zip(cyc, cyc[1:]))
                    for a, b in zip(cyc, cyc[1:]):
                        out_arcs[a][b] -= m
                    walk = walk[: seen[w] + 1]
                    seen = {x: k for k, x in enumerate(walk)}
                    continue
                seen[w] = len(walk)
                walk.append(w)
            if walk is None:
                break
            t = walk[-1]
            m = min([rem[s], -rem[t]] + [out_arcs[a][b] for a, b in zip(walk, walk[1:])])
            for a, b in zip(walk, walk[1:]):
                out_arcs[a][b] -= m
            rem[s] -= m
            rem[t] += m
            transfers[(s, t)] = transfers.get((s, t), 0.0) + m
    plan = [(nodes[s], nodes[t], m) for (s, t), m in transfers.items()]
    plan.sort(key=lambda x: (G.point_key(x[0]), G.point_key(x[1])))
    return plan


def norm(G: MetricGraph, v: FreeVector) -> float:
    return transport(G, v).value


def norm_dual_lp(G: MetricGraph, v: FreeVector) -> tuple[float, LipschitzFn]:
    """Brute-force dual LP: max sum c_i f(p_i) over 1-Lipschitz f on supp(v) + {0}, f(0) = 0.

    Independent of the transport solver; meant for small supports.
    """
    v = reduce(G, v)
    base = G.basepoint
    if not v.atoms:
        return 0.0, LipschitzFn(G, {base: 0.0})
    pts = [p for _, p in v.atoms]
    c = np.array([c for c, _ in v.atoms])
    allpts = pts + [base]
    D = G.distance_matrix(allpts)
    k = len(pts)
    rows, rhs = [], []
    for i, j in itertools.permutations(range(k + 1), 2):
        row = np.zeros(k)
        if i < k:
            row[i] += 1.0
        if j < k:
            row[j] -= 1.0
        rows.append(row)
        rhs.append(D[i, j])
    res = linprog(
        -c,
        A_ub=np.array(rows),
        b_ub=np.array(rhs),
        bounds=[(None, None)] * k,
        method="highs",
    )
    if res.status != 0:  # pragma: no cover - the LP is always feasible and bounded
        raise RuntimeError(f"dual LP failed: {res.message}")
    anchors = {p: float(x) for p, x in zip(pts, res.x)}
    anchors[base] = 0.0
    return float(-res.fun), LipschitzFn(G, anchors)


def molecular_representation(G: MetricGraph, v: FreeVector) -> MolecularCombination:
    """Optimal molecular form: ``v = sum pi(p,q) d(p,q) m_{p,q}`` with total weight ``||v||``."""
    res = transport(G, v)
    return MolecularCombination(
        tuple(Term(m * G.distance(p, q), p, q) for p, q, m in res.plan if p != q)
    )

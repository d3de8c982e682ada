"""Metric graphs as computable length spaces.

A metric graph is a finite multigraph whose edges are real intervals of
positive length.  Points live either at vertices or strictly inside an edge;
the geodesic distance between two points is the length of a shortest path
through the graph, and on finite graphs that infimum is always attained.

Interior offsets are measured from the *lower* endpoint of an edge, where
vertices are ordered by their declaration order in the graph.  That makes
point equality syntactic: two interior points are equal iff they carry the
same edge id and offset.
"""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import DomainError, PreconditionError

#: Global tolerance for equality and containment tests.
TOL = 1e-9

__all__ = [
    "TOL",
    "Edge",
    "GraphPoint",
    "MetricGraph",
    "GraphPath",
    "distance",
    "geodesic",
    "path_length",
    "path_point",
    "path_intersection",
    "split_path",
    "reverse_path",
    "clearance_radii",
]


@dataclass(frozen=True)
class Edge:
    u: str
    v: str
    length: float


@dataclass(frozen=True)
class GraphPoint:
    """A vertex (``edge is None``) or an interior point of an edge."""

    vertex: str | None = None
    edge: int | None = None
    offset: float = 0.0

    @property
    def is_vertex(self) -> bool:
        return self.edge is None

    def __str__(self) -> str:
        if self.edge is None:
            return f"v:{self.vertex}"
        return f"e:{self.edge}:{self.offset!r}"


def _line_breaks(lines: Sequence[tuple[float, float]]) -> list[float]:
    """Pairwise crossing abscissae of lines given as (slope, intercept)."""
    out = []
    for (s1, c1), (s2, c2) in itertools.combinations(lines, 2):
        if s1 != s2:
            out.append((c2 - c1) / (s1 - s2))
    return out


class MetricGraph:
    """Connected weighted multigraph with a basepoint.

    ``edges`` is a sequence of ``(u, v, length)`` triples; the edge id is the
    position in that sequence.  Self-loops are rejected.
    """

    def __init__(
        self,
        vertices: Iterable[str],
        edges: Iterable[tuple[str, str, float]],
        basepoint: GraphPoint | str | None = None,
    ):
        self.vertices: tuple[str, ...] = tuple(str(v) for v in vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise DomainError("duplicate vertex ids")
        self.index = {v: i for i, v in enumerate(self.vertices)}
        canon = []
        for u, v, length in edges:
            u, v, length = str(u), str(v), float(length)
            if u not in self.index or v not in self.index:
                raise DomainError(f"edge ({u}, {v}) references an unknown vertex")
            if u == v:
                raise DomainError(f"self-loop at vertex {u} is not supported")
            if not np.isfinite(length) or length <= 0:
                raise DomainError(f"edge ({u}, {v}) has non-positive length {length}")
            if self.index[u] > self.index[v]:
                u, v = v, u
            canon.append(Edge(u, v, length))
        self.edges: tuple[Edge, ...] = tuple(canon)
        if not self.edges:
            raise DomainError("a metric graph needs at least one edge (two distinct points)")

        nv = len(self.vertices)
        # (neighbour index, edge id), sorted so that iteration is deterministic
        adj: list[list[tuple[int, int]]] = [[] for _ in range(nv)]
        for eid, e in enumerate(self.edges):
            adj[self.index[e.u]].append((self.index[e.v], eid))
            adj[self.index[e.v]].append((self.index[e.u], eid))
        self.adjacency = tuple(tuple(sorted(a)) for a in adj)

        w = np.full((nv, nv), np.inf)
        for e in self.edges:
            i, j = self.index[e.u], self.index[e.v]
            w[i, j] = w[j, i] = min(w[i, j], e.length)
        rows, cols = np.nonzero(np.isfinite(w))
        mat = csr_matrix((w[rows, cols], (rows, cols)), shape=(nv, nv))
        self.vdist = shortest_path(mat, method="D", directed=False)
        if not np.all(np.isfinite(self.vdist)):
            raise DomainError("metric graph is not connected")
        self._vd: list[list[float]] = self.vdist.tolist()

        if basepoint is None:
            basepoint = self.vertex(self.vertices[0])
        elif isinstance(basepoint, str):
            basepoint = self.parse_point(basepoint)
        self.validate(basepoint)
        self.basepoint: GraphPoint = basepoint

    # -- points ---------------------------------------------------------------

    def vertex(self, v: str) -> GraphPoint:
        v = str(v)
        if v not in self.index:
            raise DomainError(f"unknown vertex {v!r}")
        return GraphPoint(vertex=v)

    def point_on_edge(self, edge: int, offset: float, tol: float = TOL) -> GraphPoint:
        """Point at ``offset`` from the lower endpoint; snaps to vertices within ``tol``."""
        if not 0 <= edge < len(self.edges):
            raise DomainError(f"unknown edge id {edge}")
        e = self.edges[edge]
        offset = float(offset)
        if offset < -tol or offset > e.length + tol:
            raise DomainError(f"offset {offset} outside edge {edge} of length {e.length}")
        if offset <= tol:
            return GraphPoint(vertex=e.u)
        if offset >= e.length - tol:
            return GraphPoint(vertex=e.v)
        return GraphPoint(edge=edge, offset=offset)

    def validate(self, p: GraphPoint) -> None:
        if not isinstance(p, GraphPoint):
            raise DomainError(f"not a graph point: {p!r}")
        if p.edge is None:
            if p.vertex not in self.index:
                raise DomainError(f"unknown vertex {p.vertex!r}")
            return
        if p.vertex is not None or not 0 <= p.edge < len(self.edges):
            raise DomainError(f"unknown point {p}")
        if not 0 < p.offset < self.edges[p.edge].length:
            raise DomainError(f"interior offset of {p} is not strictly inside the edge")

    def parse_point(self, text: str) -> GraphPoint:
        """Parse ``v:<id>`` or ``e:<edge-id>:<offset>``."""
        kind, _, rest = str(text).partition(":")
        if kind == "v" and rest:
            return self.vertex(rest)
        if kind == "e":
            eid, _, off = rest.partition(":")
            try:
                edge, offset = int(eid), float(off)
            except ValueError:
                raise DomainError(f"malformed point {text!r}") from None
            return self.point_on_edge(edge, offset, tol=0.0)
        raise DomainError(f"malformed point {text!r}")

    def point_key(self, p: GraphPoint) -> tuple:
        """Total order on points used for deterministic tie-breaking."""
        if p.edge is None:
            return (0, self.index[p.vertex], 0.0)
        return (1, p.edge, p.offset)

    def ends(self, p: GraphPoint) -> list[tuple[int, float]]:
        """(vertex index, distance along the carrying edge) for each way out of ``p``."""
        if p.edge is None:
            return [(self.index[p.vertex], 0.0)]
        e = self.edges[p.edge]
        return [(self.index[e.u], p.offset), (self.index[e.v], e.length - p.offset)]

    def edge_coord(self, p: GraphPoint, edge: int) -> float | None:
        """Offset of ``p`` along ``edge`` if ``p`` lies on its closure, else None."""
        if p.edge is not None:
            return p.offset if p.edge == edge else None
        e = self.edges[edge]
        if p.vertex == e.u:
            return 0.0
        if p.vertex == e.v:
            return e.length
        return None

    # -- distances ------------------------------------------------------------

    def distance(self, p: GraphPoint, q: GraphPoint) -> float:
        self.validate(p)
        self.validate(q)
        if p == q:
            return 0.0
        best = min(
            op + self._vd[i][j] + oq for i, op in self.ends(p) for j, oq in self.ends(q)
        )
        if p.edge is not None and p.edge == q.edge:
            best = min(best, abs(p.offset - q.offset))
        return float(best)

    def _endpoint_arrays(self, pts: Sequence[GraphPoint]):
        n = len(pts)
        a = np.empty(n, dtype=np.int64)
        b = np.empty(n, dtype=np.int64)
        oa = np.zeros(n)
        ob = np.zeros(n)
        edge = np.full(n, -1, dtype=np.int64)
        off = np.zeros(n)
        for k, p in enumerate(pts):
            self.validate(p)
            ends = self.ends(p)
            a[k], oa[k] = ends[0]
            b[k], ob[k] = ends[-1]
            if p.edge is not None:
                edge[k], off[k] = p.edge, p.offset
        return a, b, oa, ob, edge, off

    def distance_matrix(
        self, pts: Sequence[GraphPoint], others: Sequence[GraphPoint] | None = None
    ) -> np.ndarray:
        """Pairwise geodesic distances, vectorized over both point lists."""
        others = pts if others is None else others
        a1, b1, oa1, ob1, e1, f1 = self._endpoint_arrays(pts)
        a2, b2, oa2, ob2, e2, f2 = self._endpoint_arrays(others)
        D = self.vdist
        out = np.full((len(pts), len(others)), np.inf)
        for x, ox in ((a1, oa1), (b1, ob1)):
            for y, oy in ((a2, oa2), (b2, ob2)):
                np.minimum(out, ox[:, None] + D[np.ix_(x, y)] + oy[None, :], out=out)
        same = (e1[:, None] >= 0) & (e1[:, None] == e2[None, :])
        if same.any():
            direct = np.abs(f1[:, None] - f2[None, :])
            out = np.where(same, np.minimum(out, direct), out)
        return out

    # -- geodesics ------------------------------------------------------------

    def _lex_vertex_path(self, i: int, j: int) -> list[tuple[int, int]]:
        """Lexicographically smallest shortest vertex path i -> j as (vertex, edge-in) pairs."""
        out = []
        cur = i
        while cur != j:
            target = self._vd[cur][j]
            for w, eid in self.adjacency[cur]:
                step = self.edges[eid].length + self._vd[w][j]
                if abs(step - target) <= TOL * max(1.0, target):
                    out.append((w, eid))
                    cur = w
                    break
            else:  # pragma: no cover - the distance matrix guarantees progress
                raise RuntimeError("shortest-path walk failed")
        return out

    def geodesic(self, p: GraphPoint, q: GraphPoint) -> "GraphPath":
        """Shortest simple path from p to q.

        Ties between equal-length geodesics go to the lexicographically
        smallest vertex sequence (vertices compared by declaration order,
        parallel edges by id).
        """
        self.validate(p)
        self.validate(q)
        if p == q:
            raise DomainError("geodesic needs two distinct points")
        candidates = []
        if p.edge is not None and p.edge == q.edge:
            candidates.append((abs(p.offset - q.offset), (), None))
        for i, op in self.ends(p):
            for j, oq in self.ends(q):
                walk = self._lex_vertex_path(i, j)
                seq = (i,) + tuple(w for w, _ in walk)
                candidates.append((op + self._vd[i][j] + oq, seq, (i, walk)))
        best_len = min(c[0] for c in candidates)
        tied = [c for c in candidates if c[0] <= best_len + TOL * max(1.0, best_len)]
        _, _, route = min(tied, key=lambda c: c[1])

        if route is None:
            return GraphPath(self, [(p.edge, p.offset, q.offset)], p, q)
        i, walk = route
        segs = []
        vi = self.vertices[i]
        if p.edge is not None:
            segs.append((p.edge, p.offset, self.edge_coord(GraphPoint(vertex=vi), p.edge)))
        cur = vi
        for w, eid in walk:
            e = self.edges[eid]
            segs.append((eid, 0.0, e.length) if e.u == cur else (eid, e.length, 0.0))
            cur = self.vertices[w]
        if q.edge is not None:
            segs.append((q.edge, self.edge_coord(GraphPoint(vertex=cur), q.edge), q.offset))
        return GraphPath(self, segs, p, q)

    def vertex_paths(self, p: GraphPoint, q: GraphPoint, cutoff: float) -> list["GraphPath"]:
        """All simple paths between two vertices with length at most ``cutoff``."""
        if not (p.is_vertex and q.is_vertex) or p == q:
            raise DomainError("vertex_paths needs two distinct vertices")
        i0, j0 = self.index[p.vertex], self.index[q.vertex]
        out = []

        def walk(cur, seen, steps, length):
            if cur == j0:
                segs = []
                v = i0
                for w, eid in steps:
                    e = self.edges[eid]
                    segs.append((eid, 0.0, e.length) if self.index[e.u] == v else (eid, e.length, 0.0))
                    v = w
                out.append(GraphPath(self, segs, p, q))
                return
            for w, eid in self.adjacency[cur]:
                if w in seen:
                    continue
                nl = length + self.edges[eid].length
                if nl + self._vd[w][j0] > cutoff + TOL:
                    continue
                seen.add(w)
                steps.append((w, eid))
                walk(w, seen, steps, nl)
                steps.pop()
                seen.remove(w)

        walk(i0, {i0}, [], 0.0)
        return out

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [{"u": e.u, "v": e.v, "length": e.length} for e in self.edges],
            "basepoint": str(self.basepoint),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricGraph":
        try:
            vertices = [str(v) for v in data["vertices"]]
            edges = [(e["u"], e["v"], e["length"]) for e in data["edges"]]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed graph description: missing {exc}") from None
        g = cls(vertices, edges)
        if data.get("basepoint") is not None:
            g = cls(vertices, edges, basepoint=g.parse_point(data["basepoint"]))
        return g


class GraphPath:
    """A simple path in a metric graph, parametrized over [0, 1] by arc length.

    ``segments`` are ``(edge id, start offset, end offset)`` in the edge's
    canonical coordinates, traversed from start to end.  Consecutive
    segments meet at a vertex.
    """

    __slots__ = ("graph", "segments", "start", "end", "_cum")

    def __init__(self, graph: MetricGraph, segments, start: GraphPoint, end: GraphPoint):
        segs = []
        for eid, a, b in segments:
            a, b = float(a), float(b)
            if abs(a - b) > 0.0:
                segs.append((int(eid), a, b))
        if not segs:
            raise DomainError("a path must have positive length")
        self.graph = graph
        self.segments = tuple(segs)
        self.start = start
        self.end = end
        cum = [0.0]
        for _, a, b in self.segments:
            cum.append(cum[-1] + abs(b - a))
        self._cum = tuple(cum)

    def __repr__(self) -> str:
        return f"GraphPath({' -> '.join(str(p) for p in self.points())}, length={self.length:.6g})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GraphPath)
            and self.segments == other.segments
            and self.start == other.start
            and self.end == other.end
        )

    def __hash__(self) -> int:
        return hash((self.segments, self.start, self.end))

    @property
    def length(self) -> float:
        return self._cum[-1]

    def points(self) -> list[GraphPoint]:
        """Start, every vertex crossed between segments, end."""
        g = self.graph
        out = [self.start]
        for eid, _, b in self.segments[:-1]:
            out.append(g.point_on_edge(eid, b))
        out.append(self.end)
        return out

    def _seg_at_arc(self, arc: float) -> int:
        k = bisect.bisect_right(self._cum, arc) - 1
        return min(max(k, 0), len(self.segments) - 1)

    def coord_at_arc(self, arc: float) -> tuple[int, float]:
        k = self._seg_at_arc(arc)
        eid, a, b = self.segments[k]
        step = min(max(arc - self._cum[k], 0.0), abs(b - a))
        return eid, a + step if b > a else a - step

    def point_at(self, t: float) -> GraphPoint:
        if not -TOL <= t <= 1 + TOL:
            raise DomainError(f"path parameter {t} outside [0, 1]")
        if t <= 0:
            return self.start
        if t >= 1:
            return self.end
        eid, x = self.coord_at_arc(t * self.length)
        return self.graph.point_on_edge(eid, x, tol=1e-12)

    def arc_of_coord(self, k: int, x: float) -> float:
        _, a, _ = self.segments[k]
        return self._cum[k] + abs(x - a)

    def locate(self, p: GraphPoint, tol: float = TOL) -> float | None:
        """Parameter of the first arc position where the path passes through ``p``."""
        if p == self.start:
            return 0.0
        if p == self.end:
            return 1.0
        g = self.graph
        for k, (eid, a, b) in enumerate(self.segments):
            x = g.edge_coord(p, eid)
            if x is None:
                continue
            if min(a, b) - tol <= x <= max(a, b) + tol:
                x = min(max(x, min(a, b)), max(a, b))
                return self.arc_of_coord(k, x) / self.length
        return None

    def subpath(
        self,
        t0: float,
        t1: float,
        start: GraphPoint | None = None,
        end: GraphPoint | None = None,
    ) -> "GraphPath":
        """Restriction to [t0, t1]; traversed backwards when t0 > t1."""
        if t0 > t1:
            return self.subpath(t1, t0, start=end, end=start).reversed()
        start = self.point_at(t0) if start is None else start
        end = self.point_at(t1) if end is None else end
        s0, s1 = t0 * self.length, t1 * self.length
        g = self.graph
        segs = []
        for k, (eid, a, b) in enumerate(self.segments):
            lo, hi = max(s0, self._cum[k]), min(s1, self._cum[k + 1])
            if hi - lo <= 0:
                continue
            sign = 1.0 if b > a else -1.0
            na = a + sign * (lo - self._cum[k])
            nb = a + sign * (hi - self._cum[k])
            L = g.edges[eid].length
            na = 0.0 if na <= 1e-12 else (L if na >= L - 1e-12 else na)
            nb = 0.0 if nb <= 1e-12 else (L if nb >= L - 1e-12 else nb)
            segs.append((eid, na, nb))
        return GraphPath(g, segs, start, end)

    def reversed(self) -> "GraphPath":
        return GraphPath(
            self.graph, [(e, b, a) for e, a, b in reversed(self.segments)], self.end, self.start
        )

    def pieces(self) -> list[tuple[int, float, float]]:
        """Image as closed edge intervals ``(edge, lo, hi)``."""
        return [(e, min(a, b), max(a, b)) for e, a, b in self.segments]

    def vertex_set(self) -> set[str]:
        g = self.graph
        out = set()
        for eid, lo, hi in self.pieces():
            e = g.edges[eid]
            if lo == 0.0:
                out.add(e.u)
            if hi == e.length:
                out.add(e.v)
        return out

    def is_simple(self, tol: float = TOL) -> bool:
        pts = self.points()
        verts = [p.vertex for p in pts[1:-1]]
        if len(set(verts)) != len(verts):
            return False
        if pts[0].is_vertex and pts[0].vertex in verts:
            return False
        if pts[-1].is_vertex and pts[-1].vertex in verts:
            return False
        pieces = self.pieces()
        for (e1, lo1, hi1), (e2, lo2, hi2) in itertools.combinations(pieces, 2):
            if e1 == e2 and min(hi1, hi2) - max(lo1, lo2) > tol:
                return False
        return True

    def distance_profile(self, p: GraphPoint) -> list[tuple[float, float, float, float]]:
        """``t -> d(gamma(t), p)`` as continuous linear pieces ``(t0, t1, v0, v1)``."""
        g = self.graph
        L = self.length
        out = []
        for k, (eid, a, b) in enumerate(self.segments):
            e = g.edges[eid]
            du = min(op + g._vd[i][g.index[e.u]] for i, op in g.ends(p))
            dv = min(op + g._vd[i][g.index[e.v]] for i, op in g.ends(p))
            lines = [(1.0, du), (-1.0, e.length + dv)]
            xp = g.edge_coord(p, eid)
            if xp is not None:
                lines += [(1.0, -xp), (-1.0, xp)]

            def f(x, lines=lines, xp=xp):
                val = min(s * x + c for s, c in lines[:2])
                if xp is not None:
                    val = min(val, abs(x - xp))
                return val

            lo, hi = min(a, b), max(a, b)
            xs = {lo, hi}
            for x in _line_breaks(lines) + ([xp] if xp is not None else []):
                if lo < x < hi:
                    xs.add(x)
            xs = sorted(xs, reverse=b < a)
            for x0, x1 in zip(xs, xs[1:]):
                out.append(
                    (self.arc_of_coord(k, x0) / L, self.arc_of_coord(k, x1) / L, f(x0), f(x1))
                )
        return out

    def params_at_distance(self, p: GraphPoint, value: float, last: bool = True) -> float | None:
        """Largest (or smallest) t with d(gamma(t), p) = value, or None."""
        pieces = self.distance_profile(p)
        order = reversed(pieces) if last else pieces
        for t0, t1, v0, v1 in order:
            lo, hi = min(v0, v1), max(v0, v1)
            if not lo - TOL <= value <= hi + TOL:
                continue
            if abs(v1 - v0) <= 1e-15:
                return t1 if last else t0
            w = min(max((value - v0) / (v1 - v0), 0.0), 1.0)
            return t0 + w * (t1 - t0)
        return None

    def to_list(self) -> list[str]:
        return [str(p) for p in self.points()]


# -- module-level operations --------------------------------------------------


def distance(G: MetricGraph, p: GraphPoint, q: GraphPoint) -> float:
    return G.distance(p, q)


def geodesic(G: MetricGraph, p: GraphPoint, q: GraphPoint) -> GraphPath:
    return G.geodesic(p, q)


def path_length(path: GraphPath) -> float:
    return path.length


def path_point(path: GraphPath, t: float) -> GraphPoint:
    return path.point_at(t)


def reverse_path(path: GraphPath) -> GraphPath:
    return path.reversed()


def split_path(path: GraphPath, params: Sequence[float]) -> list[GraphPath]:
    """Cut ``path`` at the given sorted parameters; zero-length pieces are skipped."""
    params = list(params)
    if any(b < a for a, b in zip(params, params[1:])):
        raise DomainError("split parameters must be sorted")
    if params and (params[0] < 0 or params[-1] > 1):
        raise DomainError("split parameters must lie in [0, 1]")
    cuts = [0.0] + params + [1.0]
    out = []
    for t0, t1 in zip(cuts, cuts[1:]):
        if (t1 - t0) * path.length > 1e-12:
            out.append(path.subpath(t0, t1))
    return out


def _merge_intervals(ivs: list[tuple[float, float]], tol: float) -> list[tuple[float, float]]:
    out: list[list[float]] = []
    for lo, hi in sorted(ivs):
        if out and lo <= out[-1][1] + tol:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [(lo, hi) for lo, hi in out]


def path_intersection(
    p1: GraphPath, p2: GraphPath, tol: float = TOL
) -> list[tuple[float, float]]:
    """Parameters t of ``p1`` with p1(t) in the image of ``p2``, as closed intervals."""
    g = p1.graph
    L = p1.length
    verts2 = p2.vertex_set()
    for p in (p2.start, p2.end):
        if p.is_vertex:
            verts2.add(p.vertex)
    by_edge: dict[int, list[tuple[float, float]]] = {}
    for eid, lo, hi in p2.pieces():
        by_edge.setdefault(eid, []).append((lo, hi))
    ivs = []
    for k, (eid, a, b) in enumerate(p1.segments):
        lo1, hi1 = min(a, b), max(a, b)
        for lo2, hi2 in by_edge.get(eid, ()):
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if hi >= lo - tol:
                lo, hi = min(lo, hi), max(lo, hi)
                t0, t1 = p1.arc_of_coord(k, lo) / L, p1.arc_of_coord(k, hi) / L
                ivs.append((min(t0, t1), max(t0, t1)))
        e = g.edges[eid]
        for x, v in ((0.0, e.u), (e.length, e.v)):
            if lo1 <= x <= hi1 and v in verts2:
                t = p1.arc_of_coord(k, x) / L
                ivs.append((t, t))
    ivs = [(max(0.0, lo), min(1.0, hi)) for lo, hi in ivs]
    return _merge_intervals(ivs, tol / max(L, 1e-300))


# -- clearance radii ----------------------------------------------------------


def _trim(G: MetricGraph, piece: tuple[int, float, float], centers, R: float):
    """Sub-intervals of an edge interval at distance >= R from every center."""
    eid, lo, hi = piece
    e = G.edges[eid]
    kept = [(lo, hi)]
    for p in centers:
        du = min(op + G._vd[i][G.index[e.u]] for i, op in G.ends(p))
        dv = min(op + G._vd[i][G.index[e.v]] for i, op in G.ends(p))
        removed = [(-np.inf, R - du), (e.length - R + dv, np.inf)]
        xp = G.edge_coord(p, eid)
        if xp is not None:
            removed.append((xp - R, xp + R))
        for rlo, rhi in removed:
            nxt = []
            for klo, khi in kept:
                if rhi <= klo or rlo >= khi:
                    nxt.append((klo, khi))
                    continue
                if klo <= rlo:
                    nxt.append((klo, rlo))
                if rhi <= khi:
                    nxt.append((rhi, khi))
            kept = nxt
    return [(eid, a, b) for a, b in kept]


def _piece_corners(G: MetricGraph, piece) -> list[GraphPoint]:
    eid, lo, hi = piece
    return [G.point_on_edge(eid, lo, tol=0.0), G.point_on_edge(eid, hi, tol=0.0)]


def _pieces_distance(G: MetricGraph, P1, P2) -> float:
    """Exact distance between two finite unions of closed edge intervals.

    On each edge, distance to a fixed point is a minimum of linear functions
    plus |x - x_p| on the point's own edge, so the minimum over a box of
    intervals is attained at corners unless two intervals overlap on one edge.
    """
    if not P1 or not P2:
        return np.inf
    for e1, lo1, hi1 in P1:
        for e2, lo2, hi2 in P2:
            if e1 == e2 and min(hi1, hi2) >= max(lo1, lo2):
                return 0.0
    c1 = [c for p in P1 for c in _piece_corners(G, p)]
    c2 = [c for p in P2 for c in _piece_corners(G, p)]
    return float(G.distance_matrix(c1, c2).min())


def _point_pieces_distance(G: MetricGraph, p: GraphPoint, P) -> float:
    for eid, lo, hi in P:
        x = G.edge_coord(p, eid)
        if x is not None and lo <= x <= hi:
            return 0.0
    corners = [c for piece in P for c in _piece_corners(G, piece)]
    return float(G.distance_matrix([p], corners).min())


def check_endpoint_disjoint(paths: Sequence[GraphPath], tol: float = TOL) -> list[str]:
    """Violations of 'pairwise disjoint or meeting only at common endpoints'."""
    problems = []
    for (i, g1), (j, g2) in itertools.combinations(enumerate(paths), 2):
        shared = {g1.start, g1.end} & {g2.start, g2.end}
        for lo, hi in path_intersection(g1, g2, tol):
            if (hi - lo) * g1.length > tol:
                problems.append(f"paths {i} and {j} overlap along a segment")
                continue
            pt = g1.point_at(lo)
            if not any(g1.graph.distance(pt, s) <= tol for s in shared):
                problems.append(f"paths {i} and {j} meet at {pt}, not a common endpoint")
    return problems


def clearance_radii(
    G: MetricGraph, paths: Sequence[GraphPath], A: Iterable[GraphPoint] | None = None
) -> tuple[float, float]:
    """Radii (R, r) separating endpoint balls and trimmed path images.

    R is half the smallest of: d(p, q)/2 over distinct endpoints, and
    d(p, Im gamma_j) for endpoints p not belonging to gamma_j.  r is half of
    min(R, s/2) where s is the smallest distance between images with the
    open R-balls around endpoints removed.
    """
    paths = list(paths)
    problems = check_endpoint_disjoint(paths)
    if problems:
        raise PreconditionError("; ".join(problems))
    if A is None:
        A = [p for g in paths for p in (g.start, g.end)]
    A = sorted(set(A), key=G.point_key)
    limits = []
    for p, q in itertools.combinations(A, 2):
        limits.append(G.distance(p, q) / 2)
    for p in A:
        for g in paths:
            if p in (g.start, g.end):
                continue
            d = _point_pieces_distance(G, p, g.pieces())
            if d <= TOL:
                raise PreconditionError(f"endpoint {p} lies on another path")
            limits.append(d)
    if not limits:
        raise PreconditionError("need at least two distinct endpoints")
    R = 0.5 * min(limits)
    trimmed = [[t for piece in g.pieces() for t in _trim(G, piece, A, R)] for g in paths]
    seps = [R]
    for P1, P2 in itertools.combinations(trimmed, 2):
        d = _pieces_distance(G, P1, P2)
        if d <= TOL:
            raise PreconditionError("trimmed path images are not separated")
        seps.append(d / 2)
    return R, 0.5 * min(seps)

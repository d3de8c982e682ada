"""Random instances: graphs, points, vectors and molecular combinations."""

from __future__ import annotations

import numpy as np

from .free_space import FreeVector, MolecularCombination, transport
from .metric_graph import GraphPoint, MetricGraph


def interval_graph(length: float = 1.0) -> MetricGraph:
    """The segment [0, length] as a one-edge graph with basepoint at 0."""
    return MetricGraph(["0", "1"], [("0", "1", length)])


def random_graph(
    rng: np.random.Generator,
    max_vertices: int = 8,
    extra_edges: int = 4,
    lengths: tuple[float, float] = (0.5, 2.0),
) -> MetricGraph:
    """Random connected graph: a random spanning tree plus a few extra edges."""
    nv = int(rng.integers(2, max_vertices + 1))
    names = [str(i) for i in range(nv)]
    edges = [(str(i), str(int(rng.integers(0, i))), float(rng.uniform(*lengths))) for i in range(1, nv)]
    if nv > 2:
        for _ in range(int(rng.integers(0, extra_edges + 1))):
            a, b = rng.choice(nv, 2, replace=False)
            edges.append((str(a), str(b), float(rng.uniform(*lengths))))
    return MetricGraph(names, edges)


def random_point(
    G: MetricGraph,
    rng: np.random.Generator,
    vertex_prob: float = 0.5,
    offsets: tuple[float, ...] | None = None,
) -> GraphPoint:
    """A vertex, or an edge-interior point.

    With ``offsets`` the interior point sits at one of those fractions of the
    edge length; otherwise its position is uniform on the edge.
    """
    if rng.random() < vertex_prob:
        return G.vertex(G.vertices[int(rng.integers(len(G.vertices)))])
    eid = int(rng.integers(len(G.edges)))
    L = G.edges[eid].length
    frac = float(rng.choice(offsets)) if offsets else float(rng.uniform(0.0, 1.0))
    return G.point_on_edge(eid, frac * L)


def random_vector(
    G: MetricGraph, rng: np.random.Generator, max_atoms: int = 6, **point_kw
) -> FreeVector:
    k = int(rng.integers(1, max_atoms + 1))
    return FreeVector(tuple((float(rng.normal()), random_point(G, rng, **point_kw)) for _ in range(k)))


def random_unit_vector(G: MetricGraph, rng: np.random.Generator, max_atoms: int = 5, **point_kw) -> FreeVector:
    """Random vector normalized to norm one (resampled while it is zero)."""
    while True:
        v = random_vector(G, rng, max_atoms, **point_kw)
        nv = transport(G, v).value
        if nv > 1e-6:
            return v * (1.0 / nv)


def random_combination(
    G: MetricGraph,
    rng: np.random.Generator,
    max_terms: int = 4,
    total: float | None = None,
    **point_kw,
) -> MolecularCombination:
    """Random molecules with distinct endpoints and positive weights summing to ``total``.

    ``total`` defaults to a uniform draw from (0.5, 1].
    """
    k = int(rng.integers(1, max_terms + 1))
    w = rng.uniform(0.1, 1.0, k)
    w = w / w.sum() * (total if total is not None else float(rng.uniform(0.5, 1.0)))
    terms = []
    for wi in w:
        p = random_point(G, rng, **point_kw)
        q = random_point(G, rng, **point_kw)
        while q == p:
            q = random_point(G, rng, **point_kw)
        terms.append((float(wi), p, q))
    return MolecularCombination.of(terms)

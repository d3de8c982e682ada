"""Instance builders shared by several test modules."""

from lipfree import MetricGraph


def jittered_grid(rng, k=3, jitter=1e-3):
    names = [f"{i}{j}" for i in range(k) for j in range(k)]
    edges = []
    for i in range(k):
        for j in range(k):
            if i + 1 < k:
                edges.append((f"{i}{j}", f"{i + 1}{j}", 1 + jitter * rng.uniform()))
            if j + 1 < k:
                edges.append((f"{i}{j}", f"{i}{j + 1}", 1 + jitter * rng.uniform()))
    return MetricGraph(names, edges)


def inflated_provider(G, p, q, budget):
    """Longest simple vertex path that still fits the length budget."""
    d = G.distance(p, q)
    fits = [g for g in G.vertex_paths(p, q, d + budget) if g.length < d + budget]
    return max(fits, key=lambda g: (g.length, g.to_list()))

"""Seeded random instances: graphs with rational weights, trees, hypergraphs,
polygons, and a zoo of homogeneous functions for property suites."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import convbody as cb
from . import homfun as hf
from .graphlap import Graph, incidence
from .hypercp import Hypergraph
from .linalg import LinearMap


def random_tree(rng, n, weights="unit"):
    edges = []
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.append((u, v, _weight(rng, weights)))
    return Graph(n, edges)


def _weight(rng, kind):
    if kind == "unit":
        return 1
    if kind == "rational":
        return Fraction(int(rng.integers(1, 6)), int(rng.integers(1, 4)))
    if kind == "float":
        return float(rng.uniform(0.2, 3.0))
    raise ValueError(kind)


def random_connected_graph(rng, n, extra_p=0.35, weights="unit"):
    """Random spanning tree plus independent extra edges."""
    G = random_tree(rng, n, weights)
    present = {(i, j) for (i, j, _) in G.edges}
    edges = list(G.edges)
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in present and rng.uniform() < extra_p:
                edges.append((i, j, _weight(rng, weights)))
    return Graph(n, edges)


def random_hypergraph(rng, n, m, max_size=3):
    seen = set()
    edges = []
    while len(edges) < m:
        size = int(rng.integers(2, max_size + 1))
        nodes = tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))
        if nodes in seen:
            continue
        seen.add(nodes)
        edges.append((nodes, float(rng.uniform(0.5, 2.0))))
    # cover every node so the objective stays positive definite
    covered = set()
    for nodes, _ in edges:
        covered.update(nodes)
    for v in range(n):
        if v not in covered:
            u = int(rng.integers(0, n - 1))
            u = u if u < v else u + 1
            edges.append(((min(u, v), max(u, v)), 1.0))
    return Hypergraph(n, edges)


def random_symmetric_points(rng, dim, k):
    pts = rng.standard_normal((k, dim))
    return np.vstack([pts, -pts])


def path_graph(n, w=1):
    return Graph(n, [(i, i + 1, w) for i in range(n - 1)])


def cycle_graph(n, w=1):
    return Graph(n, [(i, i + 1, w) for i in range(n - 1)] + [(0, n - 1, w)])


def complete_graph(n, w=1):
    return Graph(n, [(i, j, w) for i in range(n) for j in range(i + 1, n)])


def star_graph(n, w=1):
    return Graph(n, [(0, i, w) for i in range(1, n)])


def homfun_family(seed=0):
    """At least twenty assorted degree-1 functions (atoms, pullbacks,
    composites, duals) for involution and duality property suites."""
    rng = np.random.default_rng(seed)
    fam = []

    fam.append(("l1_2d", hf.lp_norm(2, 1)))
    fam.append(("l2_3d", hf.lp_norm(3, 2)))
    fam.append(("linf_2d", hf.lp_norm(2, np.inf)))
    fam.append(("l1.5_3d", hf.lp_norm(3, 1.5)))
    fam.append(("l3_2d", hf.lp_norm(2, 3)))
    fam.append(("wl1", hf.weighted_lp(rng.uniform(0.5, 2.0, 3), 1)))
    fam.append(("wl2", hf.weighted_lp(rng.uniform(0.5, 2.0, 3), 2)))
    fam.append(("wlinf", hf.weighted_lp(rng.uniform(0.5, 2.0, 2), np.inf)))

    fam.append(("support_rand_2d",
                hf.support_function(random_symmetric_points(rng, 2, 3))))
    fam.append(("support_rand_3d",
                hf.support_function(random_symmetric_points(rng, 3, 4))))
    fam.append(("gauge_rand_2d",
                hf.dual(hf.support_function(random_symmetric_points(rng, 2, 3)))))

    K3 = incidence(complete_graph(3))
    P4 = incidence(path_graph(4))
    fam.append(("tv_k3", hf.pullback(hf.lp_norm(3, 1), K3)))
    fam.append(("tv_p4", hf.pullback(hf.lp_norm(3, 1), P4)))
    fam.append(("maxdiff_p4", hf.pullback(hf.lp_norm(3, np.inf), P4)))
    fam.append(("l2_pullback", hf.pullback(hf.lp_norm(3, 2),
                                           rng.standard_normal((3, 3)))))
    fam.append(("l1_pullback_rankdef",
                hf.pullback(hf.lp_norm(3, 1),
                            np.array([[1.0, -1.0], [0.0, 1.0], [1.0, 0.0]]))))
    fam.append(("linf_pullback", hf.pullback(hf.lp_norm(2, np.inf),
                                             rng.standard_normal((2, 2)))))

    fam.append(("scaled_l1", hf.scale(hf.lp_norm(3, 1), 2.5)))
    fam.append(("scaled_support",
                hf.scale(hf.support_function(random_symmetric_points(rng, 2, 4)),
                         0.75)))

    blocks = [hf.lp_norm(2, 2), hf.lp_norm(2, 2)]
    sel = [np.hstack([np.eye(2), np.zeros((2, 2))]),
           np.hstack([np.zeros((2, 2)), np.eye(2)])]
    fam.append(("block_l2_sum",
                hf.composite_norm(hf.lp_norm(2, 1), blocks, sel,
                                  check_monotone=False)))
    fam.append(("block_mixed",
                hf.composite_norm(hf.weighted_lp([1.0, 2.0], 1),
                                  [hf.lp_norm(2, 1), hf.lp_norm(2, np.inf)],
                                  sel, check_monotone=False)))
    fam.append(("opaque_support",
                hf.Opaque(hf.support_function(random_symmetric_points(rng, 2, 3)))))
    return fam


def sample_points(rng, dim, count, scale=2.0):
    return rng.standard_normal((count, dim)) * scale

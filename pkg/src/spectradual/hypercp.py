"""Hypergraph core-periphery objective, its power-method maximizer, and the
decomposition dual.

The objective f(x) = sum_e w_e ||x restricted to e||_q is a composite of
per-edge norms under a weighted l1 outer norm; its largest eigenvalue against
g = ||.||_p scores nodes by coreness. The dual evaluates

    inf { max_e ||y_e||_{q*} / w_e  :  sum_e y_e = x, supp(y_e) in e }

exactly as a linear program for q in {1, inf} and iteratively otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import eigsolve as es
from . import homfun as hf
from .linalg import CoordSelect, LinearMap


@dataclass
class Hypergraph:
    n: int
    hyperedges: list   # (sorted node tuple, weight)

    def __post_init__(self):
        norm = []
        for nodes, w in self.hyperedges:
            nodes = tuple(sorted(int(v) for v in nodes))
            if len(nodes) == 0:
                raise ValueError("empty hyperedge")
            if len(set(nodes)) != len(nodes):
                raise ValueError("repeated node inside a hyperedge")
            if nodes[0] < 0 or nodes[-1] >= self.n:
                raise ValueError("hyperedge node out of range")
            w = float(w)
            if not (w > 0 and math.isfinite(w)):
                raise ValueError("hyperedge weights must be positive")
            norm.append((nodes, w))
        self.hyperedges = norm

    @property
    def m(self):
        return len(self.hyperedges)

    def covered_nodes(self):
        out = set()
        for nodes, _ in self.hyperedges:
            out.update(nodes)
        return sorted(out)

    def to_json(self):
        return {"n": self.n,
                "edges": [{"nodes": list(nodes), "w": w}
                          for nodes, w in self.hyperedges]}

    @staticmethod
    def from_json(data):
        return Hypergraph(int(data["n"]),
                          [(tuple(e["nodes"]), float(e.get("w", 1.0)))
                           for e in data["edges"]])


def load_hypergraph(path):
    return Hypergraph.from_json(json.loads(open(path).read()))


def _selectors(H):
    return [CoordSelect(nodes, H.n) for nodes, _ in H.hyperedges]


def cp_objective(H, q):
    """f(x) = sum_e w_e ||x|_e||_q as a composite norm with implicit
    coordinate-selection maps."""
    if q < 1:
        raise ValueError("need q >= 1")
    weights = np.array([w for _, w in H.hyperedges])
    outer = hf.WeightedLp(H.m, 1.0, weights)
    inners = [hf.lp_norm(len(nodes), float(q)) for nodes, _ in H.hyperedges]
    return hf.composite_norm(outer, inners, _selectors(H), check_monotone=False)


def cp_dual(H, q):
    """Dual of the core-periphery objective: the decomposition min-max."""
    f = cp_objective(H, q)
    return hf.dual(f)


def cp_scores(H, p, q, cfg=None):
    """Largest eigenvalue of (cp objective, lp norm); eigenvector entries are
    core scores."""
    if p <= 1:
        raise ValueError("need p > 1 for the score problem")
    f = cp_objective(H, q)
    g = hf.lp_norm(H.n, float(p))
    est = es.power_max(f, g, cfg or es.SolveConfig())
    # canonical sign: scores reported nonnegative when the eigenvector has a sign
    if np.all(est.x <= 1e-12) or np.all(est.x >= -1e-12):
        est.x = np.abs(est.x)
    return est


def lifted_dual_pair(H, p, q):
    """The equivalent eigenproblem on edge-decomposition space:

        ( || sum_e y_e ||_{p*} ,  max_e ||y_e||_{q*} / w_e )

    with variables y = (y_{e_1}, ..., y_{e_m}) stacked by hyperedge support.
    Its largest eigenvalue matches cp_scores' one.
    """
    sizes = [len(nodes) for nodes, _ in H.hyperedges]
    total = sum(sizes)
    stacked = np.zeros((H.n, total))
    ofs = 0
    for (nodes, _), sz in zip(H.hyperedges, sizes):
        for loc, node in enumerate(nodes):
            stacked[node, ofs + loc] = 1.0
        ofs += sz
    phi = hf.pullback(hf.lp_norm(H.n, hf.conjugate_exponent(float(p))),
                      LinearMap(stacked))
    weights = np.array([1.0 / w for _, w in H.hyperedges])
    outer = hf.WeightedLinf(H.m, weights)
    inners = [hf.lp_norm(sz, hf.conjugate_exponent(float(q))) for sz in sizes]
    maps = []
    ofs = 0
    for sz in sizes:
        maps.append(CoordSelect(range(ofs, ofs + sz), total))
        ofs += sz
    psi = hf.composite_norm(outer, inners, maps, check_monotone=False)
    return phi, psi


def contract_lifted_vector(H, y):
    """Sum the per-edge blocks of a lifted eigenvector back to node space."""
    out = np.zeros(H.n)
    ofs = 0
    for nodes, _ in H.hyperedges:
        for loc, node in enumerate(nodes):
            out[node] += y[ofs + loc]
        ofs += len(nodes)
    return out

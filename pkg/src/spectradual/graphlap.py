"""Weighted graphs, incidence operators, nonlinear Laplacian pairs, and
exhaustive combinatorial oracles (Cheeger constants, extremal cuts, diameters,
inscribed balls) at desk scale.

Conventions, fixed once and used everywhere:

* incidence row for edge (i, j, w) with i < j is +w at i and -w at j;
* cut(S) sums each crossing edge's weight once;
* on +/-1 indicator vectors each crossing edge contributes 2w to the graph
  total variation, so the extremal eigenvalues of the (1, inf) pair equal
  twice the single-count maxcut/mincut (the calibration tests pin this);
* distances are hop counts regardless of weights (a weighted variant sits
  behind a flag and is not used by any identity check).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import eigsolve as es
from . import homfun as hf
from .linalg import LinearMap
from .lpmodel import RationalLP


class SizeLimit(Exception):
    """Instance too large for the exhaustive oracle."""


def _is_exact(w):
    return isinstance(w, (int, Fraction)) or (
        isinstance(w, float) and w == int(w))


def exact_weight(w):
    if isinstance(w, Fraction):
        return w
    if isinstance(w, int):
        return Fraction(w)
    if isinstance(w, float) and w == int(w):
        return Fraction(int(w))
    raise ValueError(f"weight {w!r} is not exactly rational")


@dataclass
class Graph:
    n: int
    edges: list    # (i, j, w) with 0-based i < j, w > 0

    def __post_init__(self):
        seen = set()
        norm = []
        for (i, j, w) in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError("self-loops are not allowed")
            if i > j:
                i, j = j, i
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError("edge endpoint out of range")
            wf = float(w)
            if not (wf > 0 and math.isfinite(wf)):
                raise ValueError("weights must be positive and finite")
            seen.add((i, j))
            norm.append((i, j, w))
        self.edges = sorted(norm, key=lambda e: (e[0], e[1]))

    @property
    def m(self):
        return len(self.edges)

    def weight_floats(self):
        return np.array([float(w) for (_, _, w) in self.edges])

    def exact_weights(self):
        return [exact_weight(w) for (_, _, w) in self.edges]

    def has_exact_weights(self):
        return all(_is_exact(w) for (_, _, w) in self.edges)

    def adjacency_lists(self):
        adj = [[] for _ in range(self.n)]
        for (i, j, _) in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def degrees(self):
        deg = np.zeros(self.n)
        for (i, j, w) in self.edges:
            deg[i] += float(w)
            deg[j] += float(w)
        return deg

    def to_json(self):
        return {"n": self.n,
                "edges": [[i, j, float(w)] for (i, j, w) in self.edges]}

    @staticmethod
    def from_json(data):
        return Graph(int(data["n"]), [tuple(e) for e in data["edges"]])


def load_graph(path):
    """Graph from a JSON file or a 1-indexed TSV edge list ``i<TAB>j<TAB>w``."""
    text = open(path).read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return Graph.from_json(json.loads(text))
    edges = []
    nmax = 0
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        i, j = int(parts[0]) - 1, int(parts[1]) - 1
        w = float(parts[2]) if len(parts) > 2 else 1.0
        edges.append((i, j, w))
        nmax = max(nmax, i + 1, j + 1)
    return Graph(nmax, edges)


def incidence(G):
    """Signed weighted edge-node incidence; row e=(i,j,w) is +w at i, -w at j."""
    K = np.zeros((G.m, G.n))
    for r, (i, j, w) in enumerate(G.edges):
        K[r, i] = float(w)
        K[r, j] = -float(w)
    return LinearMap(K)


@dataclass
class LaplacianPair:
    graph: Graph
    a: float
    b: float
    f: hf.HomFun
    g: hf.HomFun
    K: LinearMap


def laplacian_pair(G, a, b):
    """The pair (||K x||_a, ||x||_b) on node space."""
    for idx in (a, b):
        fidx = float(idx)
        if not (fidx >= 1):
            raise ValueError(f"invalid norm index {idx}")
    K = incidence(G)
    f = hf.pullback(hf.lp_norm(G.m, float(a)), K)
    g = hf.lp_norm(G.n, float(b))
    return LaplacianPair(G, float(a), float(b), f, g, K)


def dual_forms(pair):
    """The four spectrally equivalent companions of (||Kx||_a, ||x||_b):
    (Dg, D(f o K)), (Dg o K^T, Df), (f, pushforward of g along K), and
    (f o K, quotient of g by Ker K)."""
    f_edge = hf.lp_norm(pair.graph.m, pair.a)
    g_node = pair.g
    K = pair.K
    form2 = (hf.dual(g_node), hf.dual(pair.f))
    form3 = (hf.pullback(hf.dual(g_node), LinearMap(K.mat.T)), hf.dual(f_edge))
    push = hf.pushforward(g_node, K)
    form4 = (f_edge, push)
    form5 = (pair.f, hf.pullback(push, K))
    return [form2, form3, form4, form5]


# ---------------------------------------------------------------------------
# Connectivity, distances, balls
# ---------------------------------------------------------------------------

def components(G):
    adj = G.adjacency_lists()
    seen = [False] * G.n
    comps = []
    for s in range(G.n):
        if seen[s]:
            continue
        stack, comp = [s], []
        seen[s] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in adj[v]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(u)
        comps.append(sorted(comp))
    return comps


def is_connected(G):
    return len(components(G)) == 1


def hop_distances(G, source):
    """BFS hop distances from source (unweighted; inf for unreachable)."""
    adj = G.adjacency_lists()
    dist = np.full(G.n, np.inf)
    dist[source] = 0
    frontier = [source]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for v in frontier:
            for u in adj[v]:
                if dist[u] == np.inf:
                    dist[u] = d
                    nxt.append(u)
        frontier = nxt
    return dist


def diameter(G):
    """Diameter in hop counts; for a disconnected graph, the list of
    per-component diameters."""
    comps = components(G)

    def comp_diam(comp):
        best = 0
        for v in comp:
            dist = hop_distances(G, v)
            best = max(best, int(max(dist[comp])))
        return best

    if len(comps) == 1:
        return comp_diam(comps[0])
    return [comp_diam(c) for c in comps]


def ball_size(G, v, r):
    """size(B_r(v)) = sum over layers i <= r of (r - i) * |{dist = i}|."""
    dist = hop_distances(G, v)
    size = 0
    for i in range(int(r) + 1):
        size += (int(r) - i) * int(np.sum(dist == i))
    return size


def ball_candidate(G, v, r):
    """Tent vector of a ball: x_i = max(r - dist(v, i), 0)."""
    dist = hop_distances(G, v)
    x = np.maximum(float(r) - dist, 0.0)
    x[~np.isfinite(x)] = 0.0
    return x


def balls_disjoint(G, centers_radii):
    for (v1, r1), (v2, r2) in itertools.combinations(centers_radii, 2):
        if hop_distances(G, v1)[v2] < r1 + r2:
            return False
    return True


def inscribed_ball_bound(G, k):
    """min over k pairwise disjoint balls of max_i 1/size(B_i); inf when no
    such family of positive-size balls exists."""
    if G.n > 12:
        raise SizeLimit("inscribed-ball oracle limited to n <= 12")
    comps = components(G)
    comp_radius = {}
    for comp in comps:
        rad = min(int(np.max(hop_distances(G, v)[comp])) for v in comp)
        for v in comp:
            comp_radius[v] = rad
    balls = []
    for v in range(G.n):
        # inscribed means the radius is at most the (component) graph radius,
        # the analogue of a ball inscribed in a body
        for r in range(1, max(comp_radius[v], 1) + 1):
            s = ball_size(G, v, r)
            if s > 0:
                balls.append((v, r, s))
    best = math.inf
    witness = None
    for combo in itertools.combinations(balls, k):
        if not balls_disjoint(G, [(v, r) for (v, r, _) in combo]):
            continue
        val = max(1.0 / s for (_, _, s) in combo)
        if val < best:
            best = val
            witness = [(v, r) for (v, r, _) in combo]
    return best, witness


def infty_eigvec_candidate(G):
    """Distance-profile candidate for the smallest nonzero eigenvalue of the
    (inf, inf) pair: from a diameter endpoint a, x_v = dist(a, v) - diam/2,
    with eigenvalue 2/diam."""
    if not is_connected(G):
        raise ValueError("candidate construction needs a connected graph")
    diam = 0
    endpoint = 0
    for v in range(G.n):
        d = hop_distances(G, v)
        far = int(np.max(d))
        if far > diam:
            diam, endpoint = far, v
    if diam == 0:
        raise ValueError("single-node graph has no nonzero spectrum")
    x = hop_distances(G, endpoint) - diam / 2.0
    return 2.0 / diam, x


# ---------------------------------------------------------------------------
# Cut oracles
# ---------------------------------------------------------------------------

def _subset_cut_values(G, exact):
    """cut(S) for every subset bitmask S; exact Fractions when requested."""
    if exact:
        vals = [Fraction(0)] * (1 << G.n)
        weights = G.exact_weights()
    else:
        vals = np.zeros(1 << G.n)
        weights = G.weight_floats()
    for (i, j, _), w in zip(G.edges, weights):
        bit_i, bit_j = 1 << i, 1 << j
        for mask in range(1 << G.n):
            if bool(mask & bit_i) != bool(mask & bit_j):
                vals[mask] += w
    return vals


def _cut_values_vectorized(G):
    masks = np.arange(1 << G.n, dtype=np.int64)
    total = np.zeros(1 << G.n)
    for (i, j, w) in G.edges:
        crossing = ((masks >> i) & 1) != ((masks >> j) & 1)
        total += float(w) * crossing
    return total


def mincut(G):
    """Exact min over nonempty proper S of cut(S); returns (value, S)."""
    if G.n > 24:
        raise SizeLimit("cut enumeration limited to n <= 24")
    exact = G.has_exact_weights() and G.n <= 16
    vals = _subset_cut_values(G, True) if exact else _cut_values_vectorized(G)
    best, witness = None, None
    for mask in range(1, (1 << G.n) - 1):
        v = vals[mask]
        if best is None or v < best:
            best, witness = v, mask
    return best, sorted(i for i in range(G.n) if witness & (1 << i))


def maxcut(G):
    """Exact max over S of cut(S); returns (value, S)."""
    if G.n > 24:
        raise SizeLimit("cut enumeration limited to n <= 24")
    exact = G.has_exact_weights() and G.n <= 16
    vals = _subset_cut_values(G, True) if exact else _cut_values_vectorized(G)
    best, witness = None, None
    for mask in range(1 << G.n):
        v = vals[mask]
        if best is None or v > best:
            best, witness = v, mask
    return best, sorted(i for i in range(G.n) if witness & (1 << i))


def cheeger(G, k=2, volume="cardinality"):
    """Exact k-way Cheeger constant

        h_k = min over disjoint nonempty V_1..V_k of max_i cut(V_i)/vol(V_i)

    with vol = cardinality (default) or weighted degree (extension flag).
    Returns (value, (V_1, ..., V_k)). Exact Fractions on rational weights.
    """
    if G.n > 16:
        raise SizeLimit("Cheeger enumeration limited to n <= 16")
    if k < 2:
        raise ValueError("need k >= 2 disjoint subsets")
    exact = G.has_exact_weights() and volume == "cardinality"
    cuts = _subset_cut_values(G, exact)
    deg = G.degrees()

    def vol(mask):
        if volume == "cardinality":
            return bin(mask).count("1")
        return float(sum(deg[i] for i in range(G.n) if mask & (1 << i)))

    subsets = [m for m in range(1, 1 << G.n)]
    ratios = []
    for m in subsets:
        vm = vol(m)
        ratios.append(cuts[m] / vm if exact else float(cuts[m]) / vm)

    if k == 2:
        order = sorted(range(len(subsets)), key=lambda idx: (ratios[idx],
                                                             subsets[idx]))
        for pos, idx_j in enumerate(order):
            mj = subsets[idx_j]
            for idx_i in order[:pos]:
                if subsets[idx_i] & mj == 0:
                    parts = (subsets[idx_i], mj)
                    val = ratios[idx_j]
                    return val, tuple(
                        sorted(i for i in range(G.n) if p & (1 << i))
                        for p in parts)
        raise ValueError("no disjoint pair exists (graph too small)")

    best, witness = None, None
    for assign in itertools.product(range(k + 1), repeat=G.n):
        masks = [0] * k
        for node, lab in enumerate(assign):
            if lab > 0:
                masks[lab - 1] |= (1 << node)
        if any(m == 0 for m in masks):
            continue
        val = max(cuts[m] / vol(m) if exact else float(cuts[m]) / vol(m)
                  for m in masks)
        if best is None or val < best:
            best, witness = val, masks
    if best is None:
        raise ValueError(f"cannot place {k} disjoint nonempty subsets")
    return best, tuple(sorted(i for i in range(G.n) if m & (1 << i))
                       for m in witness)


def quotient_graph(G, partition):
    """Collapse a partition of V into a weighted graph on the blocks."""
    index = {}
    for b, block in enumerate(partition):
        for v in block:
            index[v] = b
    k = len(partition)
    weights = {}
    for (i, j, w) in G.edges:
        bi, bj = index[i], index[j]
        if bi != bj:
            key = (min(bi, bj), max(bi, bj))
            weights[key] = weights.get(key, 0) + w
    return Graph(k, [(i, j, w) for (i, j), w in weights.items()])


def _partitions(n, k):
    """All partitions of range(n) into exactly k nonempty blocks
    (restricted-growth strings)."""
    def rec(i, labels, used):
        if i == n:
            if used == k:
                blocks = [[] for _ in range(k)]
                for v, lab in enumerate(labels):
                    blocks[lab].append(v)
                yield tuple(tuple(b) for b in blocks)
            return
        for lab in range(min(used + 1, k)):
            labels.append(lab)
            yield from rec(i + 1, labels, max(used, lab + 1))
            labels.pop()

    yield from rec(0, [], 0)


def multiway_maxcut_bound(G, k):
    """min over partitions into k blocks of the quotient graph's doubled
    maxcut 2 max_S sum_{i in S, j not in S} w(block_i, block_j)."""
    if G.n > 12:
        raise SizeLimit("partition enumeration limited to n <= 12")
    best, witness = None, None
    for blocks in _partitions(G.n, k):
        Q = quotient_graph(G, blocks)
        val, _ = maxcut(Q)
        val = 2 * val
        if best is None or val < best:
            best, witness = val, blocks
    return best, witness


# ---------------------------------------------------------------------------
# Candidate eigenpair searches
# ---------------------------------------------------------------------------

def sign_candidates(G):
    return es.sign_vectors(G.n)


def indicator_candidates(G, plus_minus=True):
    """0/1 and +/-1 indicator vectors of every nonempty proper subset."""
    out = []
    for mask in range(1, (1 << G.n) - 1):
        x = np.array([(1.0 if mask & (1 << i) else 0.0) for i in range(G.n)])
        out.append(x)
        if plus_minus:
            out.append(2.0 * x - 1.0)
    return np.array(out)


def certified_sweep(pair, candidates=None, tol=1e-8, lam_filter=None):
    """Certified eigenpairs of a Laplacian pair over a candidate pool."""
    if candidates is None:
        candidates = sign_candidates(pair.graph)
    return es.certified_candidates(pair.f, pair.g, candidates, tol=tol,
                                   lam_filter=lam_filter)


# ---------------------------------------------------------------------------
# Exact rational certificates for polyhedral Laplacian pairs
# ---------------------------------------------------------------------------

def _exact_apply_incidence(G, x):
    """Exact (Kx)_e for integer/rational x."""
    w = G.exact_weights()
    return [w_e * (Fraction(x[i]) - Fraction(x[j]))
            for (i, j, _), w_e in zip(G.edges, w)]


def eval_pair_exact(G, a, b, x):
    """Exact (f(x), g(x)) of the (a, b) pair at rational x; a, b in {1, inf}."""
    kx = _exact_apply_incidence(G, x)
    if a == 1:
        fx = sum(abs(v) for v in kx)
    elif math.isinf(a):
        fx = max(abs(v) for v in kx) if kx else Fraction(0)
    else:
        raise ValueError("exact path supports norm indices 1 and inf")
    xs = [Fraction(v) for v in x]
    if b == 1:
        gx = sum(abs(v) for v in xs)
    elif math.isinf(b):
        gx = max(abs(v) for v in xs)
    else:
        raise ValueError("exact path supports norm indices 1 and inf")
    return fx, gx


def _encode_exact_l1_side(lp, uvars, weights, signs, lam):
    """u in lam * subdiff of a weighted l1 norm: box with pinned/tied entries."""
    for uv, w, s in zip(uvars, weights, signs):
        if s > 0:
            lp.set_bounds(uv, lb=lam * w, ub=lam * w)
        elif s < 0:
            lp.set_bounds(uv, lb=-lam * w, ub=-lam * w)
        else:
            lp.set_bounds(uv, lb=-lam * w, ub=lam * w)


def _encode_exact_linf_side(lp, uvars, vertices, lam):
    """u in lam * conv(vertices); vertices is a list of exact vectors."""
    beta = lp.add_vars(len(vertices), lb=Fraction(0))
    lp.add_eq([(bv, Fraction(1)) for bv in beta], lam)
    for c, uv in enumerate(uvars):
        terms = [(bv, Fraction(vertices[r][c])) for r, bv in enumerate(beta)]
        terms.append((uv, Fraction(-1)))
        lp.add_eq(terms, 0)


def _exact_subdiff_f_terms(G, a, x):
    """Constraint data for subdiff(||K.||_a)(x): returns either
    ("box", edge weights, edge signs) for a=1 or ("hull", node-space vertices)
    for a=inf."""
    kx = _exact_apply_incidence(G, x)
    w = G.exact_weights()
    if a == 1:
        # weights sit inside the incidence rows, so the edge box is unit
        signs = [0 if v == 0 else (1 if v > 0 else -1) for v in kx]
        return ("box", [Fraction(1)] * G.m, signs)
    top = max(abs(v) for v in kx) if kx else Fraction(0)
    verts = []
    for (e, (i, j, _)), we, v in zip(enumerate(G.edges), w, kx):
        row = [Fraction(0)] * G.n
        row[i], row[j] = we, -we
        if top == 0:
            verts.append(row)
            verts.append([-r for r in row])
        elif abs(v) == top:
            if v > 0:
                verts.append(row)
            else:
                verts.append([-r for r in row])
    return ("hull", verts)


def verify_candidate_exact(G, a, b, x):
    """Exact-rational certificate for a candidate vector of the (a, b) pair.

    Returns the exact eigenvalue (a Fraction) when (lam, x) is an eigenpair,
    None otherwise. Requires rational weights and rational x, with
    a, b in {1, inf}.
    """
    fx, gx = eval_pair_exact(G, a, b, x)
    if gx == 0:
        return None
    lam = fx / gx
    lp = RationalLP(0)
    u = lp.add_vars(G.n)
    s = lp.add_vars(G.m)

    kind = _exact_subdiff_f_terms(G, a, x)
    if kind[0] == "box":
        _, weights, signs = kind
        _encode_exact_l1_side(lp, s, weights, signs, Fraction(1))
        # u = K^T s
        for c in range(G.n):
            terms = [(u[c], Fraction(-1))]
            for r, ((i, j, _), we) in enumerate(zip(G.edges,
                                                    G.exact_weights())):
                if i == c:
                    terms.append((s[r], we))
                elif j == c:
                    terms.append((s[r], -we))
            lp.add_eq(terms, 0)
    else:
        _, verts = kind
        _encode_exact_linf_side(lp, u, verts, Fraction(1))

    xs = [Fraction(v) for v in x]
    if b == 1:
        signs = [0 if v == 0 else (1 if v > 0 else -1) for v in xs]
        _encode_exact_l1_side(lp, u, [Fraction(1)] * G.n, signs, lam)
    else:
        top = max(abs(v) for v in xs)
        verts = []
        for i, v in enumerate(xs):
            if top == 0 or abs(v) == top:
                row = [Fraction(0)] * G.n
                if top == 0:
                    row[i] = Fraction(1)
                    verts.append(row[:])
                    row = [Fraction(0)] * G.n
                    row[i] = Fraction(-1)
                    verts.append(row)
                else:
                    row[i] = Fraction(1) if v > 0 else Fraction(-1)
                    verts.append(row)
        _encode_exact_linf_side(lp, u, verts, lam)

    return lam if lp.feasible() else None

"""Centrally symmetric polytopes in dimension 2 or 3: gauges and support
functions, polars, tangency spectra, and the scaling distance

    hat_d(K, L) = inf {r >= 1 : (1/r) L ⊆ K ⊆ r L}
               = max(lambda_max(K, L), lambda_max(L, K)),

where lambda_max(K, L) is the largest ratio ||x||_K / ||x||_L, attained at a
vertex of L. Dimension is capped at 3 (vertex enumeration by facet-subset
intersection is only tractable there)."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from . import eigsolve as es
from . import homfun as hf
from . import subdiff as sd

VERTEX_TOL = 1e-9


def _dedupe_rows(rows, tol=1e-9):
    out = []
    for r in rows:
        if not any(np.linalg.norm(r - o) <= tol * max(1.0, np.linalg.norm(o))
                   for o in out):
            out.append(r)
    return np.array(out)


def _hull_vertices_2d(points):
    """Extreme points of a 2-D point cloud, ordered by angle."""
    pts = _dedupe_rows(points)
    if len(pts) <= 2:
        return pts
    from scipy.spatial import ConvexHull

    hull = ConvexHull(pts, qhull_options="Qt")
    verts = pts[hull.vertices]
    ang = np.arctan2(verts[:, 1], verts[:, 0])
    return verts[np.argsort(ang)]


def _hull_facets(points):
    """Facet inequalities <a, x> <= 1 of conv(points) containing the origin."""
    from scipy.spatial import ConvexHull

    hull = ConvexHull(points, qhull_options="Qt")
    # hull equation rows are (normal, offset) with normal.x + offset <= 0
    normals = []
    for eq in hull.equations:
        nvec, off = eq[:-1], eq[-1]
        if off >= -1e-12:
            raise ValueError("origin is not interior to the polytope")
        normals.append(-nvec / off)
    return _dedupe_rows(np.array(normals)), points[hull.vertices]


@dataclass
class SymPolytope:
    dim: int
    vertices: np.ndarray
    facets: np.ndarray = None

    def __post_init__(self):
        self.vertices = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if self.dim not in (2, 3):
            raise ValueError("polytopes supported in dimension 2 or 3 only")
        if self.vertices.shape[1] != self.dim:
            raise ValueError("vertex dimension mismatch")
        if self.facets is None:
            facets, extreme = _hull_facets(self.vertices)
            self.facets = facets
            if self.dim == 2:
                self.vertices = _hull_vertices_2d(extreme)
            else:
                self.vertices = _dedupe_rows(extreme)
        else:
            self.facets = np.atleast_2d(np.asarray(self.facets, dtype=float))

    @property
    def n_vertices(self):
        return len(self.vertices)

    def is_symmetric(self, tol=1e-9):
        for v in self.vertices:
            if not any(np.linalg.norm(v + u) <= tol * max(1.0, np.linalg.norm(v))
                       for u in self.vertices):
                return False
        return True

    def to_json(self):
        return {"dim": self.dim,
                "vertices": [[float(c) for c in v] for v in self.vertices]}

    @staticmethod
    def from_json(data, symmetrize=True):
        verts = np.atleast_2d(np.asarray(data["vertices"], dtype=float))
        if symmetrize:
            verts = np.vstack([verts, -verts])
        return SymPolytope(int(data["dim"]), verts)


def load_polytope(path, symmetrize=True):
    return SymPolytope.from_json(json.loads(open(path).read()),
                                 symmetrize=symmetrize)


def make_polytope(vertices, symmetrize=True):
    verts = np.atleast_2d(np.asarray(vertices, dtype=float))
    if symmetrize:
        verts = np.vstack([verts, -verts])
    return SymPolytope(verts.shape[1], verts)


def gauge(P):
    """Minkowski functional of P: max over facet inequalities <a_i, x>."""
    return hf.polytope_gauge(P.facets)


def support(P):
    """Support function of P: max over vertices <v, x>."""
    return hf.support_function(P.vertices)


def polar(P):
    """The polar body: facet normals become vertices (and vice versa)."""
    return SymPolytope(P.dim, P.facets.copy())


def lambda_max(K, L):
    """Largest ratio ||x||_K / ||x||_L; the gauge is convex, so the maximum
    over the unit ball of L sits at one of L's vertices."""
    if K.dim != L.dim:
        raise ValueError("bodies must share the ambient dimension")
    gk = gauge(K)
    return float(max(gk(v) for v in L.vertices))


def st_extremes(K, L):
    """(lambda_min, lambda_max) of the tangency spectrum of (||.||_K, ||.||_L).

    lambda_min(K, L) = 1 / lambda_max(L, K) by the reciprocity of the spectra.
    """
    hi = lambda_max(K, L)
    lo = 1.0 / lambda_max(L, K)
    return lo, hi


def hat_distance(K, L):
    """max(lambda_max(K, L), lambda_max(L, K)) = inf{r >= 1 : L/r ⊆ K ⊆ rL}."""
    return max(lambda_max(K, L), lambda_max(L, K))


def tangency_verify(K, L, lam, tol=1e-8, resolution=720):
    """Search for a contact direction certifying lam in the tangency spectrum.

    Candidates are the vertices of both bodies plus (in dimension 2) the
    critical directions of the restricted ratio; each is checked with the
    subdifferential feasibility certificate for the gauge pair. A miss is
    sound only up to the completeness of the candidate pool and is reported
    as an unverified certificate.
    """
    gk, gl = gauge(K), gauge(L)
    candidates = [v for v in K.vertices] + [v for v in L.vertices]
    if K.dim == 2:
        for lam_c, x_c in es.grid_spectrum_2d(gk, gl, resolution):
            candidates.append(x_c)
    best = None
    for x in candidates:
        ratio = gk(x) / gl(x)
        if abs(ratio - lam) > tol * max(1.0, abs(lam)):
            continue
        cert = sd.verify_eigenpair(gk, gl, lam, x, tol=tol)
        if cert.feasible:
            return cert
        if best is None or cert.residual < best.residual:
            best = cert
    if best is None:
        best = sd.EigenCertificate(lam, np.zeros(K.dim), False, None,
                                   float("inf"))
    return best


def banach_mazur_upper(K, L, A):
    """Upper bound on the Banach-Mazur distance at a user-supplied invertible
    transform: lambda_max(AK, L) * lambda_max(A^T L*, K*)."""
    A = np.asarray(A, dtype=float)
    if A.shape != (K.dim, K.dim) or abs(np.linalg.det(A)) < 1e-12:
        raise ValueError("need an invertible square transform")
    AK = SymPolytope(K.dim, K.vertices @ A.T)
    ALstar = SymPolytope(K.dim, polar(L).vertices @ A)
    return lambda_max(AK, L) * lambda_max(ALstar, polar(K))


def random_symmetric_polygon(rng, k=None):
    """Random symmetric polygon: k points on an ellipse with jitter,
    symmetrized and hull-filtered."""
    k = int(k if k is not None else rng.integers(3, 9))
    a, b = rng.uniform(0.5, 2.0, size=2)
    phi = rng.uniform(0, math.pi)
    rot = np.array([[math.cos(phi), -math.sin(phi)],
                    [math.sin(phi), math.cos(phi)]])
    angles = np.sort(rng.uniform(0, math.pi, size=k))
    pts = np.stack([a * np.cos(angles), b * np.sin(angles)], axis=1)
    pts = pts * rng.uniform(0.8, 1.2, size=(k, 1))
    pts = pts @ rot.T
    return make_polytope(pts, symmetrize=True)

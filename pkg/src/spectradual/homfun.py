"""Algebra of nonnegative positively homogeneous convex functions with linear kernels.

Functions are symbolic expression trees over norm-like atoms, closed under
linear pullback/pushforward, powers, positive scaling, composition with
monotone outer norms, and three duality transforms:

* ``dual``      -- kernel-projected norm duality, sup{<y,x> : f(y) <= 1, y ⟂ Ker f}
* ``legendre``  -- kernel-projected convex conjugate (degree p -> p*)
* ``polarity``  -- kernel-projected polarity transform (degree preserved)

Duals are rewritten to closed forms wherever a structural rule applies
(lp <-> lp*, support <-> gauge, pullback <-> pushforward, composite norms);
otherwise evaluation falls back to a linear program for polyhedral trees or
to a projected-ascent supremum with tolerance 1e-8 and a 10^4 iteration cap.

All values are immutable after construction; every operation is pure.
"""

from __future__ import annotations

import math

import numpy as np

from .linalg import (LinearMap, CoordSelect, as_map, null_basis, range_basis,
                     project, projector, span_basis, subspace_contained)
from .lpmodel import LPModel, NotPolyhedral

_TIE_RTOL = 1e-12
NUMERIC_DUAL_TOL = 1e-8
NUMERIC_DUAL_MAX_ITERS = 10_000


class DimensionMismatch(ValueError):
    pass


def _check_dim(f, x):
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != f.dim:
        raise DimensionMismatch(
            f"expected vector of dimension {f.dim}, got {x.shape[0]}")
    return x


def conjugate_exponent(p):
    """Holder conjugate p* with 1/p + 1/p* = 1 (inf <-> 1)."""
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


class HomFun:
    """Base class: a convex, nonnegative, positively p-homogeneous function."""

    dim: int
    degree: float

    def __init__(self, dim, degree=1.0):
        self.dim = int(dim)
        self.degree = float(degree)
        self._kernel = None

    # -- required node interface -------------------------------------------

    def _value(self, x):
        raise NotImplementedError

    def _grad(self, x):
        raise NotImplementedError

    def _kernel_basis(self):
        raise NotImplementedError

    def encode_epi(self, model, xvars, tterms, tconst):
        """Add constraints for f(x) <= sum(coef*var) + const to an LPModel."""
        raise NotPolyhedral(type(self).__name__)

    def params_json(self):
        return {}

    def children(self):
        return []

    op_name = "abstract"

    # -- shared surface ------------------------------------------------------

    def __call__(self, x):
        return float(self._value(_check_dim(self, x)))

    def value_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self._value(row) for row in X])

    def grad(self, x):
        """One element of the (Clarke) subdifferential at x."""
        return np.asarray(self._grad(_check_dim(self, x)), dtype=float)

    def kernel_basis(self):
        """Orthonormal basis (columns) of {x : f(x) = 0}."""
        if self._kernel is None:
            self._kernel = np.atleast_2d(self._kernel_basis())
            if self._kernel.shape[0] != self.dim:
                self._kernel = self._kernel.reshape(self.dim, -1)
        return self._kernel

    def kernel_dim(self):
        return self.kernel_basis().shape[1]

    def support_basis(self):
        """Orthonormal basis of Ker(f)^perp."""
        ker = self.kernel_basis()
        if ker.shape[1] == 0:
            return np.eye(self.dim)
        return null_basis(ker.T)

    def is_positive_definite(self, tol=0.0):
        return self.kernel_dim() == 0

    def polyhedral(self):
        """True when the tree admits an exact linear-programming encoding."""
        try:
            probe = LPModel()
            xv = probe.add_vars(self.dim)
            t = probe.add_vars(1)[0]
            self.encode_epi(probe, xv, [(t, 1.0)], 0.0)
            return True
        except NotPolyhedral:
            return False

    def to_json(self):
        node = {"op": self.op_name, "args": [c.to_json() for c in self.children()],
                "params": self.params_json()}
        return node

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, degree={self.degree:g})"


# ---------------------------------------------------------------------------
# Atoms
# ---------------------------------------------------------------------------

class WeightedLp(HomFun):
    """f(x) = || diag(w) x ||_p for 1 <= p < inf, with positive weights."""

    op_name = "weighted_lp"

    def __init__(self, dim, p, w=None):
        super().__init__(dim, 1.0)
        p = float(p)
        if p < 1 or math.isinf(p):
            raise ValueError("use WeightedLinf for p=inf; need p >= 1")
        self.p = p
        self.w = np.ones(dim) if w is None else np.asarray(w, dtype=float).ravel()
        if self.w.shape[0] != dim:
            raise DimensionMismatch("weight vector length mismatch")
        if np.any(self.w <= 0) or not np.all(np.isfinite(self.w)):
            raise ValueError("weights must be positive and finite")

    def _value(self, x):
        z = self.w * np.abs(x)
        if self.p == 1:
            return z.sum()
        if self.p == 2:
            return float(np.sqrt((z * z).sum()))
        return float((z ** self.p).sum() ** (1.0 / self.p))

    def value_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Z = np.abs(X) * self.w
        if self.p == 1:
            return Z.sum(axis=1)
        return (Z ** self.p).sum(axis=1) ** (1.0 / self.p)

    def _grad(self, x):
        if self.p == 1:
            return self.w * np.sign(x)
        val = self._value(x)
        if val <= 0:
            return np.zeros(self.dim)
        z = self.w * np.abs(x)
        return (self.w * z ** (self.p - 1.0)) * np.sign(x) * val ** (1.0 - self.p)

    def _kernel_basis(self):
        return np.zeros((self.dim, 0))

    def encode_epi(self, model, xvars, tterms, tconst):
        if self.p != 1:
            raise NotPolyhedral("smooth lp norm")
        s = model.add_vars(self.dim, lb=0.0)
        for i in range(self.dim):
            model.add_le([xvars[i], s[i]], [1.0, -1.0], 0.0)
            model.add_le([xvars[i], s[i]], [-1.0, -1.0], 0.0)
        idx = list(s) + [i for i, _ in tterms]
        coef = list(self.w) + [-c for _, c in tterms]
        model.add_le(idx, coef, tconst)

    def params_json(self):
        return {"w": self.w.tolist(), "p": self.p}


class WeightedLinf(HomFun):
    """f(x) = max_i w_i |x_i| with positive weights."""

    op_name = "linfty_max"

    def __init__(self, dim, w=None):
        super().__init__(dim, 1.0)
        self.w = np.ones(dim) if w is None else np.asarray(w, dtype=float).ravel()
        if self.w.shape[0] != dim:
            raise DimensionMismatch("weight vector length mismatch")
        if np.any(self.w <= 0) or not np.all(np.isfinite(self.w)):
            raise ValueError("weights must be positive and finite")

    def _value(self, x):
        return float(np.max(self.w * np.abs(x))) if self.dim else 0.0

    def value_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.max(np.abs(X) * self.w, axis=1)

    def _grad(self, x):
        z = self.w * np.abs(x)
        val = float(np.max(z))
        if val <= 0:
            return np.zeros(self.dim)
        i = int(np.argmax(z >= val * (1 - _TIE_RTOL)))
        out = np.zeros(self.dim)
        out[i] = self.w[i] * np.sign(x[i])
        return out

    def _kernel_basis(self):
        return np.zeros((self.dim, 0))

    def encode_epi(self, model, xvars, tterms, tconst):
        for i in range(self.dim):
            idx = [xvars[i]] + [j for j, _ in tterms]
            model.add_le(idx, [self.w[i]] + [-c for _, c in tterms], tconst)
            model.add_le(idx, [-self.w[i]] + [-c for _, c in tterms], tconst)

    def params_json(self):
        return {"w": self.w.tolist()}


class MaxLinear(HomFun):
    """Support function of a finite point set: f(x) = max_j <v_j, x>.

    With 0 in the relative interior of conv(points) this is a nonnegative
    sublinear function whose kernel is span(points)^perp. Both support
    functions of vertex sets and gauges given by facet normals take this form.
    """

    op_name = "support_function"

    def __init__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.size == 0:
            raise ValueError("need at least one point")
        super().__init__(pts.shape[1], 1.0)
        self.points = pts

    def _value(self, x):
        return float(np.max(self.points @ x))

    def value_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.max(X @ self.points.T, axis=1)

    def _grad(self, x):
        vals = self.points @ x
        top = float(np.max(vals))
        scale = max(1.0, abs(top))
        i = int(np.argmax(vals >= top - _TIE_RTOL * scale))
        return self.points[i].copy()

    def tied_points(self, x, tol=1e-9):
        vals = self.points @ x
        top = float(np.max(vals))
        scale = max(1.0, abs(top))
        return self.points[vals >= top - tol * scale]

    def _kernel_basis(self):
        return null_basis(self.points)

    def encode_epi(self, model, xvars, tterms, tconst):
        for v in self.points:
            idx = list(xvars) + [j for j, _ in tterms]
            model.add_le(idx, list(v) + [-c for _, c in tterms], tconst)

    def params_json(self):
        return {"points": self.points.tolist()}


class GaugeHull(HomFun):
    """Minkowski gauge of conv(points) composed with projection onto span(points).

    This is the norm-like dual of :class:`MaxLinear`; evaluation solves
    min sum|alpha| subject to  sum alpha_j v_j = (projection of x).
    """

    op_name = "gauge_hull"

    def __init__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        super().__init__(pts.shape[1], 1.0)
        self.points = pts
        self._span = span_basis(pts)

    def _value(self, x):
        q = project(self._span, x)
        model = LPModel()
        a = model.add_vars(len(self.points), lb=0.0)
        b = model.add_vars(len(self.points), lb=0.0)
        for i in range(self.dim):
            col = self.points[:, i]
            model.add_eq(list(a) + list(b), list(col) + list(-col), q[i])
        res = model.minimize({j: 1.0 for j in list(a) + list(b)})
        if not res.optimal:
            raise ValueError("gauge evaluation failed; point set may be degenerate")
        return float(res.fun)

    def _grad(self, x):
        # argmax of <v, x> over the polar body {v : <v_j, v> <= 1} ∩ span(points)
        model = LPModel()
        v = model.add_vars(self.dim)
        for pt in self.points:
            model.add_le(v, list(pt), 1.0)
        ker = null_basis(self.points)
        for k in range(ker.shape[1]):
            model.add_eq(v, list(ker[:, k]), 0.0)
        res = model.maximize({v[i]: x[i] for i in range(self.dim)})
        if not res.optimal:
            raise ValueError("gauge subgradient LP failed")
        return res.x[: self.dim]

    def _kernel_basis(self):
        return null_basis(self.points)

    def encode_epi(self, model, xvars, tterms, tconst):
        a = model.add_vars(len(self.points), lb=0.0)
        b = model.add_vars(len(self.points), lb=0.0)
        Q = projector(self._span)
        for i in range(self.dim):
            col = self.points[:, i]
            idx = list(xvars) + list(a) + list(b)
            coef = list(Q[i]) + list(-col) + list(col)
            model.add_eq(idx, coef, 0.0)
        idx = list(a) + list(b) + [j for j, _ in tterms]
        coef = [1.0] * (2 * len(self.points)) + [-c for _, c in tterms]
        model.add_le(idx, coef, tconst)

    def params_json(self):
        return {"points": self.points.tolist()}


# ---------------------------------------------------------------------------
# Combinators
# ---------------------------------------------------------------------------

class Pullback(HomFun):
    """x -> f(Bx) for a linear map B into the domain of f."""

    op_name = "pullback"

    def __init__(self, inner, bmap):
        bmap = as_map(bmap)
        if bmap.rows != inner.dim:
            raise DimensionMismatch(
                f"map has {bmap.rows} rows, inner function expects {inner.dim}")
        super().__init__(bmap.cols, inner.degree)
        self.inner = inner
        self.bmap = bmap

    def _value(self, x):
        return self.inner._value(self.bmap.apply(x))

    def value_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if isinstance(self.bmap, CoordSelect):
            inner_X = X[:, self.bmap.idx]
        else:
            inner_X = X @ self.bmap.mat.T
        return self.inner.value_batch(inner_X)

    def _grad(self, x):
        return self.bmap.apply_transpose(self.inner._grad(self.bmap.apply(x)))

    def _kernel_basis(self):
        sup = self.inner.support_basis()
        if sup.shape[1] == 0:
            return np.eye(self.dim)
        if isinstance(self.bmap, CoordSelect):
            mat = self.bmap.mat
        else:
            mat = self.bmap.mat
        return null_basis(sup.T @ mat)

    def encode_epi(self, model, xvars, tterms, tconst):
        z = model.add_vars(self.inner.dim)
        mat = self.bmap.mat
        for r in range(self.inner.dim):
            model.add_eq(list(xvars) + [z[r]], list(mat[r]) + [-1.0], 0.0)
        self.inner.encode_epi(model, z, tterms, tconst)

    def children(self):
        return [self.inner]

    def params_json(self):
        return {"matrix": [[float(v) for v in row] for row in self.bmap.mat]}


class Pushforward(HomFun):
    """Kernel-projected infimal image: y -> inf{f(u) : Au = (proj onto Ran A) y}."""

    op_name = "pushforward"

    def __init__(self, inner, amap):
        amap = as_map(amap)
        if amap.cols != inner.dim:
            raise DimensionMismatch(
                f"map has {amap.cols} cols, inner function expects {inner.dim}")
        if inner.degree != 1.0:
            raise ValueError("pushforward requires a one-homogeneous function")
        super().__init__(amap.rows, 1.0)
        self.inner = inner
        self.amap = amap

    def _target(self, y):
        return self.amap.project_range(y)

    def _value(self, y):
        target = self._target(y)
        try:
            return self._value_lp(target)[0]
        except NotPolyhedral:
            return self._value_smooth(target)[0]

    def _value_lp(self, target):
        model = LPModel()
        u = model.add_vars(self.inner.dim)
        t = model.add_vars(1, lb=0.0)[0]
        self.inner.encode_epi(model, u, [(t, 1.0)], 0.0)
        mat = self.amap.mat
        for r in range(self.dim):
            model.add_eq(u, list(mat[r]), target[r])
        res = model.minimize({t: 1.0})
        if not res.optimal:
            raise ValueError("pushforward evaluation LP failed")
        return float(res.fun), res

    def _value_smooth(self, target):
        from scipy.optimize import minimize

        mat = self.amap.mat
        u0, *_ = np.linalg.lstsq(mat, target, rcond=None)
        cons = {"type": "eq", "fun": lambda u: mat @ u - target}
        res = minimize(lambda u: self.inner._value(u), u0, constraints=[cons],
                       method="SLSQP", options={"maxiter": 400, "ftol": 1e-12})
        return float(self.inner._value(res.x)), res

    def _grad(self, y):
        target = self._target(y)
        try:
            _, res = self._value_lp(target)
            mu = res.eq_marginals
            # equality rows added in order: inner encoding first, then Au = target
            mu = mu[-self.dim:]
            return project(self.amap.range_basis(), mu)
        except NotPolyhedral:
            _, res = self._value_smooth(target)
            g = self.inner._grad(res.x)
            mu, *_ = np.linalg.lstsq(self.amap.mat.T, g, rcond=None)
            return project(self.amap.range_basis(), mu)

    def _kernel_basis(self):
        inner_ker = self.inner.kernel_basis()
        pieces = [null_basis(self.amap.mat.T)]
        if inner_ker.shape[1]:
            pieces.append(self.amap.mat @ inner_ker)
        stacked = np.hstack(pieces)
        return range_basis(stacked)

    def encode_epi(self, model, xvars, tterms, tconst):
        u = model.add_vars(self.inner.dim)
        P = projector(self.amap.range_basis())
        mat = self.amap.mat
        for r in range(self.dim):
            idx = list(u) + list(xvars)
            coef = list(mat[r]) + list(-P[r])
            model.add_eq(idx, coef, 0.0)
        self.inner.encode_epi(model, u, tterms, tconst)

    def children(self):
        return [self.inner]

    def params_json(self):
        return {"matrix": [[float(v) for v in row] for row in self.amap.mat]}


class Power(HomFun):
    """f^r with r >= 1/degree(f), degree becomes degree(f) * r."""

    op_name = "power"

    def __init__(self, inner, r):
        r = float(r)
        if r < 1.0 / inner.degree - 1e-15:
            raise ValueError(
                f"exponent {r} below 1/{inner.degree}; result would be nonconvex")
        super().__init__(inner.dim, inner.degree * r)
        self.inner = inner
        self.r = r

    def _value(self, x):
        return self.inner._value(x) ** self.r

    def value_batch(self, X):
        return self.inner.value_batch(X) ** self.r

    def _grad(self, x):
        base = self.inner._value(x)
        if base <= 0:
            return np.zeros(self.dim)
        return self.r * base ** (self.r - 1.0) * self.inner._grad(x)

    def _kernel_basis(self):
        return self.inner.kernel_basis()

    def children(self):
        return [self.inner]

    def params_json(self):
        return {"r": self.r}


class Scale(HomFun):
    """c * f for c > 0; scales values, never arguments."""

    op_name = "scale"

    def __init__(self, inner, c):
        c = float(c)
        if c <= 0 or not math.isfinite(c):
            raise ValueError("scale factor must be positive and finite")
        super().__init__(inner.dim, inner.degree)
        self.inner = inner
        self.c = c

    def _value(self, x):
        return self.c * self.inner._value(x)

    def value_batch(self, X):
        return self.c * self.inner.value_batch(X)

    def _grad(self, x):
        return self.c * self.inner._grad(x)

    def _kernel_basis(self):
        return self.inner.kernel_basis()

    def encode_epi(self, model, xvars, tterms, tconst):
        scaled = [(j, c / self.c) for j, c in tterms]
        self.inner.encode_epi(model, xvars, scaled, tconst / self.c)

    def children(self):
        return [self.inner]

    def params_json(self):
        return {"c": self.c}


def _maps_for(inners, maps, dim):
    out = []
    for g, m in zip(inners, maps):
        m = as_map(m)
        if m.cols != dim or m.rows != g.dim:
            raise DimensionMismatch("composite map shape mismatch")
        out.append(m)
    return out


def _check_monotone(outer, rng_seed=7, samples=1000):
    rng = np.random.default_rng(rng_seed)
    for _ in range(samples):
        t = rng.standard_normal(outer.dim) * rng.uniform(0.5, 2.0)
        if abs(outer(t) - outer(np.abs(t))) > 1e-9 * max(1.0, outer(np.abs(t))):
            raise ValueError("outer norm is not monotonic (sampled violation)")


class CompositeNorm(HomFun):
    """x -> outer(g_1(A_1 x), ..., g_d(A_d x)) for a monotone outer norm."""

    op_name = "composite_norm"

    def __init__(self, outer, inners, maps, check_monotone=True):
        if outer.dim != len(inners):
            raise DimensionMismatch("outer norm dimension must match inner count")
        if any(g.degree != 1.0 for g in inners) or outer.degree != 1.0:
            raise ValueError("composite norms require one-homogeneous pieces")
        dims = {as_map(m).cols for m in maps}
        if len(dims) != 1:
            raise DimensionMismatch("all maps must share the ambient dimension")
        dim = dims.pop()
        super().__init__(dim, 1.0)
        self.outer = outer
        self.inners = list(inners)
        self.maps = _maps_for(inners, maps, dim)
        if check_monotone:
            _check_monotone(outer)

    def _inner_values(self, x):
        return np.array([g._value(m.apply(x)) for g, m in zip(self.inners, self.maps)])

    def _value(self, x):
        return self.outer._value(self._inner_values(x))

    def value_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        cols = []
        for g, m in zip(self.inners, self.maps):
            if isinstance(m, CoordSelect):
                cols.append(g.value_batch(X[:, m.idx]))
            else:
                cols.append(g.value_batch(X @ m.mat.T))
        return self.outer.value_batch(np.column_stack(cols))

    def _grad(self, x):
        vals = self._inner_values(x)
        u = self.outer._grad(vals)
        out = np.zeros(self.dim)
        for ui, g, m in zip(u, self.inners, self.maps):
            if ui != 0.0:
                out += ui * m.apply_transpose(g._grad(m.apply(x)))
        return out

    def _kernel_basis(self):
        rows = []
        for g, m in zip(self.inners, self.maps):
            sup = g.support_basis()
            if sup.shape[1]:
                rows.append(sup.T @ m.mat)
        if not rows:
            return np.eye(self.dim)
        return null_basis(np.vstack(rows))

    def encode_epi(self, model, xvars, tterms, tconst):
        vals = model.add_vars(len(self.inners), lb=0.0)
        for v, g, m in zip(vals, self.inners, self.maps):
            z = model.add_vars(g.dim)
            mat = m.mat
            for r in range(g.dim):
                model.add_eq(list(xvars) + [z[r]], list(mat[r]) + [-1.0], 0.0)
            g.encode_epi(model, z, [(v, 1.0)], 0.0)
        self.outer.encode_epi(model, vals, tterms, tconst)

    def children(self):
        return [self.outer] + self.inners

    def params_json(self):
        return {"maps": [[[float(v) for v in row] for row in m.mat] for m in self.maps]}


class CompositeDualNorm(HomFun):
    """Dual of a composite norm: min over decompositions sum A_i^T x_i = x of
    the dual outer norm applied to (dual g_i)(x_i)."""

    op_name = "composite_dual"

    def __init__(self, outer, inners, maps, check=True):
        if check and any(not g.is_positive_definite() for g in inners):
            raise ValueError(
                "composite dual requires positive definite inner functions")
        dims = {as_map(m).cols for m in maps}
        if len(dims) != 1:
            raise DimensionMismatch("all maps must share the ambient dimension")
        dim = dims.pop()
        super().__init__(dim, 1.0)
        self.outer = outer
        self.inners = list(inners)
        self.maps = _maps_for(inners, maps, dim)
        self.dual_outer = dual(outer)
        self.dual_inners = [dual(g) for g in inners]
        stacked = np.hstack([m.mat.T for m in self.maps])
        self._span = range_basis(stacked)
        self._unique_decomp = (np.linalg.matrix_rank(stacked)
                               == stacked.shape[1])

    def _decompose_unique(self, x):
        stacked = np.hstack([m.mat.T for m in self.maps])
        sol, *_ = np.linalg.lstsq(stacked, x, rcond=None)
        parts = []
        ofs = 0
        for g in self.inners:
            parts.append(sol[ofs:ofs + g.dim])
            ofs += g.dim
        return parts

    def _value(self, x):
        if self._unique_decomp:
            parts = self._decompose_unique(x)
            vals = np.array([dg._value(p) for dg, p in zip(self.dual_inners, parts)])
            return self.dual_outer._value(vals)
        try:
            return self._value_lp(x)
        except NotPolyhedral:
            return self._value_smooth(x)

    def _value_lp(self, x):
        model = LPModel()
        t = model.add_vars(1, lb=0.0)[0]
        self._encode_decomposition(model, None, x, [(t, 1.0)], 0.0)
        res = model.minimize({t: 1.0})
        if not res.optimal:
            raise ValueError("composite dual LP failed")
        return float(res.fun)

    def _encode_decomposition(self, model, xvars, xconst, tterms, tconst):
        """Constraints: exists x_i with sum A_i^T x_i = x and
        dual_outer(dual_g(x_i)) <= t. ``xvars`` or ``xconst`` gives x."""
        parts = [model.add_vars(g.dim) for g in self.inners]
        vals = model.add_vars(len(self.inners), lb=0.0)
        for v, dg, p in zip(vals, self.dual_inners, parts):
            dg.encode_epi(model, p, [(v, 1.0)], 0.0)
        Q = projector(self._span)
        if xvars is None:
            target = Q @ np.asarray(xconst, dtype=float)
        for i in range(self.dim):
            idx, coef = [], []
            for m, p in zip(self.maps, parts):
                col = m.mat[:, i]
                idx.extend(p)
                coef.extend(col)
            if xvars is None:
                model.add_eq(idx, coef, float(target[i]))
            else:
                model.add_eq(idx + list(xvars), coef + list(-Q[i]), 0.0)
        self.dual_outer.encode_epi(model, vals, tterms, tconst)

    def _value_smooth(self, x):
        # Iterative fallback for non-polyhedral inner duals; flagged approximate
        # with tolerance 1e-7.
        from scipy.optimize import minimize

        sizes = [g.dim for g in self.inners]
        total = sum(sizes)
        stacked = np.hstack([m.mat.T for m in self.maps])

        def split(z):
            parts = []
            ofs = 0
            for s in sizes:
                parts.append(z[ofs:ofs + s])
                ofs += s
            return parts

        def objective(z):
            vals = np.array([dg._value(p)
                             for dg, p in zip(self.dual_inners, split(z))])
            return self.dual_outer._value(vals)

        target = project(self._span, x)
        z0, *_ = np.linalg.lstsq(stacked, target, rcond=None)
        cons = {"type": "eq", "fun": lambda z: stacked @ z - target}
        res = minimize(objective, z0, constraints=[cons], method="SLSQP",
                       options={"maxiter": 500, "ftol": 1e-7})
        return float(objective(res.x))

    def _grad(self, x):
        if self._unique_decomp:
            parts = self._decompose_unique(x)
            vals = np.array([dg._value(p) for dg, p in zip(self.dual_inners, parts)])
            u = self.dual_outer._grad(vals)
            # with an injective stacked map, parts depend linearly on x through
            # the pseudo-inverse; for selector maps this is plain restriction
            stacked = np.hstack([m.mat.T for m in self.maps])
            pinv = np.linalg.pinv(stacked)
            chain = np.concatenate([ui * dg._grad(p)
                                    for ui, dg, p in zip(u, self.dual_inners, parts)])
            return pinv.T @ chain
        model = LPModel()
        t = model.add_vars(1, lb=0.0)[0]
        self._encode_decomposition(model, None, x, [(t, 1.0)], 0.0)
        res = model.minimize({t: 1.0})
        if not res.optimal:
            raise ValueError("composite dual LP failed")
        return project(self._span, res.eq_marginals[-self.dim:])

    def _kernel_basis(self):
        return CompositeNorm(self.outer, self.inners, self.maps,
                             check_monotone=False).kernel_basis()

    def encode_epi(self, model, xvars, tterms, tconst):
        self._encode_decomposition(model, xvars, None, tterms, tconst)

    def children(self):
        return [self.outer] + self.inners

    def params_json(self):
        return {"maps": [[[float(v) for v in row] for row in m.mat] for m in self.maps]}


class DualBall(HomFun):
    """Definitional dual via linear programming: sup{<y,x> : f(y)<=1, y ⟂ Ker f}.

    Used when no structural rewrite applies but f is polyhedral.
    """

    op_name = "dual_ball"

    def __init__(self, inner):
        if inner.degree != 1.0:
            raise ValueError("norm-like duality needs a one-homogeneous function")
        super().__init__(inner.dim, 1.0)
        self.inner = inner

    def _solve(self, x):
        model = LPModel()
        y = model.add_vars(self.dim)
        self.inner.encode_epi(model, y, [], 1.0)
        ker = self.inner.kernel_basis()
        for k in range(ker.shape[1]):
            model.add_eq(y, list(ker[:, k]), 0.0)
        res = model.maximize({y[i]: x[i] for i in range(self.dim)})
        if not res.optimal:
            raise ValueError("dual-ball LP failed (set may be unbounded)")
        return res

    def _value(self, x):
        return float(self._solve(x).fun)

    def _grad(self, x):
        return self._solve(x).x[: self.dim]

    def _kernel_basis(self):
        return self.inner.kernel_basis()

    def children(self):
        return [self.inner]


class NumericDual(HomFun):
    """Projected-ascent fallback dual for non-polyhedral trees.

    Maximizes <y, x> over {f <= 1} ∩ Ker(f)^perp by supergradient steps with
    radial retraction onto the unit level set; tolerance 1e-8, at most 10^4
    iterations.
    """

    op_name = "numeric_dual"

    def __init__(self, inner):
        if inner.degree != 1.0:
            raise ValueError("norm-like duality needs a one-homogeneous function")
        super().__init__(inner.dim, 1.0)
        self.inner = inner

    def _ascend(self, x):
        G = self.inner.support_basis()
        if G.shape[1] == 0:
            return np.zeros(self.dim), 0.0
        c = G.T @ x
        cnorm = np.linalg.norm(c)
        if cnorm == 0:
            return np.zeros(self.dim), 0.0

        def retract(xi):
            y = G @ xi
            v = self.inner._value(y)
            if v <= 0:
                return None
            return xi / v

        def grad_h(xi):
            return G.T @ self.inner._grad(G @ xi)

        xi = retract(c)
        if xi is None:
            xi = retract(np.ones(G.shape[1]))
            if xi is None:
                return np.zeros(self.dim), 0.0
        best = float(c @ xi)
        best_xi = xi.copy()
        stall = 0
        for k in range(1, NUMERIC_DUAL_MAX_ITERS + 1):
            # supergradient of the scale-invariant ratio <c, xi>/h(xi) at the
            # unit level: move along c minus its component on the level-set
            # normal, then retract radially
            direction = c - float(c @ xi) * grad_h(xi)
            dn = np.linalg.norm(direction)
            if dn <= 1e-16:
                break
            cand = retract(xi + (np.linalg.norm(xi) / math.sqrt(k))
                           * direction / dn)
            if cand is None:
                break
            xi = cand
            val = float(c @ xi)
            if val > best:
                improved = val - best > NUMERIC_DUAL_TOL * max(1.0, abs(best))
                best, best_xi = val, xi.copy()
                stall = 0 if improved else stall + 1
            else:
                stall += 1
            if stall > 300:
                break
        # simplex polish of the ratio around the incumbent
        from scipy.optimize import minimize

        def neg_ratio(xi):
            h = self.inner._value(G @ xi)
            if h <= 1e-14:
                return 0.0
            return -float(c @ xi) / h

        res = minimize(neg_ratio, best_xi, method="Nelder-Mead",
                       options={"maxiter": 2000, "xatol": 1e-12,
                                "fatol": 1e-14})
        if -res.fun > best:
            best = float(-res.fun)
            best_xi = res.x / self.inner._value(G @ res.x)
        return G @ best_xi, best

    def _value(self, x):
        return self._ascend(x)[1]

    def _grad(self, x):
        return self._ascend(x)[0]

    def _kernel_basis(self):
        return self.inner.kernel_basis()

    def children(self):
        return [self.inner]


class Opaque(HomFun):
    """Wrapper hiding the structure of a function (evaluation and kernel only).

    Forces downstream duality code onto the numeric fallback path; useful for
    exercising and testing that path.
    """

    op_name = "opaque"

    def __init__(self, inner):
        super().__init__(inner.dim, inner.degree)
        self.inner = inner

    def _value(self, x):
        return self.inner._value(x)

    def _grad(self, x):
        return self.inner._grad(x)

    def _kernel_basis(self):
        return self.inner.kernel_basis()

    def children(self):
        return [self.inner]


# ---------------------------------------------------------------------------
# Public constructors
# ---------------------------------------------------------------------------

def lp_norm(dim, p, w=None):
    """Weighted lp norm atom; p may be 1, inf, or any finite p >= 1."""
    if math.isinf(p):
        return WeightedLinf(dim, w)
    return WeightedLp(dim, p, w)


def weighted_lp(w, p):
    w = np.asarray(w, dtype=float).ravel()
    return lp_norm(len(w), p, w)


def linfty_max(dim, w=None):
    return WeightedLinf(dim, w)


def support_function(points):
    return MaxLinear(points)


def polytope_gauge(facet_normals):
    """Gauge max_i <a_i, x> of the polytope {x : <a_i, x> <= 1}."""
    return MaxLinear(facet_normals)


def pullback(f, bmap):
    return Pullback(f, as_map(bmap))


def pushforward(f, amap):
    return Pushforward(f, as_map(amap))


def power(f, r):
    r = float(r)
    if isinstance(f, Power):
        merged = f.r * r
        return f.inner if merged == 1.0 else Power(f.inner, merged)
    if r == 1.0:
        return f
    return Power(f, r)


def scale(f, c):
    c = float(c)
    if isinstance(f, Scale):
        merged = f.c * c
        return f.inner if merged == 1.0 else Scale(f.inner, merged)
    if c == 1.0:
        return f
    return Scale(f, c)


def composite_norm(outer, inners, maps, check_monotone=True):
    return CompositeNorm(outer, inners, maps, check_monotone=check_monotone)


def composite_dual(outer, inners, maps):
    """Dual of the composite norm outer(g_1(A_1 x), ..., g_d(A_d x))."""
    return CompositeDualNorm(outer, inners, maps)


# ---------------------------------------------------------------------------
# Duality transforms
# ---------------------------------------------------------------------------

def dual(f):
    """Norm-like dual of a one-homogeneous f, symbolic where possible."""
    if f.degree != 1.0:
        raise ValueError(f"dual is defined for degree 1, got {f.degree:g}")
    if isinstance(f, WeightedLp):
        return lp_norm(f.dim, conjugate_exponent(f.p), 1.0 / f.w)
    if isinstance(f, WeightedLinf):
        return WeightedLp(f.dim, 1.0, 1.0 / f.w)
    if isinstance(f, MaxLinear):
        return GaugeHull(f.points)
    if isinstance(f, GaugeHull):
        return MaxLinear(f.points)
    if isinstance(f, Scale):
        return scale(dual(f.inner), 1.0 / f.c)
    if isinstance(f, Pullback):
        # dual(f o B) is the pushforward of dual(f) along B^T provided
        # Ker(f) is contained in Ker(B^T)
        bt = f.bmap.mat.T
        ker = f.inner.kernel_basis()
        if ker.shape[1] == 0 or np.max(np.abs(bt @ ker)) <= 1e-12 * (
                1 + np.max(np.abs(bt))):
            return Pushforward(dual(f.inner), LinearMap(bt))
        return _fallback_dual(f)
    if isinstance(f, Pushforward):
        # dual of the projected infimal image is the pullback of dual(f)
        # along A^T provided Ker(f) is contained in Ker(A)
        ker = f.inner.kernel_basis()
        amat = f.amap.mat
        if ker.shape[1] == 0 or np.max(np.abs(amat @ ker)) <= 1e-12 * (
                1 + np.max(np.abs(amat))):
            return Pullback(dual(f.inner), LinearMap(amat.T))
        return _fallback_dual(f)
    if isinstance(f, CompositeNorm):
        return CompositeDualNorm(f.outer, f.inners, f.maps)
    if isinstance(f, CompositeDualNorm):
        return CompositeNorm(f.outer, f.inners, f.maps, check_monotone=False)
    if isinstance(f, (DualBall, NumericDual)):
        # involution: the dual of a definitional dual is the original function
        return f.inner
    return _fallback_dual(f)


def _fallback_dual(f):
    try:
        probe = LPModel()
        xv = probe.add_vars(f.dim)
        f.encode_epi(probe, xv, [], 1.0)
        return DualBall(f)
    except NotPolyhedral:
        return NumericDual(f)


def dual_definitional(f):
    """The dual evaluated from its definition (LP or projected ascent).

    Bypasses all structural rewrites; useful as an independent check of the
    closed forms.
    """
    if f.degree != 1.0:
        raise ValueError(f"dual is defined for degree 1, got {f.degree:g}")
    return _fallback_dual(f)


LEGENDRE_COEFF = "legendre"
POLARITY_COEFF = "polarity"


def transform_coefficient(kind, p):
    """Scalar coefficients relating Legendre/polarity transforms to powered duals."""
    if kind == LEGENDRE_COEFF:
        ps = conjugate_exponent(p)
        return (p - 1.0) / p ** ps
    if kind == POLARITY_COEFF:
        if p == 1.0:
            return 1.0   # limit convention (p-1)^(p-1) -> 1
        return (p - 1.0) ** (p - 1.0) / p ** p
    raise ValueError(kind)


def legendre(f):
    """Kernel-projected convex conjugate of a p-homogeneous f with p > 1.

    Returns a function of degree p* built from the powered dual; the degree-1
    conjugate is an indicator and is rejected.
    """
    p = f.degree
    if p <= 1.0:
        raise ValueError("legendre transform requires degree p > 1")
    ps = conjugate_exponent(p)
    base = dual(power(f, 1.0 / p))
    return scale(power(base, ps), transform_coefficient(LEGENDRE_COEFF, p))


def polarity(f):
    """Kernel-projected polarity transform; degree is preserved."""
    p = f.degree
    if p < 1.0:
        raise ValueError("polarity transform requires degree p >= 1")
    base = dual(power(f, 1.0 / p))
    return scale(power(base, p), transform_coefficient(POLARITY_COEFF, p))


def legendre_direct(f, x, restarts=8, seed=0):
    """Numeric sup_{y ⟂ Ker f} <x,y> - f(y), for cross-checking the transform."""
    from scipy.optimize import minimize

    x = _check_dim(f, x)
    G = f.support_basis()
    if G.shape[1] == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    c = G.T @ x
    best = 0.0
    for k in range(restarts):
        xi0 = c if k == 0 else rng.standard_normal(G.shape[1])
        res = minimize(lambda xi: f._value(G @ xi) - c @ xi, xi0,
                       method="Nelder-Mead",
                       options={"maxiter": 4000, "xatol": 1e-10, "fatol": 1e-12})
        best = max(best, float(-res.fun))
    return best


def polarity_direct(f, x, restarts=8, seed=0):
    """Numeric sup_{y ⟂ Ker f, f(y) > 0} (<x,y> - 1)/f(y)."""
    from scipy.optimize import minimize

    x = _check_dim(f, x)
    G = f.support_basis()
    if G.shape[1] == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    big = 1e8

    def neg_obj(xi):
        y = G @ xi
        if np.linalg.norm(y) > 1e12:
            return big
        fy = f._value(y)
        if fy <= 1e-14:
            return big
        return -(x @ y - 1.0) / fy

    best = 0.0
    for k in range(restarts):
        xi0 = (G.T @ x) + 0.5 * rng.standard_normal(G.shape[1]) if k else (G.T @ x)
        if np.linalg.norm(xi0) == 0:
            xi0 = np.ones(G.shape[1])
        res = minimize(neg_obj, xi0, method="Nelder-Mead",
                       options={"maxiter": 6000, "xatol": 1e-10, "fatol": 1e-13})
        best = max(best, float(-res.fun))
        if f.degree == 1.0:
            # supremum is approached along rays; rescan over large radii
            for t in (1e3, 1e6):
                res2 = minimize(neg_obj, t * res.x / max(np.linalg.norm(res.x), 1e-12),
                                method="Nelder-Mead",
                                options={"maxiter": 4000, "xatol": 1e-8})
                best = max(best, float(-res2.fun))
    return best


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def from_json(node):
    op = node["op"]
    params = node.get("params", {})
    args = [from_json(a) for a in node.get("args", [])]
    if op == "weighted_lp":
        return WeightedLp(len(params["w"]), params["p"], params["w"])
    if op == "linfty_max":
        return WeightedLinf(len(params["w"]), params["w"])
    if op == "support_function":
        return MaxLinear(params["points"])
    if op == "gauge_hull":
        return GaugeHull(params["points"])
    if op == "pullback":
        return Pullback(args[0], LinearMap(params["matrix"]))
    if op == "pushforward":
        return Pushforward(args[0], LinearMap(params["matrix"]))
    if op == "power":
        return Power(args[0], params["r"])
    if op == "scale":
        return Scale(args[0], params["c"])
    if op == "composite_norm":
        return CompositeNorm(args[0], args[1:], params["maps"],
                             check_monotone=False)
    if op == "composite_dual":
        return CompositeDualNorm(args[0], args[1:], params["maps"], check=False)
    if op == "dual_ball":
        return DualBall(args[0])
    if op == "numeric_dual":
        return NumericDual(args[0])
    if op == "opaque":
        return Opaque(args[0])
    raise ValueError(f"unknown op {op!r}")


def subgradient_any(f, x):
    """One element of the Clarke subdifferential of f at x.

    Tie handling is deterministic: sign(0) = 0 for separable atoms, first
    index for max-type atoms.
    """
    return f.grad(x)


def eval_fun(f, x):
    return f(x)

"""Finite descriptions of subdifferential polytopes and eigenpair certificates.

A description is a compact convex polytope given in one of several structured
forms. Membership, intersection feasibility, and set-to-set distances reduce
to small linear programs, so certificates are decided by LP feasibility with
a residual (the l-infinity distance between the two sets) reported whenever
the answer is "no".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import homfun as hf
from .linalg import LinearMap, project
from .lpmodel import LPModel, NotPolyhedral

FEAS_TOL = 1e-9


class UnsupportedSubdifferential(Exception):
    """The expression has no finite subdifferential description at this point."""


class InfeasibleEigenpair(Exception):
    pass


# ---------------------------------------------------------------------------
# Description forms
# ---------------------------------------------------------------------------

class SubdiffSet:
    dim: int

    def encode(self, model, uvars, sidx, smul):
        """Constrain u to lie in (s * smul) . Set, where s is the variable
        ``sidx`` (or the constant 1 when sidx is None)."""
        raise NotImplementedError

    def product_range(self, x):
        """Range (lo, hi) of <v, x> over the set (for Euler-identity checks)."""
        lo = self._extremize(x, maximize=False)
        hi = self._extremize(x, maximize=True)
        return lo, hi

    def _extremize(self, x, maximize):
        model = LPModel()
        u = model.add_vars(self.dim)
        self.encode(model, u, None, 1.0)
        cost = {u[i]: x[i] for i in range(self.dim)}
        res = model.maximize(cost) if maximize else model.minimize(cost)
        if not res.optimal:
            raise ValueError("description produced an empty or unbounded set")
        return float(res.fun)


def _term(sidx, smul, const_if_none):
    """Helper: represent s*smul either as a (var, coef) or a constant."""
    if sidx is None:
        return None, smul * const_if_none
    return (sidx, smul * const_if_none), 0.0


@dataclass
class Singleton(SubdiffSet):
    v: np.ndarray

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float).ravel()
        self.dim = self.v.shape[0]

    def encode(self, model, uvars, sidx, smul):
        for i in range(self.dim):
            if sidx is None:
                model.add_eq([uvars[i]], [1.0], smul * self.v[i])
            else:
                model.add_eq([uvars[i], sidx], [1.0, -smul * self.v[i]], 0.0)


@dataclass
class Box(SubdiffSet):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float).ravel()
        self.hi = np.asarray(self.hi, dtype=float).ravel()
        self.dim = self.lo.shape[0]

    def encode(self, model, uvars, sidx, smul):
        for i in range(self.dim):
            if sidx is None:
                model.set_bounds(uvars[i], lb=smul * self.lo[i],
                                 ub=smul * self.hi[i])
            else:
                model.add_le([uvars[i], sidx], [1.0, -smul * self.hi[i]], 0.0)
                model.add_le([uvars[i], sidx], [-1.0, smul * self.lo[i]], 0.0)

    def product_range(self, x):
        terms_lo = np.minimum(self.lo * x, self.hi * x)
        terms_hi = np.maximum(self.lo * x, self.hi * x)
        return float(terms_lo.sum()), float(terms_hi.sum())


@dataclass
class Hull(SubdiffSet):
    vertices: np.ndarray

    def __post_init__(self):
        self.vertices = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        self.dim = self.vertices.shape[1]

    def encode(self, model, uvars, sidx, smul):
        k = len(self.vertices)
        beta = model.add_vars(k, lb=0.0)
        if sidx is None:
            model.add_eq(beta, [1.0] * k, smul)
        else:
            model.add_eq(list(beta) + [sidx], [1.0] * k + [-smul], 0.0)
        for i in range(self.dim):
            model.add_eq(list(beta) + [uvars[i]],
                         list(self.vertices[:, i]) + [-1.0], 0.0)

    def product_range(self, x):
        vals = self.vertices @ x
        return float(vals.min()), float(vals.max())


@dataclass
class AffineImage(SubdiffSet):
    mat: np.ndarray
    inner: SubdiffSet

    def __post_init__(self):
        self.mat = np.atleast_2d(np.asarray(self.mat, dtype=float))
        self.dim = self.mat.shape[0]

    def encode(self, model, uvars, sidx, smul):
        z = model.add_vars(self.inner.dim)
        self.inner.encode(model, z, sidx, smul)
        for i in range(self.dim):
            model.add_eq(list(z) + [uvars[i]], list(self.mat[i]) + [-1.0], 0.0)

    def product_range(self, x):
        return self.inner.product_range(self.mat.T @ np.asarray(x, dtype=float))


@dataclass
class Scaled(SubdiffSet):
    c: float
    inner: SubdiffSet

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("scaling of a subdifferential set must be >= 0")
        self.dim = self.inner.dim

    def encode(self, model, uvars, sidx, smul):
        self.inner.encode(model, uvars, sidx, smul * self.c)

    def product_range(self, x):
        lo, hi = self.inner.product_range(x)
        return self.c * lo, self.c * hi


@dataclass
class MinkowskiSum(SubdiffSet):
    parts: list

    def __post_init__(self):
        self.dim = self.parts[0].dim

    def encode(self, model, uvars, sidx, smul):
        part_vars = []
        for part in self.parts:
            z = model.add_vars(self.dim)
            part.encode(model, z, sidx, smul)
            part_vars.append(z)
        for i in range(self.dim):
            idx = [pv[i] for pv in part_vars] + [uvars[i]]
            coef = [1.0] * len(part_vars) + [-1.0]
            model.add_eq(idx, coef, 0.0)

    def product_range(self, x):
        los, his = zip(*(p.product_range(x) for p in self.parts))
        return float(sum(los)), float(sum(his))


@dataclass
class DualFace(SubdiffSet):
    """Subdifferential of a dual-type function D(psi) at y: the face
    {v : psi(v) <= 1, v ⟂ Ker(psi), <v, y> = value} of the dual unit ball.

    The face equality carries a small slack absorbing the LP solver's value
    noise (kept below the 1e-9 Euler-identity budget)."""

    psi: "hf.HomFun"
    y: np.ndarray
    value: float
    face_tol: float = 1e-10

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.dim = self.psi.dim

    def encode(self, model, uvars, sidx, smul):
        if sidx is None:
            self.psi.encode_epi(model, uvars, [], smul)
        else:
            self.psi.encode_epi(model, uvars, [(sidx, smul)], 0.0)
        ker = self.psi.kernel_basis()
        for k in range(ker.shape[1]):
            model.add_eq(uvars, list(ker[:, k]), 0.0)
        # <v, y> >= s*(value - face_tol); the ball constraint gives <=
        slackval = self.value - self.face_tol * max(1.0, abs(self.value))
        if sidx is None:
            model.add_le(uvars, list(-self.y), -smul * slackval)
        else:
            model.add_le(list(uvars) + [sidx],
                         list(-self.y) + [smul * slackval], 0.0)


# ---------------------------------------------------------------------------
# subdiff_at: structural subdifferential descriptions
# ---------------------------------------------------------------------------

ZERO_TOL = 1e-11


def subdiff_at(f, x, tol=1e-9):
    """Exact polytope description of the subdifferential of f at x.

    Supported: polyhedral atoms, smooth lp atoms away from their kernel,
    pullbacks, scalings, powers, weighted-l1 composites, and dual-type nodes
    of polyhedral functions. Raises UnsupportedSubdifferential otherwise.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != f.dim:
        raise hf.DimensionMismatch("point dimension mismatch")
    scale_ref = max(1.0, float(np.max(np.abs(x))))

    if isinstance(f, hf.WeightedLp):
        if f.p == 1.0:
            lo = np.where(x > ZERO_TOL * scale_ref, f.w,
                          np.where(x < -ZERO_TOL * scale_ref, -f.w, -f.w))
            hi = np.where(x > ZERO_TOL * scale_ref, f.w,
                          np.where(x < -ZERO_TOL * scale_ref, -f.w, f.w))
            return Box(lo, hi)
        if f(x) <= 0:
            raise UnsupportedSubdifferential(
                "smooth lp atom at a kernel point has no polyhedral description")
        return Singleton(f.grad(x))

    if isinstance(f, hf.WeightedLinf):
        z = f.w * np.abs(x)
        top = float(np.max(z))
        if top <= ZERO_TOL * scale_ref:
            verts = [w * e for w, e in zip(f.w, np.eye(f.dim))]
            verts += [-v for v in verts]
            return Hull(np.array(verts))
        tied = np.nonzero(z >= top - tol * max(1.0, top))[0]
        verts = []
        for i in tied:
            e = np.zeros(f.dim)
            e[i] = f.w[i] * np.sign(x[i])
            verts.append(e)
        return Hull(np.array(verts))

    if isinstance(f, hf.MaxLinear):
        return Hull(f.tied_points(x, tol=tol))

    if isinstance(f, hf.GaugeHull):
        return DualFace(hf.MaxLinear(f.points), x, f(x))

    if isinstance(f, hf.DualBall):
        return DualFace(f.inner, x, f(x))

    if isinstance(f, hf.Pullback):
        inner = subdiff_at(f.inner, f.bmap.apply(x), tol=tol)
        return AffineImage(f.bmap.mat.T, inner)

    if isinstance(f, hf.Pushforward):
        ker = f.inner.kernel_basis()
        amat = f.amap.mat
        if ker.shape[1] and np.max(np.abs(amat @ ker)) > 1e-12 * (
                1 + np.max(np.abs(amat))):
            raise UnsupportedSubdifferential(
                "pushforward without the kernel condition")
        psi = hf.Pullback(hf.dual(f.inner), LinearMap(amat.T))
        if not psi.polyhedral():
            raise UnsupportedSubdifferential("pushforward of a non-polyhedral dual")
        return DualFace(psi, x, f(x))

    if isinstance(f, hf.Scale):
        return Scaled(f.c, subdiff_at(f.inner, x, tol=tol))

    if isinstance(f, hf.Power):
        base = f.inner(x)
        if base > 0:
            factor = f.r * base ** (f.r - 1.0)
            return Scaled(factor, subdiff_at(f.inner, x, tol=tol))
        if f.degree > 1.0:
            return Singleton(np.zeros(f.dim))
        raise UnsupportedSubdifferential("power node at a kernel point")

    if isinstance(f, hf.CompositeNorm):
        if isinstance(f.outer, hf.WeightedLp) and f.outer.p == 1.0:
            parts = []
            for wi, g, m in zip(f.outer.w, f.inners, f.maps):
                inner = subdiff_at(g, m.apply(x), tol=tol)
                parts.append(Scaled(wi, AffineImage(m.mat.T, inner)))
            return MinkowskiSum(parts)
        raise UnsupportedSubdifferential(
            "composite subdifferentials implemented for weighted-l1 outer norms")

    if isinstance(f, hf.CompositeDualNorm):
        primal = hf.CompositeNorm(f.outer, f.inners, f.maps, check_monotone=False)
        if not primal.polyhedral():
            raise UnsupportedSubdifferential("composite dual of non-polyhedral parts")
        return DualFace(primal, x, f(x))

    raise UnsupportedSubdifferential(
        f"no finite description for {type(f).__name__}")


def contains(desc, v, tol=FEAS_TOL):
    """Decide v in desc by linear feasibility."""
    v = np.asarray(v, dtype=float).ravel()
    model = LPModel()
    u = model.add_vars(desc.dim)
    t = model.add_vars(1, lb=0.0)[0]
    desc.encode(model, u, None, 1.0)
    for i in range(desc.dim):
        model.add_le([u[i], t], [1.0, -1.0], v[i])
        model.add_le([u[i], t], [-1.0, -1.0], -v[i])
    res = model.minimize({t: 1.0})
    if not res.optimal:
        return False
    return res.fun <= tol


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

@dataclass
class EigenCertificate:
    lam: float
    x: np.ndarray
    feasible: bool
    witness: np.ndarray | None
    residual: float

    def to_json(self):
        return {
            "lambda": float(self.lam),
            "x": [float(v) for v in np.asarray(self.x).ravel()],
            "feasible": bool(self.feasible),
            "witness": None if self.witness is None
            else [float(v) for v in np.asarray(self.witness).ravel()],
            "residual": float(self.residual),
        }


def pair_kernel_basis(f, g):
    """Orthonormal basis of Ker(f) + Ker(g)."""
    from .linalg import range_basis
    stacked = np.hstack([f.kernel_basis(), g.kernel_basis()])
    if stacked.shape[1] == 0:
        return stacked
    return range_basis(stacked)


def verify_eigenpair(f, g, lam, x, tol=FEAS_TOL, modulo_kernels=False):
    """Certificate for 0 in subdiff(f)(x) - lam * subdiff(g)(x).

    Solves the l-infinity distance LP between the two subdifferential
    polytopes; feasible iff the distance is within tol.

    With ``modulo_kernels`` the inclusion is checked modulo Ker(f) + Ker(g),
    the quotient on which a pair with invariance directions carries its
    spectrum. Eigenvalue transfer onto a dual pair lands on that quotient
    whenever the original eigenvector is not orthogonal to the kernels; for
    kernel-free pairs the two relations coincide.
    """
    if lam < 0:
        raise ValueError("eigenvalues of nonnegative pairs are nonnegative")
    x = np.asarray(x, dtype=float).ravel()
    df = subdiff_at(f, x)
    dg = subdiff_at(g, x)
    model = LPModel()
    u1 = model.add_vars(f.dim)
    u2 = model.add_vars(f.dim)
    t = model.add_vars(1, lb=0.0)[0]
    df.encode(model, u1, None, 1.0)
    Scaled(float(lam) if lam > 0 else 0.0, dg).encode(model, u2, None, 1.0)
    kvars = []
    kbasis = None
    if modulo_kernels:
        kbasis = pair_kernel_basis(f, g)
        if kbasis.shape[1]:
            kvars = model.add_vars(kbasis.shape[1])
    for i in range(f.dim):
        idx = [u1[i], u2[i], t] + list(kvars)
        kcoef = list(-kbasis[i]) if kvars else []
        model.add_le(idx, [1.0, -1.0, -1.0] + kcoef, 0.0)
        model.add_le(idx, [-1.0, 1.0, -1.0] + [-c for c in kcoef], 0.0)
    res = model.minimize({t: 1.0})
    if not res.optimal:
        return EigenCertificate(lam, x, False, None, float("inf"))
    residual = float(res.fun)
    feasible = residual <= tol
    witness = res.x[: f.dim] if feasible else None
    return EigenCertificate(lam, x, feasible, witness, residual)


def transfer(f, g, lam, x, tol=FEAS_TOL, modulo_kernels=False):
    """Primal-to-dual eigenvector transfer.

    Given a feasible eigenpair (lam != 0, x) of (f, g) with degree-1 f and g,
    returns u in cone(subdiff f(x)) ∩ subdiff g(x); the pair (lam, u) then
    certifies on (dual(g), dual(f)) modulo Ker(f) + Ker(g), and with no
    projection at all when x is orthogonal to both kernels. The cone is
    encoded with one extra nonnegative scale variable; <u, x> = g(x) holds
    automatically by the Euler identity.

    ``modulo_kernels`` relaxes the cone matching by Ker(f) + Ker(g), which is
    what a second transfer from an already-quotiented dual eigenpair needs.
    """
    if lam == 0:
        raise ValueError("transfer requires a nonzero eigenvalue")
    if f.degree != 1.0 or g.degree != 1.0:
        raise ValueError("transfer requires one-homogeneous functions")
    x = np.asarray(x, dtype=float).ravel()
    if not verify_eigenpair(f, g, lam, x, tol=max(tol, FEAS_TOL),
                            modulo_kernels=modulo_kernels).feasible:
        raise InfeasibleEigenpair(
            f"({lam}, x) is not a feasible eigenpair of the input pair")
    df = subdiff_at(f, x)
    dg = subdiff_at(g, x)
    model = LPModel()
    u = model.add_vars(f.dim)
    w = model.add_vars(f.dim)
    s = model.add_vars(1, lb=0.0)[0]
    t = model.add_vars(1, lb=0.0)[0]
    dg.encode(model, u, None, 1.0)
    df.encode(model, w, s, 1.0)
    kvars = []
    kbasis = None
    if modulo_kernels:
        kbasis = pair_kernel_basis(f, g)
        if kbasis.shape[1]:
            kvars = model.add_vars(kbasis.shape[1])
    for i in range(f.dim):
        idx = [u[i], w[i], t] + list(kvars)
        kcoef = list(-kbasis[i]) if kvars else []
        model.add_le(idx, [1.0, -1.0, -1.0] + kcoef, 0.0)
        model.add_le(idx, [-1.0, 1.0, -1.0] + [-c for c in kcoef], 0.0)
    res = model.minimize({t: 1.0})
    if not res.optimal or res.fun > tol:
        raise InfeasibleEigenpair(
            f"no vector in cone(subdiff f) ∩ subdiff g at lambda={lam}")
    return res.x[: f.dim]


def scale_eigenvalue(lam, f_val, g_val, a=1.0, b=1.0, p=1.0, q=1.0):
    """Eigenvalue of (a f^p, b g^q) corresponding to (lam, x) of (f, g),
    where f_val = f(x) and g_val = g(x)."""
    if lam == 0:
        raise ValueError("defined for nonzero eigenvalues")
    if f_val <= 0 or g_val <= 0:
        raise ValueError("requires positive f(x) and g(x)")
    return (a * p * f_val ** (p - 1.0)) / (b * q * g_val ** (q - 1.0)) * lam


def polarity_factor(p, q):
    """Eigenvalue scaling between (f, g) and (polarity g, polarity f)."""
    lead = (p / q) ** (p - 2.0)
    num = 1.0 if q == 1.0 else (q - 1.0) ** (q - 1.0)
    den = 1.0 if p == 1.0 else (p - 1.0) ** (p - 1.0)
    return lead * num / den


def kernels_overlap(f, g):
    """True when Ker(f) ∩ Ker(g) is nontrivial; in that case every real
    number is an eigenvalue of the pair and enumeration is meaningless."""
    stacked = np.vstack([f.support_basis().T, g.support_basis().T])
    from .linalg import null_basis
    return null_basis(stacked).shape[1] > 0


def eigenvalue_at(f, g, x):
    """The only possible eigenvalue at x when g(x) != 0 (Euler identity)."""
    gx = g(x)
    if gx == 0:
        raise ValueError("g vanishes at x; eigenvalue is not pinned")
    return f.degree * f(x) / (g.degree * gx)

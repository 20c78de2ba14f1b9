"""Iterative solvers for extremal nonlinear eigenvalues plus desk-scale oracles.

``power_max`` runs a nonlinear power iteration for the largest ratio
f(x)/g(x) restricted to the orthogonal complement of Ker(g); the dual map of
g (one subgradient of the dual function) plays the role of the matrix apply.
``ratiodca_min`` drives the ratio down toward the smallest nonzero
eigenvalue, working against the kernel-quotient of g so the iteration cannot
collapse into Ker(f). ``grid_spectrum_2d`` brute-forces two-dimensional
spectra on the level set g = 1.

Solvers report, never assert, global optimality; certificates (when the
subdifferentials are polyhedral) confirm eigenpair-ness only.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import homfun as hf
from . import subdiff as sd
from .linalg import LinearMap, project
from .lpmodel import LPModel, NotPolyhedral


class RatioUndefined(ValueError):
    """f(x) = g(x) = 0: the ratio carries no information."""


class RatioInfinite(ValueError):
    """g(x) = 0 < f(x): the ratio diverges."""


def worker_count():
    """Worker cap from SPECTRADUAL_THREADS (defaults to 1)."""
    try:
        return max(1, int(os.environ.get("SPECTRADUAL_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class SolveConfig:
    max_iters: int = 200
    tol: float = 1e-10
    seed: int = 0
    restarts: int = 8

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class SpectrumEstimate:
    lam: float
    x: np.ndarray
    history: list
    certificate: sd.EigenCertificate | None = None

    @property
    def verified(self):
        return self.certificate is not None and self.certificate.feasible

    def to_json(self):
        return {
            "lambda": float(self.lam),
            "x": [float(v) for v in np.asarray(self.x).ravel()],
            "history": [float(v) for v in self.history],
            "certificate": None if self.certificate is None
            else self.certificate.to_json(),
            "verified": bool(self.verified),
        }


def rayleigh(f, g, x):
    """The ratio f(x)/g(x)."""
    fx, gx = f(x), g(x)
    if gx == 0:
        if fx == 0:
            raise RatioUndefined("f and g both vanish at x")
        raise RatioInfinite("g vanishes at x but f does not")
    return fx / gx


def _try_certificate(f, g, lam, x, tol=1e-8):
    try:
        return sd.verify_eigenpair(f, g, lam, x, tol=tol)
    except (sd.UnsupportedSubdifferential, NotPolyhedral):
        return None


def _starts(dim, support, cfg):
    """Deterministic start pool: all-ones, coordinate vectors, random signs."""
    rng = np.random.default_rng(cfg.seed)
    pool = [np.ones(dim)]
    pool.extend(np.eye(dim))
    for _ in range(cfg.restarts):
        pool.append(rng.choice([-1.0, 1.0], size=dim))
    out = []
    for x0 in pool:
        x0 = project(support, x0) if support.shape[1] < dim else x0
        if np.linalg.norm(x0) > 1e-12:
            out.append(x0)
    return out


def _merge_best(results, prefer_max):
    """Deterministic merge: best ratio first, then lexicographic eigenvector."""
    def key(est):
        vec = tuple(np.round(np.asarray(est.x), 12))
        return (est.lam, vec) if prefer_max else (-est.lam, vec)

    best = None
    for est in results:
        if best is None:
            best = est
            continue
        kb, ke = key(best), key(est)
        if ke[0] > kb[0] + 1e-15 or (abs(ke[0] - kb[0]) <= 1e-15 and ke[1] < kb[1]):
            best = est
    return best


def power_max(f, g, cfg=None):
    """Nonlinear power iteration for the largest ratio f/g on Ker(g)^perp.

    Each step maximizes <s, u> over {g <= 1} ∩ Ker(g)^perp for a subgradient
    s of f at the current iterate, which is exactly one subgradient of
    dual(g); the recorded ratio history is nondecreasing by construction.
    """
    cfg = cfg or SolveConfig()
    dualg = hf.dual(g)
    support = g.support_basis()

    def run_start(x0):
        gx = g(x0)
        if gx <= 1e-14:
            return None
        x = x0 / gx
        ratio = f(x)
        history = [ratio]
        for _ in range(cfg.max_iters):
            s = f.grad(x)
            if np.linalg.norm(s) <= 1e-15:
                break
            y = dualg.grad(s)
            gy = g(y)
            if gy <= 1e-14:
                break
            y = y / gy
            new_ratio = f(y)
            if new_ratio <= ratio * (1 + cfg.tol):
                if new_ratio > ratio:
                    ratio, x = new_ratio, y
                    history.append(ratio)
                break
            ratio, x = new_ratio, y
            history.append(ratio)
        return SpectrumEstimate(ratio, x, history)

    starts = _starts(f.dim, support, cfg)
    if f.dim <= 12:
        # the iteration is ascent to a local maximum; seed with the best
        # sign-pattern candidates
        kernel = g.kernel_basis()
        X = sign_vectors(f.dim)
        Xp = X - (X @ kernel) @ kernel.T if kernel.shape[1] else X
        keep = np.linalg.norm(Xp, axis=1) > 1e-9
        Xp = Xp[keep]
        fv = f.value_batch(Xp)
        lp_backed = isinstance(g, (hf.Pushforward, hf.GaugeHull, hf.DualBall,
                                   hf.CompositeDualNorm))
        if lp_backed or (isinstance(g, hf.Pullback) and isinstance(
                g.inner, (hf.Pushforward, hf.GaugeHull, hf.DualBall))):
            # rank by a cheap surrogate, then score a short list exactly
            order = np.argsort(-fv / np.linalg.norm(Xp, axis=1))
            shortlist = [Xp[j] for j in order[:40]]
        else:
            gv = g.value_batch(Xp)
            ok = gv > 1e-12
            order = np.argsort(-(fv[ok] / gv[ok]))
            shortlist = [Xp[ok][j] for j in order[:40]]
        scored = []
        for x0 in shortlist:
            gx = g(x0)
            if gx > 1e-12:
                scored.append((-f(x0) / gx, tuple(x0), x0))
        scored.sort(key=lambda rec: (rec[0], rec[1]))
        starts = [rec[2] for rec in scored[:5]] + starts
    if worker_count() > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=worker_count()) as pool:
            results = [r for r in pool.map(run_start, starts) if r is not None]
    else:
        results = [r for r in map(run_start, starts) if r is not None]
    if not results:
        raise ValueError("no usable start point (g vanishes on the start pool)")
    best = _merge_best(results, prefer_max=True)
    lam = sd.eigenvalue_at(f, g, best.x)
    best.lam = lam
    best.certificate = _try_certificate(f, g, lam, best.x)
    return best


def _quotient_against_kernel(g, kernel):
    """g quotiented by the subspace spanned by ``kernel`` columns:
    x -> inf over z in the subspace of g(x + z)."""
    if kernel.shape[1] == 0:
        return g
    from .linalg import null_basis
    rows = null_basis(kernel.T).T     # basis of the complement, as rows
    amap = LinearMap(rows)
    return hf.Pullback(hf.Pushforward(g, amap), amap)


def _inner_min_lp(f, gq, lam, s):
    """argmin f(u) - lam <s, u>  over  {gq(u) <= 1} via LP."""
    model = LPModel()
    u = model.add_vars(f.dim)
    tf = model.add_vars(1, lb=0.0)[0]
    f.encode_epi(model, u, [(tf, 1.0)], 0.0)
    gq.encode_epi(model, u, [], 1.0)
    cost = {tf: 1.0}
    for i in range(f.dim):
        cost[u[i]] = cost.get(u[i], 0.0) - lam * s[i]
    res = model.minimize(cost)
    if not res.optimal:
        return None
    return res.x[: f.dim]


def _inner_min_subgrad(f, gq, lam, s, x0, iters=5000, c=0.5):
    """Projected subgradient descent fallback with step c/sqrt(k)."""
    x = x0.copy()
    best, best_val = x.copy(), f(x) - lam * float(s @ x)
    for k in range(1, iters + 1):
        gsub = f.grad(x) - lam * s
        nrm = np.linalg.norm(gsub)
        if nrm <= 1e-14:
            break
        x = x - (c / math.sqrt(k)) * gsub / nrm
        v = gq(x)
        if v > 1.0:
            x = x / v
        val = f(x) - lam * float(s @ x)
        if val < best_val:
            best, best_val = x.copy(), val
    return best


def kernel_align(g, kernel, x):
    """argmin over z in span(kernel) of g(x + z); returns the shifted point."""
    if kernel.shape[1] == 0:
        return np.asarray(x, dtype=float)
    x = np.asarray(x, dtype=float)
    try:
        model = LPModel()
        y = model.add_vars(g.dim)
        c = model.add_vars(kernel.shape[1])
        t = model.add_vars(1, lb=0.0)[0]
        for i in range(g.dim):
            model.add_eq([y[i]] + list(c), [1.0] + list(-kernel[i]), x[i])
        g.encode_epi(model, y, [(t, 1.0)], 0.0)
        res = model.minimize({t: 1.0})
        if res.optimal:
            return res.x[: g.dim]
    except NotPolyhedral:
        pass
    from scipy.optimize import minimize

    res = minimize(lambda cc: g(x + kernel @ cc), np.zeros(kernel.shape[1]),
                   method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14})
    return x + kernel @ res.x


def ratiodca_min(f, g, cfg=None):
    """Ratio-minimizing DC iteration targeting the smallest nonzero eigenvalue.

    Works with the kernel-quotient of g so the ratio stays bounded away from
    the trivial zero eigenvalue; the history is nonincreasing. The final
    point is realigned to a minimizer of g over its kernel coset, where the
    original pair (f, g) admits the same eigenvalue, and certified there.
    """
    cfg = cfg or SolveConfig()
    kernel = f.kernel_basis()
    gq = _quotient_against_kernel(g, kernel)
    support = f.support_basis()
    lp_ok = f.polyhedral() and gq.polyhedral()
    starts = _starts(f.dim, support, cfg)
    if f.dim <= 12:
        # descent is local; seed with the best sign-pattern candidates,
        # preranked by the cheap kernel-projected surrogate of the quotient
        X = sign_vectors(f.dim)
        Xp = X - (X @ kernel) @ kernel.T if kernel.shape[1] else X
        fv, gv = f.value_batch(X), g.value_batch(Xp)
        ok = (gv > 1e-12) & (fv > 1e-12)
        Xok = X[ok]
        order = np.argsort(fv[ok] / gv[ok], kind="stable")
        short = [Xok[j] for j in order[:40]]
        scored = []
        for x0 in short:
            gqv = gq(x0)
            if gqv > 1e-12:
                scored.append((f(x0) / gqv, tuple(x0), x0))
        scored.sort(key=lambda rec: (rec[0], rec[1]))
        starts = [rec[2] for rec in scored[:5]] + starts
    results = []
    for x0 in starts:
        if gq(x0) <= 1e-14 or f(x0) <= 1e-14:
            continue
        x = x0 / gq(x0)
        ratio = f(x)
        history = [ratio]
        for _ in range(cfg.max_iters):
            s = gq.grad(x)
            u = _inner_min_lp(f, gq, ratio, s) if lp_ok else \
                _inner_min_subgrad(f, gq, ratio, s, x)
            if u is None:
                break
            gu = gq(u)
            if gu <= 1e-14:
                break
            u = u / gu
            new_ratio = f(u)
            if new_ratio >= ratio * (1 - cfg.tol):
                if new_ratio < ratio:
                    ratio, x = new_ratio, u
                    history.append(ratio)
                break
            ratio, x = new_ratio, u
            history.append(ratio)
        results.append(SpectrumEstimate(ratio, x, history))
    if not results:
        raise ValueError("no usable start point outside Ker(f)")
    best = _merge_best(results, prefer_max=False)
    aligned = kernel_align(g, kernel, best.x)
    lam = sd.eigenvalue_at(f, g, aligned)
    best.x = aligned
    best.lam = lam
    best.certificate = _try_certificate(f, g, lam, aligned)
    return best


def grid_spectrum_2d(f, g, resolution=720, refine_tol=1e-12, cert_tol=1e-8):
    """Candidate eigenpairs of a two-dimensional pair by angular search.

    Samples the level set g = 1, refines local extrema of the restricted
    ratio by golden-section search, and certifies candidates whenever the
    subdifferentials admit finite descriptions. Returns a sorted list of
    (lambda, x) pairs (deduplicated by eigenvalue and direction).
    """
    if f.dim != 2 or g.dim != 2:
        raise ValueError("grid search is two-dimensional only")
    if f.degree != g.degree:
        raise ValueError("grid search expects matching homogeneity degrees")

    def point(theta):
        d = np.array([math.cos(theta), math.sin(theta)])
        gval = g(d)
        if gval <= 1e-14:
            return None
        return d / gval ** (1.0 / g.degree)

    def ratio(theta):
        pt = point(theta)
        return -math.inf if pt is None else f(pt)

    thetas = np.linspace(0.0, math.pi, resolution, endpoint=False)
    vals = np.array([ratio(t) for t in thetas])
    if not np.any(np.isfinite(vals)):
        return []

    span = vals.max() - vals.min()
    if span <= 1e-12 * max(1.0, abs(vals.max())):
        pt = point(thetas[0])
        return [(float(vals[0]), pt)]

    def refine(lo, hi, sign):
        phi = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c = b - phi * (b - a)
        d = a + phi * (b - a)
        fc, fd = sign * ratio(c), sign * ratio(d)
        while b - a > refine_tol:
            if fc >= fd:
                b, d, fd = d, c, fc
                c = b - phi * (b - a)
                fc = sign * ratio(c)
            else:
                a, c, fc = c, d, fd
                d = a + phi * (b - a)
                fd = sign * ratio(d)
        t = 0.5 * (a + b)
        return t, ratio(t)

    found = []
    n = resolution
    for j in range(n):
        prev_v, cur_v, next_v = vals[(j - 1) % n], vals[j], vals[(j + 1) % n]
        lo = thetas[(j - 1) % n] if j > 0 else thetas[0] - math.pi / n
        hi = thetas[(j + 1) % n] if j < n - 1 else thetas[-1] + math.pi / n
        if cur_v >= prev_v and cur_v >= next_v:
            found.append(refine(lo, hi, +1.0))
        if cur_v <= prev_v and cur_v <= next_v:
            found.append(refine(lo, hi, -1.0))

    out = []
    for theta, lam in sorted(found, key=lambda p: p[1]):
        pt = point(theta)
        if pt is None:
            continue
        dup = False
        for lam0, pt0 in out:
            if abs(lam - lam0) <= 1e-9 * max(1.0, abs(lam0)) and (
                    np.linalg.norm(pt - pt0) <= 1e-6
                    or np.linalg.norm(pt + pt0) <= 1e-6):
                dup = True
                break
        if not dup:
            out.append((float(lam), pt))
    deduped = []
    for lam, pt in out:
        if any(abs(lam - l0) <= 1e-8 * max(1.0, abs(l0)) for l0, _ in deduped):
            continue
        deduped.append((lam, pt))
    return deduped


def certified_candidates(f, g, vectors, tol=1e-8, lam_filter=None):
    """Certify eigenpairs among explicit candidate vectors.

    For equal homogeneity degrees the eigenvalue at a candidate x with
    g(x) != 0 is pinned by the Euler identity to f(x)/g(x); each surviving
    candidate is checked by the feasibility LP. ``lam_filter`` (lo, hi)
    skips candidates whose pinned eigenvalue falls outside the window.
    """
    X = np.atleast_2d(np.asarray(vectors, dtype=float))
    fv = f.value_batch(X)
    gv = g.value_batch(X)
    out = []
    for x, fx, gx in zip(X, fv, gv):
        if gx <= 1e-14:
            continue
        lam = f.degree * fx / (g.degree * gx)
        if lam <= 1e-14:
            continue
        if lam_filter is not None and not (lam_filter[0] <= lam <= lam_filter[1]):
            continue
        cert = _try_certificate(f, g, lam, x, tol=tol)
        if cert is not None and cert.feasible:
            out.append((float(lam), x, cert))
    out.sort(key=lambda rec: (rec[0], tuple(np.round(rec[1], 12))))
    return out


def sign_vectors(dim, nonneg_lead=True):
    """All vectors in {-1, 0, 1}^dim, nonzero, first nonzero entry +1."""
    grids = np.meshgrid(*([np.array([-1.0, 0.0, 1.0])] * dim), indexing="ij")
    X = np.stack([gr.ravel() for gr in grids], axis=1)
    keep = []
    for row in X:
        nz = np.nonzero(row)[0]
        if nz.size == 0:
            continue
        if nonneg_lead and row[nz[0]] < 0:
            continue
        keep.append(row)
    return np.array(keep)

"""Property suites exercising the spectral-duality identities end to end.

Each suite returns a list of check records {name, passed, lhs, rhs, tol};
the command-line selftest and the acceptance test module both run them, at
possibly different instance counts. All randomness flows from one seed.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import convbody as cb
from . import eigsolve as es
from . import graphlap as gl
from . import homfun as hf
from . import instances as inst
from . import subdiff as sd


def check(name, lhs, rhs, tol):
    lhs, rhs = float(lhs), float(rhs)
    return {"name": name, "passed": bool(abs(lhs - rhs) <= tol),
            "lhs": lhs, "rhs": rhs, "tol": tol}


def check_flag(name, passed, note=""):
    return {"name": name, "passed": bool(passed), "lhs": note, "rhs": "",
            "tol": 0.0}


# ---------------------------------------------------------------------------
# 1. involution of the norm-like dual
# ---------------------------------------------------------------------------

def suite_involution(seed=0, n_points=100, tol=1e-8, cross_points=25):
    rng = np.random.default_rng(seed)
    checks = []
    for name, f in inst.homfun_family(seed):
        ddf = hf.dual(hf.dual(f))
        X = inst.sample_points(rng, f.dim, n_points)
        err = max(abs(ddf(x) - f(x)) for x in X)
        checks.append(check(f"involution:{name}", err, 0.0, tol))
        # independent cross-check: closed-form dual vs definitional dual
        df = hf.dual(f)
        if not isinstance(df, (hf.NumericDual, hf.DualBall)):
            dref = hf.dual_definitional(f)
            pts = X[:cross_points]
            cerr = max(abs(df(x) - dref(x)) for x in pts)
            cross_tol = tol if isinstance(dref, hf.DualBall) else 1e-6
            checks.append(check(f"dual-definitional:{name}", cerr, 0.0,
                                cross_tol))
    return checks


# ---------------------------------------------------------------------------
# 2. spectral duality: candidate eigenpairs transfer with the same eigenvalue
# ---------------------------------------------------------------------------

_PAIR_CYCLE = [(1, 1), (1, math.inf), (math.inf, 1), (math.inf, math.inf)]


def suite_spectral_duality(seed=0, graphs=50, nmax=6, tol=1e-8):
    rng = np.random.default_rng(seed)
    checks = []
    failures = 0
    total = 0
    for gidx in range(graphs):
        n = int(rng.integers(2, nmax + 1))
        G = inst.random_connected_graph(rng, n, weights="rational")
        a, b = _PAIR_CYCLE[gidx % len(_PAIR_CYCLE)]
        pair = gl.laplacian_pair(G, a, b)
        dg, df = hf.dual(pair.g), hf.dual(pair.f)
        found = gl.certified_sweep(pair, tol=tol)
        total += len(found)
        for lam, x, cert in found:
            try:
                u = sd.transfer(pair.f, pair.g, lam, x, tol=tol)
                # the dual pair carries the spectrum on the quotient by the
                # invariance subspace Ker(f) + Ker(g)
                dual_cert = sd.verify_eigenpair(dg, df, lam, u, tol=1e-7,
                                                modulo_kernels=True)
                if not dual_cert.feasible:
                    failures += 1
            except sd.InfeasibleEigenpair:
                failures += 1
    checks.append(check_flag(
        f"spectral-duality-transfer ({total} eigenpairs, {graphs} graphs)",
        failures == 0, note=f"{failures} failures"))
    return checks


# ---------------------------------------------------------------------------
# 3. five-form agreement of the largest eigenvalue
# ---------------------------------------------------------------------------

def suite_five_forms(seed=0, instances=50, nmax=6, tol=1e-6):
    rng = np.random.default_rng(seed)
    checks = []
    worst = 0.0
    cfg = es.SolveConfig(seed=seed, restarts=8, max_iters=80)
    for k in range(instances):
        n = int(rng.integers(2, nmax + 1))
        G = inst.random_connected_graph(rng, n, weights="rational")
        a, b = _PAIR_CYCLE[k % len(_PAIR_CYCLE)]
        pair = gl.laplacian_pair(G, a, b)
        vals = [es.power_max(pair.f, pair.g, cfg).lam]
        for (ff, gg) in gl.dual_forms(pair):
            vals.append(es.power_max(ff, gg, cfg).lam)
        spread = (max(vals) - min(vals)) / max(1.0, max(vals))
        worst = max(worst, spread)
    checks.append(check(f"five-form-agreement ({instances} instances)",
                        worst, 0.0, tol))
    return checks


# ---------------------------------------------------------------------------
# 4. Cheeger identity
# ---------------------------------------------------------------------------

def _smallest_certified(pair, pool, ceiling, tol=1e-8):
    """Smallest certified eigenvalue over the pool among candidates whose
    pinned ratio is at most ceiling (plus slack)."""
    hi = ceiling * (1 + 1e-9) + 1e-12
    found = gl.certified_sweep(pair, candidates=pool, tol=tol,
                               lam_filter=(0.0, hi))
    return found


def cheeger_identity_holds(G, tol=1e-9):
    """Certified smallest nonzero eigenvalue of the (1,1) pair vs h_2.

    Returns (holds, lam2, h2). Exact rational arithmetic is used for the
    witness when the weights are rational; candidates that would fall below
    h_2 are refuted by the feasibility LP (escalating borderline cases to the
    exact pivot method).
    """
    h2, parts = gl.cheeger(G, 2)
    pair = gl.laplacian_pair(G, 1, 1)
    pool = es.sign_vectors(G.n)
    below = _smallest_certified(pair, pool, float(h2), tol=1e-8)
    exactable = G.has_exact_weights()

    lam2 = None
    for lam, x, cert in below:
        if exactable:
            lam_exact = gl.verify_candidate_exact(G, 1, 1, [int(v) for v in x])
            if lam_exact is None:
                continue
            lam = float(lam_exact)
        lam2 = lam if lam2 is None else min(lam2, lam)

    # the Cheeger witness itself must certify at exactly h2
    witness_ok = False
    cands = []
    for side in parts:
        cands.append(np.array([1.0 if v in side else 0.0
                               for v in range(G.n)]))
    cands.append(cands[0] - cands[1])
    for cand in cands:
        lam_cand = sd.eigenvalue_at(pair.f, pair.g, cand)
        if abs(lam_cand - float(h2)) > tol * max(1.0, float(h2)):
            continue
        if exactable and isinstance(h2, Fraction):
            lam_exact = gl.verify_candidate_exact(G, 1, 1,
                                                  [int(v) for v in cand])
            if lam_exact is not None and lam_exact == h2:
                witness_ok = True
                break
        cert = sd.verify_eigenpair(pair.f, pair.g, lam_cand, cand, tol=1e-8)
        if cert.feasible:
            witness_ok = True
            break
    if not witness_ok:
        return False, lam2, float(h2)
    if lam2 is None:
        return False, None, float(h2)
    return abs(lam2 - float(h2)) <= tol, lam2, float(h2)


def suite_cheeger(seed=0, graphs=100, nmax=7, include_trees=True, tol=1e-9):
    rng = np.random.default_rng(seed)
    suite = []
    for _ in range(graphs):
        n = int(rng.integers(2, nmax + 1))
        suite.append(inst.random_connected_graph(rng, n, weights="rational"))
    if include_trees:
        suite.extend(_all_trees_up_to(nmax))
    bad = 0
    for G in suite:
        holds, lam2, h2 = cheeger_identity_holds(G, tol=tol)
        if not holds:
            bad += 1
    return [check_flag(f"cheeger-identity ({len(suite)} graphs)", bad == 0,
                       note=f"{bad} mismatches")]


def _all_trees_up_to(nmax):
    """All nonisomorphic trees with 2..nmax nodes (via networkx when present,
    random trees otherwise)."""
    out = [inst.path_graph(2)]
    try:
        import networkx as nx
        for n in range(3, nmax + 1):
            for T in nx.nonisomorphic_trees(n):
                out.append(gl.Graph(n, [(min(u, v), max(u, v), 1)
                                        for u, v in T.edges()]))
    except ImportError:
        rng = np.random.default_rng(11)
        for n in range(3, nmax + 1):
            for _ in range(4):
                out.append(inst.random_tree(rng, n))
    return out


# ---------------------------------------------------------------------------
# 5. extremal cuts of the (1, inf) pair
# ---------------------------------------------------------------------------

def cut_identities_hold(G, tol=1e-9, solver_tol=1e-6, check_solver=False):
    """lambda_max = 2*maxcut and smallest nonzero = 2*mincut for (1, inf).

    The factor 2 is the +/-1 indicator calibration: each crossing edge
    contributes |x_i - x_j| = 2 on the sign vectors where the maximum of the
    convex objective over the unit cube is attained.
    """
    pair = gl.laplacian_pair(G, 1, math.inf)
    mc, _ = gl.maxcut(G)
    lo, _ = gl.mincut(G)
    mc, lo = float(mc), float(lo)

    # maximum over the cube sits at a vertex; enumerate +/-1 vectors
    signs = np.array([[1.0 if m & (1 << i) else -1.0 for i in range(G.n)]
                      for m in range(1 << (G.n - 1))])
    fvals = pair.f.value_batch(signs)
    top = float(np.max(fvals))
    ok_max = abs(top - 2 * mc) <= tol
    xstar = signs[int(np.argmax(fvals))]
    cert = sd.verify_eigenpair(pair.f, pair.g, top, xstar, tol=1e-8)
    ok_max = ok_max and cert.feasible

    if check_solver:
        est = es.power_max(pair.f, pair.g,
                           es.SolveConfig(seed=3, restarts=8))
        ok_max = ok_max and abs(est.lam - top) <= solver_tol * max(1.0, top)

    pool = np.vstack([gl.indicator_candidates(G), es.sign_vectors(G.n)]) \
        if G.n <= 6 else gl.indicator_candidates(G)
    found = _smallest_certified(pair, pool, 2 * lo)
    lam2 = None
    for lam, x, _ in found:
        if G.has_exact_weights() and np.allclose(x, np.round(x)):
            lam_exact = gl.verify_candidate_exact(G, 1, math.inf,
                                                  [int(v) for v in x])
            if lam_exact is None:
                continue
            lam = float(lam_exact)
        lam2 = lam if lam2 is None else min(lam2, lam)
    ok_min = lam2 is not None and abs(lam2 - 2 * lo) <= tol
    return ok_max, ok_min, top, lam2, 2 * mc, 2 * lo


def suite_cuts(seed=0, graphs=50, nmax=8, tol=1e-9):
    rng = np.random.default_rng(seed)
    bad_max = bad_min = 0
    for k in range(graphs):
        n = int(rng.integers(2, nmax + 1))
        G = inst.random_connected_graph(rng, n, weights="rational")
        ok_max, ok_min, *_ = cut_identities_hold(G, tol=tol,
                                                 check_solver=(k % 10 == 0))
        bad_max += 0 if ok_max else 1
        bad_min += 0 if ok_min else 1
    return [check_flag(f"maxcut-identity ({graphs} graphs)", bad_max == 0,
                       note=f"{bad_max} mismatches"),
            check_flag(f"mincut-identity ({graphs} graphs)", bad_min == 0,
                       note=f"{bad_min} mismatches")]


# ---------------------------------------------------------------------------
# 6. diameter identity of the (inf, inf) pair
# ---------------------------------------------------------------------------

def suite_diameter(seed=0, graphs=50, nmax=8, tol=1e-8):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(graphs):
        n = int(rng.integers(2, nmax + 1))
        G = inst.random_connected_graph(rng, n, weights="unit")
        lam, x = gl.infty_eigvec_candidate(G)
        pair = gl.laplacian_pair(G, math.inf, math.inf)
        cert = sd.verify_eigenpair(pair.f, pair.g, lam, x, tol=tol)
        if not cert.feasible:
            bad += 1
    return [check_flag(f"diameter-identity ({graphs} graphs)", bad == 0,
                       note=f"{bad} failures")]


# ---------------------------------------------------------------------------
# 7. Legendre / polarity transform factors on 2-D pairs
# ---------------------------------------------------------------------------

def _base_pairs_2d(rng):
    atoms = [
        lambda: hf.lp_norm(2, 1),
        lambda: hf.lp_norm(2, 2),
        lambda: hf.lp_norm(2, np.inf),
        lambda: hf.weighted_lp(rng.uniform(0.6, 1.8, 2), 1),
        lambda: hf.weighted_lp(rng.uniform(0.6, 1.8, 2), 2),
        lambda: hf.support_function(inst.random_symmetric_points(rng, 2, 3)),
    ]
    i, j = rng.integers(0, len(atoms), size=2)
    return atoms[int(i)](), atoms[int(j)]()


def _match_sets(got, expected, tol):
    if len(got) != len(expected):
        return False
    return all(abs(a - b) <= tol * max(1.0, abs(b))
               for a, b in zip(sorted(got), sorted(expected)))


def suite_transform_factors(seed=0, pairs=20, tol=1e-6, resolution=720):
    rng = np.random.default_rng(seed)
    bad_pow = bad_leg = bad_pol = 0
    done = 0
    while done < pairs:
        f0, g0 = _base_pairs_2d(rng)
        p = float(rng.choice([1.5, 2.0, 3.0]))
        base = es.grid_spectrum_2d(f0, g0, resolution)
        if not base:
            continue
        base_lams = [lam for lam, _ in base]
        fp, gp = hf.power(f0, p), hf.power(g0, p)
        powered = [lam for lam, _ in es.grid_spectrum_2d(fp, gp, resolution)]
        expected_pow = [sd.scale_eigenvalue(lam, lam, 1.0, 1, 1, p, p)
                        for lam in base_lams]
        if not _match_sets(powered, expected_pow, tol):
            bad_pow += 1
        Lg, Lf = hf.legendre(gp), hf.legendre(fp)
        leg = [lam for lam, _ in es.grid_spectrum_2d(Lg, Lf, resolution)]
        ps = hf.conjugate_exponent(p)
        expected_leg = [mu ** (ps - 1.0) for mu in expected_pow]
        if not _match_sets(leg, expected_leg, tol):
            bad_leg += 1
        Ag, Af = hf.polarity(gp), hf.polarity(fp)
        pol = [lam for lam, _ in es.grid_spectrum_2d(Ag, Af, resolution)]
        alpha = sd.polarity_factor(p, p)
        expected_pol = [alpha * mu for mu in expected_pow]
        if not _match_sets(pol, expected_pol, tol):
            bad_pol += 1
        done += 1
    return [check_flag(f"power-factor ({pairs} pairs)", bad_pow == 0,
                       note=f"{bad_pow} mismatches"),
            check_flag(f"legendre-factor ({pairs} pairs)", bad_leg == 0,
                       note=f"{bad_leg} mismatches"),
            check_flag(f"polarity-factor ({pairs} pairs)", bad_pol == 0,
                       note=f"{bad_pol} mismatches")]


# ---------------------------------------------------------------------------
# 8. Gamma-limit of the polarity transform toward the norm dual
# ---------------------------------------------------------------------------

def suite_gamma_limit(seed=0, norms=5, points=50):
    rng = np.random.default_rng(seed)
    fam = [f for _, f in inst.homfun_family(seed)
           if f.is_positive_definite() and not isinstance(f, hf.Opaque)]
    bad = 0
    for f in fam[:norms]:
        df = hf.dual(f)
        X = inst.sample_points(rng, f.dim, points)
        for x in X:
            target = df(x)
            if target <= 1e-9:
                continue
            gaps = []
            for p in (1.5, 1.1, 1.01):
                ap = hf.polarity(hf.power(f, p))
                gaps.append(abs(ap(x) ** (1.0 / p) - target))
            if not (gaps[0] > gaps[1] > gaps[2]):
                bad += 1
    return [check_flag(f"gamma-limit ({norms} norms x {points} points)",
                       bad == 0, note=f"{bad} violations")]


# ---------------------------------------------------------------------------
# 9. convex-body duality
# ---------------------------------------------------------------------------

def suite_convbody(seed=0, pairs=100, tol_hat=1e-8, tol_polar=1e-9):
    rng = np.random.default_rng(seed)
    worst_hat = 0.0
    worst_polar = 0.0
    transfer_bad = 0
    for k in range(pairs):
        K = cb.random_symmetric_polygon(rng)
        L = cb.random_symmetric_polygon(rng)
        worst_hat = max(worst_hat,
                        abs(cb.hat_distance(K, L)
                            - cb.hat_distance(cb.polar(K), cb.polar(L))))
        PP = cb.polar(cb.polar(K))
        diff = _vertex_set_distance(PP.vertices, K.vertices)
        worst_polar = max(worst_polar, diff)
        if k < 10:
            lam = cb.lambda_max(K, L)
            cert = cb.tangency_verify(K, L, lam)
            if not cert.feasible:
                transfer_bad += 1
            else:
                u = sd.transfer(cb.gauge(K), cb.gauge(L), lam, cert.x)
                dual_cert = sd.verify_eigenpair(
                    cb.gauge(cb.polar(L)), cb.gauge(cb.polar(K)), lam, u,
                    tol=1e-7)
                if not dual_cert.feasible:
                    transfer_bad += 1
    return [check(f"hat-distance-duality ({pairs} pairs)", worst_hat, 0.0,
                  tol_hat),
            check(f"bipolar-involution ({pairs} bodies)", worst_polar, 0.0,
                  tol_polar),
            check_flag("tangency-transfer (10 pairs)", transfer_bad == 0,
                       note=f"{transfer_bad} failures")]


def _vertex_set_distance(A, B):
    worst = 0.0
    for v in A:
        worst = max(worst, min(np.linalg.norm(v - u) for u in B))
    for u in B:
        worst = max(worst, min(np.linalg.norm(u - v) for v in A))
    return worst


# ---------------------------------------------------------------------------
# 10. combinatorial bounds dominate their certified constructions
# ---------------------------------------------------------------------------

def suite_bounds(seed=0, graphs=12, nmax=8, tol=1e-9):
    rng = np.random.default_rng(seed)
    violations = 0
    identity_bad = 0
    for _ in range(graphs):
        n = int(rng.integers(3, nmax + 1))
        G = inst.random_connected_graph(rng, n, weights="unit")

        # (1, inf): multiway bound; at k = n it equals the largest eigenvalue,
        # at k = 2 the smallest nonzero one
        pair = gl.laplacian_pair(G, 1, math.inf)
        bound_n, _ = gl.multiway_maxcut_bound(G, G.n)
        bound_2, parts2 = gl.multiway_maxcut_bound(G, 2)
        ok_max, ok_min, top, lam2, twice_mc, twice_lo = \
            cut_identities_hold(G, tol=tol)
        if not (abs(float(bound_n) - top) <= tol and ok_max):
            identity_bad += 1
        if lam2 is None or not (abs(float(bound_2) - lam2) <= tol and ok_min):
            identity_bad += 1
        for k in (2, min(3, G.n)):
            bound_k, blocks = gl.multiway_maxcut_bound(G, k)
            for tvec in es.sign_vectors(k):
                x = np.zeros(G.n)
                for t, block in zip(tvec, blocks):
                    for v in block:
                        x[v] = t
                gx = pair.g(x)
                if gx <= 0:
                    continue
                lam = pair.f(x) / gx
                cert = sd.verify_eigenpair(pair.f, pair.g, lam, x, tol=1e-8)
                if cert.feasible and lam > float(bound_k) + 1e-9:
                    violations += 1

        # (inf, 1): ball tents certify at exactly 1/size and stay below the
        # bound value of any family containing their ball
        pair_i = gl.laplacian_pair(G, math.inf, 1)
        for v in range(G.n):
            for r in (1, 2):
                s = gl.ball_size(G, v, r)
                if s == 0:
                    continue
                x = gl.ball_candidate(G, v, r)
                lam = pair_i.f(x) / pair_i.g(x)
                cert = sd.verify_eigenpair(pair_i.f, pair_i.g, lam, x,
                                           tol=1e-8)
                if cert.feasible and lam > 1.0 / s + 1e-9:
                    violations += 1
        bound_1, wit = gl.inscribed_ball_bound(G, 1)
        if wit is not None:
            v, r = wit[0]
            x = gl.ball_candidate(G, v, r)
            lam = pair_i.f(x) / pair_i.g(x)
            if lam > float(bound_1) + 1e-9:
                violations += 1
    return [check_flag(f"bound-domination ({graphs} graphs)", violations == 0,
                       note=f"{violations} violations"),
            check_flag(f"multiway-extremal-identity ({graphs} graphs)",
                       identity_bad == 0, note=f"{identity_bad} mismatches")]


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------

SUITES = [
    ("involution", suite_involution),
    ("spectral_duality", suite_spectral_duality),
    ("five_forms", suite_five_forms),
    ("cheeger", suite_cheeger),
    ("cuts", suite_cuts),
    ("diameter", suite_diameter),
    ("transform_factors", suite_transform_factors),
    ("gamma_limit", suite_gamma_limit),
    ("convbody", suite_convbody),
    ("bounds", suite_bounds),
]

# full desk-scale sizes (the acceptance suite runs these)
FULL_SIZES = {
    "involution": {"n_points": 100},
    "spectral_duality": {"graphs": 50, "nmax": 6},
    "five_forms": {"instances": 50, "nmax": 6},
    "cheeger": {"graphs": 100, "nmax": 7, "include_trees": True},
    "cuts": {"graphs": 50, "nmax": 8},
    "diameter": {"graphs": 50, "nmax": 8},
    "transform_factors": {"pairs": 20},
    "gamma_limit": {"norms": 5, "points": 50},
    "convbody": {"pairs": 100},
    "bounds": {"graphs": 12, "nmax": 8},
}

QUICK_SIZES = {
    "involution": {"n_points": 60},
    "spectral_duality": {"graphs": 12, "nmax": 5},
    "five_forms": {"instances": 10, "nmax": 5},
    "cheeger": {"graphs": 25, "nmax": 6},
    "cuts": {"graphs": 12, "nmax": 7},
    "diameter": {"graphs": 15, "nmax": 7},
    "transform_factors": {"pairs": 8},
    "gamma_limit": {"norms": 3, "points": 20},
    "convbody": {"pairs": 40},
    "bounds": {"graphs": 6, "nmax": 7},
}


def run_selftest(seed=0, sizes=None, profile="full"):
    """Run every suite; returns (checks, all_passed)."""
    if sizes is None:
        sizes = FULL_SIZES if profile == "full" else QUICK_SIZES
    checks = []
    for name, fn in SUITES:
        kwargs = dict(sizes.get(name, {}))
        checks.extend(fn(seed=seed, **kwargs))
    return checks, all(c["passed"] for c in checks)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hst

from spectradual import eigsolve as es
from spectradual import graphlap as gl
from spectradual import homfun as hf
from spectradual import instances as inst
from spectradual import subdiff as sd


def test_l1_descriptions():
    d = sd.subdiff_at(hf.lp_norm(2, 1), [2, -3])
    assert np.allclose(d.lo, [1, -1]) and np.allclose(d.hi, [1, -1])
    d0 = sd.subdiff_at(hf.lp_norm(2, 1), [2, 0])
    assert np.allclose(d0.lo, [1, -1]) and np.allclose(d0.hi, [1, 1])


def test_pullback_description_is_affine_image():
    f = hf.pullback(hf.lp_norm(1, 1), [[1.0, -1.0]])
    d = sd.subdiff_at(f, [1, -1])
    assert isinstance(d, sd.AffineImage)
    lo, hi = d.product_range(np.array([1.0, -1.0]))
    assert lo == pytest.approx(2.0) and hi == pytest.approx(2.0)


def test_contains():
    box = sd.Box([1, -1], [1, 1])
    assert sd.contains(box, [1, 0.3])
    hull = sd.Hull(np.array([[1.0, 0.0], [0.0, -1.0]]))
    assert sd.contains(hull, [0.5, -0.5])
    assert not sd.contains(hull, [1.0, -1.0])


def test_unsupported_description():
    f = hf.NumericDual(hf.lp_norm(2, 1))
    with pytest.raises(sd.UnsupportedSubdifferential):
        sd.subdiff_at(f, [1.0, 0.0])


def test_smooth_atom_kernel_point_unsupported():
    with pytest.raises(sd.UnsupportedSubdifferential):
        sd.subdiff_at(hf.lp_norm(2, 2), [0.0, 0.0])


def euler_ok(f, x, tol=1e-9):
    d = sd.subdiff_at(f, np.asarray(x, dtype=float))
    lo, hi = d.product_range(np.asarray(x, dtype=float))
    target = f.degree * f(x)
    return abs(lo - target) <= tol * max(1, abs(target)) and \
        abs(hi - target) <= tol * max(1, abs(target))


@settings(max_examples=40, deadline=None)
@given(hst.integers(min_value=0, max_value=10 ** 6))
def test_euler_identity_on_descriptions(seed):
    rng = np.random.default_rng(seed)
    fam = [(n, f) for n, f in inst.homfun_family(seed % 5)
           if not isinstance(f, (hf.Opaque,))]
    name, f = fam[seed % len(fam)]
    x = rng.standard_normal(f.dim)
    try:
        assert euler_ok(f, x)
    except sd.UnsupportedSubdifferential:
        pass


def test_verify_eigenpair_examples():
    l2 = hf.lp_norm(2, 2)
    assert sd.verify_eigenpair(l2, l2, 1.0, [0.6, 0.8]).feasible
    f = hf.pullback(hf.lp_norm(1, 1), [[1.0, -1.0]])
    g = hf.lp_norm(2, 1)
    cert = sd.verify_eigenpair(f, g, 1.0, [1, -1])
    assert cert.feasible and np.allclose(cert.witness, [1, -1])
    bad = sd.verify_eigenpair(f, g, 2.0, [1, -1])
    assert not bad.feasible and bad.residual > 0.5


def test_verify_lambda_zero_means_zero_in_subdiff():
    f = hf.pullback(hf.lp_norm(1, 1), [[1.0, -1.0]])
    g = hf.lp_norm(2, 1)
    assert sd.verify_eigenpair(f, g, 0.0, [1, 1]).feasible
    assert not sd.verify_eigenpair(f, g, 0.0, [1, -1]).feasible


def test_certificate_serialization():
    cert = sd.verify_eigenpair(hf.lp_norm(2, 2), hf.lp_norm(2, 2), 1.0,
                               [0.6, 0.8])
    blob = cert.to_json()
    assert set(blob) == {"lambda", "x", "feasible", "witness", "residual"}
    assert blob["feasible"] is True


def test_transfer_single_edge_by_hand():
    f = hf.pullback(hf.lp_norm(1, 1), [[1.0, -1.0]])
    g = hf.lp_norm(2, 1)
    u = sd.transfer(f, g, 1.0, [1, -1])
    assert np.allclose(u, [1, -1])
    dual_cert = sd.verify_eigenpair(hf.dual(g), hf.dual(f), 1.0, u, tol=1e-8)
    assert dual_cert.feasible
    assert np.allclose(dual_cert.witness, [0.5, -0.5])


def test_transfer_self_dual_fixed_point():
    l2 = hf.lp_norm(2, 2)
    u = sd.transfer(l2, l2, 1.0, [0.6, 0.8])
    assert np.allclose(u, [0.6, 0.8])


def test_transfer_rejects_zero_eigenvalue():
    with pytest.raises(ValueError):
        sd.transfer(hf.lp_norm(2, 2), hf.lp_norm(2, 2), 0.0, [1, 0])


def test_transfer_infeasible_pair():
    f = hf.pullback(hf.lp_norm(1, 1), [[1.0, -1.0]])
    g = hf.lp_norm(2, 1)
    with pytest.raises(sd.InfeasibleEigenpair):
        sd.transfer(f, g, 2.0, [1, -1])


def test_transfer_on_random_graph_pairs():
    rng = np.random.default_rng(11)
    for _ in range(6):
        G = inst.random_connected_graph(rng, int(rng.integers(2, 7)),
                                        weights="rational")
        pair = gl.laplacian_pair(G, 1, 1)
        dg, df = hf.dual(pair.g), hf.dual(pair.f)
        for lam, x, _ in gl.certified_sweep(pair)[:12]:
            u = sd.transfer(pair.f, pair.g, lam, x)
            cert = sd.verify_eigenpair(dg, df, lam, u, tol=1e-7,
                                       modulo_kernels=True)
            assert cert.feasible, (G.to_json(), lam, x)


def test_transfer_plain_relation_for_kernel_orthogonal_eigenvectors():
    # when the eigenvector is orthogonal to Ker(f), the transferred pair
    # certifies without any quotient
    G = inst.complete_graph(3)
    pair = gl.laplacian_pair(G, 1, math.inf)
    x = np.array([1.0, -1.0, 0.0])
    lam = sd.eigenvalue_at(pair.f, pair.g, x)
    assert sd.verify_eigenpair(pair.f, pair.g, lam, x).feasible
    u = sd.transfer(pair.f, pair.g, lam, x)
    cert = sd.verify_eigenpair(hf.dual(pair.g), hf.dual(pair.f), lam, u,
                               tol=1e-8)
    assert cert.feasible


def test_double_transfer_returns_to_primal():
    # transfer twice (the dual of the dual pair is the original pair) and
    # land back on a primal eigenvector with the same eigenvalue
    G = inst.path_graph(4)
    pair = gl.laplacian_pair(G, 1, 1)
    dg, df = hf.dual(pair.g), hf.dual(pair.f)
    x = np.array([1.0, 1.0, -1.0, -1.0])
    lam = 0.5
    assert sd.verify_eigenpair(pair.f, pair.g, lam, x).feasible
    u = sd.transfer(pair.f, pair.g, lam, x)
    assert sd.verify_eigenpair(dg, df, lam, u, modulo_kernels=True).feasible
    x2 = sd.transfer(dg, df, lam, u, modulo_kernels=True)
    back = sd.verify_eigenpair(pair.f, pair.g, lam, x2, tol=1e-7,
                               modulo_kernels=True)
    assert back.feasible


def test_kernel_overlap_degenerate_detection():
    f = hf.pullback(hf.lp_norm(1, 1), [[1.0, -1.0]])
    assert sd.kernels_overlap(f, f)
    assert not sd.kernels_overlap(f, hf.lp_norm(2, 1))


def test_scale_eigenvalue():
    assert sd.scale_eigenvalue(3.0, 3.0, 1.0, 1, 1, 2, 2) == pytest.approx(9.0)
    assert sd.scale_eigenvalue(0.7, 5.0, 3.0, 1, 1, 1, 1) == pytest.approx(0.7)
    with pytest.raises(ValueError):
        sd.scale_eigenvalue(1.0, 0.0, 1.0)


def test_polarity_factor_values():
    assert sd.polarity_factor(2, 2) == pytest.approx(1.0)
    assert sd.polarity_factor(1, 1) == pytest.approx(1.0)
    assert sd.polarity_factor(2, 3) == pytest.approx((2 / 3) ** 0 * 4 / 1)


def test_powered_pair_scaling_on_verified_base():
    # degree-raising maps a verified degree-1 eigenpair to a verified one of
    # the powered pair with the rescaled eigenvalue
    G = inst.path_graph(4)
    pair = gl.laplacian_pair(G, 1, 1)
    x = np.array([1.0, 1.0, -1.0, -1.0])
    lam = 0.5
    p = 2.0
    fp, gp = hf.power(pair.f, p), hf.power(pair.g, p)
    lam_p = sd.scale_eigenvalue(lam, pair.f(x), pair.g(x), 1, 1, p, p)
    assert sd.verify_eigenpair(fp, gp, lam_p, x).feasible
    assert not sd.verify_eigenpair(fp, gp, lam_p * 1.5, x).feasible


def test_legendre_polarity_scaling_of_transferred_pair():
    # powered 2-d pair: the transferred vector certifies on the Legendre and
    # polarity transforms with the stated factors
    f0, g0 = hf.lp_norm(2, 1), hf.weighted_lp([1.0, 2.0], np.inf)
    lam0, x = 0.5, np.array([1.0, 0.0])
    lam0 = sd.eigenvalue_at(f0, g0, x)
    assert sd.verify_eigenpair(f0, g0, lam0, x).feasible
    p = 2.0
    fp, gp = hf.power(f0, p), hf.power(g0, p)
    mu = sd.scale_eigenvalue(lam0, f0(x), g0(x), 1, 1, p, p)
    assert sd.verify_eigenpair(fp, gp, mu, x).feasible
    u = sd.transfer(f0, g0, lam0, x)
    u_p = p * g0(x) ** (p - 1.0) * u
    ps = hf.conjugate_exponent(p)
    Lg, Lf = hf.legendre(gp), hf.legendre(fp)
    assert sd.verify_eigenpair(Lg, Lf, mu ** (ps - 1.0), u_p).feasible
    Ag, Af = hf.polarity(gp), hf.polarity(fp)
    alpha = sd.polarity_factor(p, p)
    assert sd.verify_eigenpair(Ag, Af, alpha * mu, u_p).feasible

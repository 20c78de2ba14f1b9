import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hst

from spectradual import homfun as hf
from spectradual import instances as inst
from spectradual.linalg import LinearMap


def test_eval_examples():
    assert hf.weighted_lp([1, 1], 1)([3, -4]) == 7
    f = hf.pullback(hf.lp_norm(1, 1), [[1.0, -1.0]])
    assert f([1, -1]) == 2
    assert hf.power(hf.lp_norm(2, 2), 2)([3, 4]) == pytest.approx(25)


def test_eval_dimension_mismatch():
    with pytest.raises(hf.DimensionMismatch):
        hf.lp_norm(2, 1)([1, 2, 3])


def test_subgradients():
    assert np.allclose(hf.lp_norm(2, 1).grad([2, -3]), [1, -1])
    assert np.allclose(hf.lp_norm(2, 2).grad([3, 4]), [0.6, 0.8])
    # at a tie, any convex combination of (1,0) and (0,1) is valid; the
    # deterministic selection returns one of the vertices
    v = hf.lp_norm(2, np.inf).grad([1, 1])
    assert v.tolist() in ([1, 0], [0, 1])


def test_kernel_basis():
    assert hf.lp_norm(3, 2).kernel_basis().shape == (3, 0)
    f = hf.pullback(hf.lp_norm(1, 1), [[1.0, -1.0]])
    ker = f.kernel_basis()
    assert ker.shape == (2, 1)
    assert np.allclose(np.abs(ker[:, 0]), [1 / math.sqrt(2)] * 2)
    # duality preserves kernels
    dker = hf.dual(f).kernel_basis()
    assert np.allclose(np.abs(dker), np.abs(ker))


def test_dual_closed_forms():
    assert hf.dual(hf.lp_norm(2, 1))([3, -4]) == pytest.approx(4)
    l2 = hf.lp_norm(2, 2)
    assert hf.dual(l2)([3, 4]) == pytest.approx(5)
    f = hf.pullback(hf.lp_norm(1, 1), [[1.0, -1.0]])
    df = hf.dual(f)
    assert df([1, -1]) == pytest.approx(1.0)
    assert df([4, 0]) == pytest.approx(2.0)


def test_dual_requires_degree_one():
    with pytest.raises(ValueError):
        hf.dual(hf.power(hf.lp_norm(2, 2), 2))


def test_dual_weighted():
    w = np.array([2.0, 0.5])
    dw = hf.dual(hf.weighted_lp(w, 1))
    x = np.array([1.0, 1.0])
    assert dw(x) == pytest.approx(max(abs(x) / w))


def test_pullback_identity_and_kernel():
    f = hf.lp_norm(3, 1)
    fid = hf.pullback(f, np.eye(3))
    for x in np.random.default_rng(0).standard_normal((5, 3)):
        assert fid(x) == pytest.approx(f(x))
    # connected-graph incidence pullback has the all-ones kernel
    from spectradual.graphlap import incidence
    from spectradual.instances import path_graph
    K = incidence(path_graph(4))
    tv = hf.pullback(hf.lp_norm(3, 1), K)
    ker = tv.kernel_basis()
    assert ker.shape[1] == 1
    assert np.allclose(np.abs(ker[:, 0]), 0.5)


def test_pushforward():
    f = hf.lp_norm(2, 1)
    p = hf.pushforward(f, [[1.0, 1.0]])
    assert p([3.0]) == pytest.approx(3.0)
    assert p([-2.0]) == pytest.approx(2.0)
    # identity map leaves the function unchanged
    pid = hf.pushforward(f, np.eye(2))
    for x in np.random.default_rng(1).standard_normal((5, 2)):
        assert pid(x) == pytest.approx(f(x), abs=1e-9)


def test_pushforward_equals_double_dual_route():
    # positive definite f: the pushforward agrees with dual-pullback-dual
    rng = np.random.default_rng(3)
    A = rng.standard_normal((2, 3))
    f = hf.lp_norm(3, 1)
    push = hf.pushforward(f, A)
    alt = hf.dual(hf.pullback(hf.dual(f), LinearMap(A.T)))
    for x in rng.standard_normal((8, 2)):
        assert push(x) == pytest.approx(alt(x), abs=1e-8)


def test_power_roundtrip_and_degree():
    f = hf.lp_norm(2, 1)
    f3 = hf.power(f, 3)
    assert f3.degree == 3
    back = hf.power(hf.power(f, 2), 0.5)
    assert back is f
    with pytest.raises(ValueError):
        hf.power(f, 0.5)


def test_scale_convention():
    f = hf.scale(hf.lp_norm(2, 1), 2.0)
    assert f([1, 1]) == pytest.approx(4.0)
    assert hf.dual(f)([1, 0]) == pytest.approx(0.5)


def test_composite_dual_blockwise():
    # outer l1 of two l2 blocks: the dual is the max of blockwise l2 norms
    blocks = [hf.lp_norm(2, 2), hf.lp_norm(2, 2)]
    sel = [np.hstack([np.eye(2), np.zeros((2, 2))]),
           np.hstack([np.zeros((2, 2)), np.eye(2)])]
    f = hf.composite_norm(hf.lp_norm(2, 1), blocks, sel, check_monotone=False)
    df = hf.dual(f)
    rng = np.random.default_rng(4)
    for x in rng.standard_normal((10, 4)):
        expect = max(np.linalg.norm(x[:2]), np.linalg.norm(x[2:]))
        assert df(x) == pytest.approx(expect, abs=1e-8)


def test_composite_dual_single_term():
    f = hf.composite_dual(hf.lp_norm(1, 1), [hf.lp_norm(2, 2)], [np.eye(2)])
    for x in np.random.default_rng(5).standard_normal((5, 2)):
        assert f(x) == pytest.approx(np.linalg.norm(x), abs=1e-8)


def test_composite_dual_rejects_kernelful_inner():
    inner = hf.pullback(hf.lp_norm(1, 1), [[1.0, -1.0]])
    with pytest.raises(ValueError):
        hf.composite_dual(hf.lp_norm(1, 1), [inner], [np.eye(2)])


def test_monotone_check_rejects_signed_combination():
    class SignedNorm(hf.HomFun):
        op_name = "bad"

        def __init__(self):
            super().__init__(2, 1.0)

        def _value(self, x):
            return abs(x[0] + x[1]) + 0.1 * abs(x[0])

        def _grad(self, x):
            raise NotImplementedError

        def _kernel_basis(self):
            return np.zeros((2, 0))

    with pytest.raises(ValueError):
        hf.composite_norm(SignedNorm(), [hf.lp_norm(1, 2), hf.lp_norm(1, 2)],
                          [[[1.0, 0.0]], [[0.0, 1.0]]])


def test_legendre_examples():
    f = hf.power(hf.lp_norm(1, 2), 2)     # x^2 on R
    Lf = hf.legendre(f)
    assert Lf.degree == 2
    for t in (0.5, 1.0, 2.5):
        assert Lf([t]) == pytest.approx(t * t / 4, abs=1e-9)
    f2 = hf.power(hf.lp_norm(2, 2), 2)
    assert hf.legendre(f2)([2, 0]) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        hf.legendre(hf.lp_norm(2, 1))
    assert hf.legendre(hf.power(hf.lp_norm(2, 1), 3)).degree == pytest.approx(1.5)


def test_polarity_examples():
    f = hf.power(hf.lp_norm(1, 2), 2)
    Af = hf.polarity(f)
    assert Af.degree == 2
    for t in (0.5, 1.0, 2.0):
        assert Af([t]) == pytest.approx(t * t / 4, abs=1e-9)
    # degree one: polarity coincides with the norm dual
    l1 = hf.lp_norm(2, 1)
    A1 = hf.polarity(l1)
    d1 = hf.dual(l1)
    for x in np.random.default_rng(6).standard_normal((10, 2)):
        assert A1(x) == pytest.approx(d1(x), abs=1e-10)


def test_transform_definitions_direct():
    # transforms agree with their defining suprema at sampled points
    rng = np.random.default_rng(7)
    f = hf.power(hf.lp_norm(2, 2), 2)
    Lf, Af = hf.legendre(f), hf.polarity(f)
    for x in rng.standard_normal((4, 2)):
        assert Lf(x) == pytest.approx(hf.legendre_direct(f, x), abs=1e-6)
        assert Af(x) == pytest.approx(hf.polarity_direct(f, x), abs=1e-6)
    fpoly = hf.power(hf.weighted_lp([1.0, 1.5], 1), 2)
    LP, AP = hf.legendre(fpoly), hf.polarity(fpoly)
    for x in rng.standard_normal((3, 2)):
        assert LP(x) == pytest.approx(hf.legendre_direct(fpoly, x, restarts=12),
                                      abs=1e-6)
        assert AP(x) == pytest.approx(hf.polarity_direct(fpoly, x, restarts=12),
                                      abs=1e-6)


def test_dual_fallbacks_match_closed_forms():
    rng = np.random.default_rng(8)
    for f in (hf.lp_norm(2, 1), hf.lp_norm(3, 2), hf.weighted_lp([1, 2], np.inf)):
        ref = hf.dual(f)
        ball = hf.dual_definitional(f)
        numeric = hf.NumericDual(f)
        for x in rng.standard_normal((6, f.dim)):
            assert ball(x) == pytest.approx(ref(x), abs=1e-8)
            assert numeric(x) == pytest.approx(ref(x), abs=1e-6)


def test_opaque_forces_numeric_path():
    f = hf.Opaque(hf.lp_norm(2, 1))
    df = hf.dual(f)
    assert isinstance(df, hf.NumericDual)
    assert df([3, -4]) == pytest.approx(4.0, abs=1e-6)


dims = hst.integers(min_value=1, max_value=4)


@settings(max_examples=40, deadline=None)
@given(hst.integers(min_value=0, max_value=10 ** 6), hst.floats(0.1, 5.0),
       dims)
def test_homogeneity_property(seed, c, dim):
    rng = np.random.default_rng(seed)
    fam = inst.homfun_family(seed % 7)
    name, f = fam[seed % len(fam)]
    x = rng.standard_normal(f.dim)
    assert f(c * x) == pytest.approx(c ** f.degree * f(x),
                                     rel=1e-8, abs=1e-9)
    assert f(x) >= -1e-12


@settings(max_examples=40, deadline=None)
@given(hst.integers(min_value=0, max_value=10 ** 6))
def test_euler_identity_property(seed):
    rng = np.random.default_rng(seed)
    fam = inst.homfun_family(seed % 7)
    name, f = fam[seed % len(fam)]
    x = rng.standard_normal(f.dim)
    v = hf.subgradient_any(f, x)
    assert float(v @ x) == pytest.approx(f.degree * f(x), rel=1e-7, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(hst.integers(min_value=0, max_value=10 ** 6))
def test_kernel_invariance_property(seed):
    rng = np.random.default_rng(seed)
    fam = [(n, f) for n, f in inst.homfun_family(0) if f.kernel_dim() > 0]
    name, f = fam[seed % len(fam)]
    x = rng.standard_normal(f.dim)
    ker = f.kernel_basis()
    z = ker @ rng.standard_normal(ker.shape[1])
    assert f(z) == pytest.approx(0.0, abs=1e-9)
    assert f(x + z) == pytest.approx(f(x), rel=1e-8, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(hst.integers(min_value=0, max_value=10 ** 6))
def test_cauchy_schwarz_property(seed):
    rng = np.random.default_rng(seed)
    fam = inst.homfun_family(1)
    name, f = fam[seed % len(fam)]
    if f.degree != 1.0:
        return
    df = hf.dual(f)
    x = rng.standard_normal(f.dim)
    y = rng.standard_normal(f.dim)
    ker = f.kernel_basis()
    if ker.shape[1]:
        y = y - ker @ (ker.T @ y)
    assert float(y @ x) <= df(x) * f(y) + 1e-7 * (1 + abs(float(y @ x)))


def test_cauchy_schwarz_equality_at_subgradient():
    f = hf.lp_norm(3, 1)
    df = hf.dual(f)
    x = np.array([0.3, -1.2, 2.0])
    v = df.grad(x)     # maximizer of <.,x> over the unit ball of f
    assert float(v @ x) == pytest.approx(df(x) * f(v), abs=1e-9)


def test_json_roundtrip():
    rng = np.random.default_rng(9)
    for name, f in inst.homfun_family(2):
        blob = json.dumps(f.to_json())
        g = hf.from_json(json.loads(blob))
        assert g.dim == f.dim and g.degree == pytest.approx(f.degree)
        for x in rng.standard_normal((3, f.dim)):
            assert g(x) == pytest.approx(f(x), rel=1e-9, abs=1e-9)


def test_linear_map_json_roundtrip():
    m = LinearMap([[1.0, 2.0], [3.0, 4.0]])
    m2 = LinearMap.from_json(m.to_json())
    assert np.allclose(m.mat, m2.mat)

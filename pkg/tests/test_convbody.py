import math

import numpy as np
import pytest

from spectradual import convbody as cb
from spectradual import homfun as hf
from spectradual import subdiff as sd


@pytest.fixture
def square():
    return cb.make_polytope([[1, 1], [1, -1]])


@pytest.fixture
def diamond():
    return cb.make_polytope([[1, 0], [0, 1]])


def test_gauge_and_support(square, diamond):
    assert cb.gauge(square)([3, -4]) == pytest.approx(4)      # sup norm
    assert cb.support(square)([3, -4]) == pytest.approx(7)    # l1
    assert cb.gauge(diamond)([3, -4]) == pytest.approx(7)
    for v in square.vertices:
        assert cb.gauge(square)(v) == pytest.approx(1.0)


def test_gauge_support_duality(square):
    d = hf.dual(cb.gauge(square))
    s = cb.support(square)
    rng = np.random.default_rng(0)
    for x in rng.standard_normal((100, 2)):
        assert d(x) == pytest.approx(s(x), abs=1e-9)


def test_polar(square, diamond):
    ps = cb.polar(square)
    assert sorted(map(tuple, np.round(ps.vertices, 9))) == \
        sorted(map(tuple, np.round(diamond.vertices, 9)))
    # bipolar returns the original vertex set
    back = cb.polar(cb.polar(square))
    assert sorted(map(tuple, np.round(back.vertices, 9))) == \
        sorted(map(tuple, np.round(square.vertices, 9)))


def test_polar_hexagon():
    hexa = cb.make_polytope(
        [[math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)]
         for k in range(3)])
    p = cb.polar(hexa)
    assert p.n_vertices == 6
    # polar of the regular hexagon is the same hexagon rotated by 30 degrees
    # and rescaled by 2/sqrt(3)
    radii = np.linalg.norm(p.vertices, axis=1)
    assert np.allclose(radii, 2 / math.sqrt(3))


def test_polar_3d():
    octa = cb.make_polytope([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    cube = cb.polar(octa)
    assert cube.n_vertices == 8
    back = cb.polar(cube)
    assert sorted(map(tuple, np.round(back.vertices, 9))) == \
        sorted(map(tuple, np.round(octa.vertices, 9)))


def test_origin_not_interior_rejected():
    with pytest.raises(ValueError):
        cb.SymPolytope(2, np.array([[1.0, 0.0], [2.0, 0.0], [1.0, 1.0],
                                    [2.0, 1.0]]))


def test_st_extremes(square, diamond):
    lo, hi = cb.st_extremes(square, diamond)
    assert (lo, hi) == pytest.approx((0.5, 1.0))
    assert cb.lambda_max(diamond, square) == pytest.approx(2.0)
    assert cb.st_extremes(square, square) == pytest.approx((1.0, 1.0))


def test_st_scaling(square, diamond):
    c = 2.5
    scaled = cb.SymPolytope(2, c * square.vertices)
    lo, hi = cb.st_extremes(square, diamond)
    lo2, hi2 = cb.st_extremes(scaled, diamond)
    assert (lo2, hi2) == pytest.approx((lo / c, hi / c))


def test_reciprocity_and_compactness():
    rng = np.random.default_rng(1)
    for _ in range(20):
        K = cb.random_symmetric_polygon(rng)
        L = cb.random_symmetric_polygon(rng)
        lo, hi = cb.st_extremes(K, L)
        assert 0 < lo <= hi < math.inf
        assert lo * cb.lambda_max(L, K) == pytest.approx(1.0)


def test_hat_distance(square, diamond):
    assert cb.hat_distance(square, diamond) == pytest.approx(2.0)
    assert cb.hat_distance(square, square) == pytest.approx(1.0)
    ps, pd = cb.polar(square), cb.polar(diamond)
    assert cb.hat_distance(ps, pd) == pytest.approx(2.0, abs=1e-9)


def test_tangency_examples(square, diamond):
    assert cb.tangency_verify(square, diamond, 1.0).feasible
    assert cb.tangency_verify(diamond, square, 2.0).feasible
    assert not cb.tangency_verify(square, square, 2.0).feasible


def test_tangency_transfer_to_polar_pair():
    rng = np.random.default_rng(2)
    for _ in range(5):
        K = cb.random_symmetric_polygon(rng)
        L = cb.random_symmetric_polygon(rng)
        lam = cb.lambda_max(K, L)
        cert = cb.tangency_verify(K, L, lam)
        assert cert.feasible
        u = sd.transfer(cb.gauge(K), cb.gauge(L), lam, cert.x)
        dual_cert = sd.verify_eigenpair(cb.gauge(cb.polar(L)),
                                        cb.gauge(cb.polar(K)), lam, u,
                                        tol=1e-7)
        assert dual_cert.feasible


def test_banach_mazur_upper_bound(square, diamond):
    # square and diamond are linearly equivalent, so the distance is 1 and
    # the identity transform already realizes it in this representation
    assert cb.banach_mazur_upper(square, diamond, np.eye(2)) == \
        pytest.approx(1.0)
    assert cb.banach_mazur_upper(square, square, np.eye(2)) == \
        pytest.approx(1.0)
    # any transform stays above the distance (here 1)
    rng = np.random.default_rng(3)
    for _ in range(5):
        A = rng.standard_normal((2, 2))
        A = A / abs(np.linalg.det(A)) ** 0.5
        assert cb.banach_mazur_upper(square, square, A) >= 1.0 - 1e-9
    with pytest.raises(ValueError):
        cb.banach_mazur_upper(square, diamond, np.zeros((2, 2)))


def test_json_roundtrip(tmp_path):
    import json
    K = cb.make_polytope([[1, 1], [1, -1]])
    p = tmp_path / "body.json"
    p.write_text(json.dumps({"dim": 2, "vertices": [[1, 1], [1, -1]]}))
    K2 = cb.load_polytope(str(p))
    assert sorted(map(tuple, np.round(K2.vertices, 9))) == \
        sorted(map(tuple, np.round(K.vertices, 9)))


def test_dimension_cap():
    with pytest.raises(ValueError):
        cb.SymPolytope(4, np.vstack([np.eye(4), -np.eye(4)]))

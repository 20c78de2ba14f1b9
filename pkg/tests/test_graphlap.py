import json
import math
from fractions import Fraction

import numpy as np
import pytest

from spectradual import eigsolve as es
from spectradual import graphlap as gl
from spectradual import homfun as hf
from spectradual import instances as inst
from spectradual import subdiff as sd


def test_graph_validation():
    with pytest.raises(ValueError):
        gl.Graph(2, [(0, 0, 1)])
    with pytest.raises(ValueError):
        gl.Graph(2, [(0, 1, 1), (1, 0, 2)])
    with pytest.raises(ValueError):
        gl.Graph(2, [(0, 1, -1)])


def test_incidence_rows():
    K = gl.incidence(inst.path_graph(3)).mat
    assert K.tolist() == [[1, -1, 0], [0, 1, -1]]
    K2 = gl.incidence(gl.Graph(2, [(0, 1, 2.5)])).mat
    assert K2.tolist() == [[2.5, -2.5]]


def test_incidence_kernel_is_components():
    G = gl.Graph(5, [(0, 1, 1), (1, 2, 1), (3, 4, 1)])
    K = gl.incidence(G)
    assert K.kernel_basis().shape[1] == 2


def test_laplacian_pair_values():
    pair = gl.laplacian_pair(inst.path_graph(2), 1, 1)
    assert pair.f([1, -1]) == pytest.approx(2)
    assert pair.g([1, -1]) == pytest.approx(2)
    pinf = gl.laplacian_pair(inst.path_graph(3), math.inf, math.inf)
    assert pinf.f([1, 0, -1]) == pytest.approx(1)
    assert pinf.g([1, 0, -1]) == pytest.approx(1)
    with pytest.raises(ValueError):
        gl.laplacian_pair(inst.path_graph(3), 0.5, 1)


def test_io_roundtrip(tmp_path):
    G = gl.Graph(3, [(0, 1, 1.5), (1, 2, 2.0)])
    p = tmp_path / "g.json"
    p.write_text(json.dumps(G.to_json()))
    G2 = gl.load_graph(str(p))
    assert G2.to_json() == G.to_json()
    t = tmp_path / "g.tsv"
    t.write_text("1\t2\t1.5\n2\t3\t2.0\n")
    G3 = gl.load_graph(str(t))
    assert G3.to_json() == G.to_json()


def test_cheeger_examples():
    assert gl.cheeger(inst.path_graph(4))[0] == Fraction(1, 2)
    assert gl.cheeger(inst.path_graph(2))[0] == 1
    val, parts = gl.cheeger(inst.path_graph(4))
    assert parts == ((0, 1), (2, 3)) or set(map(tuple, parts)) == {(0, 1), (2, 3)}


def test_cheeger_matches_bruteforce_k2():
    rng = np.random.default_rng(0)
    for _ in range(6):
        G = inst.random_connected_graph(rng, 5, weights="rational")
        fast, _ = gl.cheeger(G, 2)
        cuts = {}
        best = None
        for m1 in range(1, 1 << G.n):
            for m2 in range(1, 1 << G.n):
                if m1 & m2:
                    continue
                val = max(
                    gl._subset_cut_values(G, True)[m] / bin(m).count("1")
                    for m in (m1, m2))
                best = val if best is None else min(best, val)
        assert fast == best


def test_cheeger_k3_and_volume_flag():
    G = inst.star_graph(4)
    v3, parts = gl.cheeger(G, 3)
    assert len(parts) == 3
    vw, _ = gl.cheeger(G, 2, volume="degree")
    assert vw > 0


def test_cut_oracles():
    K3 = inst.complete_graph(3)
    assert gl.maxcut(K3)[0] == 2
    assert gl.mincut(K3)[0] == 2
    C4 = inst.cycle_graph(4)
    assert gl.maxcut(C4)[0] == 4
    assert gl.mincut(C4)[0] == 2
    assert gl.mincut(inst.path_graph(3))[0] == 1


def test_size_limits():
    big = gl.Graph(30, [(i, i + 1, 1) for i in range(29)])
    with pytest.raises(gl.SizeLimit):
        gl.mincut(big)
    with pytest.raises(gl.SizeLimit):
        gl.cheeger(gl.Graph(17, [(i, i + 1, 1) for i in range(16)]))
    with pytest.raises(gl.SizeLimit):
        gl.multiway_maxcut_bound(gl.Graph(13, [(i, i + 1, 1)
                                               for i in range(12)]), 2)


def test_multiway_bound():
    K3 = inst.complete_graph(3)
    # singleton partition: the quotient is the graph itself (doubled maxcut)
    vn, _ = gl.multiway_maxcut_bound(K3, 3)
    assert vn == 2 * gl.maxcut(K3)[0]
    # two blocks: the quotient has one edge, so the bound doubles the mincut
    v2, _ = gl.multiway_maxcut_bound(K3, 2)
    assert v2 == 2 * gl.mincut(K3)[0]


def test_diameter_and_balls():
    assert gl.diameter(inst.path_graph(4)) == 3
    G = gl.Graph(5, [(0, 1, 1), (1, 2, 1), (3, 4, 1)])
    assert gl.diameter(G) == [2, 1]
    P5 = inst.path_graph(5)
    assert gl.ball_size(P5, 2, 2) == 4
    assert gl.ball_size(P5, 2, 0) == 0
    assert gl.inscribed_ball_bound(P5, 1)[0] == pytest.approx(0.25)
    assert gl.inscribed_ball_bound(inst.path_graph(2), 2)[0] == math.inf


def test_infty_candidate():
    lam, x = gl.infty_eigvec_candidate(inst.path_graph(4))
    assert lam == pytest.approx(2 / 3)
    assert sorted(x.tolist()) == pytest.approx([-1.5, -0.5, 0.5, 1.5])
    lam2, x2 = gl.infty_eigvec_candidate(inst.path_graph(2))
    assert lam2 == pytest.approx(2.0)
    assert sorted(x2.tolist()) == pytest.approx([-0.5, 0.5])


def test_infty_candidate_certifies():
    for G in (inst.path_graph(4), inst.path_graph(2), inst.cycle_graph(5),
              inst.complete_graph(4)):
        lam, x = gl.infty_eigvec_candidate(G)
        pair = gl.laplacian_pair(G, math.inf, math.inf)
        assert sd.verify_eigenpair(pair.f, pair.g, lam, x, tol=1e-8).feasible


def test_infty_candidate_transfers_to_edge_form():
    G = inst.path_graph(4)
    lam, x = gl.infty_eigvec_candidate(G)
    pair = gl.laplacian_pair(G, math.inf, math.inf)
    u = sd.transfer(pair.f, pair.g, lam, x)
    cert = sd.verify_eigenpair(hf.dual(pair.g), hf.dual(pair.f), lam, u,
                               tol=1e-7, modulo_kernels=True)
    assert cert.feasible


def test_dual_forms_structure_and_dimensions():
    G = inst.cycle_graph(5)
    pair = gl.laplacian_pair(G, 1, 1)
    forms = gl.dual_forms(pair)
    assert len(forms) == 4
    dims = [(ff.dim, gg.dim) for ff, gg in forms]
    assert dims == [(5, 5), (5, 5), (5, 5), (5, 5)]


def test_cycle_edge_form_is_node_problem_again():
    # the cycle is self-dual: the edge-space form of the (inf, inf) pair is a
    # graph-total-variation pair again and the extremal values agree
    G = inst.cycle_graph(5)
    pair = gl.laplacian_pair(G, math.inf, math.inf)
    form3 = gl.dual_forms(pair)[1]
    lam1 = es.power_max(pair.f, pair.g).lam
    lam2 = es.power_max(form3[0], form3[1]).lam
    assert lam2 == pytest.approx(lam1, rel=1e-8)


def test_exact_candidate_verification():
    P4 = inst.path_graph(4)
    assert gl.verify_candidate_exact(P4, 1, 1, [1, 1, -1, -1]) == Fraction(1, 2)
    assert gl.verify_candidate_exact(P4, 1, 1, [1, 1, 1, 0]) is None
    K2 = inst.path_graph(2)
    assert gl.verify_candidate_exact(K2, 1, math.inf, [1, -1]) == 2
    G = gl.Graph(3, [(0, 1, Fraction(3, 2)), (0, 2, Fraction(4, 3)),
                     (1, 2, Fraction(5, 3))])
    lam = gl.verify_candidate_exact(G, 1, math.inf, [1, -1, -1])
    assert lam == 2 * (Fraction(3, 2) + Fraction(4, 3))


def test_exact_matches_float_verification():
    rng = np.random.default_rng(7)
    for _ in range(4):
        G = inst.random_connected_graph(rng, 5, weights="rational")
        pair = gl.laplacian_pair(G, 1, 1)
        for x in es.sign_vectors(5)[::17]:
            lam_exact = gl.verify_candidate_exact(G, 1, 1,
                                                  [int(v) for v in x])
            gx = pair.g(x)
            if gx == 0:
                continue
            lam = pair.f(x) / gx
            cert = sd.verify_eigenpair(pair.f, pair.g, lam, x, tol=1e-9)
            assert (lam_exact is not None) == cert.feasible

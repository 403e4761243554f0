import numpy as np
import pytest

from g2kit.complexes import (SimplicialComplex, circle_complex,
                             freudenthal_torus, rp3_complex,
                             simplicial_product, sphere_complex)
from g2kit.homology import (asd_bundle_count, betti_mod_p, cochain_cup,
                            cochain_pullback, cup_eval, cup_pairing,
                            homology_groups, integral_cohomology_basis,
                            intersection_bplus, intersection_form,
                            rational_inertia)


def test_sphere_homology():
    s3 = sphere_complex(3)
    assert homology_groups(s3, 0) == {"betti": 1, "torsion_order": 1,
                                      "torsion_factors": []}
    assert homology_groups(s3, 1)["betti"] == 0
    assert homology_groups(s3, 3)["betti"] == 1


def test_rp3_homology():
    rp = rp3_complex()
    h1 = homology_groups(rp, 1)
    assert h1["betti"] == 0
    assert h1["torsion_factors"] == [2]


def test_torus_homology():
    t3, _ = freudenthal_torus(3, 3)
    assert homology_groups(t3, 1) == {"betti": 3, "torsion_order": 1,
                                      "torsion_factors": []}
    assert homology_groups(t3, 2)["betti"] == 3


def test_asd_counts():
    assert str(asd_bundle_count(sphere_complex(3))) == "1"
    assert str(asd_bundle_count(rp3_complex())) == "2"
    t3, _ = freudenthal_torus(3, 3)
    cnt = asd_bundle_count(t3)
    assert not cnt.finite and cnt.b1 == 3
    assert "infinite" in str(cnt)


def test_integral_cohomology_basis_t3():
    t3, _ = freudenthal_torus(3, 3)
    b1 = integral_cohomology_basis(t3, 1)
    assert b1["free"].shape[1] == 3
    assert b1["torsion"] == []
    # basis columns are cocycles
    delta = t3.boundary_matrix(2).T
    assert not np.any(delta @ b1["free"])


def test_integral_cohomology_torsion_rp3():
    rp = rp3_complex()
    b2 = integral_cohomology_basis(rp, 2)
    assert [t[0] for t in b2["torsion"]] == [2]


def test_cup_pairing_t3_unimodular():
    t3, _ = freudenthal_torus(3, 3)
    cp = cup_pairing(t3)
    M = np.array(cp.matrix, dtype=float)
    assert M.shape == (3, 3)
    assert abs(abs(np.linalg.det(M)) - 1.0) < 1e-9


def test_cup_commutes_up_to_sign_t3(rng):
    t3, _ = freudenthal_torus(3, 3)
    cp = cup_pairing(t3)
    # on a closed odd complex a2 cup b1 = b1 cup a2 evaluated on the class
    a = cp.basis2[:, 0]
    b = cp.basis1[:, 1]
    assert cup_eval(t3, a, 2, b, 1) == cup_eval2_reversed(t3, b, a)


def cup_eval2_reversed(cx, b1, a2):
    return cup_eval(cx, b1, 1, a2, 2)


def test_intersection_form_s4():
    s4 = sphere_complex(4)
    res = intersection_bplus(s4)
    assert (res["bplus"], res["bminus"]) == (0, 0)


def test_intersection_form_s2xs2():
    s2 = sphere_complex(2)
    prod, pairs = simplicial_product(s2, s2)
    res = intersection_form(prod)
    Q = np.array(res["matrix"], dtype=float)
    assert Q.shape == (2, 2)
    assert abs(np.linalg.det(Q)) == pytest.approx(1.0)
    bp = intersection_bplus(prod)
    assert (bp["bplus"], bp["bminus"]) == (1, 1)


def _t4_with_cocycles():
    c3 = circle_complex(3)
    t2, pairs2 = simplicial_product(c3, c3)
    t4, pairs4 = simplicial_product(t2, t2)
    one_t2 = []
    # pull the circle one-cocycle back to t2 along both projections
    edge_cocycle = np.zeros(3, dtype=object)
    edge_cocycle[0] = 1  # dual to one circle edge
    for proj in (0, 1):
        vm = {p: pairs2[p][proj] for p in range(t2.n_vertices)}
        one_t2.append(cochain_pullback(vm, t2, c3, edge_cocycle, 1))
    ones = []
    for proj in (0, 1):
        vm = {p: pairs4[p][proj] for p in range(t4.n_vertices)}
        for a in one_t2:
            ones.append(cochain_pullback(vm, t4, t2, a, 1))
    twos = []
    for i in range(4):
        for j in range(i + 1, 4):
            twos.append(cochain_cup(t4, ones[i], 1, ones[j], 1))
    return t4, np.array(twos, dtype=object).T


def test_intersection_form_t4():
    t4, cocycles = _t4_with_cocycles()
    bp = intersection_bplus(t4, cocycles=cocycles)
    assert (bp["bplus"], bp["bminus"]) == (3, 3)


def test_rational_inertia_hyperbolic():
    Q = np.array([[0, 1], [1, 0]], dtype=object)
    assert rational_inertia(Q) == (1, 1, 0)
    Q2 = np.array([[2, 0], [0, -3]], dtype=object)
    assert rational_inertia(Q2) == (1, 1, 0)


def test_betti_mod_p_matches_rational():
    t3, _ = freudenthal_torus(3, 3)
    assert betti_mod_p(t3, 1) == 3
    assert betti_mod_p(t3, 1, p=2) == 3

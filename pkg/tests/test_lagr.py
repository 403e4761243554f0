from functools import lru_cache

import numpy as np
import pytest

from g2kit.lagr import (BoundaryData, SymplecticSpace, boundary_data,
                        is_lagrangian, les_exactness_report,
                        load_boundary_map, parse_boundary_map)
from g2kit.mesh import load_mesh

import g2kit

DATA = __import__("pathlib").Path(g2kit.__file__).parent / "data"

PAIRS = {
    "d4": ("d4.mesh", "s3_boundary.mesh", "d4.bmap"),
    "s1xd3": ("s1xd3.mesh", "s1xs2_boundary.mesh", "s1xd3.bmap"),
    "d2xt2": ("d2xt2.mesh", "t3_boundary.mesh", "d2xt2.bmap"),
}


@lru_cache(maxsize=None)
def _pair(name):
    cf, lf, bf = PAIRS[name]
    C = load_mesh(DATA / cf).complex
    L = load_mesh(DATA / lf).complex
    vm = load_boundary_map(DATA / bf)
    return C, L, vm


@lru_cache(maxsize=None)
def _bd(name) -> BoundaryData:
    return boundary_data(*_pair(name))


def test_pair_d4_trivial_lagrangian():
    bd = _bd("d4")
    # the 3-sphere boundary has no middle cohomology: m = 0, vacuously
    # Lagrangian
    assert bd.space.m == 0
    assert bd.is_lagrangian()
    assert bd.les["exact"]


def test_pair_s1xd3_lagrangian():
    bd = _bd("s1xd3")
    assert bd.space.m == 1
    # H^2 of the interior is trivial, H^1 restricts isomorphically
    from g2kit.exact import rank
    assert (rank(bd.alpha) if bd.alpha.size else 0) == 0
    assert rank(bd.beta) == 1
    assert bd.is_lagrangian()
    assert bd.les["exact"]


def test_pair_d2xt2_lagrangian():
    bd = _bd("d2xt2")
    assert bd.space.m == 3
    from g2kit.exact import rank
    ra = rank(bd.alpha) if bd.alpha.size else 0
    rb = rank(bd.beta) if bd.beta.size else 0
    assert (ra, rb) == (1, 2)
    assert bd.is_lagrangian()
    assert bd.les["exact"]


def test_les_report_node_count_and_exactness():
    C, L, vm = _pair("s1xd3")
    rep = les_exactness_report(C, L, vm)
    assert rep["exact"]
    assert len(rep["nodes"]) == 3 * (C.dimension + 1)
    assert all(n["exact"] for n in rep["nodes"])
    for n in rep["nodes"]:
        assert n["rank_in"] + n["rank_out"] == n["dim"]


def _standard_space(m):
    J = np.zeros((2 * m, 2 * m), dtype=object)
    J[:m, m:] = np.eye(m, dtype=object)
    J[m:, :m] = -np.eye(m, dtype=object)
    M = np.eye(m, dtype=object)
    from g2kit.homology import CupPairing
    cup = CupPairing(matrix=M, basis2=np.eye(m, dtype=object),
                     basis1=np.eye(m, dtype=object))
    return SymplecticSpace(pairing=J, block=M, cup=cup)


def test_is_lagrangian_trivial_examples():
    S = _standard_space(1)
    full_first = np.array([[1], [0]], dtype=object)
    assert is_lagrangian(full_first, S)
    everything = np.eye(2, dtype=object)
    assert not is_lagrangian(everything, S)
    # too small a span
    nothing = np.zeros((2, 0), dtype=object)
    assert not is_lagrangian(nothing, S)
    with pytest.raises(ValueError):
        is_lagrangian(np.ones((3, 1), dtype=object), S)


def test_is_lagrangian_symplectic_invariance(rng):
    m = 3
    S = _standard_space(m)
    A = rng.integers(-3, 4, size=(m, m))
    A = (A + A.T).astype(object)  # symmetric: graph of A is Lagrangian
    W = np.vstack([np.eye(m, dtype=object), A])
    assert is_lagrangian(W, S)
    # shear by a symmetric block: a symplectic transform for standard J
    B = rng.integers(-3, 4, size=(m, m))
    B = (B + B.T).astype(object)
    T = np.block([[np.eye(m, dtype=object), B],
                  [np.zeros((m, m), dtype=object), np.eye(m, dtype=object)]])
    assert np.array_equal(T.T @ S.pairing @ T, S.pairing)
    assert is_lagrangian(T @ W, S)
    # changing the spanning set does not change the answer
    G = np.array([[1, 2, 0], [0, 1, 0], [3, 0, 1]], dtype=object)
    assert is_lagrangian(W @ G, S)
    # a non-isotropic span fails
    bad = np.vstack([np.eye(m, dtype=object), np.eye(m, dtype=object)])
    bad[m, 1] = 5  # breaks symmetry of the graph block
    assert not is_lagrangian(bad, S)


def test_symplectic_space_validation():
    with pytest.raises(ValueError):
        SymplecticSpace(pairing=np.zeros((3, 3), dtype=object), block=None,
                        cup=None)
    with pytest.raises(ValueError):
        SymplecticSpace(pairing=np.ones((2, 2), dtype=object), block=None,
                        cup=None)
    with pytest.raises(ValueError):
        SymplecticSpace(pairing=np.zeros((2, 2), dtype=object), block=None,
                        cup=None)


def test_boundary_map_validation():
    C, L, vm = _pair("s1xd3")
    bad = dict(vm)
    k0 = next(iter(bad))
    bad[k0] = bad[k0] + 10**6  # no longer lands on the boundary
    with pytest.raises(ValueError):
        boundary_data(C, L, bad)
    two_to_one = dict(vm)
    ks = list(two_to_one)
    two_to_one[ks[0]] = two_to_one[ks[1]]
    with pytest.raises(ValueError):
        boundary_data(C, L, two_to_one)


def test_parse_boundary_map():
    assert parse_boundary_map("b 0 3\n# comment\nb 1 4\n") == {0: 3, 1: 4}
    with pytest.raises(ValueError):
        parse_boundary_map("b 0 3\nb 0 4\n")
    with pytest.raises(ValueError):
        parse_boundary_map("q 0 3\n")
    with pytest.raises(ValueError):
        parse_boundary_map("b 0 x\n")


def test_selfdual_restriction():
    bd = _bd("d2xt2")
    C, L, vm = _pair("d2xt2")
    # restricting the H^2 domain to nothing drops rank alpha to 0 and
    # breaks the Lagrangian property for this pair
    sd = np.zeros((bd.alpha.shape[1], 0), dtype=object)
    bd0 = boundary_data(C, L, vm, selfdual=sd)
    assert bd0.alpha.shape[1] == 0
    assert not bd0.is_lagrangian()

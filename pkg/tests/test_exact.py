from fractions import Fraction

import numpy as np
import pytest

from g2kit.exact import (nullspace, quotient_basis, rank, rref,
                         smith_normal_form, solve_exact)


def test_rref_simple():
    rows, pivots = rref([[2, 4], [1, 2]])
    assert pivots == [0]
    assert rows[0] == [Fraction(1), Fraction(2)]


def test_rank_and_nullspace(rng):
    A = rng.integers(-5, 6, size=(6, 8))
    r = rank(A)
    ns = nullspace(A)
    assert r + len(ns) == 8
    for v in ns:
        out = [sum(Fraction(int(A[i][j])) * v[j] for j in range(8)) for i in range(6)]
        assert all(x == 0 for x in out)


def test_solve_exact_consistency():
    A = [[1, 2], [3, 4]]
    x = solve_exact(A, [5, 6])
    assert x == [Fraction(-4), Fraction(9, 2)]
    assert solve_exact([[1, 1], [1, 1]], [0, 1]) is None


def test_quotient_basis():
    span = np.array([[1, 0], [0, 1]], dtype=object)
    sub = np.array([[1], [0]], dtype=object)
    picks = quotient_basis(span, sub)
    assert picks == [1]


def test_snf_diag_example():
    res = smith_normal_form(np.diag([2, 3]))
    assert res.invariant_factors == [1, 6]


def test_snf_transforms_and_divisibility(rng):
    for _ in range(50):
        m, n = rng.integers(1, 7, size=2)
        M = rng.integers(-9, 10, size=(m, n)).astype(object)
        res = smith_normal_form(M)
        assert np.array_equal(res.U @ M @ res.V, res.D)
        # unimodular transforms
        assert abs(_det_int(res.U)) == 1
        assert abs(_det_int(res.V)) == 1
        d = res.invariant_factors
        assert all(d[i + 1] % d[i] == 0 for i in range(len(d) - 1))
        # off-diagonal zero
        D = res.D
        for i in range(D.shape[0]):
            for j in range(D.shape[1]):
                if i != j:
                    assert D[i, j] == 0


def _det_int(M) -> int:
    M = [[Fraction(int(x)) for x in row] for row in M]
    n = len(M)
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c] != 0), None)
        if piv is None:
            return 0
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det *= M[c][c]
        inv = 1 / M[c][c]
        M[c] = [x * inv for x in M[c]]
        for i in range(c + 1, n):
            f = M[i][c]
            if f:
                M[i] = [x - f * y for x, y in zip(M[i], M[c])]
    assert det.denominator == 1
    return int(det)


def test_snf_rejects_non_integer():
    with pytest.raises(ValueError):
        smith_normal_form(np.array([[1.5]]))

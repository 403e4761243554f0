"""Exact linear algebra: rational Gaussian elimination and the Smith
normal form over the integers.

Matrices are small (hundreds of rows); everything here is plain Python
with Fraction/int entries, chosen for correctness over speed.  The SNF
uses smallest-nonzero-absolute-value pivoting, the standard anti-swell
heuristic, and Python's arbitrary-precision integers throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "SNFResult",
    "smith_normal_form",
    "rref",
    "rank",
    "nullspace",
    "column_space",
    "solve_exact",
    "quotient_basis",
    "to_fraction_matrix",
]


# -- rational elimination -----------------------------------------------------


def to_fraction_matrix(M) -> list:
    """Copy M into a list-of-lists of Fractions."""
    return [[Fraction(x) for x in row] for row in np.asarray(M, dtype=object)]


def rref(M) -> tuple[list, list]:
    """Reduced row echelon form over Q.  Returns (rows, pivot_columns)."""
    A = to_fraction_matrix(M)
    if not A:
        return [], []
    ncols = len(A[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(A)) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(len(A)):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == len(A):
            break
    return A[:r], pivots


def rank(M) -> int:
    return len(rref(M)[1])


def nullspace(M) -> list:
    """Basis (list of column vectors, Fractions) of the kernel of M."""
    A = np.asarray(M, dtype=object)
    if A.size == 0:
        n = A.shape[1] if A.ndim == 2 else 0
        return [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]
    rows, pivots = rref(A)
    ncols = A.shape[1]
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -rows[r][fc]
        basis.append(v)
    return basis


def column_space(M) -> list:
    """Indices of a maximal independent column set of M."""
    return rref(M)[1]


def solve_exact(A, b):
    """One exact solution x of A x = b, or None if inconsistent.

    b may be a vector or a matrix of right-hand sides.
    """
    A = np.asarray(A, dtype=object)
    b = np.asarray(b, dtype=object)
    vector = b.ndim == 1
    B = b.reshape(-1, 1) if vector else b
    aug = np.concatenate([A, B], axis=1)
    rows, pivots = rref(aug)
    n = A.shape[1]
    if any(p >= n for p in pivots):
        return None
    X = [[Fraction(0)] * B.shape[1] for _ in range(n)]
    for r, pc in enumerate(pivots):
        for j in range(B.shape[1]):
            X[pc][j] = rows[r][n + j]
    if vector:
        return [row[0] for row in X]
    return X


def quotient_basis(span_cols, sub_cols) -> list:
    """Column indices of span_cols completing sub_cols to a basis of the
    joint column space (a basis of span / (span ∩ sub) representatives)."""
    sub = np.asarray(sub_cols, dtype=object)
    span = np.asarray(span_cols, dtype=object)
    if span.size == 0:
        return []
    if sub.size == 0:
        joint = span
        offset = 0
    else:
        joint = np.concatenate([sub, span], axis=1)
        offset = sub.shape[1]
    pivots = column_space(joint)
    return [p - offset for p in pivots if p >= offset]


# -- Smith normal form -----------------------------------------------------------


@dataclass
class SNFResult:
    """U @ M @ V == D with U, V unimodular and the diagonal of D a
    divisibility chain d1 | d2 | ..."""

    U: np.ndarray
    D: np.ndarray
    V: np.ndarray

    @property
    def invariant_factors(self) -> list:
        d = [int(self.D[i, i]) for i in range(min(self.D.shape))]
        return [x for x in d if x != 0]

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)

    @property
    def torsion_factors(self) -> list:
        return [d for d in self.invariant_factors if d > 1]


def _obj_matrix(M) -> np.ndarray:
    A = np.array(M, dtype=object)
    if A.ndim != 2:
        A = A.reshape(A.shape[0], -1)
    for row in A:
        for x in row:
            if not isinstance(x, (int, np.integer)):
                raise ValueError("SNF requires integer entries")
    return np.vectorize(int, otypes=[object])(A) if A.size else A


def smith_normal_form(M) -> SNFResult:
    """Exact Smith normal form with transform matrices.

    Pivoting picks the smallest nonzero absolute value in the remaining
    block; arbitrary-precision integers prevent overflow.
    """
    A = _obj_matrix(M)
    m, n = A.shape
    U = np.eye(m, dtype=object)
    V = np.eye(n, dtype=object)
    t = 0
    while t < min(m, n):
        sub = A[t:, t:]
        nz = np.nonzero(sub)
        if len(nz[0]) == 0:
            break
        vals = abs(sub[nz])
        p = int(np.argmin(vals))
        pi, pj = int(nz[0][p]) + t, int(nz[1][p]) + t
        if pi != t:
            A[[t, pi]] = A[[pi, t]]
            U[[t, pi]] = U[[pi, t]]
        if pj != t:
            A[:, [t, pj]] = A[:, [pj, t]]
            V[:, [t, pj]] = V[:, [pj, t]]
        # eliminate; restart if a remainder smaller than the pivot appears
        while True:
            piv = A[t, t]
            done = True
            for i in range(t + 1, m):
                if A[i, t] != 0:
                    q = A[i, t] // piv
                    if q != 0:
                        A[i, :] -= q * A[t, :]
                        U[i, :] -= q * U[t, :]
                    if A[i, t] != 0:  # remainder becomes the new pivot
                        A[[t, i]] = A[[i, t]]
                        U[[t, i]] = U[[i, t]]
                        done = False
                        break
            if not done:
                continue
            for j in range(t + 1, n):
                if A[t, j] != 0:
                    q = A[t, j] // piv
                    if q != 0:
                        A[:, j] -= q * A[:, t]
                        V[:, j] -= q * V[:, t]
                    if A[t, j] != 0:
                        A[:, [t, j]] = A[:, [j, t]]
                        V[:, [t, j]] = V[:, [j, t]]
                        done = False
                        break
            if done:
                break
        t += 1
    # sign normalization
    for i in range(min(m, n)):
        if A[i, i] < 0:
            A[i, :] = -A[i, :]
            U[i, :] = -U[i, :]
    # divisibility chain
    r = sum(1 for i in range(min(m, n)) if A[i, i] != 0)
    changed = True
    while changed:
        changed = False
        for i in range(r - 1):
            a, b = A[i, i], A[i + 1, i + 1]
            if b % a != 0:
                # fold d_{i+1} into position i via the 2x2 gcd dance
                A[:, i] += A[:, i + 1]
                V[:, i] += V[:, i + 1]
                _clear_pair(A, U, V, i)
                changed = True
    return SNFResult(U=U, D=A, V=V)


def _clear_pair(A, U, V, i):
    """Re-diagonalize the 2x2 block at (i, i) after a column merge."""
    m, n = A.shape
    while True:
        moved = False
        # gcd elimination restricted to rows/cols i, i+1
        if A[i + 1, i] != 0:
            if A[i, i] == 0 or (A[i + 1, i] != 0 and abs(A[i + 1, i]) < abs(A[i, i])):
                A[[i, i + 1]] = A[[i + 1, i]]
                U[[i, i + 1]] = U[[i + 1, i]]
            q = A[i + 1, i] // A[i, i]
            A[i + 1, :] -= q * A[i, :]
            U[i + 1, :] -= q * U[i, :]
            moved = True
        if A[i, i + 1] != 0:
            q = A[i, i + 1] // A[i, i]
            A[:, i + 1] -= q * A[:, i]
            V[:, i + 1] -= q * V[:, i]
            if A[i, i + 1] != 0:
                A[:, [i, i + 1]] = A[:, [i + 1, i]]
                V[:, [i, i + 1]] = V[:, [i + 1, i]]
            moved = True
        if A[i + 1, i] == 0 and A[i, i + 1] == 0:
            break
        if not moved:  # pragma: no cover - defensive
            raise RuntimeError("SNF divisibility fix failed to progress")
    for r in (i, i + 1):
        if A[r, r] < 0:
            A[r, :] = -A[r, :]
            U[r, :] = -U[r, :]

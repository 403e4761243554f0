"""Exterior algebra on a real n-dimensional vector space (n <= 8).

Forms are stored densely over the lexicographically ordered basis of
strictly increasing multi-indices.  Coefficients are ordinarily float64,
but every operation except the Hodge star of a non-Euclidean metric also
works with exact types (int, Fraction) so sign identities can be checked
in exact arithmetic.

Orientation is fixed once and for all: dx0 ^ dx1 ^ ... ^ dx{n-1} is the
positive volume form.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations

import numpy as np

__all__ = [
    "AlternatingForm",
    "Metric",
    "basis_indices",
    "wedge",
    "interior",
    "hodge",
    "pullback",
    "merge_sign",
    "perm_sign",
]


def perm_sign(perm) -> int:
    """Sign of a permutation given as a sequence of distinct comparables."""
    perm = list(perm)
    inv = 0
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                inv += 1
    return -1 if inv % 2 else 1


def merge_sign(a: tuple, b: tuple):
    """Sign of sorting the concatenation of two increasing index tuples.

    Returns (sign, merged) or (0, None) if the tuples share an index.
    """
    if set(a) & set(b):
        return 0, None
    merged = tuple(sorted(a + b))
    return perm_sign(a + b), merged


@lru_cache(maxsize=None)
def basis_indices(n: int, k: int) -> tuple:
    """Increasing k-tuples of {0..n-1} in lexicographic order."""
    if k < 0 or k > n:
        return ()
    return tuple(combinations(range(n), k))


@lru_cache(maxsize=None)
def _basis_pos(n: int, k: int) -> dict:
    return {idx: p for p, idx in enumerate(basis_indices(n, k))}


class Metric:
    """Symmetric positive definite inner product matrix on R^n."""

    def __init__(self, matrix):
        g = np.asarray(matrix, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("metric must be a square matrix")
        if not np.allclose(g, g.T, atol=1e-12 * max(1.0, abs(g).max())):
            raise ValueError("metric must be symmetric")
        # leading principal minors > 0 <=> positive definite
        for m in range(1, g.shape[0] + 1):
            if np.linalg.det(g[:m, :m]) <= 0:
                raise ValueError("metric must be positive definite")
        self.matrix = 0.5 * (g + g.T)
        self.dim = g.shape[0]

    @classmethod
    def euclidean(cls, n: int) -> "Metric":
        return cls(np.eye(n))

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)

    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    def __repr__(self):
        return f"Metric(dim={self.dim})"


class AlternatingForm:
    """Degree-k exterior form with dense coefficients.

    Immutable by convention: operations return new forms and never write
    into an existing coefficient array.
    """

    __slots__ = ("dim", "degree", "coeffs")

    def __init__(self, dim: int, degree: int, coeffs=None):
        # degree > dim is allowed and carries an empty basis (the zero form
        # of that degree); degree < 0 is not.
        if degree < 0:
            raise ValueError(f"degree {degree} out of range for dim {dim}")
        nb = math.comb(dim, degree) if degree <= dim else 0
        if coeffs is None:
            coeffs = np.zeros(nb)
        else:
            coeffs = np.asarray(coeffs)
            if coeffs.shape != (nb,):
                raise ValueError(
                    f"expected {nb} coefficients for degree {degree} in dim {dim}, "
                    f"got shape {coeffs.shape}"
                )
            coeffs = coeffs.copy()
        self.dim = dim
        self.degree = degree
        self.coeffs = coeffs
        self.coeffs.setflags(write=False)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, dim: int, degree: int) -> "AlternatingForm":
        return cls(dim, degree)

    @classmethod
    def scalar(cls, dim: int, value=1.0) -> "AlternatingForm":
        return cls(dim, 0, np.asarray([value]))

    @classmethod
    def from_dict(cls, dim: int, degree: int, terms: dict, dtype=None) -> "AlternatingForm":
        """Build a form from {index-tuple: coefficient}.

        Index tuples need not be sorted; the permutation sign is applied.
        """
        nb = math.comb(dim, degree)
        coeffs = np.zeros(nb, dtype=dtype if dtype is not None else float)
        pos = _basis_pos(dim, degree)
        for idx, val in terms.items():
            idx = tuple(idx)
            if len(set(idx)) != len(idx):
                continue  # repeated index: zero contribution
            s = perm_sign(idx)
            coeffs[pos[tuple(sorted(idx))]] += s * val
        return cls(dim, degree, coeffs)

    @classmethod
    def basis(cls, dim: int, idx, dtype=None) -> "AlternatingForm":
        """The basis form dx^{i0} ^ ... ^ dx^{ik-1}."""
        return cls.from_dict(dim, len(tuple(idx)), {tuple(idx): 1}, dtype=dtype)

    @classmethod
    def volume(cls, dim: int, dtype=None) -> "AlternatingForm":
        return cls.basis(dim, tuple(range(dim)), dtype=dtype)

    # -- access ------------------------------------------------------------

    def indices(self) -> tuple:
        return basis_indices(self.dim, self.degree)

    def coefficient(self, idx) -> float:
        """Coefficient of an arbitrary (possibly unsorted) index tuple."""
        idx = tuple(idx)
        if len(set(idx)) != len(idx):
            return 0 * self.coeffs[0] if len(self.coeffs) else 0.0
        s = perm_sign(idx)
        return s * self.coeffs[_basis_pos(self.dim, self.degree)[tuple(sorted(idx))]]

    def __call__(self, *vectors):
        """Evaluate the form on `degree` vectors."""
        if len(vectors) != self.degree:
            raise ValueError(f"expected {self.degree} vectors")
        if self.degree == 0:
            return self.coeffs[0]
        vs = [np.asarray(v) for v in vectors]
        total = 0.0
        for pos, idx in enumerate(self.indices()):
            c = self.coeffs[pos]
            if c == 0:
                continue
            mat = np.array([[v[i] for i in idx] for v in vs])
            total = total + c * np.linalg.det(mat)
        return total

    # -- arithmetic --------------------------------------------------------

    def _like(self, coeffs) -> "AlternatingForm":
        return AlternatingForm(self.dim, self.degree, coeffs)

    def __add__(self, other):
        self._check_compatible(other)
        return self._like(self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check_compatible(other)
        return self._like(self.coeffs - other.coeffs)

    def __neg__(self):
        return self._like(-self.coeffs)

    def __mul__(self, scalar):
        return self._like(self.coeffs * scalar)

    __rmul__ = __mul__

    def _check_compatible(self, other):
        if not isinstance(other, AlternatingForm):
            raise TypeError("expected an AlternatingForm")
        if other.dim != self.dim or other.degree != self.degree:
            raise ValueError("dimension/degree mismatch")

    def norm(self, g: Metric | None = None) -> float:
        """Metric norm; Euclidean when g is None."""
        G = gram(self.dim, self.degree, g)
        c = self.coeffs.astype(float)
        return float(np.sqrt(max(c @ G @ c, 0.0)))

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.coeffs)

    def __repr__(self):
        terms = []
        for pos, idx in enumerate(self.indices()):
            c = self.coeffs[pos]
            if c != 0:
                name = "e" + "".join(str(i) for i in idx) if idx else "1"
                terms.append(f"{c!r}*{name}")
        body = " + ".join(terms) if terms else "0"
        return f"<{self.degree}-form on R^{self.dim}: {body}>"


# -- core operations --------------------------------------------------------


@lru_cache(maxsize=None)
def _wedge_table(n: int, ka: int, kb: int):
    """(pos_a, pos_b, sign, pos_out) quadruples for the wedge product."""
    out = []
    pos_out = _basis_pos(n, ka + kb) if ka + kb <= n else {}
    for pa, ia in enumerate(basis_indices(n, ka)):
        for pb, ib in enumerate(basis_indices(n, kb)):
            s, merged = merge_sign(ia, ib)
            if s:
                out.append((pa, pb, s, pos_out[merged]))
    return tuple(out)


def wedge(a: AlternatingForm, b: AlternatingForm) -> AlternatingForm:
    """Wedge product; graded-commutative, associative, bilinear."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch in wedge")
    k = a.degree + b.degree
    if k > a.dim:
        return AlternatingForm.zero(a.dim, k)  # empty basis
    nb = math.comb(a.dim, k)
    dtype = np.result_type(a.coeffs.dtype, b.coeffs.dtype)
    coeffs = np.zeros(nb, dtype=dtype)
    ca, cb = a.coeffs, b.coeffs
    for pa, pb, s, po in _wedge_table(a.dim, a.degree, b.degree):
        coeffs[po] += s * ca[pa] * cb[pb]
    return AlternatingForm(a.dim, k, coeffs)


def interior(v, a: AlternatingForm) -> AlternatingForm:
    """Contraction iota_v a.  Degree-0 input contracts to the zero scalar."""
    v = np.asarray(v)
    if v.shape != (a.dim,):
        raise ValueError(f"vector must have length {a.dim}")
    if a.degree == 0:
        # convention: iota_v of a scalar is the zero scalar (degree -1 is
        # disallowed, and the anti-derivation rule is consistent with 0)
        return AlternatingForm.zero(a.dim, 0)
    k = a.degree
    coeffs = np.zeros(math.comb(a.dim, k - 1), dtype=np.result_type(a.coeffs.dtype, v.dtype))
    pos_out = _basis_pos(a.dim, k - 1)
    for p, idx in enumerate(basis_indices(a.dim, k)):
        c = a.coeffs[p]
        if c == 0:
            continue
        for j, i in enumerate(idx):
            rest = idx[:j] + idx[j + 1:]
            sign = -1 if j % 2 else 1
            coeffs[pos_out[rest]] += sign * v[i] * c
    return AlternatingForm(a.dim, k - 1, coeffs)


@lru_cache(maxsize=None)
def _gram_cache(n: int, k: int, gkey):
    g_inv = np.array(gkey).reshape(n, n)
    idxs = basis_indices(n, k)
    G = np.empty((len(idxs), len(idxs)))
    for i, I in enumerate(idxs):
        for j, J in enumerate(idxs):
            G[i, j] = np.linalg.det(g_inv[np.ix_(I, J)]) if k else 1.0
    return G


def gram(n: int, k: int, g: Metric | None = None) -> np.ndarray:
    """Gram matrix of the induced inner product on degree-k forms."""
    g_inv = np.eye(n) if g is None else g.inverse()
    return _gram_cache(n, k, tuple(np.round(g_inv, 15).ravel()))


def hodge(a: AlternatingForm, g: Metric | None = None, orientation: int = 1) -> AlternatingForm:
    """Hodge star with respect to g (Euclidean when None).

    Defined by  b ^ *a = <b, a>_g vol_g  for all b of the same degree, with
    vol_g = sqrt(det g) dx0^...^dx{n-1} times `orientation`.
    """
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    n, k = a.dim, a.degree
    if g is not None and g.dim != n:
        raise ValueError("metric dimension mismatch")
    sqrt_det = 1.0 if g is None else math.sqrt(g.det())
    G = gram(n, k, g)
    w = G @ a.coeffs.astype(float) * (sqrt_det * orientation)
    coeffs = np.zeros(math.comb(n, n - k))
    pos_out = _basis_pos(n, n - k)
    full = tuple(range(n))
    for p, I in enumerate(basis_indices(n, k)):
        Ic = tuple(i for i in full if i not in I)
        s, _ = merge_sign(I, Ic)
        coeffs[pos_out[Ic]] = s * w[p]
    return AlternatingForm(n, n - k, coeffs)


def pullback(A, a: AlternatingForm) -> AlternatingForm:
    """Pullback of a k-form on R^n by a linear map A: R^m -> R^n.

    A is given as an n x m matrix acting on vectors; it acts on covectors by
    transpose.  The result lives on R^m.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != a.dim:
        raise ValueError(f"expected a {a.dim} x m matrix")
    m = A.shape[1]
    k = a.degree
    if k > m:
        return AlternatingForm.zero(m, k)  # empty basis
    if k == 0:
        return AlternatingForm(m, 0, a.coeffs)
    exact = a.coeffs.dtype == object or A.dtype == object
    coeffs = np.zeros(math.comb(m, k), dtype=object if exact else float)
    for q, J in enumerate(basis_indices(m, k)):
        total = 0
        for p, I in enumerate(basis_indices(a.dim, k)):
            c = a.coeffs[p]
            if c == 0:
                continue
            sub = A[np.ix_(I, J)]
            total = total + c * (_exact_det(sub) if exact else np.linalg.det(sub))
        coeffs[q] = total
    return AlternatingForm(m, k, coeffs)


def _exact_det(mat):
    """Cofactor-expansion determinant preserving exact coefficient types."""
    n = mat.shape[0]
    if n == 1:
        return mat[0, 0]
    total = 0
    for j in range(n):
        minor = np.delete(np.delete(mat, 0, axis=0), j, axis=1)
        term = mat[0, j] * _exact_det(minor)
        total = total + (term if j % 2 == 0 else -term)
    return total

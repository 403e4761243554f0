"""Integer simplicial homology and cohomology pairings.

Homology groups come from exact Smith normal forms of the boundary
matrices.  Cup products use the front-face/back-face formula over the
global sorted vertex order and are evaluated against the fundamental
cycle, so pairings of integer cocycles are exact integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import prod

import numpy as np

from .complexes import SimplicialComplex
from .exact import smith_normal_form, solve_exact, to_fraction_matrix

__all__ = [
    "ChainComplex",
    "homology_groups",
    "AsdCount",
    "asd_bundle_count",
    "integral_cohomology_basis",
    "cup_eval",
    "CupPairing",
    "cup_pairing",
    "intersection_form",
    "intersection_bplus",
    "cochain_pullback",
    "cochain_cup",
    "fundamental_cocycle",
    "betti_mod_p",
    "rational_inertia",
]


class ChainComplex:
    """Boundary matrices of a finite chain complex, exact integers."""

    def __init__(self, boundaries: dict):
        self.boundaries = {k: np.array(M, dtype=object) for k, M in boundaries.items()}
        self.top = max(boundaries) if boundaries else 0
        for k, M in self.boundaries.items():
            N = self.boundaries.get(k - 1)
            if N is not None and N.size and M.size:
                if (N @ M != 0).any():
                    raise ValueError(f"boundary squared is nonzero at degree {k}")

    @classmethod
    def from_complex(cls, cx: SimplicialComplex) -> "ChainComplex":
        return cls({j: cx.boundary_matrix(j) for j in range(1, cx.dimension + 1)})

    def n_cells(self, k: int) -> int:
        if k in self.boundaries:
            return self.boundaries[k].shape[1]
        if k + 1 in self.boundaries:
            return self.boundaries[k + 1].shape[0]
        return 0


def _as_chain(x) -> ChainComplex:
    if isinstance(x, ChainComplex):
        return x
    if isinstance(x, SimplicialComplex):
        return ChainComplex.from_complex(x)
    raise TypeError("expected a SimplicialComplex or ChainComplex")


def homology_groups(x, k: int) -> dict:
    """H_k over the integers: {betti, torsion_order, torsion_factors}."""
    c = _as_chain(x)
    nk = c.n_cells(k)
    dk = c.boundaries.get(k)
    dk1 = c.boundaries.get(k + 1)
    rank_dk = smith_normal_form(dk).rank if dk is not None and dk.size else 0
    if dk1 is not None and dk1.size:
        snf1 = smith_normal_form(dk1)
        rank_dk1 = snf1.rank
        torsion = snf1.torsion_factors
    else:
        rank_dk1 = 0
        torsion = []
    betti = nk - rank_dk - rank_dk1
    return {
        "betti": betti,
        "torsion_order": prod(torsion) if torsion else 1,
        "torsion_factors": torsion,
    }


@dataclass(frozen=True)
class AsdCount:
    """Count of flat-twist classes on a 3-complex: finite iff b1 = 0."""

    finite: bool
    count: int | None
    b1: int

    def __str__(self):
        if self.finite:
            return str(self.count)
        return f"infinite family; holonomy constraints required (b1={self.b1})"


def asd_bundle_count(L: SimplicialComplex) -> AsdCount:
    """Number of classes counted by the torsion of H_1(L, Z).

    For b1 > 0 the family is infinite and the b1 obstruction is reported
    instead of a count.
    """
    if L.dimension != 3:
        raise ValueError("count is defined for 3-complexes")
    h1 = homology_groups(L, 1)
    if h1["betti"] > 0:
        return AsdCount(finite=False, count=None, b1=h1["betti"])
    return AsdCount(finite=True, count=h1["torsion_order"], b1=0)


# -- integral cohomology bases ---------------------------------------------------


def _unimodular_inverse(U: np.ndarray) -> np.ndarray:
    X = solve_exact(U, np.eye(U.shape[0], dtype=object))
    out = np.array(X, dtype=object)
    for row in out.flat:
        if row.denominator != 1:
            raise ValueError("matrix is not unimodular")
    return np.vectorize(lambda f: int(f), otypes=[object])(out)


def integral_cohomology_basis(cx: SimplicialComplex, k: int) -> dict:
    """Integer cocycle representatives of a basis of H^k(cx, Z).

    Returns {"free": n_k x b integer matrix, "torsion": [(order, column)]}.
    The basis is the SNF-canonical one, so it is deterministic.
    """
    nk = len(cx.faces(k))
    delta_k = cx.boundary_matrix(k + 1).T if k < cx.dimension else np.zeros((0, nk), dtype=np.int64)
    delta_km1 = cx.boundary_matrix(k).T if k >= 1 else np.zeros((0, nk), dtype=np.int64).T

    if delta_k.size:
        snf = smith_normal_form(delta_k)
        r = snf.rank
        K = np.array(snf.V, dtype=object)[:, r:]  # kernel lattice basis
    else:
        K = np.eye(nk, dtype=object)
    if K.shape[1] == 0:
        return {"free": np.zeros((nk, 0), dtype=object), "torsion": []}
    if k >= 1 and delta_km1.size:
        X = solve_exact(K, delta_km1)
        if X is None:
            raise RuntimeError("coboundary not contained in cocycles")
        Xi = np.array(
            [[int(f) if f.denominator == 1 else _fail() for f in row] for row in X],
            dtype=object,
        )
        snf2 = smith_normal_form(Xi)
        Kp = K @ _unimodular_inverse(np.array(snf2.U, dtype=object))
        diag = [int(snf2.D[i, i]) for i in range(min(snf2.D.shape))]
        diag += [0] * (K.shape[1] - len(diag))
        free_cols = [i for i, d in enumerate(diag) if d == 0]
        tors = [(d, i) for i, d in enumerate(diag) if d > 1]
    else:
        Kp = K
        free_cols = list(range(K.shape[1]))
        tors = []
    return {
        "free": Kp[:, free_cols],
        "torsion": [(d, Kp[:, i]) for d, i in tors],
    }


def _fail():
    raise RuntimeError("kernel lattice is not saturated")


# -- cup products -----------------------------------------------------------------


def cup_eval(cx: SimplicialComplex, a, p: int, b, q: int):
    """(a cup b) evaluated on the fundamental cycle.

    a is a p-cochain over cx.faces(p), b a q-cochain over cx.faces(q);
    p + q must equal the dimension.  Uses the front/back-face formula in
    the sorted vertex order.
    """
    if p + q != cx.dimension:
        raise ValueError("cup degrees must sum to the dimension")
    if not cx.is_closed():
        raise ValueError("fundamental cycle requires a closed complex")
    fidx_p = cx.face_index(p)
    fidx_q = cx.face_index(q)
    from .forms import perm_sign

    total = 0
    for s in cx.simplices:
        ss = tuple(sorted(s))
        front = ss[: p + 1]
        back = ss[p:]
        total += perm_sign(s) * a[fidx_p[front]] * b[fidx_q[back]]
    return total


@dataclass
class CupPairing:
    """Cup pairing matrix of a closed oriented 3-complex.

    matrix[i][j] = (basis2_i cup basis1_j)[fundamental class], in the
    SNF-canonical integral bases of H^2 and H^1.
    """

    matrix: np.ndarray
    basis2: np.ndarray
    basis1: np.ndarray


def cup_pairing(L: SimplicialComplex) -> CupPairing:
    if L.dimension != 3:
        raise ValueError("cup_pairing expects a 3-complex")
    if not L.is_closed():
        raise ValueError("cup_pairing expects a closed complex")
    L.validate()
    b2 = integral_cohomology_basis(L, 2)["free"]
    b1 = integral_cohomology_basis(L, 1)["free"]
    M = np.zeros((b2.shape[1], b1.shape[1]), dtype=object)
    for i in range(b2.shape[1]):
        for j in range(b1.shape[1]):
            M[i, j] = cup_eval(L, b2[:, i], 2, b1[:, j], 1)
    return CupPairing(matrix=M, basis2=b2, basis1=b1)


def cochain_cup(cx: SimplicialComplex, a, p: int, b, q: int):
    """Cochain-level cup product (front/back faces in sorted order).

    The cup of two cocycles is a cocycle; used to build product-class
    representatives on product complexes.
    """
    faces = cx.faces(p + q)
    fidx_p = cx.face_index(p)
    fidx_q = cx.face_index(q)
    out = np.zeros(len(faces), dtype=object)
    for i, f in enumerate(faces):
        out[i] = a[fidx_p[f[: p + 1]]] * b[fidx_q[f[p:]]]
    return out


def fundamental_cocycle(cx: SimplicialComplex):
    """A top-degree cocycle pairing to 1 with the fundamental cycle."""
    from .forms import perm_sign

    if not cx.is_closed():
        raise ValueError("needs a closed complex")
    out = np.zeros(len(cx.faces(cx.dimension)), dtype=object)
    s = cx.simplices[0]
    out[cx.face_index(cx.dimension)[tuple(sorted(s))]] = perm_sign(s)
    return out


def cochain_pullback(vertex_map, source: SimplicialComplex, target: SimplicialComplex, a, k: int):
    """Pull a k-cochain on `target` back along a simplicial vertex map.

    vertex_map maps source vertex ids to target vertex ids; faces with
    degenerate image contribute zero.
    """
    from .forms import perm_sign

    tidx = target.face_index(k)
    out = np.zeros(len(source.faces(k)), dtype=object)
    for i, f in enumerate(source.faces(k)):
        img = tuple(vertex_map[v] for v in f)
        if len(set(img)) != len(img):
            continue
        key = tuple(sorted(img))
        if key not in tidx:
            continue
        out[i] = perm_sign(img) * a[tidx[key]]
    return out


def intersection_form(C: SimplicialComplex, cocycles=None) -> dict:
    """Symmetric cup-product matrix on H^2 of a closed oriented 4-complex.

    cocycles (n2 x b integer matrix) overrides the SNF basis computation;
    the override must span H^2 rationally, certified by a mod-p dimension
    bound plus nondegeneracy of the resulting pairing.
    """
    if C.dimension != 4:
        raise ValueError("intersection form expects a 4-complex")
    if not C.is_closed():
        raise ValueError("intersection form expects a closed complex")
    if cocycles is None:
        basis = integral_cohomology_basis(C, 2)["free"]
    else:
        basis = np.array(cocycles, dtype=object)
        delta2 = C.boundary_matrix(3).T
        if (delta2 @ basis != 0).any():
            raise ValueError("supplied cochains are not cocycles")
        # mod-2 bound is cheap; fall back to a large prime only on mismatch
        b2_upper = betti_mod_p(C, 2, p=2)
        if basis.shape[1] != b2_upper:
            b2_upper = betti_mod_p(C, 2)
        if basis.shape[1] != b2_upper:
            raise ValueError(
                f"supplied {basis.shape[1]} cocycles but dim H^2 <= {b2_upper}"
            )
    b = basis.shape[1]
    Q = np.zeros((b, b), dtype=object)
    for i in range(b):
        for j in range(i, b):
            Q[i, j] = Q[j, i] = cup_eval(C, basis[:, i], 2, basis[:, j], 2)
    if cocycles is not None and b > 0:
        if _det_fraction(Q) == 0:
            raise ValueError("supplied cocycles are rationally dependent in H^2")
    return {"matrix": Q, "basis": basis}


def intersection_bplus(C: SimplicialComplex, cocycles=None) -> dict:
    """Positive/negative inertia of the rational intersection form."""
    Q = intersection_form(C, cocycles)["matrix"]
    pos, neg, null = rational_inertia(Q)
    if null:
        raise ValueError("intersection form degenerate: basis does not span H^2")
    return {"bplus": pos, "bminus": neg}


def rational_inertia(Q) -> tuple[int, int, int]:
    """(positive, negative, null) inertia of a symmetric matrix, exact."""
    A = to_fraction_matrix(Q)
    n = len(A)
    pos = neg = 0
    idx = list(range(n))
    i = 0
    while i < n:
        if A[i][i] == 0:
            j = next((j for j in range(i + 1, n) if A[j][j] != 0), None)
            if j is not None:
                A[i], A[j] = A[j], A[i]
                for row in A:
                    row[i], row[j] = row[j], row[i]
            else:
                j = next((j for j in range(i + 1, n) if A[i][j] != 0), None)
                if j is None:
                    i += 1
                    continue
                # hyperbolic pair: add row/col j into i to expose a square
                for c in range(n):
                    A[i][c] += A[j][c]
                for r in range(n):
                    A[r][i] += A[r][j]
        d = A[i][i]
        if d > 0:
            pos += 1
        else:
            neg += 1
        for r in range(i + 1, n):
            f = A[r][i] / d
            if f:
                for c in range(n):
                    A[r][c] -= f * A[i][c]
        for c in range(i + 1, n):
            f = A[i][c] / d
            if f:
                for r in range(n):
                    A[r][c] -= f * A[r][i]
        i += 1
    return pos, neg, n - pos - neg


def _det_fraction(Q) -> Fraction:
    A = to_fraction_matrix(Q)
    n = len(A)
    det = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if A[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            A[c], A[p] = A[p], A[c]
            det = -det
        det *= A[c][c]
        for i in range(c + 1, n):
            f = A[i][c] / A[c][c]
            if f:
                A[i] = [x - f * y for x, y in zip(A[i], A[c])]
    return det


_DEFAULT_PRIME = 2_147_483_647


def betti_mod_p(cx: SimplicialComplex, k: int, p: int = _DEFAULT_PRIME) -> int:
    """dim H_k(cx, F_p); an upper bound for the rational Betti number.

    Fast numpy elimination mod p; used to certify spanning sets on
    complexes too large for exact SNF.
    """
    nk = len(cx.faces(k))
    rk = _rank_mod_p(cx.boundary_matrix(k), p) if k >= 1 else 0
    rk1 = _rank_mod_p(cx.boundary_matrix(k + 1), p) if k < cx.dimension else 0
    return nk - rk - rk1


def _rank_mod_p(M, p: int) -> int:
    if p == 2:
        return _rank_gf2(M)
    A = np.array(M, dtype=np.int64) % p
    if A.size == 0:
        return 0
    m, n = A.shape
    rank = 0
    for c in range(n):
        piv = None
        for r in range(rank, m):
            if A[r, c]:
                piv = r
                break
        if piv is None:
            continue
        A[[rank, piv]] = A[[piv, rank]]
        inv = pow(int(A[rank, c]), p - 2, p)
        A[rank] = (A[rank] * inv) % p
        # safe in int64: residues are < p and p^2 < 2^63
        factors = A[rank + 1:, c]
        A[rank + 1:] = (A[rank + 1:] - factors[:, None] * A[rank]) % p
        rank += 1
        if rank == m:
            break
    return rank


def _rank_gf2(M) -> int:
    """GF(2) rank via Python-int bitset elimination (fast for sparse M)."""
    A = np.asarray(M)
    if A.size == 0:
        return 0
    pivots = {}
    for r in range(A.shape[0]):
        cols = np.nonzero(A[r] % 2)[0]
        x = 0
        for c in cols:
            x |= 1 << int(c)
        while x:
            low = (x & -x).bit_length() - 1
            piv = pivots.get(low)
            if piv is None:
                pivots[low] = x
                break
            x ^= piv
    return len(pivots)

"""Symplectic linear algebra for boundary values of compact pairs.

For a compact oriented 4-complex C with boundary 3-complex L, the cup
product puts a symplectic form on H^2(L) x H^1(L); the images of the
restriction maps H^2(C) -> H^2(L) and H^1(C) -> H^1(L) span a Lagrangian
subspace.  Everything here is exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .complexes import SimplicialComplex
from .exact import nullspace, quotient_basis, rank, rref, solve_exact
from .forms import perm_sign
from .homology import CupPairing, cochain_pullback, cup_pairing

__all__ = [
    "SymplecticSpace",
    "BoundaryData",
    "is_lagrangian",
    "boundary_data",
    "les_exactness_report",
    "parse_boundary_map",
    "load_boundary_map",
    "RationalCohomology",
]


# -- rational cohomology of a cochain complex -----------------------------------------


class RationalCohomology:
    """Cohomology over Q of an integer cochain complex, with explicit
    representative cocycles and exact coordinates of arbitrary cocycles.

    deltas[k] is the coboundary matrix C^k -> C^{k+1}; missing keys mean
    a zero map.
    """

    def __init__(self, deltas: dict, dims: dict):
        self.deltas = {k: np.asarray(m, dtype=object) for k, m in deltas.items()}
        self.dims = dims
        self._basis = {}

    @classmethod
    def absolute(cls, cx: SimplicialComplex) -> "RationalCohomology":
        n = cx.dimension
        deltas = {k: cx.boundary_matrix(k + 1).T.astype(object) for k in range(n)}
        dims = {k: len(cx.faces(k)) for k in range(n + 1)}
        return cls(deltas, dims)

    @classmethod
    def relative(cls, C: SimplicialComplex, L: SimplicialComplex,
                 vertex_map: dict) -> "RationalCohomology":
        """Cochains of C vanishing on the image of L (an injective
        simplicial inclusion), with the restricted coboundary."""
        n = C.dimension
        keep = {k: _off_subcomplex(C, L, vertex_map, k) for k in range(n + 1)}
        deltas = {
            k: C.boundary_matrix(k + 1).T.astype(object)[np.ix_(keep[k + 1], keep[k])]
            for k in range(n)
        }
        dims = {k: len(keep[k]) for k in range(n + 1)}
        out = cls(deltas, dims)
        out.keep = keep
        return out

    def delta(self, k: int):
        if k in self.deltas:
            return self.deltas[k]
        rows = self.dims.get(k + 1, 0)
        return np.zeros((rows, self.dims.get(k, 0)), dtype=object)

    def basis(self, k: int):
        """Matrix (n_k x b_k, Fractions) of representative cocycles."""
        if k not in self._basis:
            nk = self.dims.get(k, 0)
            if nk == 0:
                self._basis[k] = np.zeros((0, 0), dtype=object)
            else:
                kern = nullspace(self.delta(k))
                Z = np.array(kern, dtype=object).T if kern else \
                    np.zeros((nk, 0), dtype=object)
                B = self.delta(k - 1)
                picks = quotient_basis(Z, B)
                self._basis[k] = Z[:, picks] if picks else \
                    np.zeros((nk, 0), dtype=object)
        return self._basis[k]

    def betti(self, k: int) -> int:
        return self.basis(k).shape[1]

    def coordinates(self, k: int, cocycles) -> np.ndarray:
        """Exact H^k coordinates of the columns of `cocycles`.

        Raises ValueError if a column is not a cocycle class in the span
        (cannot happen for images of chain maps).
        """
        Z = np.asarray(cocycles, dtype=object)
        if Z.ndim == 1:
            Z = Z.reshape(-1, 1)
        b = self.basis(k)
        if b.shape[1] == 0:
            if Z.shape[1] == 0:
                return np.zeros((0, 0), dtype=object)
            sol_chk = solve_exact(self.delta(k - 1), Z)
            if sol_chk is None:
                raise ValueError("cocycle not in the coboundary span")
            return np.zeros((0, Z.shape[1]), dtype=object)
        aug = np.concatenate([b, self.delta(k - 1)], axis=1)
        sol = solve_exact(aug, Z)
        if sol is None:
            raise ValueError("vector is not a cocycle class of this complex")
        return np.array(sol, dtype=object)[: b.shape[1], :]


def _image_faces(L: SimplicialComplex, vertex_map: dict, k: int) -> set:
    out = set()
    for f in L.faces(k):
        img = tuple(sorted(vertex_map[v] for v in f))
        if len(set(img)) != k + 1:
            raise ValueError("boundary map is not injective on simplices")
        out.add(img)
    return out


def _off_subcomplex(C, L, vertex_map, k) -> list:
    img = _image_faces(L, vertex_map, k) if k <= L.dimension else set()
    return [i for i, f in enumerate(C.faces(k)) if f not in img]


# -- symplectic space and the Lagrangian test ------------------------------------------


@dataclass
class SymplecticSpace:
    """H^2(L) + H^1(L) with the block off-diagonal cup pairing
    [[0, M], [-M^T, 0]]."""

    pairing: np.ndarray
    block: np.ndarray
    cup: CupPairing

    def __post_init__(self):
        J = np.asarray(self.pairing, dtype=object)
        n = J.shape[0]
        if n % 2:
            raise ValueError("symplectic space must be even-dimensional")
        if np.any(J + J.T != 0):
            raise ValueError("pairing is not antisymmetric")
        if n and rank(J) != n:
            raise ValueError("pairing is degenerate")

    @property
    def dimension(self) -> int:
        return self.pairing.shape[0]

    @property
    def m(self) -> int:
        return self.dimension // 2

    @classmethod
    def from_complex(cls, L: SimplicialComplex) -> "SymplecticSpace":
        cp = cup_pairing(L)
        M = np.asarray(cp.matrix, dtype=object)
        b2, b1 = M.shape
        J = np.zeros((b2 + b1, b2 + b1), dtype=object)
        J[:b2, b2:] = M
        J[b2:, :b2] = -M.T
        return cls(pairing=J, block=M, cup=cp)


def is_lagrangian(W, S: SymplecticSpace) -> bool:
    """True iff the columns of W span an isotropic, half-dimensional
    subspace of S (exact rational arithmetic)."""
    W = np.asarray(W, dtype=object)
    if W.ndim == 1:
        W = W.reshape(-1, 1)
    if W.shape[0] != S.dimension:
        raise ValueError("vectors do not live in the symplectic space")
    if W.shape[1] == 0 or W.size == 0:
        return S.m == 0
    if np.any(W.T @ S.pairing @ W != 0):
        return False
    return rank(W) == S.m


# -- boundary data ----------------------------------------------------------------


@dataclass
class BoundaryData:
    """Restriction maps on cohomology, in the symplectic basis of the
    boundary: alpha on H^2, beta on H^1 (columns = images of the interior
    basis classes)."""

    alpha: np.ndarray
    beta: np.ndarray
    space: SymplecticSpace
    les: dict

    def lagrangian_candidate(self) -> np.ndarray:
        """Block-diagonal spanning set of Im alpha + Im beta."""
        b2 = self.space.block.shape[0]
        b1 = self.space.block.shape[1]
        na, nb = self.alpha.shape[1], self.beta.shape[1]
        W = np.zeros((b2 + b1, na + nb), dtype=object)
        W[:b2, :na] = self.alpha
        W[b2:, na:] = self.beta
        return W

    def is_lagrangian(self) -> bool:
        return is_lagrangian(self.lagrangian_candidate(), self.space)


def _check_boundary_map(C: SimplicialComplex, L: SimplicialComplex,
                        vertex_map: dict):
    if set(vertex_map.keys()) != set(range(L.n_vertices)) and \
            len(vertex_map) != len({v for s in L.simplices for v in s}):
        raise ValueError("boundary map must cover the vertices of L")
    if len(set(vertex_map.values())) != len(vertex_map):
        raise ValueError("boundary map must be injective")
    boundary = {f for f, _, _ in C.boundary_facets()}
    image = set()
    for s in L.simplices:
        img = tuple(sorted(vertex_map[v] for v in s))
        if len(set(img)) != len(img):
            raise ValueError("boundary map collapses a simplex")
        image.add(img)
    if image != boundary:
        raise ValueError("L does not map onto the boundary of C")
    # orientation: induced boundary orientation must match L's
    induced = {}
    for f, _, sign in C.boundary_facets():
        induced[f] = sign
    for s in L.simplices:
        img = tuple(vertex_map[v] for v in s)
        if perm_sign(img) != induced[tuple(sorted(img))]:
            raise ValueError("orientation mismatch between L and the "
                             "boundary of C")


def _cohomology_maps(C: SimplicialComplex, L: SimplicialComplex,
                     vertex_map: dict):
    HC = RationalCohomology.absolute(C)
    HL = RationalCohomology.absolute(L)
    Hrel = RationalCohomology.relative(C, L, vertex_map)
    return HC, HL, Hrel


def boundary_data(C: SimplicialComplex, L: SimplicialComplex,
                  vertex_map: dict, selfdual=None) -> BoundaryData:
    """Restriction maps alpha: H^2(C) -> H^2(L), beta: H^1(C) -> H^1(L)
    in the symplectic basis of the boundary, plus the long-exact-sequence
    report of the pair.

    By default alpha is the full restriction image; `selfdual` (a matrix
    of H^2(C) coordinate columns) restricts the domain to a prescribed
    subspace.
    """
    _check_boundary_map(C, L, vertex_map)
    space = SymplecticSpace.from_complex(L)
    HC = RationalCohomology.absolute(C)
    HL = RationalCohomology.absolute(L)

    def restricted(k: int, basisL) -> np.ndarray:
        reps = HC.basis(k)
        cols = []
        for j in range(reps.shape[1]):
            cols.append(cochain_pullback(vertex_map, L, C, reps[:, j], k))
        Z = np.array(cols, dtype=object).T if cols else \
            np.zeros((len(L.faces(k)), 0), dtype=object)
        # coordinates in the prescribed (cup-pairing) basis of H^k(L)
        aug = np.concatenate(
            [np.asarray(basisL, dtype=object),
             L.boundary_matrix(k).T.astype(object)], axis=1)
        if Z.shape[1] == 0:
            return np.zeros((basisL.shape[1], 0), dtype=object)
        sol = solve_exact(aug, Z)
        if sol is None:
            raise ValueError("restriction image escaped H^k(L)")
        return np.array(sol, dtype=object)[: basisL.shape[1], :]

    alpha = restricted(2, np.asarray(space.cup.basis2, dtype=object))
    beta = restricted(1, np.asarray(space.cup.basis1, dtype=object))
    if selfdual is not None:
        sd = np.asarray(selfdual, dtype=object)
        if sd.shape[0] != alpha.shape[1]:
            raise ValueError("self-dual subspace matrix has wrong height")
        alpha = alpha @ sd
    les = les_exactness_report(C, L, vertex_map)
    if not les["exact"]:
        raise ValueError("long exact sequence of the pair failed to verify")
    return BoundaryData(alpha=alpha, beta=beta, space=space, les=les)


def les_exactness_report(C: SimplicialComplex, L: SimplicialComplex,
                         vertex_map: dict) -> dict:
    """Verify im = ker (exact over Q) at every node of the cohomology
    long exact sequence of the pair: ... -> H^k(C,L) -> H^k(C) -> H^k(L)
    -> H^{k+1}(C,L) -> ...
    """
    HC, HL, Hrel = _cohomology_maps(C, L, vertex_map)
    n = C.dimension
    keep = Hrel.keep
    img_faces = {k: _image_faces(L, vertex_map, k) for k in range(L.dimension + 1)}
    inv_map = {c: l for l, c in vertex_map.items()}

    def j_map(k: int) -> np.ndarray:
        """H^k(C,L) -> H^k(C): extend relative cocycles by zero."""
        reps = Hrel.basis(k)
        full = np.zeros((HC.dims[k], reps.shape[1]), dtype=object)
        full[keep[k], :] = reps
        return HC.coordinates(k, full)

    def i_map(k: int) -> np.ndarray:
        """H^k(C) -> H^k(L): restriction along the inclusion."""
        reps = HC.basis(k)
        cols = [cochain_pullback(vertex_map, L, C, reps[:, j], k)
                for j in range(reps.shape[1])]
        Z = np.array(cols, dtype=object).T if cols else \
            np.zeros((HL.dims.get(k, 0), reps.shape[1]), dtype=object)
        return HL.coordinates(k, Z)

    def d_map(k: int) -> np.ndarray:
        """Connecting H^k(L) -> H^{k+1}(C,L): extend, coboundary, restrict."""
        reps = HL.basis(k)
        fidxC = C.face_index(k)
        Lfaces = L.faces(k)
        ext = np.zeros((HC.dims[k], reps.shape[1]), dtype=object)
        for i, f in enumerate(Lfaces):
            img = tuple(vertex_map[v] for v in f)
            key = tuple(sorted(img))
            ext[fidxC[key], :] = perm_sign(img) * reps[i, :]
        dc = HC.delta(k) @ ext
        rel = dc[keep[k + 1], :]
        return Hrel.coordinates(k + 1, rel)

    # assemble the sequence: spaces and maps in order
    spaces = []
    maps = []
    for k in range(n + 1):
        spaces.append(("Hrel", k, Hrel.betti(k)))
        maps.append(("j", k, j_map(k)))
        spaces.append(("HC", k, HC.betti(k)))
        maps.append(("i", k, i_map(k)))
        spaces.append(("HL", k, HL.betti(k) if k <= L.dimension else 0))
        if k < n:
            maps.append(("d", k, d_map(k)))
    nodes = []
    ok = True
    for idx in range(1, len(spaces) - 1):
        fin = maps[idx - 1][2]
        fout = maps[idx][2]
        dim_here = spaces[idx][2]
        comp_zero = not (fin.size and fout.size and np.any(fout @ fin != 0))
        r_in = rank(fin) if fin.size else 0
        r_out = rank(fout) if fout.size else 0
        exact_here = comp_zero and (r_in + r_out == dim_here)
        ok = ok and exact_here
        nodes.append({"space": spaces[idx][:2], "dim": dim_here,
                      "rank_in": r_in, "rank_out": r_out, "exact": exact_here})
    # end nodes: the sequence starts at H^0(C,L) (preceded by 0) and ends
    # at H^n(L) (followed by 0 since L has dimension n-1)
    first = {"space": spaces[0][:2], "dim": spaces[0][2], "rank_in": 0,
             "rank_out": rank(maps[0][2]) if maps[0][2].size else 0}
    first["exact"] = first["rank_out"] == first["dim"]
    last = maps[-1][2]
    last_node = {"space": spaces[-1][:2], "dim": spaces[-1][2],
                 "rank_in": rank(last) if last.size else 0, "rank_out": 0}
    last_node["exact"] = last_node["rank_in"] == last_node["dim"]
    ok = ok and first["exact"] and last_node["exact"]
    nodes = [first] + nodes + [last_node]
    return {"exact": ok, "nodes": nodes}


# -- boundary map files -------------------------------------------------------------


def parse_boundary_map(text: str) -> dict:
    """Parse `b vertex_in_L vertex_in_C` lines into a dict."""
    out = {}
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.split("#")[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != "b" or len(parts) != 3:
            raise ValueError(f"line {ln}: expected 'b vertex_in_L vertex_in_C'")
        try:
            lv, cv = int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ValueError(f"line {ln}: non-integer vertex id") from exc
        if lv in out:
            raise ValueError(f"line {ln}: duplicate L vertex {lv}")
        out[lv] = cv
    return out


def load_boundary_map(path) -> dict:
    with open(path) as fh:
        return parse_boundary_map(fh.read())

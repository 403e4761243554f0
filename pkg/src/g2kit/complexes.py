"""Simplicial complexes: validation, faces, orientation, builders.

Top simplices are stored as ordered vertex tuples; the tuple order *is*
the orientation (even permutations of a tuple describe the same oriented
simplex).  Lower-dimensional faces are always identified with their
sorted vertex tuple.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations, permutations, product

import numpy as np

from .forms import perm_sign

__all__ = [
    "SimplicialComplex",
    "OrientationError",
    "full_simplex",
    "sphere_complex",
    "circle_complex",
    "freudenthal_torus",
    "simplicial_product",
    "barycentric_subdivision",
    "rp3_complex",
]


class OrientationError(ValueError):
    pass


class SimplicialComplex:
    """A pure k-dimensional simplicial complex given by its top simplices."""

    def __init__(self, n_vertices: int, simplices, validate: bool = True):
        simplices = [tuple(int(v) for v in s) for s in simplices]
        if not simplices:
            raise ValueError("a complex needs at least one top simplex")
        k = len(simplices[0]) - 1
        for s in simplices:
            if len(s) != k + 1:
                raise ValueError("top simplices must all have the same dimension")
            if len(set(s)) != len(s):
                raise ValueError(f"degenerate simplex {s}")
            if not all(0 <= v < n_vertices for v in s):
                raise ValueError(f"vertex id out of range in {s}")
        keys = {tuple(sorted(s)) for s in simplices}
        if len(keys) != len(simplices):
            raise ValueError("duplicate top simplex")
        self.n_vertices = n_vertices
        self.dimension = k
        self.simplices = simplices
        self._faces = {}
        if validate:
            self.validate()

    # -- faces ---------------------------------------------------------------

    def faces(self, j: int) -> list:
        """Sorted j-faces in lexicographic order."""
        if j < 0 or j > self.dimension:
            return []
        if j not in self._faces:
            out = set()
            for s in self.simplices:
                out.update(combinations(sorted(s), j + 1))
            self._faces[j] = sorted(out)
        return self._faces[j]

    def face_index(self, j: int) -> dict:
        return {f: i for i, f in enumerate(self.faces(j))}

    def euler_characteristic(self) -> int:
        return sum((-1) ** j * len(self.faces(j)) for j in range(self.dimension + 1))

    @property
    def edges(self) -> list:
        return self.faces(1)

    # -- orientation / validation --------------------------------------------

    def facet_incidence(self) -> dict:
        """Map sorted facet -> [(simplex index, induced sign), ...].

        The induced sign is relative to the sorted facet tuple.
        """
        inc = {}
        for si, s in enumerate(self.simplices):
            base = perm_sign(s)
            ss = tuple(sorted(s))
            for j in range(len(ss)):
                facet = ss[:j] + ss[j + 1:]
                sign = base * (-1 if j % 2 else 1)
                inc.setdefault(facet, []).append((si, sign))
        return inc

    def validate(self):
        inc = self.facet_incidence()
        for facet, hits in inc.items():
            if len(hits) > 2:
                raise ValueError(f"facet {facet} shared by {len(hits)} top simplices")
            if len(hits) == 2 and hits[0][1] == hits[1][1]:
                raise OrientationError(
                    f"inconsistent orientation across facet {facet} "
                    f"(simplices {hits[0][0]} and {hits[1][0]})"
                )

    def is_closed(self) -> bool:
        return all(len(h) == 2 for h in self.facet_incidence().values())

    def boundary_facets(self) -> list:
        """(facet, simplex index, induced sign) for facets hit exactly once."""
        return [
            (facet, hits[0][0], hits[0][1])
            for facet, hits in sorted(self.facet_incidence().items())
            if len(hits) == 1
        ]

    def boundary_complex(self) -> "SimplicialComplex":
        """The (k-1)-complex of boundary facets with the induced orientation."""
        tops = []
        for facet, _, sign in self.boundary_facets():
            if sign < 0:
                facet = facet[:-2] + (facet[-1], facet[-2])
            tops.append(facet)
        if not tops:
            raise ValueError("complex is closed; no boundary")
        return SimplicialComplex(self.n_vertices, tops)

    # -- chain complex ---------------------------------------------------------

    def boundary_matrix(self, j: int) -> np.ndarray:
        """The boundary map C_j -> C_{j-1} over the sorted-face bases (int)."""
        rows = self.face_index(j - 1)
        cols = self.faces(j)
        M = np.zeros((len(rows), len(cols)), dtype=np.int64)
        for ci, f in enumerate(cols):
            for p in range(len(f)):
                sub = f[:p] + f[p + 1:]
                M[rows[sub], ci] = -1 if p % 2 else 1
        return M

    def fundamental_cycle(self) -> np.ndarray:
        """Coefficients of the top-simplex sum over the sorted top-face basis."""
        idx = self.face_index(self.dimension)
        z = np.zeros(len(idx), dtype=np.int64)
        for s in self.simplices:
            z[idx[tuple(sorted(s))]] += perm_sign(s)
        return z

    def relabeled(self, mapping: dict) -> "SimplicialComplex":
        """Apply a vertex bijection (dict old -> new)."""
        n = self.n_vertices
        tops = [tuple(mapping[v] for v in s) for s in self.simplices]
        return SimplicialComplex(n, tops)


def orient(n_vertices: int, simplices) -> SimplicialComplex:
    """Flip top simplices as needed to get a consistent orientation.

    Raises OrientationError for non-orientable complexes.  The first
    simplex's given orientation is kept.
    """
    tops = [tuple(s) for s in simplices]
    cx = SimplicialComplex(n_vertices, tops, validate=False)
    inc = cx.facet_incidence()
    neighbors = {}
    for hits in inc.values():
        if len(hits) == 2:
            (a, sa), (b, sb) = hits
            neighbors.setdefault(a, []).append((b, sa * sb))
            neighbors.setdefault(b, []).append((a, sa * sb))
    flip = [None] * len(tops)
    for start in range(len(tops)):
        if flip[start] is not None:
            continue
        flip[start] = False
        stack = [start]
        while stack:
            cur = stack.pop()
            for nb, rel in neighbors.get(cur, []):
                # rel == +1 means the two agree across the facet only if
                # exactly one of them is flipped
                want = flip[cur] if rel < 0 else not flip[cur]
                if flip[nb] is None:
                    flip[nb] = want
                    stack.append(nb)
                elif flip[nb] != want:
                    raise OrientationError("complex is not orientable")
    fixed = [
        s[:-2] + (s[-1], s[-2]) if fl else s
        for s, fl in zip(tops, flip)
    ]
    return SimplicialComplex(n_vertices, fixed)


# -- builders -----------------------------------------------------------------


def full_simplex(k: int) -> SimplicialComplex:
    """The solid k-simplex (a model of the disk D^k)."""
    return SimplicialComplex(k + 1, [tuple(range(k + 1))])


def sphere_complex(k: int) -> SimplicialComplex:
    """S^k as the boundary of the (k+1)-simplex."""
    return full_simplex(k + 1).boundary_complex()


def circle_complex(n: int = 3) -> SimplicialComplex:
    """S^1 as an n-gon (n >= 3 for simpliciality)."""
    if n < 3:
        raise ValueError("need at least 3 vertices")
    return SimplicialComplex(n, [(i, (i + 1) % n) for i in range(n)])


def freudenthal_torus(k: int, n: int = 3):
    """The k-torus on an n^k grid, Kuhn-triangulated, consistently oriented.

    Returns (complex, grid) where grid maps vertex id -> k-tuple of grid
    coordinates.  Requires n >= 3 so distinct grid edges stay distinct.
    """
    if n < 3:
        raise ValueError("n >= 3 required for a simplicial torus")
    coords = list(product(range(n), repeat=k))
    vid = {c: i for i, c in enumerate(coords)}
    tops = []
    for base in coords:
        for sigma in permutations(range(k)):
            verts = [base]
            cur = list(base)
            for d in sigma:
                cur[d] = (cur[d] + 1) % n
                verts.append(tuple(cur))
            tup = tuple(vid[v] for v in verts)
            if perm_sign(sigma) < 0:
                tup = tup[:-2] + (tup[-1], tup[-2])
            tops.append(tup)
    cx = SimplicialComplex(len(coords), tops)
    grid = {i: c for c, i in vid.items()}
    return cx, grid


def simplicial_product(K: SimplicialComplex, L: SimplicialComplex):
    """Staircase triangulation of |K| x |L|.

    Vertices are pairs ordered lexicographically; top simplices are the
    monotone staircases through sigma x tau.  Returns (complex, pairs)
    with pairs mapping product-vertex id -> (vertex in K, vertex in L).
    """
    nv = K.n_vertices * L.n_vertices

    def pid(u, v):
        return u * L.n_vertices + v

    p, q = K.dimension, L.dimension
    tops = []
    for s in K.simplices:
        a = tuple(sorted(s))
        sign_s = perm_sign(s)
        for t in L.simplices:
            b = tuple(sorted(t))
            sign_t = perm_sign(t)
            for positions in combinations(range(p + q), p):
                # monotone path: step in K at these positions, in L otherwise
                path = [(0, 0)]
                i = j = 0
                shuffle_perm = []
                for step in range(p + q):
                    if step in positions:
                        i += 1
                        shuffle_perm.append(step)
                    else:
                        j += 1
                    path.append((i, j))
                # shuffle sign: parity of the (p,q)-shuffle
                order = list(positions) + [x for x in range(p + q) if x not in positions]
                sign = perm_sign(order) * sign_s * sign_t
                tup = tuple(pid(a[i], b[j]) for (i, j) in path)
                if sign < 0:
                    tup = tup[:-2] + (tup[-1], tup[-2])
                tops.append(tup)
    cx = SimplicialComplex(nv, tops)
    pairs = {pid(u, v): (u, v) for u in range(K.n_vertices) for v in range(L.n_vertices)}
    return cx, pairs


def barycentric_subdivision(cx: SimplicialComplex):
    """Barycentric subdivision; returns (complex, cells) with cells mapping
    new vertex id -> the sorted face of cx it is the barycenter of."""
    cells = []
    cell_id = {}
    for j in range(cx.dimension + 1):
        for f in cx.faces(j):
            cell_id[f] = len(cells)
            cells.append(f)
    tops = []
    for s in cx.simplices:
        ss = tuple(sorted(s))
        base = perm_sign(s)
        for perm in permutations(ss):
            chain = [tuple(sorted(perm[: i + 1])) for i in range(len(perm))]
            tup = tuple(cell_id[c] for c in chain)
            sign = base * perm_sign(perm)
            if sign < 0:
                tup = tup[:-2] + (tup[-1], tup[-2])
            tops.append(tup)
    return SimplicialComplex(len(cells), tops), {i: c for i, c in enumerate(cells)}


def rp3_complex() -> SimplicialComplex:
    """Real projective 3-space.

    Built as the antipodal quotient of the barycentric subdivision of the
    boundary of the 4-dimensional cross-polytope (one subdivision makes the
    free antipodal action simplicial).
    """
    # vertices of the cross-polytope boundary: +e_i -> i, -e_i -> 4 + i
    tops = []
    for signs in product((0, 1), repeat=4):
        tops.append(tuple(4 * s + i for i, s in enumerate(signs)))
    s3 = orient(8, tops)
    sd, cells = barycentric_subdivision(s3)

    def antipode_vertex(v):
        return (v + 4) % 8

    cell_id = {c: i for i, c in enumerate(cells.values())}
    orbit = {}
    rep = {}
    next_id = 0
    for i, c in cells.items():
        anti = tuple(sorted(antipode_vertex(v) for v in c))
        key = min(c, anti)
        if key not in rep:
            rep[key] = next_id
            next_id += 1
        orbit[i] = rep[key]
    seen = set()
    quot_tops = []
    for s in sd.simplices:
        tup = tuple(orbit[v] for v in s)
        key = tuple(sorted(tup))
        if key in seen:
            continue
        seen.add(key)
        quot_tops.append(tup)
    return orient(next_id, quot_tops)

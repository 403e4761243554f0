"""U(1) lattice gauge fields on simplicial meshes and on the cubical
7-torus lattice.

Connections are real angles per oriented edge; reversing an edge negates
the angle.  Curvature keeps a (principal value, winding) pair so Chern
sums are exact integers.  Self-dual/anti-self-dual splitting works on a
per-simplex constant 2-form reconstructed from incident face values by a
fixed least-squares stencil.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .complexes import SimplicialComplex
from .forms import AlternatingForm, basis_indices, merge_sign, perm_sign, wedge
from .g2core import G2Structure
from .mesh import ImmersedMesh, TWO_PI

__all__ = [
    "LatticeConnection",
    "CurvatureField",
    "load_connection",
    "save_connection",
    "parse_connection",
    "curvature",
    "holonomy",
    "sd_split",
    "CubicalLattice7",
    "lattice_curvature",
    "uniform_flux_connection",
    "dt_residual",
    "wedge_theta_matrix",
    "theta_kernel_basis",
]


def principal_value(x):
    """Wrap into (-pi, pi]."""
    return -np.mod(-np.asarray(x) + math.pi, TWO_PI) + math.pi


@dataclass
class LatticeConnection:
    """Angles over the sorted edge list of a simplicial complex."""

    complex: SimplicialComplex
    angles: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        if self.angles.shape != (len(self.complex.edges),):
            raise ValueError("need one angle per edge")
        self._eidx = self.complex.face_index(1)

    @classmethod
    def zero(cls, cx: SimplicialComplex) -> "LatticeConnection":
        return cls(cx, np.zeros(len(cx.edges)))

    @classmethod
    def random(cls, cx: SimplicialComplex, amplitude: float, rng) -> "LatticeConnection":
        return cls(cx, amplitude * rng.standard_normal(len(cx.edges)))

    def angle(self, tail: int, head: int) -> float:
        if tail < head:
            return float(self.angles[self._eidx[(tail, head)]])
        return -float(self.angles[self._eidx[(head, tail)]])

    def gauge_transformed(self, potential) -> "LatticeConnection":
        """angle(u, v) -> angle(u, v) + potential[v] - potential[u]."""
        potential = np.asarray(potential, dtype=float)
        new = self.angles.copy()
        for i, (u, v) in enumerate(self.complex.edges):
            new[i] += potential[v] - potential[u]
        return LatticeConnection(self.complex, new)


def parse_connection(text: str, cx: SimplicialComplex) -> LatticeConnection:
    angles = np.zeros(len(cx.edges))
    eidx = cx.face_index(1)
    seen = set()
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != "e" or len(parts) != 4:
            raise ValueError(f"bad connection line: {line!r}")
        tail, head = int(parts[1]), int(parts[2])
        a = float(parts[3])
        key = tuple(sorted((tail, head)))
        if key not in eidx:
            raise ValueError(f"edge {key} not in the mesh")
        if key in seen:
            raise ValueError(f"duplicate edge {key}")
        seen.add(key)
        angles[eidx[key]] = a if tail < head else -a
    return LatticeConnection(cx, angles)


def load_connection(path, cx: SimplicialComplex) -> LatticeConnection:
    with open(path) as fh:
        return parse_connection(fh.read(), cx)


def save_connection(conn: LatticeConnection, path):
    lines = [
        f"e {u} {v} {conn.angles[i]:.17g}"
        for i, (u, v) in enumerate(conn.complex.edges)
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass
class CurvatureField:
    """Per-2-face curvature: raw boundary sum, principal value, winding."""

    complex: SimplicialComplex
    raw: np.ndarray
    principal: np.ndarray
    winding: np.ndarray


def face_sums(conn: LatticeConnection) -> np.ndarray:
    """Raw boundary sums of the connection over sorted 2-faces.

    Exactly gauge invariant (vertex potentials telescope around the
    triangle).
    """
    cx = conn.complex
    out = np.empty(len(cx.faces(2)))
    for fi, (i, j, k) in enumerate(cx.faces(2)):
        out[fi] = conn.angle(j, k) - conn.angle(i, k) + conn.angle(i, j)
    return out


def curvature(conn: LatticeConnection) -> CurvatureField:
    raw = face_sums(conn)
    principal = principal_value(raw)
    winding = np.rint((raw - principal) / TWO_PI).astype(np.int64)
    return CurvatureField(conn.complex, raw, principal, winding)


def holonomy(conn: LatticeConnection, loop) -> float:
    """Signed angle sum around a closed vertex path, in (-pi, pi]."""
    loop = list(loop)
    if loop[0] != loop[-1]:
        raise ValueError("path is not closed")
    if len(loop) < 2:
        raise ValueError("empty loop")
    total = sum(conn.angle(a, b) for a, b in zip(loop, loop[1:]))
    return float(principal_value(total))


# -- self-dual / anti-self-dual splitting --------------------------------------------


@lru_cache(maxsize=None)
def _reconstruction_pinv(k: int):
    """Pseudo-inverse of the face-integral stencil in local coordinates.

    Local coordinates place simplex vertex 0 at the origin and vertex a at
    e_a; a constant 2-form integrates over the face at positions
    (alpha, beta, gamma) to (1/2) w(p_beta - p_alpha, p_gamma - p_alpha).
    """
    pts = np.vstack([np.zeros(k), np.eye(k)])
    pairs = basis_indices(k, 2)
    triples = list(combinations(range(k + 1), 3))
    A = np.zeros((len(triples), len(pairs)))
    for r, (al, be, ga) in enumerate(triples):
        u = pts[be] - pts[al]
        v = pts[ga] - pts[al]
        for c, (a, b) in enumerate(pairs):
            # local pair index shift: coordinates are 1..k, pairs over 0..k-1
            A[r, c] = 0.5 * (u[a] * v[b] - u[b] * v[a])
    return triples, np.linalg.pinv(A)


def simplex_two_forms(values: np.ndarray, cx: SimplicialComplex) -> np.ndarray:
    """Least-squares constant 2-form per top simplex from 2-face values.

    values is indexed by the sorted 2-face list; returns (n_simplices,
    C(k,2)) local coefficients in each simplex's own frame.
    """
    k = cx.dimension
    triples, pinv = _reconstruction_pinv(k)
    fidx = cx.face_index(2)
    ns = len(cx.simplices)
    rhs = np.empty((ns, len(triples)))
    for si, s in enumerate(cx.simplices):
        for r, (al, be, ga) in enumerate(triples):
            tri = (s[al], s[be], s[ga])
            rhs[si, r] = perm_sign(tri) * values[fidx[tuple(sorted(tri))]]
    return rhs @ pinv.T


def _lambda2_gram(ginv: np.ndarray) -> np.ndarray:
    """Induced metric on local 2-forms from per-simplex inverse metrics."""
    pairs = basis_indices(ginv.shape[-1], 2)
    G = np.empty(ginv.shape[:-2] + (len(pairs), len(pairs)))
    for i, (a, b) in enumerate(pairs):
        for j, (c, d) in enumerate(pairs):
            G[..., i, j] = ginv[..., a, c] * ginv[..., b, d] - ginv[..., a, d] * ginv[..., b, c]
    return G


def _star2_4d(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-simplex Hodge star on local 2-forms of a 4-simplex.

    Returns (star matrices, Lambda^2 Gram matrices) for a batch of 4x4
    pullback metrics g.
    """
    ginv = np.linalg.inv(g)
    G2 = _lambda2_gram(ginv)
    vol = np.sqrt(np.linalg.det(g))
    pairs = basis_indices(4, 2)
    pidx = {p: i for i, p in enumerate(pairs)}
    S = np.zeros_like(G2)
    for i, p in enumerate(pairs):
        comp = tuple(sorted(set(range(4)) - set(p)))
        sign, _ = merge_sign(p, comp)
        S[..., pidx[comp], :] += sign * G2[..., i, :]
    return S * vol[..., None, None], G2


def sd_split(values, mesh: ImmersedMesh, structure: G2Structure) -> dict:
    """Split a 2-face field on a 4-mesh into self-dual/anti-self-dual parts.

    values may be a CurvatureField (its principal part is used) or an
    array over sorted 2-faces.  Self-duality is taken with respect to the
    metric pulled back from the ambient structure.  Returns aggregate L2
    norms; per simplex the split is exactly Pythagorean.
    """
    if mesh.dimension != 4:
        raise ValueError("sd_split needs a 4-mesh")
    if isinstance(values, CurvatureField):
        values = values.principal
    F = simplex_two_forms(np.asarray(values, dtype=float), mesh.complex)
    d = mesh.differentials()
    G = structure.metric.matrix
    g = np.einsum("sia,ij,sjb->sab", d, G, d)
    S, G2 = _star2_4d(g)
    Fp = 0.5 * (F + np.einsum("sij,sj->si", S, F))
    Fm = F - Fp
    vols = np.sqrt(np.linalg.det(g)) / 24.0
    plus = np.einsum("si,sij,sj->s", Fp, G2, Fp)
    minus = np.einsum("si,sij,sj->s", Fm, G2, Fm)
    return {
        "Fplus_norm": float(np.sqrt(np.sum(plus * vols))),
        "Fminus_norm": float(np.sqrt(np.sum(minus * vols))),
        "per_simplex": (plus, minus, vols),
    }


# -- the cubical 7-torus lattice --------------------------------------------------


class CubicalLattice7:
    """Periodic n^7 grid with spacing 2*pi/n; edges along the 7 axes.

    Connections over the lattice are arrays of shape (n^7, 7): the angle
    on the edge from a site to its +mu neighbor.
    """

    def __init__(self, n: int = 4):
        if n < 2:
            raise ValueError("need n >= 2")
        self.n = n
        self.spacing = TWO_PI / n
        self.n_sites = n**7
        shape = (n,) * 7
        idx = np.arange(self.n_sites).reshape(shape)
        self.coords = np.stack(np.unravel_index(np.arange(self.n_sites), shape), axis=1)
        self.neighbor = np.empty((self.n_sites, 7), dtype=np.int64)
        self.neighbor_down = np.empty((self.n_sites, 7), dtype=np.int64)
        for mu in range(7):
            self.neighbor[:, mu] = np.roll(idx, -1, axis=mu).reshape(-1)
            self.neighbor_down[:, mu] = np.roll(idx, 1, axis=mu).reshape(-1)

    def zero_connection(self) -> np.ndarray:
        return np.zeros((self.n_sites, 7))

    def random_connection(self, amplitude: float, rng) -> np.ndarray:
        return amplitude * rng.standard_normal((self.n_sites, 7))

    def gauge_transform(self, a: np.ndarray, potential: np.ndarray) -> np.ndarray:
        out = a.copy()
        for mu in range(7):
            out[:, mu] += potential[self.neighbor[:, mu]] - potential
        return out


_PAIRS7 = basis_indices(7, 2)


def lattice_curvature(lat: CubicalLattice7, a: np.ndarray) -> dict:
    """Plaquette field and its vertex-averaged principal-value version.

    plaquette[x, (mu,nu)] is the raw boundary sum of the plaquette based
    at x; averaged[x] is the mean of the principal values of the four
    plaquettes touching the site x, one per quadrant.
    """
    a = np.asarray(a, dtype=float)
    raw = np.empty((lat.n_sites, len(_PAIRS7)))
    for c, (mu, nu) in enumerate(_PAIRS7):
        raw[:, c] = (
            a[:, mu]
            + a[lat.neighbor[:, mu], nu]
            - a[lat.neighbor[:, nu], mu]
            - a[:, nu]
        )
    principal = principal_value(raw)
    winding = np.rint((raw - principal) / TWO_PI).astype(np.int64)
    averaged = np.empty_like(principal)
    for c, (mu, nu) in enumerate(_PAIRS7):
        p = principal[:, c]
        down_mu = p[lat.neighbor_down[:, mu]]
        down_nu = p[lat.neighbor_down[:, nu]]
        down_both = p[lat.neighbor_down[lat.neighbor_down[:, mu], nu]]
        averaged[:, c] = 0.25 * (p + down_mu + down_nu + down_both)
    return {"raw": raw, "principal": principal, "winding": winding, "averaged": averaged}


def uniform_flux_connection(lat: CubicalLattice7, k_pairs: dict) -> np.ndarray:
    """Connection with exactly uniform plaquette curvature.

    k_pairs maps index pairs (mu, nu), mu < nu, to integers k; the flux
    per (mu,nu)-plaquette is 2*pi*k/n^2 (the torus quantization), with the
    transition twist placed on the mu = n-1 seam.  Requires |flux| < pi.
    """
    a = lat.zero_connection()
    n = lat.n
    x = lat.coords
    for (mu, nu), k in k_pairs.items():
        if not (0 <= mu < nu < 7):
            raise ValueError("pairs must be increasing (mu < nu)")
        phi = TWO_PI * int(k) / n**2
        if abs(phi) >= math.pi:
            raise ValueError("flux quantum too large for the principal branch")
        a[:, nu] += phi * x[:, mu]
        seam = x[:, mu] == n - 1
        a[seam, mu] -= phi * n * x[seam, nu]
    return a


def wedge_theta_matrix(structure: G2Structure) -> np.ndarray:
    """Brute-force 7x21 matrix of (.)^Theta: Lambda^2 -> Lambda^6."""
    cols = []
    for (mu, nu) in _PAIRS7:
        w = wedge(AlternatingForm.basis(7, (mu, nu)), structure.theta)
        cols.append(w.coeffs.astype(float))
    return np.array(cols).T


def theta_kernel_basis(structure: G2Structure) -> np.ndarray:
    """Integer basis (21 x 14) of the kernel of wedging with Theta.

    Computed exactly from the integer wedge matrix; rows follow the
    increasing-pair basis of Lambda^2.
    """
    from .exact import nullspace

    W = np.rint(wedge_theta_matrix(structure)).astype(np.int64)
    Wf = wedge_theta_matrix(structure)
    if not np.allclose(W, Wf, atol=1e-12):
        raise ValueError("Theta is not integral; no exact kernel basis")
    basis = nullspace(W)
    out = np.zeros((len(_PAIRS7), len(basis)), dtype=np.int64)
    for j, v in enumerate(basis):
        scale = 1
        for f in v:
            scale = scale * f.denominator // math.gcd(scale, f.denominator)
        for i, f in enumerate(v):
            out[i, j] = int(f * scale)
    return out


def _wedge3_theta(structure: G2Structure) -> np.ndarray:
    """21x7 table: top coefficient of e_(mu,nu) ^ e_rho ^ Theta."""
    out = np.zeros((len(_PAIRS7), 7))
    for c, (mu, nu) in enumerate(_PAIRS7):
        two = AlternatingForm.basis(7, (mu, nu))
        for rho in range(7):
            if rho in (mu, nu):
                continue
            w = wedge(wedge(two, AlternatingForm.basis(7, (rho,))), structure.theta)
            out[c, rho] = float(w.coeffs[0])
    return out


def dt_residual(lat: CubicalLattice7, a: np.ndarray, structure: G2Structure) -> float:
    """Aggregate L2 norm of (averaged curvature) ^ Theta over all sites.

    Zero iff the site-averaged flux lies pointwise in the kernel of
    wedging with Theta.
    """
    F = lattice_curvature(lat, a)["averaged"]
    W = wedge_theta_matrix(structure)
    G = F @ W.T  # (sites, 7) six-form coefficients
    cell = lat.spacing**7
    return float(np.sqrt(np.sum(G * G) * cell))


def eval_phiDT_lattice(lat: CubicalLattice7, a: np.ndarray, b: np.ndarray,
                       structure: G2Structure) -> float:
    """The DT one-form: sitewise (F_bar ^ B_bar ^ Theta) summed over M.

    F_bar is the 4-plaquette average, B_bar the 2-edge average; the
    symmetric stencils make the underlying bilinear form in (a, b)
    exactly symmetric, hence the one-form exactly closed.
    """
    b = np.asarray(b, dtype=float)
    F = lattice_curvature(lat, a)["averaged"]
    Bbar = 0.5 * (b + b[lat.neighbor_down[:, np.arange(7)], np.arange(7)])
    W3 = _wedge3_theta(structure)
    cell = lat.spacing**7
    return float(np.einsum("xc,cr,xr->", F, W3, Bbar) * cell)

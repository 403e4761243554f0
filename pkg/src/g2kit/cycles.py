"""Configuration space of immersed meshes with U(1) connections.

The one-form on configuration space is realized as the exact gradient of
a discrete potential, so it is closed at machine precision; the flow
descends the aggregate residual R = coassoc^2 + |F^+|^2 with a
backtracking line search and the endpoint census quotients by torus
translations and gauge transformations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np
import torch

from .complexes import SimplicialComplex
from .exact import rref
from .forms import AlternatingForm, basis_indices, merge_sign, perm_sign, pullback
from .g2core import G2Structure, standard_omega
from .gauge import (
    CubicalLattice7,
    LatticeConnection,
    _reconstruction_pinv,
    eval_phiDT_lattice,
)
from .mesh import ImmersedMesh, TWO_PI, wrap_to_pi

__all__ = [
    "Configuration",
    "TangentVector",
    "eval_phi0",
    "eval_phiA",
    "eval_phiDT",
    "psi0_potential",
    "psi0",
    "closedness_check",
    "FlowResult",
    "flow_run",
    "morse_velocity",
    "residual_R",
    "count_hslag",
    "coassociative_coordinate_planes",
]

torch.set_default_dtype(torch.float64)


@dataclass
class Configuration:
    """A point of the configuration space: immersion plus connection."""

    mesh: ImmersedMesh
    connection: LatticeConnection

    def __post_init__(self):
        if self.connection.complex is not self.mesh.complex:
            if self.connection.complex.simplices != self.mesh.complex.simplices:
                raise ValueError("connection lives on a different complex")

    @classmethod
    def flat(cls, mesh: ImmersedMesh) -> "Configuration":
        return cls(mesh, LatticeConnection.zero(mesh.complex))

    def shifted(self, t: "TangentVector", h: float = 1.0) -> "Configuration":
        mesh = ImmersedMesh(self.mesh.complex, self.mesh.positions + h * t.v,
                            self.mesh.windings)
        conn = LatticeConnection(self.connection.complex,
                                 self.connection.angles + h * t.b)
        return Configuration(mesh, conn)


@dataclass
class TangentVector:
    """(normal field per vertex, per-edge connection perturbation)."""

    v: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        self.b = np.asarray(self.b, dtype=float)

    @classmethod
    def random(cls, cfg: Configuration, rng, amplitude: float = 1.0) -> "TangentVector":
        nv = cfg.mesh.complex.n_vertices
        ne = len(cfg.mesh.complex.edges)
        return cls(amplitude * rng.standard_normal((nv, 7)),
                   amplitude * rng.standard_normal(ne))

    def norm(self) -> float:
        return math.sqrt(float(np.sum(self.v**2) + np.sum(self.b**2)))

    def __add__(self, other):
        return TangentVector(self.v + other.v, self.b + other.b)

    def scaled(self, s: float):
        return TangentVector(s * self.v, s * self.b)


# -- static per-complex tables -------------------------------------------------------


class _MeshTables:
    """Index tables shared by every torch evaluation on one complex."""

    def __init__(self, cx: SimplicialComplex):
        k = cx.dimension
        self.dim = k
        self.sims = torch.tensor(np.array(cx.simplices), dtype=torch.long)
        eidx = cx.face_index(1)
        # face boundary edges: value(ijk) = a(jk) - a(ik) + a(ij)
        fe = []
        for (i, j, k2) in cx.faces(2):
            fe.append([eidx[(j, k2)], eidx[(i, k2)], eidx[(i, j)]])
        self.face_edges = torch.tensor(fe, dtype=torch.long)
        self.face_signs = torch.tensor([1.0, -1.0, 1.0])
        # per-simplex 2-face gather with orientation sign
        fidx = cx.face_index(2)
        triples = list(combinations(range(k + 1), 3))
        gf, gs = [], []
        for s in cx.simplices:
            row_f, row_s = [], []
            for (al, be, ga) in triples:
                tri = (s[al], s[be], s[ga])
                row_f.append(fidx[tuple(sorted(tri))])
                row_s.append(perm_sign(tri))
            gf.append(row_f)
            gs.append(row_s)
        self.simplex_faces = torch.tensor(gf, dtype=torch.long)
        self.simplex_face_signs = torch.tensor(gs, dtype=torch.double)
        _, pinv = _reconstruction_pinv(k)
        self.pinv = torch.tensor(pinv)
        if k == 4:
            pairs = basis_indices(4, 2)
            C = np.zeros((6, 6))
            for i, p in enumerate(pairs):
                comp = tuple(sorted(set(range(4)) - set(p)))
                sign, _ = merge_sign(p, comp)
                C[i, pairs.index(comp)] = sign
            self.pair_complement = torch.tensor(C)
        # edge endpoints for 1-form transfer
        self.edges = torch.tensor(np.array(cx.edges), dtype=torch.long)


@lru_cache(maxsize=32)
def _tables_for(cx_id: int, cx_ref=None) -> _MeshTables:
    return _MeshTables(cx_ref)


def _tables(cx: SimplicialComplex) -> _MeshTables:
    return _tables_for(id(cx), cx)


def _omega_terms(structure: G2Structure):
    idx, coef = [], []
    for pos, I in enumerate(basis_indices(7, 3)):
        c = float(structure.omega.coeffs[pos])
        if c != 0.0:
            idx.append(I)
            coef.append(c)
    return torch.tensor(idx, dtype=torch.long), torch.tensor(coef)


def _form3_apply(idx, coef, u, v, w):
    """Batched evaluation of a constant 3-form on vector triples."""
    ui, uj, uk = u[..., idx[:, 0]], u[..., idx[:, 1]], u[..., idx[:, 2]]
    vi, vj, vk = v[..., idx[:, 0]], v[..., idx[:, 1]], v[..., idx[:, 2]]
    wi, wj, wk = w[..., idx[:, 0]], w[..., idx[:, 1]], w[..., idx[:, 2]]
    det = (ui * (vj * wk - vk * wj)
           - uj * (vi * wk - vk * wi)
           + uk * (vi * wj - vj * wi))
    return det @ coef


def _lift_shifts(mesh: ImmersedMesh) -> np.ndarray:
    """Integer 2*pi-multiples lifting each simplex, shape (ns, k+1, 7)."""
    sims = np.array(mesh.complex.simplices)
    p = mesh.positions[sims]  # (ns, k+1, 7)
    raw = p[:, 1:, :] - p[:, :1, :]
    shifts = np.zeros_like(p)
    shifts[:, 1:, :] = np.rint((wrap_to_pi(raw) - raw) / TWO_PI)
    if mesh.windings is not None:
        shifts += mesh.windings[:, None, :]
    return shifts


def _lifted_torch(x: torch.Tensor, tables: _MeshTables, shifts: np.ndarray):
    p = x[tables.sims] + TWO_PI * torch.tensor(shifts)
    d = p[:, 1:, :] - p[:, :1, :]
    bary = p.mean(dim=1)
    return p, d, bary


def _fhat_torch(angles: torch.Tensor, tables: _MeshTables) -> torch.Tensor:
    """Per-simplex constant curvature 2-form from raw face sums."""
    fv = (angles[tables.face_edges] * tables.face_signs).sum(dim=1)
    rhs = fv[tables.simplex_faces] * tables.simplex_face_signs
    return rhs @ tables.pinv.T


def _psi_torch(x: torch.Tensor, angles: torch.Tensor, mesh: ImmersedMesh,
               structure: G2Structure) -> torch.Tensor:
    """The discrete local potential on 4-mesh configurations.

    Psi = sum over simplices of (1/24) (f* rho)(barycenter) ^ Fhat, with
    rho = iota_P Omega / 3 a fixed primitive of the 3-form (d rho =
    Omega); the potential depends on the deterministic simplex lifts.
    """
    tables = _tables(mesh.complex)
    if tables.dim != 4:
        raise ValueError("the potential lives on 4-mesh configurations")
    idx, coef = _omega_terms(structure)
    shifts = _lift_shifts(ImmersedMesh(mesh.complex, np.asarray(x.detach()),
                                       mesh.windings))
    p, d, bary = _lifted_torch(x, tables, shifts)
    pairs = basis_indices(4, 2)
    rho = torch.stack(
        [_form3_apply(idx, coef, bary, d[:, a, :], d[:, b, :]) / 3.0
         for (a, b) in pairs], dim=1)
    fhat = _fhat_torch(angles, tables)
    psi_per = (rho @ tables.pair_complement * fhat).sum(dim=1) / 24.0
    return psi_per.sum()


def psi0_potential(cfg: Configuration, structure: G2Structure) -> float:
    """Value of the local potential at a configuration."""
    x = torch.tensor(cfg.mesh.positions)
    a = torch.tensor(cfg.connection.angles)
    return float(_psi_torch(x, a, cfg.mesh, structure))


def eval_phi0(cfg: Configuration, t: TangentVector, structure: G2Structure) -> float:
    """The closed one-form on 4-mesh configurations, evaluated on t.

    Implemented as the exact gradient of the discrete potential, so the
    form is closed to machine precision and vanishes identically at
    calibrated immersions with flat connections.
    """
    if cfg.mesh.dimension != 4:
        raise ValueError("expected a 4-mesh configuration")
    x = torch.tensor(cfg.mesh.positions, requires_grad=True)
    a = torch.tensor(cfg.connection.angles, requires_grad=True)
    psi = _psi_torch(x, a, cfg.mesh, structure)
    gx, ga = torch.autograd.grad(psi, [x, a])
    return float((gx * torch.tensor(t.v)).sum() + (ga * torch.tensor(t.b)).sum())


def eval_phiA(cfg: Configuration, t: TangentVector, structure: G2Structure) -> float:
    """The one-form on 3-mesh configurations: F ^ B plus the chi pairing.

    Vanishes for all tangents exactly when the connection is flat and the
    pulled-back associator chi restricts to zero.
    """
    mesh = cfg.mesh
    if mesh.dimension != 3:
        raise ValueError("expected a 3-mesh configuration")
    cx = mesh.complex
    tables = _tables(cx)
    angles = torch.tensor(cfg.connection.angles)
    fhat = _fhat_torch(angles, tables).numpy()  # (ns, 3) pairs of R^3
    # edge-interpolated local 1-form per simplex: least squares over the
    # 6 local edges
    bbar = _local_one_forms(cfg, tables)
    # wedge in local coordinates: (F ^ B)_{123}
    pairs = basis_indices(3, 2)
    wedge_fb = np.zeros(len(cx.simplices))
    for i, (p, q) in enumerate(pairs):
        r = ({0, 1, 2} - {p, q}).pop()
        sign, _ = merge_sign((p, q), (r,))
        wedge_fb += sign * fhat[:, i] * bbar[:, r]
    total = float(np.sum(wedge_fb) / 6.0)

    d = mesh.differentials()
    gmat = structure.metric.matrix
    chi_pull = np.empty((len(cx.simplices), 7))
    for m in range(7):
        cm = AlternatingForm(7, 3, structure.chi[m])
        chi_pull[:, m] = [
            cm(d[s, :, 0], d[s, :, 1], d[s, :, 2]) for s in range(d.shape[0])
        ]
    vbar = np.mean(t.v[np.array(cx.simplices)], axis=1)  # (ns, 7)
    total += float(np.einsum("sm,mn,sn->", chi_pull, gmat, vbar) / 6.0)
    return total


def _local_one_forms(cfg: Configuration, tables: _MeshTables) -> np.ndarray:
    """Per-simplex constant 1-form coefficients from edge values."""
    k = tables.dim
    cx = cfg.mesh.complex
    eidx = cx.face_index(1)
    pts = np.vstack([np.zeros(k), np.eye(k)])
    pairs = list(combinations(range(k + 1), 2))
    A = np.array([pts[b] - pts[a] for (a, b) in pairs])
    pinv = np.linalg.pinv(A)
    ns = len(cx.simplices)
    rhs = np.empty((ns, len(pairs)))
    for si, s in enumerate(cx.simplices):
        for r, (a, b) in enumerate(pairs):
            u, v = s[a], s[b]
            val = cfg.connection.angles[eidx[tuple(sorted((u, v)))]]
            rhs[si, r] = val if u < v else -val
    return rhs @ pinv.T


def eval_phiDT(lat: CubicalLattice7, a: np.ndarray, b: np.ndarray,
               structure: G2Structure) -> float:
    """The DT one-form on lattice connections (exactly closed)."""
    return eval_phiDT_lattice(lat, a, b, structure)


# -- closedness and the potential along paths -----------------------------------------


def closedness_check(functional: str, c, d1, d2, h: float,
                     structure: G2Structure) -> float:
    """Antisymmetrized finite-difference exterior derivative of a one-form.

    Central differences in both directions; O(h^2) for smooth one-forms,
    exactly zero (up to round-off) for closed ones built as gradients.
    """
    if h < 1e-8:
        raise ValueError("step underflow: h < 1e-8 rejected")
    if functional == "phi0":
        evaluate = lambda cfg, t: eval_phi0(cfg, t, structure)
        shift = lambda cfg, t, s: cfg.shifted(t, s)
    elif functional == "phiA":
        evaluate = lambda cfg, t: eval_phiA(cfg, t, structure)
        shift = lambda cfg, t, s: cfg.shifted(t, s)
    elif functional == "phiDT":
        lat, a0 = c
        evaluate = lambda a, t: eval_phiDT(lat, a, t, structure)
        shift = lambda a, t, s: a + s * t
        c = a0
    else:
        raise ValueError(f"unknown one-form {functional!r}")
    f = evaluate
    t1 = (f(shift(c, d1, h), d2) - f(shift(c, d1, -h), d2)) / (2 * h)
    t2 = (f(shift(c, d2, h), d1) - f(shift(c, d2, -h), d1)) / (2 * h)
    return t1 - t2


def psi0(path, structure: G2Structure) -> float:
    """Trapezoid line integral of the one-form along a configuration path."""
    path = list(path)
    if len(path) < 2:
        return 0.0
    total = 0.0
    for c0, c1 in zip(path, path[1:]):
        dv = c1.mesh.positions - c0.mesh.positions
        db = c1.connection.angles - c0.connection.angles
        step = TangentVector(dv, db)
        scale = max(np.abs(dv).max(initial=0.0), np.abs(db).max(initial=0.0))
        if scale > _mesh_scale(c0.mesh) / 10:
            raise ValueError("path too coarse for the line integral")
        total += 0.5 * (eval_phi0(c0, step, structure) + eval_phi0(c1, step, structure))
    return total


def _mesh_scale(mesh: ImmersedMesh) -> float:
    d = mesh.differentials()
    return float(np.sqrt((d**2).sum(axis=1)).min())


# -- residual and flow ------------------------------------------------------------------


@lru_cache(maxsize=8)
def _minor_index(k: int, deg: int):
    idxs = basis_indices(k, deg)
    m = len(idxs)
    rows = torch.empty(m, m, deg, deg, dtype=torch.long)
    cols = torch.empty(m, m, deg, deg, dtype=torch.long)
    for a, I in enumerate(idxs):
        for b, J in enumerate(idxs):
            for r, i in enumerate(I):
                for c, j in enumerate(J):
                    rows[a, b, r, c] = i
                    cols[a, b, r, c] = j
    return rows, cols


def _lambda_gram_torch(ginv: torch.Tensor, k: int, deg: int) -> torch.Tensor:
    rows, cols = _minor_index(k, deg)
    sub = ginv[..., rows, cols]  # (..., m, m, deg, deg)
    if deg == 2:
        return (sub[..., 0, 0] * sub[..., 1, 1]
                - sub[..., 0, 1] * sub[..., 1, 0])
    return torch.det(sub)


def _residual_torch(x: torch.Tensor, angles: torch.Tensor, mesh: ImmersedMesh,
                    structure: G2Structure):
    tables = _tables(mesh.complex)
    idx, coef = _omega_terms(structure)
    shifts = _lift_shifts(ImmersedMesh(mesh.complex, np.asarray(x.detach()),
                                       mesh.windings))
    _, d, _ = _lifted_torch(x, tables, shifts)
    G = torch.tensor(structure.metric.matrix)
    g = torch.einsum("sai,ij,sbj->sab", d, G, d)
    ginv = torch.linalg.inv(g)
    detg = torch.linalg.det(g)
    vol = torch.sqrt(detg) / 24.0
    # pullback of the 3-form
    triples = basis_indices(4, 3)
    om = torch.stack(
        [_form3_apply(idx, coef, d[:, a, :], d[:, b, :], d[:, c, :])
         for (a, b, c) in triples], dim=1)
    G3 = _lambda_gram_torch(ginv, 4, 3)
    coassoc_sq = (torch.einsum("si,sij,sj->s", om, G3, om) * vol).sum()
    # self-dual curvature energy
    G2 = _lambda_gram_torch(ginv, 4, 2)
    pairs = basis_indices(4, 2)
    C = torch.zeros(6, 6)
    for i, p in enumerate(pairs):
        comp = tuple(sorted(set(range(4)) - set(p)))
        sign, _ = merge_sign(p, comp)
        C[pairs.index(comp), i] = sign
    star = torch.sqrt(detg)[:, None, None] * torch.einsum("ij,sjk->sik", C, G2)
    fhat = _fhat_torch(angles, tables)
    fplus = 0.5 * (fhat + torch.einsum("sij,sj->si", star, fhat))
    fplus_sq = (torch.einsum("si,sij,sj->s", fplus, G2, fplus) * vol).sum()
    return coassoc_sq, fplus_sq


def residual_R(cfg: Configuration, structure: G2Structure) -> dict:
    """R = coassoc^2 + |F^+|^2 with both pieces reported."""
    x = torch.tensor(cfg.mesh.positions)
    a = torch.tensor(cfg.connection.angles)
    cs, fs = _residual_torch(x, a, cfg.mesh, structure)
    return {"R": float(cs + fs), "coassoc": math.sqrt(max(float(cs), 0.0)),
            "Fplus_norm": math.sqrt(max(float(fs), 0.0))}


@dataclass
class FlowResult:
    trace: list
    final: Configuration
    converged: bool
    steps: int

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("step,R,coassoc,Fplus_norm,dt\n")
            for step, R, coassoc, fplus, dt in self.trace:
                fh.write(f"{step},{R:.17g},{coassoc:.17g},{fplus:.17g},{dt:.17g}\n")


def flow_run(cfg: Configuration, structure: G2Structure, dt: float = 0.05,
             max_steps: int = 10000, tol: float = 1e-8) -> FlowResult:
    """Monotone descent of R with backtracking and adaptive step growth.

    Accepted steps never increase R; the run converges when R < tol and
    reports divergence (without raising) if the step collapses below
    1e-12.
    """
    mesh = cfg.mesh
    x = torch.tensor(mesh.positions, requires_grad=True)
    a = torch.tensor(cfg.connection.angles, requires_grad=True)

    def value_and_grad():
        cs, fs = _residual_torch(x, a, mesh, structure)
        R = cs + fs
        gx, ga = torch.autograd.grad(R, [x, a])
        return float(R.detach()), float(cs.detach()), float(fs.detach()), gx, ga

    R, cs, fs, gx, ga = value_and_grad()
    trace = [(0, R, math.sqrt(max(cs, 0)), math.sqrt(max(fs, 0)), dt)]
    converged = R < tol
    step = 0
    prev = None  # (x, a, gx, ga) of the previous accepted iterate
    while not converged and step < max_steps:
        gnorm_sq = float((gx * gx).sum() + (ga * ga).sum())
        if gnorm_sq == 0.0:
            break
        if prev is not None:
            # Barzilai-Borwein trial step from the last accepted move
            px, pa, pgx, pga = prev
            sx, sa = x.detach() - px, a.detach() - pa
            yx, ya = gx - pgx, ga - pga
            sy = float((sx * yx).sum() + (sa * ya).sum())
            yy = float((yx * yx).sum() + (ya * ya).sum())
            if yy > 0 and sy > 0:
                dt = min(max(sy / yy, 1e-12), 1e3)
        prev = (x.detach().clone(), a.detach().clone(), gx.clone(), ga.clone())
        accepted = False
        while dt >= 1e-12:
            with torch.no_grad():
                xn = (x - dt * gx).detach().requires_grad_(True)
                an = (a - dt * ga).detach().requires_grad_(True)
            x_old, a_old = x, a
            x, a = xn, an
            Rn, csn, fsn, gxn, gan = value_and_grad()
            if Rn <= R:
                accepted = True
                R, cs, fs, gx, ga = Rn, csn, fsn, gxn, gan
                break
            x, a = x_old, a_old
            dt *= 0.5
        step += 1
        if not accepted:
            return FlowResult(trace, _to_config(x, a, cfg), False, step)
        trace.append((step, R, math.sqrt(max(cs, 0)), math.sqrt(max(fs, 0)), dt))
        converged = R < tol
    return FlowResult(trace, _to_config(x, a, cfg), converged, step)


def _to_config(x: torch.Tensor, a: torch.Tensor, template: Configuration) -> Configuration:
    mesh = ImmersedMesh(template.mesh.complex,
                        np.mod(np.asarray(x.detach()), TWO_PI),
                        template.mesh.windings)
    conn = LatticeConnection(template.connection.complex, np.asarray(a.detach()))
    return Configuration(mesh, conn)


def morse_velocity(cfg: Configuration, structure: G2Structure) -> TangentVector:
    """The formal flow velocity: vertex field from the dual of the
    pulled-back cross product wedged with curvature, edge field from the
    dual of the pulled-back 3-form.

    Transfer to vertices/edges uses volume-weighted averaging of the
    per-simplex values.
    """
    mesh = cfg.mesh
    cx = mesh.complex
    tables = _tables(cx)
    d = mesh.differentials()
    g = np.einsum("sia,ij,sjb->sab", d, structure.metric.matrix, d)
    detg = np.linalg.det(g)
    svol = np.sqrt(detg)
    vols = svol / 24.0
    fhat = _fhat_torch(torch.tensor(cfg.connection.angles), tables).numpy()
    pairs = basis_indices(4, 2)
    # xi pullback: (f* xi^m)_{ab} = xi^m(d_a, d_b)
    xi_pull = np.zeros((len(cx.simplices), 7, len(pairs)))
    for c, (i, j) in enumerate(basis_indices(7, 2)):
        coefs = structure.xi[:, c]  # (7,)
        for li, (a, b) in enumerate(pairs):
            wedge_ij = d[:, i, a] * d[:, j, b] - d[:, j, a] * d[:, i, b]
            xi_pull[:, :, li] += coefs[None, :] * wedge_ij[:, None]
    # (f* xi ^ Fhat) top coefficient, per ambient component
    C = np.zeros((len(pairs), len(pairs)))
    for i, p in enumerate(pairs):
        comp = tuple(sorted(set(range(4)) - set(p)))
        sign, _ = merge_sign(p, comp)
        C[i, pairs.index(comp)] = sign
    top = np.einsum("smi,ij,sj->sm", xi_pull, C, fhat)
    u = top / svol[:, None]  # hodge dual of a top form
    sims = np.array(cx.simplices)
    v = np.zeros((cx.n_vertices, 7))
    wsum = np.zeros(cx.n_vertices)
    for a in range(sims.shape[1]):
        np.add.at(v, sims[:, a], u * vols[:, None])
        np.add.at(wsum, sims[:, a], vols)
    v /= wsum[:, None]
    # edge velocity: star of the pulled-back 3-form, integrated over edges
    idx, coef = _omega_terms(structure)
    dt_ = torch.tensor(d)
    triples = basis_indices(4, 3)
    om = np.stack(
        [_form3_apply(idx, coef, dt_[:, :, a], dt_[:, :, b], dt_[:, :, c]).numpy()
         for (a, b, c) in triples], axis=1)
    ginv = np.linalg.inv(g)
    G3 = np.zeros((len(cx.simplices), 4, 4))
    for i, I in enumerate(triples):
        for j, J in enumerate(triples):
            G3[:, i, j] = np.linalg.det(ginv[:, list(I), :][:, :, list(J)])
    one = np.zeros((len(cx.simplices), 4))
    for i, I in enumerate(triples):
        r = (set(range(4)) - set(I)).pop()
        sign, _ = merge_sign(I, (r,))
        one[:, r] = sign * (G3[:, i, :] * om).sum(axis=1) * svol
    eidx = cx.face_index(1)
    b = np.zeros(len(cx.edges))
    bw = np.zeros(len(cx.edges))
    pts = np.vstack([np.zeros(4), np.eye(4)])
    for si, s in enumerate(cx.simplices):
        for a_, b_ in combinations(range(5), 2):
            u_, v_ = s[a_], s[b_]
            ei = eidx[tuple(sorted((u_, v_)))]
            val = one[si] @ (pts[b_] - pts[a_])
            if u_ > v_:
                val = -val
            b[ei] += val * vols[si]
            bw[ei] += vols[si]
    b /= np.maximum(bw, 1e-300)
    return TangentVector(v, b)


# -- census -------------------------------------------------------------------------


def coassociative_coordinate_planes(structure: G2Structure) -> list:
    """The coordinate 4-planes on which the 3-form restricts to zero."""
    out = []
    for plane in combinations(range(7), 4):
        A = np.zeros((7, 4))
        for r, c in enumerate(plane):
            A[c, r] = 1.0
        if pullback(A, structure.omega).is_zero(tol=1e-14):
            out.append(plane)
    return out


def _spanning_tree_potential(cx: SimplicialComplex, edge_values: np.ndarray,
                             width: int) -> np.ndarray:
    """Accumulate edge values along a BFS spanning tree from vertex 0."""
    adj = {}
    eidx = cx.face_index(1)
    for (u, v) in cx.edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    theta = np.zeros((cx.n_vertices, width))
    order = [0]
    seen = {0}
    qi = 0
    while qi < len(order):
        u = order[qi]
        qi += 1
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                val = edge_values[eidx[tuple(sorted((u, w)))]]
                theta[w] = theta[u] + (val if u < w else -val)
                order.append(w)
    return theta


def _winding_lattice_key(mesh: ImmersedMesh):
    """Canonical key for the homology class of the immersion.

    Fundamental 1-cycles of the complex map to integer winding vectors in
    the 7-torus; the rational row space of that collection, in reduced
    echelon form, is invariant under torus translations and under any
    deformation of the immersion that stays continuous.
    """
    cx = mesh.complex
    eidx = cx.face_index(1)
    disp = np.empty((len(cx.edges), 7))
    for (u, v) in cx.edges:
        disp[eidx[(u, v)]] = wrap_to_pi(mesh.positions[v] - mesh.positions[u])
    theta = _spanning_tree_potential(cx, disp, 7)
    rows = set()
    for (u, v) in cx.edges:
        w = (disp[eidx[(u, v)]] - (theta[v] - theta[u])) / TWO_PI
        wi = tuple(int(round(x)) for x in w)
        if any(wi):
            rows.add(wi)
    if not rows:
        return ()
    red, _ = rref(sorted(rows))
    return tuple(tuple(r) for r in red)


def _flux_key(cfg: Configuration):
    """Integer flux of the connection over each 2-face (gauge invariant)."""
    cx = cfg.mesh.complex
    eidx = cx.face_index(1)
    ang = cfg.connection.angles
    out = []
    for (i, j, k) in cx.faces(2):
        s = ang[eidx[(j, k)]] - ang[eidx[(i, k)]] + ang[eidx[(i, j)]]
        out.append(int(round(s / TWO_PI)))
    return tuple(out)


def _same_class(a: Configuration, b: Configuration, tol: float) -> bool:
    """Coarse census equivalence: identical homology class of the
    immersion and identical integer flux data of the connection.

    Both invariants are exact integers, constant along continuous
    deformations, and invariant under torus translations and gauge
    transformations, so every seed flowing into one basin lands in one
    class while tori wrapping different coordinate planes never merge.
    """
    del tol
    return (_winding_lattice_key(a.mesh) == _winding_lattice_key(b.mesh)
            and _flux_key(a) == _flux_key(b))


def count_hslag(seeds, structure: G2Structure, dt: float = 0.05,
                max_steps: int = 10000, tol: float = 1e-8,
                cluster_tol: float = 1e-4) -> dict:
    """Flow every seed to a critical point and cluster the endpoints.

    Endpoints are identified by exact discrete invariants (homology class
    of the immersion and integer face fluxes of the connection), which
    are constant on connected critical manifolds and invariant under
    torus translations and gauge transformations. Unsigned
    multiplicities; non-converged runs are reported separately.
    """
    classes = []
    failures = 0
    for seed in seeds:
        res = flow_run(seed, structure, dt=dt, max_steps=max_steps, tol=tol)
        if not res.converged:
            failures += 1
            continue
        for cls in classes:
            if _same_class(cls["representative"], res.final, cluster_tol):
                cls["multiplicity"] += 1
                break
        else:
            classes.append({"representative": res.final, "multiplicity": 1})
    return {"classes": classes, "non_converged": failures}

"""Immersed simplicial meshes in the flat 7-torus.

Positions are per-vertex points of (R/2pi Z)^7.  Each simplex is lifted
to R^7 by the minimal-image rule: every coordinate difference to the
first vertex is wrapped into (-pi, pi), plus an optional per-simplex
integer winding shift of the whole lift.  All simplices are affine, so
integrals of constant-coefficient forms are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import forms
from .complexes import OrientationError, SimplicialComplex, barycentric_subdivision
from .forms import AlternatingForm, basis_indices
from .g2core import G2Structure

__all__ = [
    "ImmersedMesh",
    "MeshFormatError",
    "load_mesh",
    "save_mesh",
    "parse_mesh",
    "immersion_pullback",
    "calibration_residuals",
    "slice_volume_check",
    "torus_mesh",
]

TWO_PI = 2.0 * math.pi


class MeshFormatError(ValueError):
    pass


def wrap_to_pi(x):
    """Wrap into (-pi, pi]."""
    return np.mod(np.asarray(x) + math.pi, TWO_PI) - math.pi


@dataclass
class ImmersedMesh:
    """A simplicial complex immersed in T^7 (or pure topology without
    positions)."""

    complex: SimplicialComplex
    positions: np.ndarray | None = None
    windings: np.ndarray | None = None

    def __post_init__(self):
        if self.positions is not None:
            self.positions = np.asarray(self.positions, dtype=float)
            if self.positions.shape != (self.complex.n_vertices, 7):
                raise ValueError("positions must be (n_vertices, 7)")
        if self.windings is not None:
            self.windings = np.asarray(self.windings, dtype=np.int64)
            if self.windings.shape != (len(self.complex.simplices), 7):
                raise ValueError("windings must be (n_simplices, 7)")

    @property
    def dimension(self) -> int:
        return self.complex.dimension

    def has_positions(self) -> bool:
        return self.positions is not None

    # -- geometry ------------------------------------------------------------

    def differentials(self) -> np.ndarray:
        """Per-simplex edge matrix D, shape (n_simplices, 7, k).

        Column a is the lifted displacement from the simplex's first vertex
        to vertex a+1, in tuple (orientation) order.
        """
        if self.positions is None:
            raise ValueError("mesh carries no positions")
        sims = np.array(self.complex.simplices)
        p0 = self.positions[sims[:, 0]]  # (ns, 7)
        diffs = self.positions[sims[:, 1:]] - p0[:, None, :]  # (ns, k, 7)
        d = wrap_to_pi(diffs)
        if np.any(np.isclose(np.abs(d), math.pi, atol=1e-9)):
            raise ValueError(
                "a simplex edge spans half the torus; lift is ambiguous "
                "(refine the mesh)"
            )
        return np.transpose(d, (0, 2, 1))  # (ns, 7, k)

    def lifted_vertices(self) -> np.ndarray:
        """Per-simplex lifted vertex positions, shape (ns, k+1, 7)."""
        sims = np.array(self.complex.simplices)
        p0 = self.positions[sims[:, 0]].copy()
        if self.windings is not None:
            p0 += TWO_PI * self.windings
        d = np.transpose(self.differentials(), (0, 2, 1))  # (ns, k, 7)
        return np.concatenate([p0[:, None, :], p0[:, None, :] + d], axis=1)

    def gram(self) -> np.ndarray:
        d = self.differentials()
        return np.einsum("sia,sib->sab", d, d)

    def volumes(self) -> np.ndarray:
        """Simplex k-volumes sqrt(det(D^T D)) / k!."""
        g = self.gram()
        det = np.linalg.det(g)
        if np.any(det <= 0):
            raise ValueError("degenerate simplex differential")
        return np.sqrt(det) / math.factorial(self.dimension)

    def total_volume(self) -> float:
        # fixed summation order keeps results bit-reproducible
        return float(np.sum(self.volumes()))

    def validate_geometry(self):
        self.volumes()

    def translated(self, t) -> "ImmersedMesh":
        pos = self.positions + np.asarray(t, dtype=float)
        return ImmersedMesh(self.complex, pos, self.windings)


# -- file format ---------------------------------------------------------------


def parse_mesh(text: str) -> ImmersedMesh:
    """Parse the line-oriented mesh format.

    header: `dim k nverts nsimp`; vertex lines `v [x0 ... x6]`; simplex
    lines `s i0 ... ik [w0 ... w6]`; `#` starts a comment.
    """
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise MeshFormatError("empty mesh file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "dim":
        raise MeshFormatError("header must be 'dim k nverts nsimp'")
    try:
        k, nverts, nsimp = (int(x) for x in head[1:])
    except ValueError as exc:
        raise MeshFormatError(f"bad header: {exc}") from None
    verts = []
    have_coords = None
    simps = []
    winds = []
    for line in lines[1:]:
        parts = line.split()
        if parts[0] == "v":
            coords = parts[1:]
            if coords and len(coords) != 7:
                raise MeshFormatError(f"vertex line needs 0 or 7 coordinates: {line!r}")
            this_has = bool(coords)
            if have_coords is None:
                have_coords = this_has
            elif have_coords != this_has:
                raise MeshFormatError("mixed vertex lines with and without coordinates")
            try:
                verts.append([float(c) for c in coords] if coords else [])
            except ValueError:
                raise MeshFormatError(f"bad vertex line: {line!r}") from None
        elif parts[0] == "s":
            body = parts[1:]
            if len(body) == k + 1:
                w = [0] * 7
            elif len(body) == k + 8:
                w = body[k + 1:]
            else:
                raise MeshFormatError(f"bad simplex line: {line!r}")
            try:
                simps.append([int(x) for x in body[: k + 1]])
                winds.append([int(x) for x in w])
            except ValueError:
                raise MeshFormatError(f"bad simplex line: {line!r}") from None
        else:
            raise MeshFormatError(f"unknown record {parts[0]!r}")
    if len(verts) != nverts:
        raise MeshFormatError(f"expected {nverts} vertices, found {len(verts)}")
    if len(simps) != nsimp:
        raise MeshFormatError(f"expected {nsimp} simplices, found {len(simps)}")
    cx = SimplicialComplex(nverts, simps)
    if have_coords:
        mesh = ImmersedMesh(cx, np.array(verts), np.array(winds, dtype=np.int64))
        mesh.validate_geometry()
        return mesh
    return ImmersedMesh(cx)


def load_mesh(path) -> ImmersedMesh:
    with open(path) as fh:
        return parse_mesh(fh.read())


def save_mesh(mesh: ImmersedMesh, path):
    lines = [f"dim {mesh.dimension} {mesh.complex.n_vertices} {len(mesh.complex.simplices)}"]
    for i in range(mesh.complex.n_vertices):
        if mesh.positions is None:
            lines.append("v")
        else:
            lines.append("v " + " ".join(f"{x:.17g}" for x in mesh.positions[i]))
    for si, s in enumerate(mesh.complex.simplices):
        line = "s " + " ".join(str(v) for v in s)
        if mesh.windings is not None and np.any(mesh.windings[si]):
            line += " " + " ".join(str(int(w)) for w in mesh.windings[si])
        lines.append(line)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# -- pullbacks and residuals -----------------------------------------------------


def pullback_coefficients(mesh: ImmersedMesh, a: AlternatingForm) -> np.ndarray:
    """Coefficients of the per-simplex pullback of a constant form.

    Result has shape (n_simplices, C(k, a.degree)); exact for affine
    simplices.  Degree above k gives an empty coefficient block.
    """
    if a.dim != 7:
        raise ValueError("form must live on R^7")
    k = mesh.dimension
    deg = a.degree
    if deg > k:
        return np.zeros((len(mesh.complex.simplices), 0))
    d = mesh.differentials()  # (ns, 7, k)
    outs = basis_indices(k, deg)
    ns = d.shape[0]
    res = np.zeros((ns, len(outs)))
    for p, I in enumerate(basis_indices(7, deg)):
        c = float(a.coeffs[p])
        if c == 0.0:
            continue
        for q, J in enumerate(outs):
            sub = d[:, I, :][:, :, J]  # (ns, deg, deg)
            res[:, q] += c * np.linalg.det(sub)
    return res


def immersion_pullback(mesh: ImmersedMesh, a: AlternatingForm) -> list:
    """Per-simplex pullback as AlternatingForm objects on R^k."""
    coeffs = pullback_coefficients(mesh, a)
    k = mesh.dimension
    return [AlternatingForm(k, min(a.degree, k + 1 if a.degree > k else a.degree), c)
            if a.degree <= k else AlternatingForm.zero(k, a.degree)
            for c in coeffs]


def integrate_pullback(mesh: ImmersedMesh, a: AlternatingForm) -> float:
    """Integral of the pullback of a top-degree-matching constant form."""
    if a.degree != mesh.dimension:
        raise ValueError("form degree must equal the mesh dimension")
    coeffs = pullback_coefficients(mesh, a)  # (ns, 1)
    return float(np.sum(coeffs[:, 0]) / math.factorial(mesh.dimension))


def _form_norms_sq(mesh: ImmersedMesh, coeffs: np.ndarray, degree: int) -> np.ndarray:
    """Pullback-metric norms squared of per-simplex constant forms."""
    g = mesh.gram()
    ginv = np.linalg.inv(g)
    idxs = basis_indices(mesh.dimension, degree)
    nb = len(idxs)
    G = np.empty((g.shape[0], nb, nb))
    for i, I in enumerate(idxs):
        for j, J in enumerate(idxs):
            G[:, i, j] = np.linalg.det(ginv[:, I, :][:, :, J])
    return np.einsum("si,sij,sj->s", coeffs, G, coeffs)


def calibration_residuals(mesh: ImmersedMesh, structure: G2Structure) -> dict:
    """Coassociative/associative residuals, volume, and calibration defect.

    4-meshes: coassoc residual from the pullback of the 3-form; defect
    against the dual 4-form.  3-meshes: assoc residual from the pulled-back
    vector-valued 3-form chi; defect against the 3-form itself.
    """
    k = mesh.dimension
    vols = mesh.volumes()
    volume = float(np.sum(vols))
    out = {"volume": volume}
    if k == 4:
        co = pullback_coefficients(mesh, structure.omega)
        n2 = _form_norms_sq(mesh, co, 3)
        out["coassoc"] = float(np.sqrt(np.sum(n2 * vols)))
        out["coassoc_max"] = float(np.sqrt(np.max(n2))) if len(n2) else 0.0
        out["calibration_defect"] = volume - integrate_pullback(mesh, structure.theta)
    elif k == 3:
        comp_sq = np.zeros(len(vols))
        comp_max = np.zeros(len(vols))
        gmat = structure.metric.matrix
        comps = []
        for m in range(7):
            cm = AlternatingForm(7, 3, structure.chi[m])
            comps.append(pullback_coefficients(mesh, cm)[:, 0])
        comps = np.array(comps)  # (7, ns), upper ambient index
        # |chi|^2 per simplex with the ambient metric, normalized by the
        # simplex volume element so a unit-volume restriction has norm 1
        vol_coeff = np.sqrt(np.linalg.det(mesh.gram()))
        dens = comps / vol_coeff[None, :]
        comp_sq = np.einsum("ms,mn,ns->s", dens, gmat, dens)
        comp_max = np.sqrt(np.maximum(comp_sq, 0.0))
        out["assoc"] = float(np.sqrt(np.sum(comp_sq * vols)))
        out["assoc_max"] = float(np.max(comp_max)) if len(comp_max) else 0.0
        out["calibration_defect"] = volume - integrate_pullback(mesh, structure.omega)
    else:
        raise ValueError("residuals are defined for meshes of dimension 3 or 4")
    return out


# -- slicing ---------------------------------------------------------------------


def theta_levels(mesh: ImmersedMesh, theta_axis: int = 0, tol: float = 1e-9):
    """Uniform circle-fibration levels along one coordinate axis."""
    vals = np.mod(mesh.positions[:, theta_axis], TWO_PI)
    levels = np.unique(np.round(vals / tol) * tol)
    merged = []
    for lv in levels:
        if merged and abs(lv - merged[-1]) < 10 * tol:
            continue
        merged.append(lv)
    levels = np.array(merged)
    if len(levels) < 3:
        raise ValueError("no usable theta-fibration (need >= 3 levels)")
    gaps = np.diff(np.concatenate([levels, [levels[0] + TWO_PI]]))
    if not np.allclose(gaps, gaps[0], atol=1e-8):
        raise ValueError("theta levels are not uniform")
    label = np.searchsorted(levels, vals - 1e-6)
    return levels, label


def slice_volume_check(
    mesh: ImmersedMesh,
    theta_axis: int = 0,
    circle_length: float = TWO_PI,
    tol: float = 1e-10,
) -> dict:
    """Both sides of Vol(C) >= integral of slice volumes, plus the
    equality/product verdict.

    Requires product combinatorics: every vertex sits on a uniform theta
    level and every top simplex spans two adjacent levels.  The optional
    circle_length rescales the theta direction (e.g. to unit circumference).
    """
    if mesh.dimension != 4:
        raise ValueError("slice check applies to 4-meshes")
    if mesh.positions is None:
        raise ValueError("missing theta-labels: mesh has no positions")
    levels, label = theta_levels(mesh, theta_axis)
    nlev = len(levels)
    scale = circle_length / TWO_PI

    # 4-volume with the theta coordinate rescaled
    d = mesh.differentials().copy()
    d[:, theta_axis, :] *= scale
    g = np.einsum("sia,sib->sab", d, d)
    vol_c = float(np.sum(np.sqrt(np.linalg.det(g))) / 24.0)

    # fibers: 4-vertex level sets of top simplices, deduplicated
    fibers = {lv: set() for lv in range(nlev)}
    for s in mesh.complex.simplices:
        labs = [label[v] for v in s]
        for lv in set(labs):
            sub = tuple(sorted(v for v in s if label[v] == lv))
            if len(sub) == 4:
                fibers[lv].add(sub)
    slice_sum = 0.0
    dtheta = circle_length / nlev
    for lv in range(nlev):
        if not fibers[lv]:
            raise ValueError(f"theta level {lv} has an empty fiber")
        tet_vol = 0.0
        for tet in sorted(fibers[lv]):
            p0 = mesh.positions[tet[0]]
            dd = wrap_to_pi(mesh.positions[list(tet[1:])] - p0)
            dd[:, theta_axis] = 0.0
            gg = dd @ dd.T
            tet_vol += math.sqrt(max(np.linalg.det(gg), 0.0)) / 6.0
        slice_sum += tet_vol * dtheta
    if vol_c < slice_sum - max(tol, 1e-9 * abs(slice_sum)):
        raise AssertionError("slice inequality violated: mesh is not a theta-fibration")
    is_product = abs(vol_c - slice_sum) <= max(tol, 1e-9) * max(1.0, abs(vol_c))
    return {"volC": vol_c, "slice_integral": slice_sum, "is_product": is_product}


# -- canned geometric meshes -------------------------------------------------------


def torus_mesh(directions, n: int = 3, offset=None) -> ImmersedMesh:
    """Coordinate k-torus spanned by the given ambient directions.

    Grid spacing 2 pi / n; remaining coordinates sit at `offset`
    (default 0).
    """
    from .complexes import freudenthal_torus

    directions = list(directions)
    k = len(directions)
    cx, grid = freudenthal_torus(k, n)
    pos = np.zeros((cx.n_vertices, 7))
    if offset is not None:
        pos[:] = np.asarray(offset, dtype=float)
    for v in range(cx.n_vertices):
        for a, direction in enumerate(directions):
            pos[v, direction] = grid[v][a] * TWO_PI / n
    return ImmersedMesh(cx, pos)


def barycentric_refine(mesh: ImmersedMesh) -> ImmersedMesh:
    """Geometric barycentric subdivision on the torus."""
    sd, cells = barycentric_subdivision(mesh.complex)
    pos = np.zeros((sd.n_vertices, 7))
    done = np.zeros(sd.n_vertices, dtype=bool)
    lifted = mesh.lifted_vertices()  # (ns, k+1, 7)
    for si, s in enumerate(mesh.complex.simplices):
        slot = {v: a for a, v in enumerate(s)}
        for nid, cell in cells.items():
            if done[nid] or not all(v in slot for v in cell):
                continue
            bary = np.mean([lifted[si, slot[v]] for v in cell], axis=0)
            pos[nid] = np.mod(bary, TWO_PI)
            done[nid] = True
    if not done.all():
        raise RuntimeError("unreached barycenter")  # cannot happen
    return ImmersedMesh(sd, pos)

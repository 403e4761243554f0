"""The standard positive 3-form on R^7 and the structures it induces.

Builds the positivity test, the induced metric and volume form, the dual
4-form, the two cross-product tensors, and product/cylindrical structures
coming from flat Calabi-Yau data on R^6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .forms import AlternatingForm, Metric, basis_indices, hodge, interior, pullback, wedge

__all__ = [
    "G2Structure",
    "CalabiYauData",
    "standard_omega",
    "standard_structure",
    "is_positive",
    "induced_metric",
    "cross_products",
    "product_form",
    "standard_flat_cy",
]

# Coefficients of the standard positive 3-form under e^i -> dx^i (i=0..3),
# f^j -> dx^{3+j}.  Derived by expanding
#   f1 f2 f3 - f1(e1 e0 + e2 e3) - f2(e2 e0 + e3 e1) - f3(e3 e0 + e1 e2)
# and sorting each term; tests re-derive this table with an independent
# permutation-parity oracle.
STANDARD_OMEGA_TERMS = {
    (4, 5, 6): 1,
    (0, 1, 4): 1,
    (2, 3, 4): -1,
    (0, 2, 5): 1,
    (1, 3, 5): 1,
    (0, 3, 6): 1,
    (1, 2, 6): -1,
}


def standard_omega(dtype=None) -> AlternatingForm:
    """The standard positive 3-form on R^7."""
    return AlternatingForm.from_dict(7, 3, STANDARD_OMEGA_TERMS, dtype=dtype)


def _bilinear_b(phi: AlternatingForm) -> np.ndarray:
    """B_ij with iota_i phi ^ iota_j phi ^ phi = B_ij * dx^{0..6}."""
    if phi.dim != 7 or phi.degree != 3:
        raise ValueError("expected a 3-form on R^7")
    eye = np.eye(7)
    contr = [interior(eye[i], phi) for i in range(7)]
    B = np.empty((7, 7))
    for i in range(7):
        for j in range(i, 7):
            top = wedge(wedge(contr[i], contr[j]), phi)
            B[i, j] = B[j, i] = float(top.coeffs[0])
    return B


def is_positive(phi: AlternatingForm, return_diagnostics: bool = False):
    """Whether phi lies in the open orbit of the standard 3-form.

    The criterion is definiteness (either sign) of the associated bilinear
    form B; degenerate B means a degenerate orbit.
    """
    B = _bilinear_b(phi)
    eigs = np.linalg.eigvalsh(B)
    scale = float(abs(B).max())
    thresh = 1e-10 * max(scale, 1e-300)
    definite = bool(np.all(eigs > thresh) or np.all(eigs < -thresh))
    if return_diagnostics:
        return definite, {"eigenvalues": eigs, "threshold": thresh}
    return definite


# Calibration constant for the induced metric, fixed once by requiring
# g(standard omega) = identity.  Computed lazily from the standard form.
_METRIC_CONSTANT = None


def _metric_constant() -> float:
    global _METRIC_CONSTANT
    if _METRIC_CONSTANT is None:
        B = _bilinear_b(standard_omega())
        raw = B * _signed_root(np.linalg.det(B), 9) ** -1
        # raw is a positive multiple of the identity; calibrate it away
        _METRIC_CONSTANT = 1.0 / raw[0, 0]
    return _METRIC_CONSTANT


def _signed_root(x: float, p: int) -> float:
    """Real p-th root for odd p (sign preserving)."""
    return math.copysign(abs(x) ** (1.0 / p), x)


def induced_metric(phi: AlternatingForm) -> tuple[Metric, AlternatingForm]:
    """Metric and volume form determined by a positive 3-form.

    g = c * det(B)^(-1/9) * B with c calibrated so the standard form maps
    to the identity.  Equivariant under pullback by GL(7) including
    orientation-reversing maps (the 9th root is the real, signed one).
    """
    if not is_positive(phi):
        raise ValueError("form is not positive; no induced metric")
    B = _bilinear_b(phi)
    g = _metric_constant() * B / _signed_root(np.linalg.det(B), 9)
    metric = Metric(g)
    vol = AlternatingForm.volume(7) * math.sqrt(metric.det())
    return metric, vol


def cross_products(omega: AlternatingForm, theta: AlternatingForm, metric: Metric):
    """The tables xi (7 x 21) and chi (7 x 35) defined by

        <xi(u, v), w>_g    = omega(u, v, w)
        <w, chi(x, y, z)>_g = theta(w, x, y, z)

    Rows are ambient vector components, columns run over the increasing
    2- resp. 3-index basis.
    """
    g_inv = metric.inverse()
    pairs = basis_indices(7, 2)
    triples = basis_indices(7, 3)
    omega_lower = np.empty((7, len(pairs)))
    for c, (i, j) in enumerate(pairs):
        for w in range(7):
            omega_lower[w, c] = float(omega.coefficient((i, j, w)))
    xi = g_inv @ omega_lower
    theta_lower = np.empty((7, len(triples)))
    for c, (x, y, z) in enumerate(triples):
        for w in range(7):
            theta_lower[w, c] = float(theta.coefficient((w, x, y, z)))
    chi = g_inv @ theta_lower
    return xi, chi


@dataclass(frozen=True)
class G2Structure:
    """A positive 3-form with everything it induces.

    xi maps a pair of vectors to a vector; chi maps a triple to a vector.
    Both tables are stored over the increasing multi-index bases.
    """

    omega: AlternatingForm
    metric: Metric
    vol: AlternatingForm
    theta: AlternatingForm
    xi: np.ndarray
    chi: np.ndarray

    @classmethod
    def from_form(cls, phi: AlternatingForm) -> "G2Structure":
        metric, vol = induced_metric(phi)
        theta = hodge(phi, metric)
        xi, chi = cross_products(phi, theta, metric)
        return cls(omega=phi, metric=metric, vol=vol, theta=theta, xi=xi, chi=chi)

    def xi_apply(self, u, v) -> np.ndarray:
        """xi(u, v) as an ambient vector."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        out = np.zeros(7)
        for c, (i, j) in enumerate(basis_indices(7, 2)):
            out += self.xi[:, c] * (u[i] * v[j] - u[j] * v[i])
        return out

    def chi_apply(self, x, y, z) -> np.ndarray:
        """chi(x, y, z) as an ambient vector."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        out = np.zeros(7)
        for c, idx in enumerate(basis_indices(7, 3)):
            det = np.linalg.det(np.array([x[list(idx)], y[list(idx)], z[list(idx)]]))
            out += self.chi[:, c] * det
        return out


_STANDARD = None


def standard_structure() -> G2Structure:
    """The structure of the standard form (cached; immutable)."""
    global _STANDARD
    if _STANDARD is None:
        _STANDARD = G2Structure.from_form(standard_omega())
    return _STANDARD


@dataclass(frozen=True)
class CalabiYauData:
    """Flat Calabi-Yau data on R^6: a Kaehler 2-form and a complex 3-form.

    Forms live on R^6 (coordinates 0..5).  omega_x must have nonzero cube
    and wedge to zero against both parts of the complex 3-form.
    """

    omega_x: AlternatingForm
    re_omega_x: AlternatingForm
    im_omega_x: AlternatingForm
    check: bool = field(default=True)

    def __post_init__(self):
        for f, deg in ((self.omega_x, 2), (self.re_omega_x, 3), (self.im_omega_x, 3)):
            if f.dim != 6 or f.degree != deg:
                raise ValueError("Calabi-Yau data must be (2,3,3)-forms on R^6")
        if self.check:
            cube = wedge(wedge(self.omega_x, self.omega_x), self.omega_x)
            if cube.is_zero(tol=1e-12):
                raise ValueError("omega_x^3 vanishes: degenerate Kaehler form")
            for part in (self.re_omega_x, self.im_omega_x):
                if not wedge(self.omega_x, part).is_zero(tol=1e-10):
                    raise ValueError("omega_x ^ Omega_x != 0: type condition fails")


def standard_flat_cy() -> CalabiYauData:
    """Standard flat data with z^k = f^k + i e^k.

    On R^6 the labels are e^1,e^2,e^3 -> dx^0,dx^1,dx^2 and
    f^1,f^2,f^3 -> dx^3,dx^4,dx^5.
    """
    e = [AlternatingForm.basis(6, (i,)) for i in range(3)]
    f = [AlternatingForm.basis(6, (3 + i,)) for i in range(3)]
    omega_x = AlternatingForm.zero(6, 2)
    for k in range(3):
        omega_x = omega_x + wedge(e[k], f[k])
    # (f1 + i e1)^(f2 + i e2)^(f3 + i e3)
    re = AlternatingForm.zero(6, 3)
    im = AlternatingForm.zero(6, 3)
    import itertools
    for bits in itertools.product((0, 1), repeat=3):
        factors = [f[k] if b == 0 else e[k] for k, b in enumerate(bits)]
        term = wedge(wedge(factors[0], factors[1]), factors[2])
        n_i = sum(bits)
        # i^n_i: real for even, imaginary for odd
        sign = -1 if n_i in (2, 3) else 1
        if n_i % 2 == 0:
            re = re + sign * term
        else:
            im = im + sign * term
    return CalabiYauData(omega_x=omega_x, re_omega_x=re, im_omega_x=im)


def product_form(cy: CalabiYauData, mode: str = "circle"):
    """Assemble Re(Omega_X) + omega_X ^ dtheta on R^7.

    The Calabi-Yau factor occupies coordinates 0..5 and the circle (or
    cylinder) direction is coordinate 6, so dtheta is the 7th covector.
    Returns (form, diagnostics); a non-positive assembled form is flagged
    but still returned.
    """
    if mode not in ("circle", "cylinder"):
        raise ValueError("mode must be 'circle' or 'cylinder'")
    # extend the R^6 forms by zero to R^7 (pullback along the projection
    # R^7 -> R^6 is the transpose action; implemented via index re-embedding)
    re7 = _extend(cy.re_omega_x)
    om7 = _extend(cy.omega_x)
    dtheta = AlternatingForm.basis(7, (6,))
    phi = re7 + wedge(om7, dtheta)
    positive, diag = is_positive(phi, return_diagnostics=True)
    diag = dict(diag)
    diag["positive"] = positive
    return phi, diag


def _extend(a: AlternatingForm) -> AlternatingForm:
    """Re-index a form on R^6 as a form on R^7 not involving dx^6."""
    out = {}
    for pos, idx in enumerate(basis_indices(6, a.degree)):
        c = a.coeffs[pos]
        if c != 0:
            out[idx] = c
    return AlternatingForm.from_dict(7, a.degree, out)

"""Acceptance gate: ten end-to-end checks, one pass/fail line each.

Each test prints `[criterion NN] name: PASS|FAIL` directly to the real
stdout so the lines survive pytest capture, then asserts.
"""

import math
from itertools import combinations

import numpy as np
import pytest

from g2kit.complexes import freudenthal_torus, rp3_complex, sphere_complex
from g2kit.cycles import (Configuration, TangentVector, closedness_check,
                          coassociative_coordinate_planes, count_hslag,
                          eval_phi0, flow_run, psi0)
from g2kit.exact import smith_normal_form
from g2kit.forms import AlternatingForm, basis_indices, pullback, wedge
from g2kit.g2core import is_positive, standard_structure
from g2kit.gauge import (CubicalLattice7, dt_residual, eval_phiDT_lattice,
                         theta_kernel_basis, uniform_flux_connection,
                         wedge_theta_matrix)
from g2kit.homology import asd_bundle_count
from g2kit.lagr import boundary_data, load_boundary_map
from g2kit.mesh import (ImmersedMesh, calibration_residuals, load_mesh,
                        slice_volume_check, torus_mesh)

ST = standard_structure()
RNG = np.random.default_rng(20260823)


@pytest.fixture
def verdict(capfd):
    def _verdict(num, name, ok):
        line = f"[criterion {num:2d}] {name}: {'PASS' if ok else 'FAIL'}"
        with capfd.disabled():
            print(line, flush=True)
        assert ok, line
    return _verdict


def test_criterion_01_structure_identities(verdict):
    ok = True
    coeffs = ST.omega.coeffs
    ok &= int(np.sum(np.abs(coeffs) == 1)) == 7
    ok &= int(np.sum(coeffs == 0)) == len(coeffs) - 7
    ok &= bool(np.abs(ST.metric.matrix - np.eye(7)).max() <= 1e-12)
    prod = wedge(ST.omega, ST.theta)
    ok &= bool(np.abs(prod.coeffs - np.array([7.0])).max() <= 1e-12)
    g = ST.metric.matrix
    e = np.eye(7)
    for (i, j) in basis_indices(7, 2):
        xi_uv = ST.xi_apply(e[i], e[j])
        for w in range(7):
            ok &= abs(float(g[w] @ xi_uv) - ST.omega(e[i], e[j], e[w])) <= 1e-12
    for (i, j, k) in basis_indices(7, 3):
        chi = ST.chi_apply(e[i], e[j], e[k])
        for w in range(7):
            ok &= abs(float(g[w] @ chi)
                      - float(ST.theta(e[w], e[i], e[j], e[k]))) <= 1e-12
    verdict(1, "structure identities", bool(ok))


def test_criterion_02_positivity(verdict):
    ok = is_positive(ST.omega)
    for _ in range(50):
        A = RNG.standard_normal((7, 7))
        while np.linalg.cond(A) > 1e3:
            A = RNG.standard_normal((7, 7))
        ok &= is_positive(pullback(A, ST.omega))
    zero = AlternatingForm.from_dict(7, 3, {})
    ok &= not is_positive(zero)
    B = RNG.standard_normal((7, 7))
    B[:, 6] = B[:, 0]  # rank-degenerate pullback
    ok &= not is_positive(pullback(B, ST.omega))
    verdict(2, "positivity", bool(ok))


def test_criterion_03_calibrated_planes(verdict):
    ok = True
    res4 = calibration_residuals(torus_mesh((0, 1, 2, 3), n=3), ST)
    ok &= res4["coassoc"] == 0.0
    res3 = calibration_residuals(torus_mesh((4, 5, 6), n=3), ST)
    ok &= res3["assoc"] == 0.0
    expected = [(0, 1, 2, 3), (0, 1, 5, 6), (0, 2, 4, 6), (0, 3, 4, 5),
                (1, 2, 4, 5), (1, 3, 4, 6), (2, 3, 5, 6)]
    planes = coassociative_coordinate_planes(ST)
    ok &= planes == expected
    # the mesh residual agrees with the algebraic test plane by plane
    for plane in combinations(range(7), 4):
        r = calibration_residuals(torus_mesh(plane, n=3), ST)["coassoc"]
        ok &= (r == 0.0) == (plane in expected)
    verdict(3, "coassociative/associative exactness", bool(ok))


def test_criterion_04_slice_identity(verdict):
    ok = True
    base = torus_mesh((0, 1, 2, 3), n=3)
    for trial in range(20):
        amp = 0.02 + 0.08 * RNG.random()
        phases = RNG.uniform(0, 2 * math.pi, size=3)
        pos = base.positions.copy()
        # fiber-only deformation: depends on fiber coordinates, not the
        # circle coordinate, so the mesh stays a metric product
        for c, ph in zip((4, 5, 6), phases):
            pos[:, c] += amp * np.sin(pos[:, 1] + ph) * np.cos(pos[:, 2])
        is_product = trial % 2 == 0
        if not is_product:
            pos[:, 4] += amp * np.sin(pos[:, 0])
        mesh = ImmersedMesh(base.complex, pos, base.windings)
        res = slice_volume_check(mesh, theta_axis=0)
        ok &= res["is_product"] == is_product
        gap = res["volC"] - res["slice_integral"]
        if is_product:
            ok &= abs(gap) <= 1e-12 * res["volC"]
        else:
            ok &= gap > 0
    verdict(4, "slice volume identity", bool(ok))


def test_criterion_05_torsion_counting(verdict):
    ok = str(asd_bundle_count(sphere_complex(3))) == "1"
    ok &= str(asd_bundle_count(rp3_complex())) == "2"
    t3, _ = freudenthal_torus(3, 3)
    cnt = asd_bundle_count(t3)
    ok &= (not cnt.finite) and cnt.b1 == 3
    for _ in range(200):
        m, n = RNG.integers(1, 7, size=2)
        M = RNG.integers(-9, 10, size=(m, n)).astype(object)
        res = smith_normal_form(M)
        ok &= bool(np.array_equal(res.U @ M @ res.V, res.D))
        d = res.invariant_factors
        ok &= all(d[i + 1] % d[i] == 0 for i in range(len(d) - 1))
    verdict(5, "torsion counting and exact normal form", bool(ok))


def test_criterion_06_closedness(verdict):
    ok = True
    base = Configuration.flat(torus_mesh((0, 1, 2, 3), n=3))
    hs = (1e-2, 1e-3, 1e-4)
    for _ in range(20):
        seed = TangentVector.random(base, RNG, amplitude=0.05)
        cfg = base.shifted(seed)
        d1 = TangentVector.random(cfg, RNG)
        d2 = TangentVector.random(cfg, RNG)
        errs = [abs(closedness_check("phi0", cfg, d1, d2, h, ST)) for h in hs]
        # least-squares slope of log err vs log h
        x = np.log10(hs)
        y = np.log10(np.maximum(errs, 1e-300))
        order = np.polyfit(x, y, 1)[0]
        ok &= order >= 1.9
    # circulation of the potential's one-form around contractible loops
    cfg = base.shifted(TangentVector.random(base, RNG, amplitude=0.05))
    t1 = TangentVector.random(cfg, RNG)
    t2 = TangentVector.random(cfg, RNG)
    for eps in (0.01, 0.02, 0.04):
        N = 40
        loop = [cfg.shifted(t1, eps * math.cos(2 * math.pi * s / N))
                   .shifted(t2, eps * math.sin(2 * math.pi * s / N))
                for s in range(N + 1)]
        ok &= abs(psi0(loop, ST)) <= eps**3
    verdict(6, "closedness of the configuration one-form", bool(ok))


def test_criterion_07_zeros(verdict):
    ok = True
    cfg = Configuration.flat(torus_mesh((0, 1, 2, 3), n=3))
    for _ in range(100):
        t = TangentVector.random(cfg, RNG)
        ok &= abs(eval_phi0(cfg, t, ST)) <= 1e-12 * t.norm()
    off = cfg.shifted(TangentVector.random(cfg, RNG, amplitude=0.3))
    vals = [abs(eval_phi0(off, TangentVector.random(off, RNG), ST))
            for _ in range(20)]
    ok &= max(vals) > 1e-3
    verdict(7, "one-form zeros at calibrated flat configurations", bool(ok))


def test_criterion_08_flow_and_census(verdict):
    ok = True
    base = Configuration.flat(torus_mesh((0, 1, 2, 3), n=3))
    seeds = []
    for _ in range(3):
        t = TangentVector(
            0.01 * RNG.standard_normal(base.mesh.positions.shape),
            0.05 * RNG.standard_normal(len(base.connection.angles)))
        seeds.append(base.shifted(t))
    for seed in seeds:
        res = flow_run(seed, ST, max_steps=10000, tol=1e-8)
        ok &= res.converged and res.steps <= 10000
        Rs = [row[1] for row in res.trace]
        ok &= all(b <= a for a, b in zip(Rs, Rs[1:]))
        ok &= Rs[-1] < 1e-8
    census = count_hslag(seeds, ST, max_steps=10000, tol=1e-8)
    ok &= census["non_converged"] == 0
    ok &= len(census["classes"]) == 1
    ok &= census["classes"][0]["multiplicity"] == 3
    verdict(8, "flow convergence and census", bool(ok))


def test_criterion_09_lagrangian_boundary(verdict, data_dir):
    ok = True
    pairs = [("d4.mesh", "s3_boundary.mesh", "d4.bmap"),
             ("s1xd3.mesh", "s1xs2_boundary.mesh", "s1xd3.bmap"),
             ("d2xt2.mesh", "t3_boundary.mesh", "d2xt2.bmap")]
    for cf, lf, bf in pairs:
        C = load_mesh(data_dir / cf).complex
        L = load_mesh(data_dir / lf).complex
        bd = boundary_data(C, L, load_boundary_map(data_dir / bf))
        W = bd.lagrangian_candidate()
        ok &= not np.any(W.T @ bd.space.pairing @ W != 0)  # isotropic, exact
        ok &= bd.is_lagrangian()  # half-dimensional too
        ok &= bd.les["exact"]
        ok &= all(n["exact"] and n["rank_in"] + n["rank_out"] == n["dim"]
                  for n in bd.les["nodes"])
    verdict(9, "Lagrangian boundary data", bool(ok))


def test_criterion_10_kernel_fluxes(verdict):
    ok = True
    W = wedge_theta_matrix(ST)
    ok &= W.shape == (7, 21)
    ok &= np.linalg.matrix_rank(W) == 7
    K = theta_kernel_basis(ST)
    ok &= K.shape == (21, 14)
    ok &= np.linalg.matrix_rank(K) == 14
    ok &= not np.any(W @ K)
    lat = CubicalLattice7(4)
    pairs = [(i, j) for i in range(7) for j in range(i + 1, 7)]
    for trial in range(3):
        w = RNG.integers(-1, 2, size=14)
        if not np.any(K @ w):
            w[trial % 14] = 1
        flux = K @ w
        kp = {p: int(flux[c]) for c, p in enumerate(pairs) if flux[c]}
        a = uniform_flux_connection(lat, kp)
        ok &= dt_residual(lat, a, ST) <= 1e-10
        for _ in range(5):
            b = RNG.standard_normal((lat.n**7, 7))
            ok &= abs(eval_phiDT_lattice(lat, a, b, ST)) <= 1e-10
    verdict(10, "kernel fluxes of the wedge pairing", bool(ok))

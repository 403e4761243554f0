import math

import numpy as np
import pytest

from g2kit.cycles import (Configuration, TangentVector, closedness_check,
                          coassociative_coordinate_planes, count_hslag,
                          eval_phi0, eval_phiA, eval_phiDT, flow_run,
                          morse_velocity, psi0, psi0_potential, residual_R)
from g2kit.gauge import CubicalLattice7, LatticeConnection
from g2kit.mesh import ImmersedMesh, torus_mesh

TWO_PI = 2 * math.pi


def _coassoc_config():
    return Configuration.flat(torus_mesh((0, 1, 2, 3), n=3))


def _perturbed(cfg, rng, pos_amp=0.01, conn_amp=0.05):
    t = TangentVector(pos_amp * rng.standard_normal(cfg.mesh.positions.shape),
                      conn_amp * rng.standard_normal(len(cfg.connection.angles)))
    return cfg.shifted(t)


def test_phi0_vanishes_at_calibrated_flat(st, rng):
    cfg = _coassoc_config()
    for _ in range(10):
        t = TangentVector.random(cfg, rng)
        assert abs(eval_phi0(cfg, t, st)) <= 1e-12 * t.norm()


def test_phi0_nonzero_away_from_critical(st, rng):
    cfg = _perturbed(_coassoc_config(), rng, pos_amp=0.3, conn_amp=0.5)
    vals = [abs(eval_phi0(cfg, TangentVector.random(cfg, rng), st))
            for _ in range(5)]
    assert max(vals) > 1e-3


def test_phi0_linear_in_tangent(st, rng):
    cfg = _perturbed(_coassoc_config(), rng)
    t1 = TangentVector.random(cfg, rng)
    t2 = TangentVector.random(cfg, rng)
    lhs = eval_phi0(cfg, t1 + t2.scaled(2.5), st)
    rhs = eval_phi0(cfg, t1, st) + 2.5 * eval_phi0(cfg, t2, st)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_phi0_gauge_invariant(st, rng):
    cfg = _perturbed(_coassoc_config(), rng)
    theta = rng.standard_normal(cfg.mesh.complex.n_vertices)
    conn2 = cfg.connection.gauge_transformed(theta)
    cfg2 = Configuration(cfg.mesh, conn2)
    t = TangentVector.random(cfg, rng)
    v1 = eval_phi0(cfg, t, st)
    v2 = eval_phi0(cfg2, t, st)
    assert v1 == pytest.approx(v2, rel=1e-12, abs=1e-12)


def test_phi0_closedness_machine_zero(st, rng):
    # the one-form is an exact gradient: the FD curl is pure round-off
    cfg = _perturbed(_coassoc_config(), rng)
    d1 = TangentVector.random(cfg, rng, amplitude=0.1)
    d2 = TangentVector.random(cfg, rng, amplitude=0.1)
    val = closedness_check("phi0", cfg, d1, d2, 1e-3, st)
    assert abs(val) <= 1e-8


def test_phi0_closedness_order_two(st, rng):
    # the antisymmetrized FD stencil converges at second order
    cfg = _perturbed(_coassoc_config(), rng)
    d1 = TangentVector.random(cfg, rng, amplitude=0.5)
    d2 = TangentVector.random(cfg, rng, amplitude=0.5)
    errs = [abs(closedness_check("phi0", cfg, d1, d2, h, st))
            for h in (1e-1, 1e-2)]
    order = math.log10(errs[0] / errs[1])
    assert order >= 1.9


def test_closedness_rejects_tiny_step(st, rng):
    cfg = _coassoc_config()
    t = TangentVector.random(cfg, rng)
    with pytest.raises(ValueError):
        closedness_check("phi0", cfg, t, t, 1e-9, st)
    with pytest.raises(ValueError):
        closedness_check("nope", cfg, t, t, 1e-3, st)


def test_psi0_path_integral_matches_potential(st, rng):
    cfg0 = _coassoc_config()
    t = TangentVector.random(cfg0, rng, amplitude=0.02)
    path = [cfg0.shifted(t, s) for s in np.linspace(0.0, 1.0, 21)]
    line = psi0(path, st)
    dpsi = psi0_potential(path[-1], st) - psi0_potential(path[0], st)
    assert line == pytest.approx(dpsi, rel=1e-3, abs=1e-6)


def test_psi0_rejects_coarse_path(st, rng):
    cfg0 = _coassoc_config()
    t = TangentVector.random(cfg0, rng, amplitude=2.0)
    with pytest.raises(ValueError):
        psi0([cfg0, cfg0.shifted(t)], st)


def test_phiA_runs_on_3_mesh(st, rng):
    mesh = torus_mesh((4, 5, 6), n=3)
    cfg = Configuration.flat(mesh)
    t = TangentVector.random(cfg, rng)
    # flat connection kills the F ^ B term; associative plane kills chi
    assert abs(eval_phiA(cfg, t, st)) <= 1e-10 * t.norm()
    cfg2 = Configuration(
        mesh, LatticeConnection(mesh.complex,
                                rng.standard_normal(len(mesh.complex.edges))))
    vals = [abs(eval_phiA(cfg2, TangentVector.random(cfg2, rng), st))
            for _ in range(5)]
    assert max(vals) > 1e-6


def test_phiA_rejects_wrong_dimension(st, rng):
    cfg = _coassoc_config()
    t = TangentVector.random(cfg, rng)
    with pytest.raises(ValueError):
        eval_phiA(cfg, t, st)
    mesh3 = torus_mesh((4, 5, 6), n=3)
    with pytest.raises(ValueError):
        eval_phi0(Configuration.flat(mesh3), TangentVector.random(
            Configuration.flat(mesh3), rng), st)


def test_phiDT_closedness(st, rng):
    lat = CubicalLattice7(2)
    a = 0.05 * rng.standard_normal((lat.n**7, 7))
    d1 = 0.05 * rng.standard_normal((lat.n**7, 7))
    d2 = 0.05 * rng.standard_normal((lat.n**7, 7))
    val = closedness_check("phiDT", (lat, a), d1, d2, 1e-3, st)
    scale = max(1.0, abs(eval_phiDT(lat, a, d1, st)))
    assert abs(val) <= 1e-7 * scale


def test_residual_zero_at_calibrated_flat(st):
    res = residual_R(_coassoc_config(), st)
    assert res["R"] <= 1e-20
    assert res["coassoc"] == 0.0 and res["Fplus_norm"] == 0.0


def test_flow_monotone_and_converges(st, rng):
    cfg = _perturbed(_coassoc_config(), rng, pos_amp=0.01, conn_amp=0.05)
    res = flow_run(cfg, st, max_steps=10000, tol=1e-8)
    assert res.converged
    Rs = [row[1] for row in res.trace]
    assert all(b <= a for a, b in zip(Rs, Rs[1:]))
    assert Rs[-1] < 1e-8


def test_flow_trace_csv(st, rng, tmp_path):
    cfg = _perturbed(_coassoc_config(), rng, pos_amp=0.005, conn_amp=0.01)
    res = flow_run(cfg, st, max_steps=10000, tol=1e-8)
    p = tmp_path / "trace.csv"
    res.write_csv(p)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "step,R,coassoc,Fplus_norm,dt"
    assert len(lines) == len(res.trace) + 1


def test_morse_velocity_zero_at_calibrated_flat(st):
    vel = morse_velocity(_coassoc_config(), st)
    assert vel.norm() <= 1e-12


def test_morse_velocity_nonzero_with_curvature(st, rng):
    cfg = _perturbed(_coassoc_config(), rng, pos_amp=0.2, conn_amp=1.0)
    vel = morse_velocity(cfg, st)
    assert vel.norm() > 1e-6


def test_coassociative_planes(st):
    planes = coassociative_coordinate_planes(st)
    assert planes == [(0, 1, 2, 3), (0, 1, 5, 6), (0, 2, 4, 6), (0, 3, 4, 5),
                      (1, 2, 4, 5), (1, 3, 4, 6), (2, 3, 5, 6)]


def test_census_single_basin(st, rng):
    base = _coassoc_config()
    seeds = [_perturbed(base, rng, pos_amp=0.01, conn_amp=0.03)
             for _ in range(3)]
    out = count_hslag(seeds, st, max_steps=10000, tol=1e-8)
    assert out["non_converged"] == 0
    assert len(out["classes"]) == 1
    assert out["classes"][0]["multiplicity"] == 3


def test_census_two_planes(st, rng):
    a = _perturbed(Configuration.flat(torus_mesh((0, 1, 2, 3), n=3)), rng,
                   pos_amp=0.01, conn_amp=0.02)
    b = _perturbed(Configuration.flat(torus_mesh((0, 1, 5, 6), n=3)), rng,
                   pos_amp=0.01, conn_amp=0.02)
    out = count_hslag([a, b], st, max_steps=10000, tol=1e-8)
    assert out["non_converged"] == 0
    assert sorted(c["multiplicity"] for c in out["classes"]) == [1, 1]

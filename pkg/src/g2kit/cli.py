"""Command-line driver: subcommands, plain-text key=value reports, CSV
traces.  Exit codes: 0 success, 1 validation failure, 2 parse/usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np


def _setup_threads():
    cap = os.environ.get("G2KIT_THREADS")
    if cap:
        try:
            n = max(1, int(cap))
        except ValueError:
            return
        import torch

        torch.set_num_threads(n)
        os.environ.setdefault("OMP_NUM_THREADS", str(n))


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


class Report:
    def __init__(self):
        self.lines = []

    def add(self, **kv):
        self.lines.append(" ".join(f"{k}={_fmt(v)}" for k, v in kv.items()))

    def line(self, text):
        self.lines.append(text)

    def emit(self, out_path=None):
        text = "\n".join(self.lines) + "\n"
        sys.stdout.write(text)
        if out_path:
            Path(out_path).write_text(text)


# -- subcommands -----------------------------------------------------------------


def cmd_verify_structure(args) -> int:
    from .forms import AlternatingForm, basis_indices, wedge
    from .g2core import cross_products, standard_structure

    st = standard_structure()
    rep = Report()
    ok = True
    tol = args.tol if args.tol is not None else 1e-12

    coeffs = st.omega.coeffs
    units = int(np.sum(np.abs(coeffs) == 1))
    zeros = int(np.sum(coeffs == 0))
    c1 = units == 7 and units + zeros == len(coeffs)
    rep.add(check="three_form_support", unit_terms=units, passed=c1)
    ok &= c1

    c2 = bool(np.abs(st.metric.matrix - np.eye(7)).max() <= tol)
    rep.add(check="induced_metric_identity", passed=c2)
    ok &= c2

    prod = wedge(st.omega, st.theta)
    vol7 = np.zeros(1)
    vol7[0] = 7.0
    c3 = bool(np.abs(prod.coeffs - vol7).max() <= tol)
    rep.add(check="omega_wedge_theta_7vol", passed=c3)
    ok &= c3

    g = st.metric.matrix
    worst_xi = 0.0
    for (i, j) in basis_indices(7, 2):
        u = np.eye(7)[i]
        v = np.eye(7)[j]
        xi_uv = st.xi_apply(u, v)
        for w in range(7):
            lhs = float(g[w] @ xi_uv)
            rhs = st.omega(u, v, np.eye(7)[w])
            worst_xi = max(worst_xi, abs(lhs - rhs))
    c4 = worst_xi <= tol
    rep.add(check="xi_identity", max_error=worst_xi, passed=c4)
    ok &= c4

    worst_chi = 0.0
    for (i, j, k) in basis_indices(7, 3):
        x, y, z = np.eye(7)[i], np.eye(7)[j], np.eye(7)[k]
        chi_xyz = st.chi_apply(x, y, z)
        for w in range(7):
            lhs = float(g[w] @ chi_xyz)
            rhs = float(st.theta(np.eye(7)[w], x, y, z))
            worst_chi = max(worst_chi, abs(lhs - rhs))
    c5 = worst_chi <= tol
    rep.add(check="chi_identity", max_error=worst_chi, passed=c5)
    ok &= c5

    rep.add(result="pass" if ok else "fail")
    rep.emit(args.out)
    return 0 if ok else 1


def _load_mesh_or_exit(path):
    from .mesh import MeshFormatError, load_mesh

    try:
        return load_mesh(path)
    except (MeshFormatError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        sys.exit(2)


def _load_conn(path, cx):
    from .gauge import parse_connection

    try:
        with open(path) as fh:
            return parse_connection(fh.read(), cx)
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        sys.exit(2)


def cmd_residuals(args) -> int:
    from .g2core import standard_structure
    from .gauge import curvature, sd_split
    from .mesh import calibration_residuals

    mesh = _load_mesh_or_exit(args.mesh)
    st = standard_structure()
    rep = Report()
    try:
        res = calibration_residuals(mesh, st)
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    kv = {"volume": res["volume"]}
    if "coassoc" in res:
        kv["coassoc"] = res["coassoc"]
        kv["coassoc_max"] = res["coassoc_max"]
    else:
        kv["assoc"] = res["assoc"]
        kv["assoc_max"] = res["assoc_max"]
    kv["defect"] = res["calibration_defect"]
    if args.conn:
        conn = _load_conn(args.conn, mesh.complex)
        F = curvature(conn)
        split = sd_split(F, mesh, st)
        kv["Fplus_norm"] = split["Fplus_norm"]
        kv["Fminus_norm"] = split["Fminus_norm"]
    rep.add(**kv)
    rep.emit(args.out)
    return 0


def cmd_flow(args) -> int:
    from .cycles import Configuration, flow_run
    from .g2core import standard_structure

    mesh = _load_mesh_or_exit(args.mesh)
    st = standard_structure()
    if args.conn:
        conn = _load_conn(args.conn, mesh.complex)
        from .cycles import Configuration as _C

        cfg = _C(mesh, conn)
    else:
        cfg = Configuration.flat(mesh)
    tol = args.tol if args.tol is not None else 1e-8
    res = flow_run(cfg, st, dt=args.dt, max_steps=args.max_steps, tol=tol)
    rep = Report()
    last = res.trace[-1]
    rep.add(converged=res.converged, steps=res.steps, R=last[1],
            coassoc=last[2], Fplus_norm=last[3])
    trace_path = args.out or "flow_trace.csv"
    res.write_csv(trace_path)
    rep.line(f"trace={trace_path}")
    rep.emit(None)
    return 0 if res.converged else 1


def cmd_count(args) -> int:
    from .cycles import Configuration, count_hslag
    from .g2core import standard_structure

    seed_dir = Path(args.seeds_dir)
    if not seed_dir.is_dir():
        sys.stderr.write(f"error: {seed_dir} is not a directory\n")
        return 2
    meshes = sorted(seed_dir.glob("*.mesh"))
    if not meshes:
        sys.stderr.write("error: no .mesh seeds found\n")
        return 2
    seeds = []
    for mp in meshes:
        mesh = _load_mesh_or_exit(mp)
        cp = mp.with_suffix(".conn")
        if cp.exists():
            conn = _load_conn(cp, mesh.complex)
            seeds.append(Configuration(mesh, conn))
        else:
            seeds.append(Configuration.flat(mesh))
    st = standard_structure()
    tol = args.tol if args.tol is not None else 1e-8
    result = count_hslag(seeds, st, dt=args.dt, max_steps=args.max_steps,
                         tol=tol, cluster_tol=args.cluster_tol)
    rep = Report()
    rep.add(seeds=len(seeds), classes=len(result["classes"]),
            non_converged=result["non_converged"])
    for i, cls in enumerate(result["classes"]):
        rep.add(**{"class": i, "multiplicity": cls["multiplicity"]})
    rep.emit(args.out)
    return 0


def cmd_torsion(args) -> int:
    from .homology import asd_bundle_count, homology_groups

    mesh = _load_mesh_or_exit(args.complex)
    cx = mesh.complex
    h1 = homology_groups(cx, 1)
    rep = Report()
    if cx.dimension == 3:
        cnt = asd_bundle_count(cx)
        cnt_str = str(cnt.count) if cnt.finite else "infinite"
        line = (f"H1 betti={h1['betti']} torsion={h1['torsion_order']} "
                f"asd_count={cnt_str}")
        if not cnt.finite:
            line += f" b1={cnt.b1}"
        rep.line(line)
    else:
        rep.line(f"H1 betti={h1['betti']} torsion={h1['torsion_order']}")
    rep.emit(args.out)
    return 0


def cmd_slice(args) -> int:
    from .mesh import slice_volume_check

    mesh = _load_mesh_or_exit(args.mesh)
    tol = args.tol if args.tol is not None else 1e-8
    rep = Report()
    try:
        res = slice_volume_check(mesh, theta_axis=args.axis, tol=tol)
    except AssertionError as exc:
        sys.stderr.write(f"validation failure: {exc}\n")
        return 1
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    rep.add(volC=res["volC"], slice_integral=res["slice_integral"],
            is_product=res["is_product"])
    rep.emit(args.out)
    return 0


def cmd_lagrangian(args) -> int:
    from .lagr import boundary_data, load_boundary_map

    C = _load_mesh_or_exit(args.C).complex
    L = _load_mesh_or_exit(args.L).complex
    try:
        vmap = load_boundary_map(args.bmap)
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    rep = Report()
    try:
        bd = boundary_data(C, L, vmap)
    except ValueError as exc:
        sys.stderr.write(f"validation failure: {exc}\n")
        return 1
    lag = bd.is_lagrangian()
    rep.add(dim=bd.space.dimension, m=bd.space.m,
            rank_alpha=int(np.linalg.matrix_rank(bd.alpha.astype(float))
                           if bd.alpha.size else 0),
            rank_beta=int(np.linalg.matrix_rank(bd.beta.astype(float))
                          if bd.beta.size else 0),
            lagrangian=lag, les_exact=bd.les["exact"])
    for node in bd.les["nodes"]:
        rep.add(node=f"{node['space'][0]}{node['space'][1]}", dim=node["dim"],
                rank_in=node["rank_in"], rank_out=node["rank_out"],
                exact=node["exact"])
    rep.emit(args.out)
    return 0 if lag and bd.les["exact"] else 1


def cmd_closedness(args) -> int:
    from .cycles import Configuration, TangentVector, closedness_check
    from .g2core import standard_structure

    mesh = _load_mesh_or_exit(args.mesh)
    st = standard_structure()
    if args.conn:
        conn = _load_conn(args.conn, mesh.complex)
        cfg = Configuration(mesh, conn)
    else:
        cfg = Configuration.flat(mesh)
    rng = np.random.default_rng(args.seed)
    d1 = TangentVector.random(cfg, rng)
    d2 = TangentVector.random(cfg, rng)
    h = args.h if args.h is not None else 1e-3
    rep = Report()
    try:
        val = closedness_check("phi0", cfg, d1, d2, h, st)
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    rep.add(h=h, dphi0=val, seed=args.seed)
    rep.emit(args.out)
    return 0


# -- argument parsing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="g2kit",
                                description="Numerical toolkit for calibrated "
                                            "geometry on the flat 7-torus")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--h", type=float, default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None)
        sp.add_argument("--max-steps", type=int, default=10000)
        sp.add_argument("--dt", type=float, default=0.05)
        sp.add_argument("--cluster-tol", type=float, default=1e-4)

    sp = sub.add_parser("verify-structure", help="self-test of the structure identities")
    common(sp)
    sp.set_defaults(func=cmd_verify_structure)

    sp = sub.add_parser("residuals", help="calibration residuals of a mesh")
    sp.add_argument("mesh")
    sp.add_argument("conn", nargs="?", default=None)
    common(sp)
    sp.set_defaults(func=cmd_residuals)

    sp = sub.add_parser("flow", help="residual descent flow")
    sp.add_argument("mesh")
    sp.add_argument("conn", nargs="?", default=None)
    common(sp)
    sp.set_defaults(func=cmd_flow)

    sp = sub.add_parser("count", help="flow a directory of seeds and cluster")
    sp.add_argument("seeds_dir")
    common(sp)
    sp.set_defaults(func=cmd_count)

    sp = sub.add_parser("torsion", help="first homology and bundle count")
    sp.add_argument("complex")
    common(sp)
    sp.set_defaults(func=cmd_torsion)

    sp = sub.add_parser("slice", help="circle-fibration volume identity")
    sp.add_argument("mesh")
    sp.add_argument("--axis", type=int, default=0)
    common(sp)
    sp.set_defaults(func=cmd_slice)

    sp = sub.add_parser("lagrangian", help="boundary-value Lagrangian check")
    sp.add_argument("C")
    sp.add_argument("L")
    sp.add_argument("bmap")
    common(sp)
    sp.set_defaults(func=cmd_lagrangian)

    sp = sub.add_parser("closedness", help="finite-difference closedness check")
    sp.add_argument("mesh")
    sp.add_argument("conn", nargs="?", default=None)
    common(sp)
    sp.set_defaults(func=cmd_closedness)

    return p


def main(argv=None) -> int:
    _setup_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        sys.stderr.write(f"validation failure: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())

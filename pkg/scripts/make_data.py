#!/usr/bin/env python3
"""Regenerate the bundled fixture files in src/g2kit/data/."""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from g2kit.complexes import (SimplicialComplex, circle_complex, freudenthal_torus,
                             full_simplex, orient, rp3_complex, simplicial_product,
                             sphere_complex)
from g2kit.mesh import ImmersedMesh, save_mesh, torus_mesh

DATA = Path(__file__).resolve().parents[1] / "src" / "g2kit" / "data"
DATA.mkdir(exist_ok=True)


def bare(cx):
    return ImmersedMesh(cx, None, None)


def seven_vertex_torus():
    tris = [tuple((i + d) % 7 for d in (0, 1, 3)) for i in range(7)] + \
           [tuple((i + d) % 7 for d in (0, 2, 3)) for i in range(7)]
    return orient(7, tris)


def compact_boundary(C):
    """(boundary complex with compact vertex ids, map L-vertex -> C-vertex)."""
    L0 = C.boundary_complex()
    used = sorted({v for s in L0.simplices for v in s})
    relab = {v: i for i, v in enumerate(used)}
    L = SimplicialComplex(len(used),
                          [tuple(relab[v] for v in s) for s in L0.simplices])
    return L, {i: v for v, i in relab.items()}


def write_bmap(vmap, path):
    with open(path, "w") as fh:
        for lv in sorted(vmap):
            fh.write(f"b {lv} {vmap[lv]}\n")


def main():
    # immersed tori
    save_mesh(torus_mesh((0, 1, 2, 3), n=3), DATA / "torus4_coassoc.mesh")
    save_mesh(torus_mesh((4, 5, 6), n=3), DATA / "torus3_assoc.mesh")
    save_mesh(torus_mesh((1, 2, 3), n=3), DATA / "torus3_slag.mesh")

    # bare complexes for homology/torsion runs
    save_mesh(bare(sphere_complex(3)), DATA / "s3.mesh")
    save_mesh(bare(rp3_complex()), DATA / "rp3.mesh")
    save_mesh(bare(freudenthal_torus(3, 3)[0]), DATA / "t3.mesh")

    # boundary-value pairs
    pairs = {
        "d4": full_simplex(4),
        "s1xd3": simplicial_product(circle_complex(3), full_simplex(3))[0],
        "d2xt2": simplicial_product(full_simplex(2), seven_vertex_torus())[0],
    }
    boundary_names = {"d4": "s3_boundary", "s1xd3": "s1xs2_boundary",
                      "d2xt2": "t3_boundary"}
    for name, C in pairs.items():
        L, vmap = compact_boundary(C)
        save_mesh(bare(C), DATA / f"{name}.mesh")
        save_mesh(bare(L), DATA / f"{boundary_names[name]}.mesh")
        write_bmap(vmap, DATA / f"{name}.bmap")

    print("wrote", len(list(DATA.iterdir())), "files to", DATA)


if __name__ == "__main__":
    main()

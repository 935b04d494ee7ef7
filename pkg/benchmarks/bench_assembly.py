"""Time FEM assembly with the numba kernels against the vectorised numpy path.

Usage: python3 benchmarks/bench_assembly.py [--elems 20 200 2000] [--repeat 200]

Run with PATHTRACE_NUMBA=0 to see the loop kernels executed as plain Python.
The Jacobian is stored dense, so on large meshes both paths are dominated by
allocating and copying it and the kernel choice stops mattering.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from pathtrace._accel import backend_name
from pathtrace.fem1d import make_fem_problem
from pathtrace.fem1d import assemble_bratu, assemble_manufactured


def bench(kind: str, n: int, repeat: int) -> dict[str, float]:
    prob = make_fem_problem(kind, mesh_elems=n)
    x = prob.mesh.interior_nodes
    u = 0.01 * np.sin(np.pi * x)
    asm = assemble_bratu if prob.spec.kind == "bratu_modified" else assemble_manufactured
    out = {}
    ref = None
    for label, flag in (("loop kernel", True), ("numpy", False)):
        call = lambda: asm(prob.spec, prob.mesh, u, 0.9, use_numba=flag)
        R, J = call()                                   # warm up (and compile)
        if ref is None:
            ref = (R, J)
        else:
            # the residual cancels stiffness terms of size 1/h, so scale by |J|
            scale = np.abs(ref[1]).max()
            assert np.abs(R - ref[0]).max() <= 1e-12 * scale
            assert np.abs(J - ref[1]).max() <= 1e-12 * scale
        out[label] = min(timeit.repeat(call, number=repeat, repeat=3)) / repeat
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--elems", type=int, nargs="+", default=[20, 200, 2000])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    print(f"loop kernel backend: {backend_name()}")
    print(f"{'problem':<13}{'elems':>7}{'loop [us]':>12}{'numpy [us]':>12}{'speedup':>9}")
    for kind in ("bratu", "manufactured"):
        for n in args.elems:
            t = bench(kind, n, args.repeat)
            a, b = t["loop kernel"] * 1e6, t["numpy"] * 1e6
            print(f"{kind:<13}{n:>7}{a:>12.1f}{b:>12.1f}{b / a:>9.2f}")


if __name__ == "__main__":
    main()

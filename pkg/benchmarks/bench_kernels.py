"""Compare the compiled and numpy kernel backends on graded perforated meshes.

    python3 benchmarks/bench_kernels.py [--eps 0.0625 0.03125] [--repeat 5] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from perfhom import fem, kernels
from perfhom.geometry import LayoutConfig, build_layout
from perfhom.mesh import triangulate


def _case(eps: float):
    layout = build_layout(LayoutConfig(epsilon=eps, eta=0.5))
    mesh = triangulate(layout, 0.8 * eps)
    aq, bq, cq = fem._coefficients_at_midpoints(mesh, fem.CoefficientField.laplace())
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 1, size=(20_000, 2))
    return mesh, aq, bq, cq, pts


def bench(eps_list, repeat: int) -> list[dict]:
    rows = []
    for eps in eps_list:
        mesh, aq, bq, cq, pts = _case(eps)
        row = {"eps": eps, "triangles": mesh.n_triangles}
        backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
        ref = None
        for b in backends:
            t_asm = min(timeit.repeat(lambda: kernels.assemble_p1(mesh.vertices, mesh.triangles, aq, bq, cq,
                                                                   backend=b), number=1, repeat=repeat))
            t_loc = min(timeit.repeat(lambda: kernels.locate_points(mesh.vertices, mesh.triangles, pts,
                                                                     backend=b), number=1, repeat=repeat))
            out = kernels.assemble_p1(mesh.vertices, mesh.triangles, aq, bq, cq, backend=b)
            if ref is None:
                ref = out
            else:
                row["max_abs_diff"] = float(max(np.abs(x - y).max() for x, y in zip(ref[2:], out[2:])))
            row[f"{b}_assemble_ms"] = 1e3 * t_asm
            row[f"{b}_locate_ms"] = 1e3 * t_loc
        if "cython_assemble_ms" in row:
            row["speedup_assemble"] = row["python_assemble_ms"] / row["cython_assemble_ms"]
            row["speedup_locate"] = row["python_locate_ms"] / row["cython_locate_ms"]
        rows.append(row)
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.0625, 0.03125])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", default=None)
    args = ap.parse_args()
    rows = bench(args.eps, args.repeat)
    print(f"compiled backend available: {kernels.BACKEND == 'cython'}")
    for r in rows:
        print(json.dumps(r, sort_keys=True))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()

"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``PERFHOM_PURE_PYTHON=1`` to force the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("PERFHOM_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels


def assemble_p1(vertices, triangles, aq, bq, cq, backend: str | None = None):
    """COO triplets of the P1 element operators.

    ``aq`` (T,3,2,2), ``bq`` (T,3,2) and ``cq`` (T,3) are the diffusion,
    convection and reaction coefficients at the three edge midpoints.
    Returns ``rows, cols, stiffness_values, mass_values``; the stiffness
    includes convection and reaction, the mass is the exact P1 mass.
    """
    impl = _select(backend)
    return impl.assemble_p1(
        np.ascontiguousarray(vertices, dtype=np.float64),
        np.ascontiguousarray(triangles, dtype=np.int64),
        np.ascontiguousarray(aq, dtype=np.float64),
        np.ascontiguousarray(bq, dtype=np.float64),
        np.ascontiguousarray(cq, dtype=np.float64),
    )


def locate_points(vertices, triangles, points, tol: float = 1e-10, backend: str | None = None):
    """Containing triangle (-1 if outside) and barycentric coordinates per point."""
    impl = _select(backend)
    return impl.locate_points(
        np.ascontiguousarray(vertices, dtype=np.float64),
        np.ascontiguousarray(triangles, dtype=np.int64),
        np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64),
        float(tol),
    )


def _select(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _pykernels
    if backend == "cython":
        if BACKEND != "cython":
            raise RuntimeError("compiled kernels are not available")
        return _impl
    raise ValueError(f"unknown backend {backend!r}")

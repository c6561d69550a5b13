from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perfhom import kernels
from perfhom.mesh import disk_with_hole_mesh

needs_compiled = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernels not built")


@pytest.fixture(scope="module")
def mesh():
    return disk_with_hole_mesh(1.0, 0.3, "outer_dirichlet", "cavity_robin", 0.15)


def _coeffs(m, seed=0):
    rng = np.random.default_rng(seed)
    T = m.n_triangles
    L = rng.normal(size=(T, 3, 2, 2))
    aq = np.einsum("tqij,tqkj->tqik", L, L) + np.eye(2)
    return aq, rng.normal(size=(T, 3, 2)), rng.uniform(0, 2, size=(T, 3))


def test_python_stiffness_annihilates_constants(mesh):
    T = mesh.n_triangles
    aq = np.broadcast_to(np.eye(2), (T, 3, 2, 2)).copy()
    rows, cols, kv, mv = kernels.assemble_p1(mesh.vertices, mesh.triangles, aq, np.zeros((T, 3, 2)),
                                             np.zeros((T, 3)), backend="python")
    n = mesh.n_vertices
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    np.add.at(K, (rows, cols), kv)
    np.add.at(M, (rows, cols), mv)
    assert np.abs(K @ np.ones(n)).max() < 1e-12
    assert np.ones(n) @ M @ np.ones(n) == pytest.approx(mesh.area(), rel=1e-12)
    # linear functions: x^T K x equals the area
    x = mesh.vertices[:, 0]
    assert x @ K @ x == pytest.approx(mesh.area(), rel=1e-12)


@needs_compiled
def test_backends_agree_on_assembly(mesh):
    aq, bq, cq = _coeffs(mesh)
    a = kernels.assemble_p1(mesh.vertices, mesh.triangles, aq, bq, cq, backend="python")
    b = kernels.assemble_p1(mesh.vertices, mesh.triangles, aq, bq, cq, backend="cython")
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-13, atol=1e-14)


@needs_compiled
def test_backends_agree_on_location(mesh):
    pts = np.random.default_rng(1).uniform(-1.1, 1.1, size=(500, 2))
    ta, ba = kernels.locate_points(mesh.vertices, mesh.triangles, pts, backend="python")
    tb, bb = kernels.locate_points(mesh.vertices, mesh.triangles, pts, backend="cython")
    assert np.array_equal(ta >= 0, tb >= 0)
    inside = ta >= 0
    # points on shared edges may land in either neighbour; the interpolant is the same
    xa = np.einsum("pi,pij->pj", ba[inside], mesh.vertices[mesh.triangles[ta[inside]]])
    xb = np.einsum("pi,pij->pj", bb[inside], mesh.vertices[mesh.triangles[tb[inside]]])
    assert np.allclose(xa, pts[inside]) and np.allclose(xb, pts[inside])


def test_unknown_backend_rejected(mesh):
    with pytest.raises(ValueError):
        kernels.locate_points(mesh.vertices, mesh.triangles, np.zeros((1, 2)), backend="fortran")


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_barycentric_reproduces_points(seed):
    m = disk_with_hole_mesh(1.0, 0.3, "outer_dirichlet", "cavity_robin", 0.3)
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.35, 0.95, 50)
    th = rng.uniform(0, 2 * np.pi, 50)
    pts = np.column_stack([r * np.cos(th), r * np.sin(th)])
    tri, bary = kernels.locate_points(m.vertices, m.triangles, pts)
    assert np.all(tri >= 0)
    assert np.all(bary >= -1e-10)
    assert np.allclose(bary.sum(axis=1), 1)
    rec = np.einsum("pi,pij->pj", bary, m.vertices[m.triangles[tri]])
    assert np.allclose(rec, pts)


def test_pure_python_fallback_selected_by_env():
    import os
    import subprocess
    import sys

    env = dict(os.environ, PERFHOM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from perfhom import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"

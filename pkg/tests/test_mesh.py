from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perfhom.geometry import LayoutConfig, Polygon, build_layout
from perfhom.mesh import (
    MeshError, Tag, check_conforming, default_divisions, disk_with_hole_mesh, loops_of, mesh_quality,
    periodic_cell_mesh, read_mesh, read_values, refine_uniform, triangle_angles, triangulate, write_mesh,
    write_values,
)


@pytest.fixture(scope="module")
def layout_mesh():
    lay = build_layout(LayoutConfig(epsilon=1 / 8, eta=0.5))
    return lay, triangulate(lay, 0.1)


def test_mesh_area_matches_domain(layout_mesh):
    lay, m = layout_mesh
    holes = sum(lay.cavity_area(k) for k in range(len(lay.cavities)))
    # polygonal holes are slightly smaller than the disks
    assert m.area() == pytest.approx(1 - holes, rel=2e-3)


def test_mesh_quality_and_conformity(layout_mesh):
    _, m = layout_mesh
    q = mesh_quality(m)
    assert q["min_angle"] >= 20 - 1e-9
    assert check_conforming(m)
    assert np.all(m.areas() > 0)


def test_loops_per_cavity(layout_mesh):
    lay, m = layout_mesh
    for k in range(len(lay.cavities)):
        loops = loops_of(m, Tag("cavity_dirichlet", k))
        assert len(loops) == 1
        pts = m.vertices[loops[0]]
        r = np.hypot(*(pts - lay.centers[k]).T)
        assert np.allclose(r, lay.scale, rtol=1e-12)


def test_outer_loop_on_box(layout_mesh):
    _, m = layout_mesh
    nodes = m.nodes_where(lambda t: t.kind == "outer_dirichlet")
    v = m.vertices[nodes]
    d = np.minimum.reduce([v[:, 0], 1 - v[:, 0], v[:, 1], 1 - v[:, 1]])
    assert np.allclose(d, 0, atol=1e-12)


def test_roundtrip(tmp_path, layout_mesh):
    _, m = layout_mesh
    write_mesh(m, tmp_path / "m.txt")
    m2 = read_mesh(tmp_path / "m.txt")
    assert np.array_equal(m.vertices, m2.vertices)
    assert np.array_equal(m.triangles, m2.triangles)
    assert m.tags == m2.tags
    vals = np.sin(m.vertices[:, 0])
    write_values(vals, tmp_path / "v.txt")
    assert np.array_equal(read_values(tmp_path / "v.txt"), vals)


def test_read_rejects_foreign_file(tmp_path):
    (tmp_path / "x.txt").write_text("hello\n")
    with pytest.raises(MeshError):
        read_mesh(tmp_path / "x.txt")


def test_refine_uniform_quarters_area():
    m = disk_with_hole_mesh(1.0, 0.3, "outer_dirichlet", "cavity_robin", 0.2)
    r = refine_uniform(m)
    assert r.n_triangles == 4 * m.n_triangles
    exact = math.pi * (1 - 0.3**2)
    # new boundary midpoints sit on the circles, so the area moves toward the exact one
    assert abs(r.area() - exact) < 0.3 * abs(m.area() - exact)
    assert triangle_angles(r).min() > 15
    assert check_conforming(r)


def test_periodic_cell_sides_match():
    m = periodic_cell_mesh(0.5, "cavity_robin", h_max=0.3)
    v = m.vertices
    for d in range(2):
        lo = np.sort(v[np.abs(v[:, d] + 2) < 1e-12, 1 - d])
        hi = np.sort(v[np.abs(v[:, d] - 2) < 1e-12, 1 - d])
        assert np.allclose(lo, hi, rtol=0, atol=1e-12)
    assert m.area() == pytest.approx(16 - math.pi * 0.25, rel=1e-3)


def test_periodic_cell_rejects_large_hole():
    with pytest.raises(MeshError):
        periodic_cell_mesh(2.5, "cavity_robin")


def test_polygon_cavities_mesh():
    sq = Polygon(((-0.6, -0.6), (0.6, -0.6), (0.6, 0.6), (-0.6, 0.6)))
    lay = build_layout(LayoutConfig(epsilon=1 / 8, eta=0.5, shape=sq, bc_rule="robin"))
    m = triangulate(lay, 0.1)
    assert mesh_quality(m)["min_angle"] >= 20 - 1e-9
    assert m.area() == pytest.approx(1 - 4 * (1.2 * lay.scale) ** 2, rel=1e-10)


def test_transformed_scales_area():
    m = disk_with_hole_mesh(1.0, 0.3, "outer_dirichlet", "cavity_dirichlet", 0.2)
    t = m.transformed(0.1, (2.0, 3.0))
    assert t.area() == pytest.approx(0.01 * m.area())
    assert np.allclose(t.vertices.mean(axis=0), 0.1 * m.vertices.mean(axis=0) + [2, 3])


@settings(max_examples=20, deadline=None)
@given(h=st.floats(1e-3, 1.0), s=st.floats(0.01, 1.0))
def test_default_divisions_bounds(h, s):
    n = default_divisions(h, s)
    assert n >= 32
    assert n >= 4 * math.pi * s / h


@settings(max_examples=8, deadline=None)
@given(eta=st.sampled_from([0.25, 0.5, 1.0]), k=st.integers(2, 4))
def test_graded_meshes_keep_angle_bound(eta, k):
    lay = build_layout(LayoutConfig(epsilon=1 / 2**k, eta=eta))
    m = triangulate(lay, 0.8 / 2**k)
    assert triangle_angles(m).min() >= 20 - 1e-9

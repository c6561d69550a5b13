from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perfhom import cell, fem
from perfhom.geometry import GeometryError, cell_c4


@pytest.fixture(scope="module")
def v0():
    return cell.solve_v0(0.5)


@pytest.fixture(scope="module")
def v1_pair():
    return cell.solve_v1(1.0)


def test_v0_energy_identity(v0):
    # int |grad v0|^2 = int v0 for -Lap v0 = 1 with zero hole trace
    assert v0.grad_l2**2 == pytest.approx(v0.integral(), rel=1e-10)
    assert v0.periodicity_defect() == 0.0
    assert np.abs(v0.values[cell._hole_nodes(v0.mesh)]).max() == 0.0
    assert v0.residual < 1e-10


def test_v0_reference_norms(v0):
    # frozen from the h_max = 0.2 mesh; a finer mesh moves them by < 0.5 %
    assert v0.l2 == pytest.approx(8.8369, rel=1e-3)
    assert v0.grad_l2 == pytest.approx(5.7594, rel=1e-3)
    fine = cell.solve_v0(0.5, h_max=0.1, hole_divisions=128)
    assert fine.l2 == pytest.approx(v0.l2, rel=5e-3)


def test_v0_symmetry(v0):
    # the cell is invariant under x -> -x; so is v0
    m = v0.mesh
    pts = np.array([[1.3, 0.4], [0.9, -1.2], [-1.7, 1.1]])
    a = fem.evaluate(m, v0.values, pts)
    b = fem.evaluate(m, v0.values, -pts)
    assert np.allclose(a, b, rtol=1e-2)


def test_v1_compatibility_and_mean(v1_pair):
    v1, c4 = v1_pair
    assert c4 == pytest.approx(cell_c4(1.0))
    assert v1.info["compatibility"] < 1e-14
    assert abs(v1.hole_integral()) < 1e-12
    assert v1.info["c4_discrete"] == pytest.approx(c4, rel=5e-3)


def test_v2_compatible(v1_pair):
    v1, _ = v1_pair
    v2 = cell.solve_v2(v1)
    assert v2.info["compatibility"] < 1e-12
    assert abs(v2.hole_integral()) < 1e-12


def test_vmu_expansion_remainder_halves(v1_pair):
    v1, _ = v1_pair
    r = [cell.verify_expansion(cell.solve_vmu(1.0, em), v1) for em in (0.1, 0.05, 0.025)]
    assert 1.8 < r[0] / r[1] < 2.2
    assert 1.8 < r[1] / r[2] < 2.2


def test_vmu_hole_mean_grows_like_c4_over_epsmu(v1_pair):
    v1, _ = v1_pair
    c4h = v1.info["c4_discrete"]
    for em in (0.1, 0.01):
        vmu = cell.solve_vmu(1.0, em)
        assert vmu.hole_mean() * em == pytest.approx(c4h, rel=2 * em)


def test_verify_expansion_guards(v1_pair):
    v1, _ = v1_pair
    other = cell.solve_vmu(0.5, 0.1)
    with pytest.raises(ValueError):
        cell.verify_expansion(other, v1)
    with pytest.raises(ValueError):
        cell.solve_vmu(1.0, 0.0)


def test_x_problem_matches_radial_profile():
    for eta in (0.5, 0.2):
        _, info = cell.solve_X(eta)
        assert info["ray_rel_error"] < 1e-2
        assert info["flux_rel_error"] < 1e-3


def test_x_problem_norm_bounded_in_eta():
    w = [cell.solve_X(eta, h=0.1)[1]["w12"] for eta in (0.5, 0.2, 0.05)]
    assert max(w) / min(w) < 1.5


def test_x_exact_boundary_values():
    assert cell.x_exact(1.9, 0.5) == pytest.approx(0.0)
    # zero radial derivative at the hole
    h = 1e-6
    d = (cell.x_exact(0.5 + h, 0.5) - cell.x_exact(0.5 - h, 0.5)) / (2 * h)
    assert d == pytest.approx(0.0, abs=1e-8)


def test_G_values():
    assert cell.G(1.0) == 0.0
    assert cell.G(math.e) == pytest.approx(16 / (2 * math.pi))
    with pytest.raises(ValueError):
        cell.G(0.0)
    # 3D: 4^3 t^-1 / (-1 * 4 pi)
    assert cell.G(2.0, 3) == pytest.approx(-(4**3) / 2 / (4 * math.pi))


def test_v0_grows_logarithmically():
    out = cell.v0_log_growth([0.2, 0.1, 0.05])
    ratios = [row[2] / row[4] for row in out["rows"]]
    # G is negative below eta = 1 while the energy is positive
    assert out["c5"] < 0
    assert max(ratios) / min(ratios) < 1.5


def test_cell_mesh_rejects_large_eta():
    with pytest.raises(GeometryError):
        cell.cell_mesh(2.0)


def test_averaging_smooth_periodic_weight():
    # v == 1 reduces the identity to a Riemann sum of h over the cell mesh
    one = cell.CellField(cell.cell_mesh(0.5), np.ones(cell.cell_mesh(0.5).n_vertices), 0.5, "V0")

    def h(x):
        return np.where((x[:, 0] > 0) & (x[:, 0] < 1) & (x[:, 1] > 0) & (x[:, 1] < 1),
                        16 * x[:, 0] * (1 - x[:, 0]) * x[:, 1] * (1 - x[:, 1]), 0.0)

    lhs, lead, _ = cell.averaging_check(one, h, 1 / 16, (0, 0, 1, 1), h_integral=16 / 36)
    hole = math.pi * (0.5 / 16) ** 2 / (4 / 16) ** 2
    assert lhs == pytest.approx(lead, rel=2e-2)
    assert lead == pytest.approx(16 / 36 * (1 - hole), rel=5e-3)


def test_averaging_needs_four_periods(v0):
    with pytest.raises(ValueError):
        cell.averaging_check(v0, lambda x: np.ones(len(x)), 0.25, (0, 0, 1, 1))


@settings(max_examples=10, deadline=None)
@given(ox=st.floats(0, 1), oy=st.floats(0, 1), k=st.integers(2, 5))
def test_tiles_cover_box(ox, oy, k):
    eps = 1 / 2**k
    c = cell.tile_centers((0, 0, 1, 1), eps, (ox * 4 * eps, oy * 4 * eps))
    p = 4 * eps
    for q in np.random.default_rng(k).uniform(0, 1, (50, 2)):
        assert np.any(np.all(np.abs(c - q) <= p / 2 + 1e-12, axis=1))


@settings(max_examples=6, deadline=None)
@given(shift=st.floats(-5, 5))
def test_neumann_solution_unique_up_to_constant(shift, v1_pair):
    v1, _ = v1_pair
    moved = v1.shifted(shift)
    assert moved.grad_l2 == pytest.approx(v1.grad_l2, rel=1e-12)
    assert moved.hole_mean() == pytest.approx(shift, abs=1e-10)

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perfhom.geometry import (
    Disk, GeometryError, LayoutConfig, OuterDomain, Polygon, audit, boundary_quadrature, build_layout,
    cell_c4, check_alpha_bounds, check_assumption_a1, check_covering, kappa, smallness_indicators,
)


def periodic(eps=1 / 16, eta=0.5, **kw):
    return build_layout(LayoutConfig(epsilon=eps, eta=eta, **kw))


def test_periodic_lattice_is_cell_centered():
    lay = periodic(1 / 8)
    assert len(lay.cavities) == 4
    assert sorted(map(tuple, lay.centers.tolist())) == [(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]


def test_index_sets_partition():
    lay = periodic(1 / 8, bc_rule="split")
    sets = lay.index_sets
    allk = sorted(sets["dirichlet"] + sets["robin"] + sets["robin_sign_definite"])
    assert allk == list(range(len(lay.cavities)))
    assert len(sets["dirichlet"]) == 2 and len(sets["robin_sign_definite"]) == 2


def test_periodic_example_passes_audit():
    rep = audit(periodic())
    assert rep.passed
    assert all(rep.verdicts()[k] for k in ("inclusion", "connected", "separation", "boundary_clearance", "covering"))
    assert rep.a1_separation == pytest.approx(4 / 3.8)


def test_separation_flip_only():
    lay = periodic()
    base = audit(lay).verdicts()
    c = lay.centers[5]
    bad = audit(lay.with_center(5, (c[0] + 0.3 * lay.epsilon, c[1]))).verdicts()
    flipped = {k for k in base if base[k] != bad[k]}
    assert flipped == {"separation"}


def test_boundary_clearance_detected():
    lay = periodic()
    rep = check_assumption_a1(lay.with_center(0, (0.05, 0.125)))
    assert not rep.a1_boundary_clearance_pass


def test_covering_fails_with_sparse_layout():
    lay = build_layout(LayoutConfig(epsilon=1 / 16, eta=0.5, generator="explicit", centers=((0.5, 0.5),)))
    ok, worst, ratio = check_covering(lay)
    assert not ok and ratio > 1


def test_covering_pitch_too_coarse_raises():
    with pytest.raises(GeometryError):
        check_covering(periodic(), pitch=1.0)


def test_covering_requires_qualifying_cavity():
    with pytest.raises(GeometryError):
        check_covering(periodic(bc_rule="robin_indefinite"))


def test_kappa_and_indicators():
    assert kappa(1.0) == 1.0
    assert kappa(math.exp(-2)) == pytest.approx(3.0)
    assert kappa(0.1, n=3) == 1.0
    t1, t2 = smallness_indicators(0.1, 0.5, 4.0)
    assert t1 == pytest.approx(0.1 / 0.5 / 4)
    assert t2 == pytest.approx(0.01 * kappa(0.5))
    with pytest.raises(GeometryError):
        kappa(0.0)
    with pytest.raises(GeometryError):
        smallness_indicators(0.1, 0.5, 0.5)


def test_cell_c4_closed_form():
    assert cell_c4(1.0) == pytest.approx((16 - math.pi) / (2 * math.pi))
    with pytest.raises(GeometryError):
        cell_c4(2.5)


def test_boundary_quadrature_perimeter():
    lay = periodic(1 / 8)
    _, w = boundary_quadrature(lay, 0)
    assert w.sum() == pytest.approx(lay.cavity_perimeter(0), rel=1e-12)
    sq = Polygon(((-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)))
    lay2 = periodic(1 / 8, shape=sq)
    _, w2 = boundary_quadrature(lay2, 0)
    assert w2.sum() == pytest.approx(4 * lay2.scale)


def test_alpha_bounds_constant_weight():
    lay = periodic(1 / 8, bc_rule="robin")
    per = 2 * math.pi  # unit disk perimeter; the weight is constant one
    pairs = check_alpha_bounds(lay, lambda k, x: np.ones(len(x)), c2=per, c3=per)
    assert all(p == pytest.approx((1.0, 1.0)) for p in pairs)
    with pytest.raises(GeometryError):
        check_alpha_bounds(lay, lambda k, x: -np.ones(len(x)), 1, 1)


def test_polygon_must_be_star_shaped():
    with pytest.raises(GeometryError):
        periodic(shape=Polygon(((0, 0), (1, 0), (0, 1)), star_shaped=False))


def test_invalid_layouts():
    with pytest.raises(GeometryError):
        periodic(eta=1.5)
    with pytest.raises(GeometryError):
        periodic(eps=0.0)
    with pytest.raises(GeometryError):
        OuterDomain(kind="box", box=(0, 0, 0, 1))
    with pytest.raises(GeometryError):
        periodic(generator="spiral")


def test_report_json_roundtrip():
    import json

    rep = audit(periodic(1 / 8))
    d = json.loads(rep.to_json())
    assert d["passed"] is True and d["verdicts"]["separation"] is True


def test_jittered_is_seeded():
    a = periodic(1 / 8, generator="jittered", jitter=0.02, seed=3).centers
    b = periodic(1 / 8, generator="jittered", jitter=0.02, seed=3).centers
    c = periodic(1 / 8, generator="jittered", jitter=0.02, seed=4).centers
    assert np.array_equal(a, b) and not np.array_equal(a, c)


@settings(max_examples=25, deadline=None)
@given(k=st.integers(2, 5), s=st.floats(0.5, 4.0))
def test_separation_ratio_is_scale_invariant(k, s):
    eps = 1 / 2**k
    lay = periodic(eps)
    r1 = check_assumption_a1(lay).a1_separation
    r2 = check_assumption_a1(lay.scaled(s)).a1_separation
    assert r1 == pytest.approx(r2, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(eta=st.floats(0.01, 1.0), n=st.integers(2, 4))
def test_kappa_at_least_one(eta, n):
    assert kappa(eta, n) >= 1.0


def test_disk_outer_domain_layout():
    lay = build_layout(LayoutConfig(epsilon=1 / 8, eta=0.5, generator="explicit", centers=((0.0, 0.0),),
                                    outer=OuterDomain(kind="disk", radius=0.5), shape=Disk(1.0)))
    rep = check_assumption_a1(lay)
    assert rep.a1_boundary_clearance_pass

"""Acceptance criteria 1-9, each printed as one PASS/FAIL line."""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from perfhom import cell, fem, rates
from perfhom.geometry import LayoutConfig, audit, build_layout, check_covering
from perfhom.mesh import disk_with_hole_mesh


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} | {detail}")

    return emit


def ones(x):
    return np.ones(len(x))


def test_criterion_1_t2_rate(report):
    t0 = time.perf_counter()
    scn = rates.Scenario(layout=LayoutConfig(epsilon=0.25, eta=0.5), eps_list=[1 / 4, 1 / 8, 1 / 16],
                         eta_rule=rates.Fixed(0.5), self_convergence=False)
    res = rates.run_sweep(scn)
    wall = time.perf_counter() - t0
    s = {v["norm"]: v["fitted_slope"] for v in res.verdicts}
    ok = 1.6 <= s["L2"] <= 2.4 and 0.7 <= s["W12"] <= 1.3 and wall <= 300
    report(1, ok, f"L2 slope {s['L2']:.3f} in [1.6, 2.4], W12 slope {s['W12']:.3f} in [0.7, 1.3], {wall:.1f}s")
    assert ok


def test_criterion_2_dirichlet_sharpness(report):
    rows, info = rates.sharpness_dirichlet([1 / 16], eta=0.5)
    r = rows[0]
    ok = abs(r.rel_l2 - 1) <= 0.15 and abs(r.rel_grad - 1) <= 0.15
    report(2, ok, f"(ratio/eps^2)/|v0| = {r.rel_l2:.4f}, (grad ratio/eps)/|grad v0| = {r.rel_grad:.4f}, "
                  f"target 1 +- 0.15")
    assert ok


def test_criterion_3_robin_term(report):
    rows, _ = rates.sharpness_robin([1 / 8, 1 / 16, 1 / 32], rates.mu_power(0.5), eta=0.5)
    rel = [r.rel_l2 for r in rows]
    dev = [abs(x - 1) for x in rel]
    in_band = 0.8 <= rel[-1] <= 1.2
    decreasing = all(b < a for a, b in zip(dev, dev[1:]))
    ok = in_band and decreasing
    report(3, ok, "ratio/(c4 eps/mu) = " + ", ".join(f"{x:.4f}" for x in rel)
           + f"; last in [0.8, 1.2]: {in_band}; deviation decreasing: {decreasing}")
    assert ok


def test_criterion_4_cell_expansion(report):
    t0 = time.perf_counter()
    v1, _ = cell.solve_v1(1.0)
    r = [cell.verify_expansion(cell.solve_vmu(1.0, em), v1) for em in (0.1, 0.05)]
    wall = time.perf_counter() - t0
    ratio = r[0] / r[1]
    ok = 1.5 <= ratio <= 2.5 and wall <= 60
    report(4, ok, f"remainder ratio {ratio:.3f} in [1.5, 2.5], {wall:.1f}s")
    assert ok


def test_criterion_5_local_poincare_scaling(report):
    def const(eps, eta):
        lay = build_layout(LayoutConfig(epsilon=eps, eta=eta, generator="explicit", centers=((0.5, 0.5),)))
        return fem.local_poincare_constant(lay, 0, "DirichletHole")

    eps = 1 / 8
    scaled = [const(eps, eta) / (eps**2 * (abs(math.log(eta)) + 1)) for eta in (0.5, 0.1, 0.02)]
    spread = max(scaled) / min(scaled)
    doubling = const(2 * eps, 0.1) / const(eps, 0.1)
    ok = spread < 3 and abs(doubling / 4 - 1) <= 0.01
    report(5, ok, f"normalized constants {', '.join(f'{x:.4f}' for x in scaled)} (spread {spread:.3f} < 3); "
                  f"doubling factor {doubling:.4f}")
    assert ok


def test_criterion_6_averaging(report):
    v0 = cell.solve_v0(0.5)

    def h(x):
        inside = (x[:, 0] > 0) & (x[:, 0] < 1) & (x[:, 1] > 0) & (x[:, 1] < 1)
        return np.where(inside, 16 * x[:, 0] * (1 - x[:, 0]) * x[:, 1] * (1 - x[:, 1]), 0.0)

    errs = [abs(cell.averaging_check(v0, h, eps, (0, 0, 1, 1), h_integral=16 / 36)[2]) for eps in (1 / 16, 1 / 32)]
    ratio = errs[0] / errs[1]
    ok = 1.6 <= ratio <= 2.4
    report(6, ok, f"|lhs - lead| = {errs[0]:.3e}, {errs[1]:.3e}; ratio {ratio:.3f} in [1.6, 2.4]")
    assert ok


def test_criterion_7_mms_nonlinear_robin(report):
    mu, rho = 4.0, 0.3

    def a(x, u):
        return mu * (u + 0.3 * np.tanh(u))

    def exact(x):
        r2 = (x**2).sum(axis=1)
        return (1 - r2) * (1 + 0.5 * x[:, 0] + x[:, 1] ** 2)

    def grad_exact(x):
        X, Y = x[:, 0], x[:, 1]
        q = 1 + 0.5 * X + Y**2
        r2 = X**2 + Y**2
        return np.column_stack([-2 * X * q + 0.5 * (1 - r2), -2 * Y * q + 2 * Y * (1 - r2)])

    def f(x):
        X, Y = x[:, 0], x[:, 1]
        q = 1 + 0.5 * X + Y**2
        r2 = X**2 + Y**2
        return -(-4 * q + 2 * (-X - 4 * Y**2) + 2 * (1 - r2))

    def g(x):
        # outward normal of the domain on the hole points to its center
        n = -x / np.linalg.norm(x, axis=1)[:, None]
        return np.sum(grad_exact(x) * n, axis=1) + a(x, exact(x))

    rob = fem.RobinModel(a=a, a0=1.3 * mu, mu=mu, alpha=lambda k, x: np.ones(len(x)))
    errs, iters, resid = [], [], []
    for h in (0.2, 0.1, 0.05):
        m = disk_with_hole_mesh(1.0, rho, "outer_dirichlet", "cavity_robin", h,
                                hole_divisions=2 * math.ceil(2 * math.pi * rho / h), grading=10.0)
        sol = fem.solve(m, None, rob, fem.ProblemData(f=f, g=g), tol=1e-10)
        errs.append(fem.norms((m, sol.values - exact(m.vertices)))["l2"])
        iters.append(sol.iterations)
        resid.append(sol.residual)
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    ok = min(orders) >= 1.8 and max(iters) <= 12 and max(resid) <= 1e-10
    report(7, ok, f"observed orders {orders[0]:.3f}, {orders[1]:.3f} (>= 1.8); Newton iterations {iters}; "
                  f"max residual {max(resid):.1e}")
    assert ok


def test_criterion_8_radial_oracles(report):
    x_err = {eta: cell.solve_X(eta)[1]["ray_rel_error"] for eta in (0.5, 0.2)}
    eta = 0.25
    ann = []
    for h in (0.1, 0.05, 0.025):
        m = disk_with_hole_mesh(1.0, eta, "outer_neumann", "cavity_dirichlet", h_outer=h,
                                hole_divisions=int(4 * math.pi * eta / h))
        sol = fem.solve(m, None, None, fem.ProblemData(f=ones))
        r = np.linspace(eta, 1.0, 200)[1:-1]
        pts = np.column_stack([r * math.cos(0.3), r * math.sin(0.3)])
        ex = (eta**2 - r**2) / 4 + 0.5 * np.log(r / eta)
        ann.append(float(np.nanmax(np.abs(fem.evaluate(m, sol.values, pts) - ex)) / ex.max()))
    decreasing = ann[0] > ann[1] > ann[2]
    ok = max(x_err.values()) <= 1e-2 and ann[-1] <= 1e-2 and decreasing
    report(8, ok, "X ray errors " + ", ".join(f"{v:.2e}" for v in x_err.values())
           + "; annulus errors " + ", ".join(f"{v:.2e}" for v in ann) + " (<= 1e-2 at the finest mesh)")
    assert ok


def test_criterion_9_geometry_audit(report):
    lay = build_layout(LayoutConfig(epsilon=1 / 16, eta=0.5, radii=(0.5, 1.0, 1.9, 3.0)))
    base = audit(lay)
    cov, _, _ = check_covering(lay)
    c = lay.centers[5]
    moved = audit(lay.with_center(5, (c[0] + 0.3 * lay.epsilon, c[1])))
    b, m = base.verdicts(), moved.verdicts()
    flipped = sorted(k for k in b if b[k] != m[k])
    ok = base.a1_pass and cov and flipped == ["separation"]
    report(9, ok, f"A1 pass {base.a1_pass}, covering {cov}; verdicts flipped by the perturbation: {flipped}")
    assert ok

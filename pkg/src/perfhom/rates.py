"""Epsilon sweeps, slope fits and the explicit sharpness constructions."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import cell, fem
from .geometry import GeometryError, LayoutConfig, audit, build_layout, kappa, smallness_indicators
from .mesh import mesh_quality, refine_uniform, triangulate

log = logging.getLogger(__name__)

CSV_COLUMNS = ("eps", "eta", "mu", "kappa", "theta1", "theta2", "l2_norm", "w12_norm", "f_norm",
               "triangles", "newton_iters", "wall_ms")
DEFAULT_TOL = {"L2": 0.4, "W12": 0.3}


# ---------------------------------------------------------------- rules


@dataclass(frozen=True)
class Fixed:
    value: float

    def __call__(self, eps: float) -> float:
        return self.value


@dataclass(frozen=True)
class Power:
    """``eps ** exponent``; use a negative exponent for growing rules."""

    exponent: float
    factor: float = 1.0

    def __call__(self, eps: float) -> float:
        return self.factor * eps**self.exponent


def eta_power(gamma: float) -> Power:
    return Power(gamma)


def mu_power(beta: float) -> Power:
    return Power(-beta)


# ---------------------------------------------------------------- scenario


def _ones(x):
    return np.ones(len(x))


@dataclass
class Scenario:
    layout: LayoutConfig
    eps_list: Sequence[float]
    eta_rule: Callable[[float], float] = Fixed(0.5)
    mu_rule: Callable[[float], float] | None = None
    theorem: str = "T2"
    coeffs: fem.CoefficientField | None = None
    robin_family: str = "linear"  # linear | tanh
    f: Callable[[np.ndarray], np.ndarray] = _ones
    f_is_zero: bool = False
    lam: float = 0.0
    h_factor: float = 0.2  # far-field element size relative to the 4 eps period
    max_triangles: int = 300_000
    self_convergence: bool = True
    name: str = "scenario"
    tol: dict = field(default_factory=lambda: dict(DEFAULT_TOL))

    def __post_init__(self):
        eps = list(self.eps_list)
        if not eps:
            raise ValueError("eps list is empty")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps list must be strictly decreasing")
        if self.theorem not in ("T1", "T2"):
            raise ValueError(f"theorem must be T1 or T2, got {self.theorem!r}")
        if self.theorem == "T1" and self.mu_rule is None:
            raise ValueError("T1 scenarios need a mu rule")

    def mu(self, eps: float) -> float:
        return 1.0 if self.mu_rule is None else float(self.mu_rule(eps))

    def robin_model(self, eps: float, eta: float) -> fem.RobinModel | None:
        if self.layout.bc_rule == "dirichlet":
            return None
        mu = self.mu(eps)
        if self.robin_family == "linear":
            return fem.RobinModel.linear(mu, eps=eps, eta=eta)
        if self.robin_family == "tanh":
            return fem.RobinModel(a=lambda x, u: mu * (u + 0.3 * np.tanh(u)), a0=1.3 * mu, mu=mu,
                                  alpha=lambda k, x: np.ones(len(x)), eps=eps, eta=eta)
        raise ValueError(f"unknown Robin family {self.robin_family!r}")


# ---------------------------------------------------------------- bounds and fits


def predicted_bound(eps: float, eta: float, mu: float | None, n: int = 2, theorem: str = "T2",
                    norm: str = "L2") -> float:
    """Right-hand-side factor of the operator estimates (constant omitted)."""
    if norm not in ("L2", "W12"):
        raise ValueError(f"norm must be L2 or W12, got {norm!r}")
    k = kappa(eta, n)
    if theorem == "T2":
        if norm == "L2":
            return eps**2 * eta ** (2 - n) * k
        return eps * eta ** (1 - n / 2) * math.sqrt(k)
    if theorem == "T1":
        if mu is None:
            raise ValueError("T1 bound requires mu")
        t1, t2 = smallness_indicators(eps, eta, mu, n)
        if norm == "L2":
            return t1 + t2
        return math.sqrt(eps) * eta ** (0.5 - n / 2) / math.sqrt(mu) + eps * eta ** (1 - n / 2) * k
    raise ValueError(f"unknown theorem {theorem!r}")


def fit_slope(points) -> tuple[float, float, float]:
    """Least squares of ``ln y`` on ``ln x``: (slope, intercept, RMS log residual)."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise ValueError("need at least two points")
    if np.any(pts <= 0):
        raise ValueError("coordinates must be positive")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    A = np.column_stack([lx, np.ones_like(lx)])
    (s, c), *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = float(np.sqrt(np.mean((ly - A @ np.array([s, c])) ** 2)))
    return float(s), float(c), res


# ---------------------------------------------------------------- sweep


@dataclass
class SweepRecord:
    eps: float
    eta: float
    mu: float
    kappa: float
    theta1: float
    theta2: float
    l2_norm: float
    w12_norm: float
    f_norm: float
    triangles: int
    newton_iters: int
    wall_ms: float
    min_angle: float = 0.0
    residual: float = 0.0


@dataclass
class RateSweepResult:
    scenario: str
    theorem: str
    records: list[SweepRecord]
    verdicts: list[dict]
    self_convergence: dict | None = None
    degenerate: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v["pass"] is not False for v in self.verdicts)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            w.writerow([repr(float(getattr(r, c))) if isinstance(getattr(r, c), float) else getattr(r, c)
                        for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        d = {"scenario": self.scenario, "theorem": self.theorem, "verdicts": self.verdicts,
             "self_convergence": self.self_convergence, "degenerate": self.degenerate, "notes": self.notes,
             "records": [asdict(r) for r in self.records]}
        return json.dumps(d, indent=2, sort_keys=True)


def layout_for(scn: Scenario, eps: float, eta: float):
    return build_layout(replace(scn.layout, epsilon=eps, eta=eta))


def check_hypotheses(scn: Scenario, layout) -> None:
    rep = audit(layout)
    if not rep.a1_pass:
        raise GeometryError(f"eps={layout.epsilon}: geometric assumptions fail: {rep.verdicts()}")
    if scn.theorem == "T2":
        if layout.robin_indices and len(layout.sign_definite_indices) != len(layout.robin_indices):
            raise GeometryError(f"eps={layout.epsilon}: T2 forbids sign-indefinite Robin cavities")
        if rep.a3_covering is False:
            raise GeometryError(f"eps={layout.epsilon}: covering fails at {rep.a3_worst_point}")
    else:
        if not layout.sign_definite_indices:
            raise GeometryError(f"eps={layout.epsilon}: T1 needs sign-definite Robin cavities")


def _mesh_for(scn: Scenario, layout):
    h = scn.h_factor * 4 * layout.epsilon
    mesh = triangulate(layout, h)
    if mesh.n_triangles > scn.max_triangles:
        raise GeometryError(f"eps={layout.epsilon}: mesh budget exceeded ({mesh.n_triangles} triangles)")
    return mesh


def _solve_one(scn: Scenario, eps: float) -> tuple[SweepRecord, object, object]:
    t0 = time.perf_counter()
    eta = float(scn.eta_rule(eps))
    mu = scn.mu(eps)
    layout = layout_for(scn, eps, eta)
    check_hypotheses(scn, layout)
    mesh = _mesh_for(scn, layout)
    robin = scn.robin_model(eps, eta)
    sol = fem.solve(mesh, scn.coeffs, robin, fem.ProblemData(f=scn.f, lam=scn.lam))
    nrm = fem.norms(sol)
    f_norm = math.sqrt(max(float(fem.load_vector(mesh, lambda x: scn.f(x) ** 2).sum()), 0.0))
    t1, t2 = smallness_indicators(eps, eta, max(mu, 1.0))
    rec = SweepRecord(eps=eps, eta=eta, mu=mu, kappa=kappa(eta), theta1=t1, theta2=t2,
                      l2_norm=nrm["l2"], w12_norm=nrm["w12"], f_norm=f_norm, triangles=mesh.n_triangles,
                      newton_iters=sol.iterations, wall_ms=1000 * (time.perf_counter() - t0),
                      min_angle=mesh_quality(mesh)["min_angle"], residual=sol.residual)
    return rec, mesh, robin


def _self_convergence(scn: Scenario, eps: float, rec: SweepRecord, mesh, robin) -> dict:
    fine = refine_uniform(mesh)
    sol = fem.solve(fine, scn.coeffs, robin, fem.ProblemData(f=scn.f, lam=scn.lam))
    nrm = fem.norms(sol)
    return {"eps": eps, "l2_coarse": rec.l2_norm, "l2_fine": nrm["l2"],
            "l2_rel_change": abs(rec.l2_norm - nrm["l2"]) / max(nrm["l2"], 1e-300),
            "w12_coarse": rec.w12_norm, "w12_fine": nrm["w12"],
            "w12_rel_change": abs(rec.w12_norm - nrm["w12"]) / max(nrm["w12"], 1e-300),
            "triangles_fine": fine.n_triangles}


def verdicts_from_records(records: Sequence[SweepRecord], theorem: str, tol: dict | None = None,
                          gate: float = 0.25) -> list[dict]:
    """Slope verdicts; a pure function of the recorded norms."""
    tol = {**DEFAULT_TOL, **(tol or {})}
    out = []
    for norm, key in (("L2", "l2_norm"), ("W12", "w12_norm")):
        v = {"theorem": theorem, "norm": norm, "fitted_slope": None, "residual": None,
             "predicted_exponent": None, "pass": None, "status": "insufficient points"}
        if len(records) >= 2:
            ys = [getattr(r, key) / r.f_norm if r.f_norm > 0 else 0.0 for r in records]
            if all(y == 0 for y in ys):
                v.update(status="degenerate")
                v["pass"] = True
            else:
                eps = [r.eps for r in records]
                s, _, res = fit_slope(zip(eps, ys))
                pred = [predicted_bound(r.eps, r.eta, r.mu if theorem == "T1" else None, 2, theorem, norm)
                        for r in records]
                ps, _, _ = fit_slope(zip(eps, pred))
                s_vs_pred, _, _ = fit_slope(zip(pred, ys))
                ok = abs(s - ps) <= tol[norm]
                v.update(fitted_slope=s, residual=res, predicted_exponent=ps, slope_vs_predicted=s_vs_pred)
                if records[0].theta2 > gate:
                    v["status"] = "informational"
                else:
                    v["pass"] = bool(ok)
                    v["status"] = "pass" if ok else "fail"
        out.append(v)
    return out


def run_sweep(scn: Scenario, jobs: int = 1) -> RateSweepResult:
    """Solve for every eps of the scenario and fit the decay slopes."""
    eps_list = list(scn.eps_list)
    if scn.f_is_zero:
        recs = []
        for eps in eps_list:
            eta = float(scn.eta_rule(eps))
            mu = scn.mu(eps)
            t1, t2 = smallness_indicators(eps, eta, max(mu, 1.0))
            recs.append(SweepRecord(eps, eta, mu, kappa(eta), t1, t2, 0.0, 0.0, 0.0, 0, 0, 0.0))
        v = [{"theorem": scn.theorem, "norm": n, "fitted_slope": None, "residual": None,
              "predicted_exponent": None, "pass": True, "status": "degenerate"} for n in ("L2", "W12")]
        return RateSweepResult(scn.name, scn.theorem, recs, v, None, True, ["zero right-hand side"])

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            outs = list(ex.map(lambda e: _solve_one(scn, e), eps_list))
    else:
        outs = [_solve_one(scn, e) for e in eps_list]
    records = [o[0] for o in outs]
    sc = None
    if scn.self_convergence:
        rec, mesh, robin = outs[0]
        sc = _self_convergence(scn, rec.eps, rec, mesh, robin)
    verdicts = verdicts_from_records(records, scn.theorem, scn.tol)
    notes = []
    if sc is not None and sc["l2_rel_change"] > 0.1:
        notes.append("self-convergence probe shows >10% change; FEM error may contaminate slopes")
    return RateSweepResult(scn.name, scn.theorem, records, verdicts, sc, False, notes)


def records_from_csv(text: str) -> list[SweepRecord]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for r in rows:
        kw = {c: float(r[c]) for c in CSV_COLUMNS}
        kw["triangles"] = int(kw["triangles"])
        kw["newton_iters"] = int(kw["newton_iters"])
        out.append(SweepRecord(**kw))
    return out


# ---------------------------------------------------------------- smooth bumps


@dataclass(frozen=True)
class SmoothBump:
    """Compactly supported bump on the disk ``|x - c| < rho``.

    ``kind="cinf"`` is ``amp * exp(1 - 1/(1 - s))`` with ``s = |x-c|^2/rho^2``
    (infinitely differentiable); ``kind="poly"`` is ``amp * (1 - s)^power``.
    """

    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    kind: str = "cinf"
    power: int = 4
    amp: float = 1.0

    def _s(self, x):
        d = np.asarray(x, dtype=float) - np.asarray(self.center)
        return d, np.sum(d * d, axis=1) / self.radius**2

    def _g(self, s):
        """Profile and its first two derivatives in ``s`` (zero outside)."""
        inside = s < 1
        t = np.where(inside, 1 - s, 1.0)
        if self.kind == "cinf":
            g = np.exp(1 - 1 / t)
            g1 = -g / t**2
            g2 = g * (2 * s - 1) / t**4
        elif self.kind == "poly":
            k = self.power
            g = t**k
            g1 = -k * t ** (k - 1)
            g2 = k * (k - 1) * t ** (k - 2)
        else:
            raise ValueError(f"unknown bump kind {self.kind!r}")
        z = np.zeros_like(s)
        return (self.amp * np.where(inside, g, z), self.amp * np.where(inside, g1, z),
                self.amp * np.where(inside, g2, z))

    def __call__(self, x):
        _, s = self._s(x)
        return self._g(s)[0]

    def grad(self, x):
        d, s = self._s(x)
        return (2 * self._g(s)[1] / self.radius**2)[:, None] * d

    def laplacian(self, x):
        # 2D: lap g(s) = g'' |grad s|^2 + g' lap s, |grad s|^2 = 4 s / rho^2, lap s = 4 / rho^2
        _, s = self._s(x)
        _, g1, g2 = self._g(s)
        return (4 * s * g2 + 4 * g1) / self.radius**2

    @property
    def box(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cy - r, cx + r, cy + r)


# supports as in the half-space construction: above x2 = 5 and below x2 = -5
DIRICHLET_SOURCE = SmoothBump(center=(0.0, 10.0), radius=4.0)
ROBIN_SOURCE = SmoothBump(center=(0.0, -10.0), radius=4.0)


def _tiled_norms(cf: cell.CellField, f: SmoothBump, eps: float, origin=(0.0, 0.0)) -> dict:
    """Norms of ``u = eps^2 v(x/eps) f`` and of ``f - h`` with ``h = 2 eps grad v . grad f + eps^2 v lap f``."""
    pts, w, vq, tri, gv = cell.cell_quadrature(cf)
    gq = gv[tri]
    centers = cell.tile_centers(f.box, eps, origin)
    acc = dict(u=0.0, gu=0.0, fh=0.0, f=0.0)
    for c in centers:
        x = c + eps * pts
        fv = f(x)
        if not np.any(fv):
            continue
        gf = f.grad(x)
        lf = f.laplacian(x)
        jac = eps**2 * w
        u = eps**2 * vq * fv
        gu = eps * gq * fv[:, None] + eps**2 * vq[:, None] * gf
        h = 2 * eps * np.sum(gq * gf, axis=1) + eps**2 * vq * lf
        acc["u"] += float(np.sum(jac * u * u))
        acc["gu"] += float(np.sum(jac * np.sum(gu * gu, axis=1)))
        acc["fh"] += float(np.sum(jac * (fv - h) ** 2))
        acc["f"] += float(np.sum(jac * fv * fv))
    return {k: math.sqrt(v) for k, v in acc.items()}


@dataclass
class SharpnessRow:
    eps: float
    eta: float
    mu: float | None
    u_l2: float
    grad_u_l2: float
    rhs_l2: float
    f_l2_domain: float
    ratio_l2: float
    ratio_grad: float
    target_l2: float
    target_grad: float | None

    @property
    def rel_l2(self) -> float:
        return self.ratio_l2 / self.target_l2

    @property
    def rel_grad(self) -> float | None:
        return None if self.target_grad is None else self.ratio_grad / self.target_grad


def sharpness_dirichlet(eps_list: Sequence[float], eta: float = 0.5, f_D: SmoothBump | None = None,
                        h_max: float = 0.2, hole_divisions: int = 64) -> tuple[list[SharpnessRow], dict]:
    """Ratios ``||u_D|| / ||f_D - h_D||`` and ``||grad u_D|| / ||f_D - h_D||`` per eps.

    ``target_l2 = eps^2 ||v0||`` and ``target_grad = eps ||grad v0||`` over
    the cell; the limit factor ``1 / sqrt(|cell minus hole|)`` that the
    averaging identity also produces is reported as ``measure_factor``.
    """
    f_D = f_D or DIRICHLET_SOURCE
    if f_D.amp == 0:
        raise ValueError("f_D must not vanish identically")
    v0 = cell.solve_v0(eta, h_max, hole_divisions)
    n0 = v0.norms()
    measure = v0.mesh.area()
    rows = []
    for eps in eps_list:
        _check_support(f_D, eps)
        t = _tiled_norms(v0, f_D, eps)
        rows.append(SharpnessRow(eps, eta, None, t["u"], t["gu"], t["fh"], t["f"], t["u"] / t["fh"],
                                 t["gu"] / t["fh"], eps**2 * n0["l2"], eps * n0["h1_semi"]))
    info = {"v0_l2": n0["l2"], "v0_grad": n0["h1_semi"], "cell_measure": measure,
            "measure_factor": 1 / math.sqrt(measure)}
    return rows, info


def _check_support(f: SmoothBump, eps: float) -> None:
    if 2 * f.radius < 4 * 2 * cell.HALF_WIDTH * eps:
        raise ValueError(f"support of f spans fewer than 4 periods at eps={eps}")


def sharpness_robin(eps_list: Sequence[float], mu_rule: Callable[[float], float], eta: float = 0.5,
                    f_R: SmoothBump | None = None, h_max: float = 0.2,
                    hole_divisions: int = 64) -> tuple[list[SharpnessRow], dict]:
    """``||u_R|| / ||f_R - h_R||`` against ``c4 eps / mu`` per eps.

    Requires ``eps * mu`` decreasing along the list and below one.  The
    gradient column compares ``||grad u_R||^2`` with ``eps mu^-1 ||f_R||^2``
    (norm over the perforated domain).
    """
    f_R = f_R or ROBIN_SOURCE
    if f_R.amp == 0:
        raise ValueError("f_R must not vanish identically")
    em = [eps * mu_rule(eps) for eps in eps_list]
    if any(x >= 1 for x in em):
        raise ValueError("the Robin construction needs eps*mu < 1")
    if any(b >= a for a, b in zip(em, em[1:])):
        raise ValueError("eps*mu must decrease along the list")
    v1, c4 = cell.solve_v1(eta, h_max, hole_divisions)
    rows = []
    for eps, epsmu in zip(eps_list, em):
        _check_support(f_R, eps)
        mu = epsmu / eps
        vmu = cell.solve_vmu(eta, epsmu, h_max, hole_divisions)
        t = _tiled_norms(vmu, f_R, eps)
        rows.append(SharpnessRow(eps, eta, mu, t["u"], t["gu"], t["fh"], t["f"], t["u"] / t["fh"],
                                 t["gu"] ** 2 / (eps / mu * t["f"] ** 2), c4 * eps / mu, 1.0))
    return rows, {"c4": c4, "c4_discrete": v1.info["c4_discrete"], "epsmu": em}

"""Periodic cell problems on the square ``(-2, 2)^2`` minus a disk ``B_eta``.

All problems for one ``eta`` share a single mesh whose opposite sides carry
identical vertices; periodicity is imposed exactly by identifying them.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fem
from .geometry import GeometryError
from .mesh import Mesh, Tag, disk_with_hole_mesh, periodic_cell_mesh

HALF_WIDTH = 2.0
CELL_AREA = (2 * HALF_WIDTH) ** 2


# ---------------------------------------------------------------- mesh and periodic dofs


@functools.lru_cache(maxsize=32)
def cell_mesh(eta: float, h_max: float = 0.2, hole_divisions: int = 64) -> Mesh:
    if not 0 < eta < HALF_WIDTH:
        raise GeometryError(f"eta must lie in (0, {HALF_WIDTH}), got {eta}")
    return periodic_cell_mesh(eta, "cavity_robin", h_max=h_max, hole_divisions=hole_divisions,
                              half_width=HALF_WIDTH)


def periodic_dofs(mesh: Mesh, half_width: float = HALF_WIDTH, tol: float = 1e-9) -> np.ndarray:
    """Map vertex -> periodic dof, identifying ``x = a`` with ``x = -a`` (same for y)."""
    v = mesh.vertices.copy()
    for d in range(2):
        v[np.abs(v[:, d] - half_width) < tol, d] = -half_width
    key = np.round(v / tol).astype(np.int64)
    _, inv = np.unique(key, axis=0, return_inverse=True)
    return inv.ravel()


def periodic_prolongation(dof: np.ndarray, fixed: np.ndarray | None = None) -> sp.csr_matrix:
    """Vertex x dof matrix; dofs of ``fixed`` vertices are dropped (zero value)."""
    n_dof = int(dof.max()) + 1
    keep = np.ones(n_dof, dtype=bool)
    if fixed is not None and len(fixed):
        keep[dof[fixed]] = False
    col = np.cumsum(keep) - 1
    rows = np.nonzero(keep[dof])[0]
    return sp.csr_matrix((np.ones(len(rows)), (rows, col[dof[rows]])), shape=(len(dof), int(keep.sum())))


def _hole_nodes(mesh: Mesh) -> np.ndarray:
    return mesh.nodes_where(lambda t: t.kind.startswith("cavity"))


def _hole_weights(mesh: Mesh) -> np.ndarray:
    """``phi_i`` integrated over the hole loop (exact for P1)."""
    return fem.lumped_edge_weights(mesh, mesh.edges_where(lambda t: t.kind.startswith("cavity")))


# ---------------------------------------------------------------- types


@dataclass(frozen=True, eq=False)
class CellField:
    mesh: Mesh
    values: np.ndarray
    eta: float
    problem: str  # V0 | X | V1 | V2 | VMu
    epsmu: float | None = None
    residual: float = 0.0
    info: dict = field(default_factory=dict)

    def norms(self) -> dict[str, float]:
        return fem.norms((self.mesh, self.values))

    @property
    def l2(self) -> float:
        return self.norms()["l2"]

    @property
    def grad_l2(self) -> float:
        return self.norms()["h1_semi"]

    def integral(self) -> float:
        return float(fem.load_vector(self.mesh, lambda x: np.ones(len(x))) @ self.values)

    def hole_integral(self) -> float:
        return float(_hole_weights(self.mesh) @ self.values)

    def hole_mean(self) -> float:
        w = _hole_weights(self.mesh)
        return float(w @ self.values / w.sum())

    def shifted(self, c: float) -> CellField:
        return CellField(self.mesh, self.values + c, self.eta, self.problem, self.epsmu, self.residual, self.info)

    def periodicity_defect(self) -> float:
        dof = periodic_dofs(self.mesh)
        ref = np.zeros(dof.max() + 1)
        ref[dof] = self.values
        return float(np.max(np.abs(self.values - ref[dof])))


@dataclass(frozen=True)
class CellConstants:
    c4: float
    c5: float | None = None
    G: dict = field(default_factory=dict)


# ---------------------------------------------------------------- solves


def _solve_spd(A: sp.spmatrix, b: np.ndarray) -> np.ndarray:
    return spla.splu(A.tocsc()).solve(b)


def _ones(x):
    return np.ones(len(x))


def solve_v0(eta: float, h_max: float = 0.2, hole_divisions: int = 64) -> CellField:
    """``-Lap v0 = 1``, ``v0 = 0`` on the hole, periodic on the square."""
    mesh = cell_mesh(eta, h_max, hole_divisions)
    K, _ = fem.p1_matrices(mesh)
    P = periodic_prolongation(periodic_dofs(mesh), _hole_nodes(mesh))
    b = fem.load_vector(mesh, _ones)
    A = P.T @ K @ P
    x = _solve_spd(A, P.T @ b)
    res = np.linalg.norm(A @ x - P.T @ b) / np.linalg.norm(P.T @ b)
    return CellField(mesh, P @ x, eta, "V0", residual=float(res))


def _neumann_solve(mesh: Mesh, rhs: np.ndarray, tol: float = 1e-10):
    """Periodic pure-Neumann solve with zero hole mean; returns values and compatibility defect."""
    K, _ = fem.p1_matrices(mesh)
    P = periodic_prolongation(periodic_dofs(mesh))
    w = P.T @ _hole_weights(mesh)
    b = P.T @ rhs
    compat = abs(float(b.sum())) / max(np.abs(b).sum(), 1e-300)
    if compat > tol:
        raise ValueError(f"Neumann data incompatible: relative defect {compat:.3e}")
    A = sp.bmat([[P.T @ K @ P, sp.csr_matrix(w[:, None])], [sp.csr_matrix(w[None, :]), None]]).tocsc()
    sol = spla.splu(A).solve(np.append(b, 0.0))
    u = P @ sol[:-1]
    # post-shift so the hole integral vanishes exactly
    wv = _hole_weights(mesh)
    u = u - (wv @ u) / wv.sum()
    res = np.linalg.norm(P.T @ (K @ u) - b) / np.linalg.norm(b)
    return u, compat, float(res)


def discrete_c4(mesh: Mesh) -> float:
    """Mesh area over polygonal hole perimeter; makes the flux problem exactly compatible."""
    return float(mesh.area() / _hole_weights(mesh).sum())


def solve_v1(eta: float, h_max: float = 0.2, hole_divisions: int = 64) -> tuple[CellField, float]:
    """``-Lap v1 = 1``, radial derivative ``c4`` on the hole, zero hole mean.

    Returns the field and the analytic ``c4``; the solve itself uses the
    polygonal quotient so the discrete data are compatible.
    """
    mesh = cell_mesh(eta, h_max, hole_divisions)
    c4h = discrete_c4(mesh)
    rhs = fem.load_vector(mesh, _ones) - c4h * _hole_weights(mesh)
    u, compat, res = _neumann_solve(mesh, rhs)
    c4 = (CELL_AREA - math.pi * eta**2) / (2 * math.pi * eta)
    return CellField(mesh, u, eta, "V1", residual=res, info={"c4_discrete": c4h, "compatibility": compat}), c4


def solve_v2(v1: CellField) -> CellField:
    """``-Lap v2 = 0``, radial derivative ``v1`` on the hole, zero hole mean."""
    mesh = v1.mesh
    rhs = -_hole_weights(mesh) * v1.values
    u, compat, res = _neumann_solve(mesh, rhs)
    return CellField(mesh, u, v1.eta, "V2", residual=res, info={"compatibility": compat})


def solve_vmu(eta: float, epsmu: float, h_max: float = 0.2, hole_divisions: int = 64) -> CellField:
    """``-Lap v = 1`` with radial derivative ``epsmu * v`` on the hole."""
    if not epsmu > 0:
        raise ValueError("epsmu must be positive")
    mesh = cell_mesh(eta, h_max, hole_divisions)
    K, _ = fem.p1_matrices(mesh)
    P = periodic_prolongation(periodic_dofs(mesh))
    B = sp.diags(_hole_weights(mesh))
    A = P.T @ (K + epsmu * B) @ P
    b = P.T @ fem.load_vector(mesh, _ones)
    x = _solve_spd(A, b)
    res = np.linalg.norm(A @ x - b) / np.linalg.norm(b)
    return CellField(mesh, P @ x, eta, "VMu", epsmu=epsmu, residual=float(res))


def verify_expansion(vmu: CellField, v1: CellField, c4: float | None = None, epsmu: float | None = None) -> float:
    """``|| vmu - c4/epsmu - v1 ||_{W_2^1}`` over the cell.

    ``c4`` defaults to the discrete quotient stored with ``v1``, which is the
    value the discrete problems are consistent with.
    """
    epsmu = vmu.epsmu if epsmu is None else epsmu
    if not epsmu or epsmu <= 0:
        raise ValueError("epsmu must be positive")
    if vmu.mesh is not v1.mesh and not (
        vmu.mesh.vertices.shape == v1.mesh.vertices.shape and np.array_equal(vmu.mesh.vertices, v1.mesh.vertices)
    ):
        raise ValueError("fields live on different meshes")
    if c4 is None:
        c4 = v1.info.get("c4_discrete", discrete_c4(v1.mesh))
    r = vmu.values - c4 / epsmu - v1.values
    return fem.norms((vmu.mesh, r))["w12"]


# ---------------------------------------------------------------- X problem


def x_exact(r, eta: float, r3: float = 1.9):
    r = np.asarray(r, dtype=float)
    return (r3**2 - r**2) / 4 + 0.5 * eta**2 * np.log(r / r3)


def solve_X(eta: float, r3: float = 1.9, r5: float | None = None, h: float = 0.05,
            hole_divisions: int | None = None) -> tuple[CellField, dict]:
    """``-Lap X = 1`` on ``B_r3 minus B_eta``, zero on the outer circle, no flux on the hole.

    Also returns the flux through ``B_r5`` (default ``r5`` halfway between
    1 and ``r3``, here 1.45) and the radial-oracle error along a ray.
    """
    if not 0 < eta < r3:
        raise GeometryError("hole must lie inside B_r3")
    r5 = 0.5 * (1.0 + r3) if r5 is None else r5
    if not eta < r5 < r3:
        raise GeometryError("flux circle must separate the two boundaries")
    nd = hole_divisions or max(48, int(math.ceil(2 * math.pi * eta / (0.25 * h))))
    mesh = disk_with_hole_mesh(r3, eta, "outer_dirichlet", "cavity_neumann", h_outer=h, hole_divisions=nd)
    sol = fem.solve(mesh, None, None, fem.ProblemData(f=_ones))
    u = sol.values
    # flux through the circle r5 from recovered nodal gradients
    g = recovered_gradient(mesh, u)
    n = 2048
    th = (np.arange(n) + 0.5) * 2 * math.pi / n
    pts = r5 * np.column_stack([np.cos(th), np.sin(th)])
    gx = fem.evaluate(mesh, g[:, 0], pts)
    gy = fem.evaluate(mesh, g[:, 1], pts)
    flux = float(np.sum(gx * np.cos(th) + gy * np.sin(th)) * 2 * math.pi * r5 / n)
    flux_exact = -math.pi * (r5**2 - eta**2)
    r = np.linspace(eta, r3, 400)[1:-1]
    ray = np.column_stack([r * math.cos(0.37), r * math.sin(0.37)])
    ex = x_exact(r, eta, r3)
    err = float(np.nanmax(np.abs(fem.evaluate(mesh, u, ray) - ex)) / np.max(np.abs(ex)))
    nrm = fem.norms(sol)
    info = {"flux": flux, "flux_exact": flux_exact, "flux_rel_error": abs(flux / flux_exact - 1),
            "ray_rel_error": err, "w12": nrm["w12"], "sup": float(np.max(np.abs(u))), "r5": r5}
    return CellField(mesh, u, eta, "X", residual=sol.residual, info=info), info


def recovered_gradient(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    """Area-weighted vertex average of the elementwise gradients."""
    g = fem.gradients(mesh, values)
    a = mesh.areas()
    out = np.zeros((mesh.n_vertices, 2))
    wt = np.zeros(mesh.n_vertices)
    for j in range(3):
        np.add.at(out, mesh.triangles[:, j], a[:, None] * g)
        np.add.at(wt, mesh.triangles[:, j], a)
    return out / wt[:, None]


# ---------------------------------------------------------------- scalar helpers


def G(t: float, n: int = 2) -> float:
    """Scaling function of the corrector norms: ``(16/2pi) ln t`` in 2D."""
    if not t > 0:
        raise ValueError("t must be positive")
    if n < 2:
        raise ValueError("n must be at least 2")
    if n == 2:
        return 16 / (2 * math.pi) * math.log(t)
    sphere = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    return 4**n * t ** (2 - n) / ((2 - n) * sphere)


def v0_log_growth(etas, h_max: float = 0.2, hole_divisions: int = 64) -> dict:
    """Compare ``||v0||^2`` and ``||grad v0||^2`` against ``G(eta)`` for small ``eta``.

    The gradient coefficient is fitted by least squares (it is not
    available in closed form).
    """
    rows = []
    for eta in etas:
        v = solve_v0(eta, h_max, hole_divisions)
        nrm = v.norms()
        rows.append((eta, nrm["l2"] ** 2, nrm["h1_semi"] ** 2, 16 * G(eta) ** 2, G(eta)))
    arr = np.array(rows)
    c5 = float(np.linalg.lstsq(arr[:, 4:5], arr[:, 2], rcond=None)[0][0])
    return {"rows": rows, "c5": c5}


def cell_constants(eta: float, etas_for_c5=None, **mesh_kw) -> CellConstants:
    _, c4 = solve_v1(eta, **mesh_kw)
    c5 = v0_log_growth(etas_for_c5, **mesh_kw)["c5"] if etas_for_c5 else None
    return CellConstants(c4=c4, c5=c5, G={eta: G(eta)})


# ---------------------------------------------------------------- tiling


def cell_quadrature(cf: CellField):
    """Edge-midpoint rule on the cell mesh.

    Returns points (Q, 2), weights (Q,), field values (Q,), the triangle of
    each point and the elementwise gradients.
    """
    m = cf.mesh
    p = m.vertices[m.triangles]
    mid = 0.5 * np.stack([p[:, 1] + p[:, 2], p[:, 2] + p[:, 0], p[:, 0] + p[:, 1]], axis=1)
    u = cf.values[m.triangles]
    umid = 0.5 * np.stack([u[:, 1] + u[:, 2], u[:, 2] + u[:, 0], u[:, 0] + u[:, 1]], axis=1)
    w = np.repeat(m.areas() / 3.0, 3)
    tri = np.repeat(np.arange(m.n_triangles), 3)
    return mid.reshape(-1, 2), w, umid.ravel(), tri, fem.gradients(m, cf.values)


def tile_centers(box, eps: float, origin=(0.0, 0.0)) -> np.ndarray:
    """Centers ``origin + 4 eps k`` of all cells meeting ``box = (x0, y0, x1, y1)``."""
    x0, y0, x1, y1 = box
    p = 2 * HALF_WIDTH * eps
    kx = np.arange(math.floor((x0 - origin[0]) / p - 0.5), math.ceil((x1 - origin[0]) / p + 0.5) + 1)
    ky = np.arange(math.floor((y0 - origin[1]) / p - 0.5), math.ceil((y1 - origin[1]) / p + 0.5) + 1)
    cx = origin[0] + p * kx
    cy = origin[1] + p * ky
    cx = cx[(cx + p / 2 > x0) & (cx - p / 2 < x1)]
    cy = cy[(cy + p / 2 > y0) & (cy - p / 2 < y1)]
    X, Y = np.meshgrid(cx, cy, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def _gauss_box_integral(h: Callable, box, n: int = 160) -> float:
    x0, y0, x1, y1 = box
    t, w = np.polynomial.legendre.leggauss(n)
    xs = 0.5 * (x1 - x0) * (t + 1) + x0
    ys = 0.5 * (y1 - y0) * (t + 1) + y0
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    W = np.outer(w, w) * 0.25 * (x1 - x0) * (y1 - y0)
    return float(np.sum(W * h(np.column_stack([X.ravel(), Y.ravel()])).reshape(X.shape)))


def averaging_check(v: CellField, h: Callable, eps: float, box, h_integral: float | None = None,
                    origin=(0.0, 0.0)) -> tuple[float, float, float]:
    """Compare ``int v(x/eps) h(x) dx`` with ``4^-2 int v dxi int h dx``.

    ``h`` must vanish outside ``box``; the left side is summed over the
    ``eps``-scaled copies of the cell quadrature.
    """
    x0, y0, x1, y1 = box
    if min(x1 - x0, y1 - y0) < 4 * 2 * HALF_WIDTH * eps:
        raise ValueError("support must contain at least 4 periods in each direction")
    pts, w, vq, _, _ = cell_quadrature(v)
    centers = tile_centers(box, eps, origin)
    lhs = 0.0
    for c in centers:
        hv = h(c + eps * pts)
        lhs += eps**2 * float(np.sum(w * vq * hv))
    hint = _gauss_box_integral(h, box) if h_integral is None else h_integral
    lead = float(np.sum(w * vq)) / CELL_AREA * hint
    return lhs, lead, lhs - lead

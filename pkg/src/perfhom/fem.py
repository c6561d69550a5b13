"""P1 finite elements for the perforated-domain problem with nonlinear Robin cavities.

Weak form, for ``v`` vanishing on the Dirichlet part::

    (A grad u, grad v) + (b . grad u, v) + (c u, v) - lam (u, v)
        + (a(., u), v)_{Robin} = (f, v) + (g, v)_{Robin}
"""

from __future__ import annotations

import logging
import math
import weakref
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .mesh import Mesh, Tag, disk_with_hole_mesh, mesh_quality

log = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray], np.ndarray]


class NonConvergence(RuntimeError):
    def __init__(self, iterations: int, residual: float, what: str = "nonlinear solve"):
        super().__init__(f"{what} did not converge: {iterations} iterations, residual {residual:.3e}")
        self.iterations = iterations
        self.residual = residual


class IndefiniteSystem(RuntimeError):
    """The linearized operator lost coercivity (typically lambda above lambda0)."""


class MeshQualityError(ValueError):
    pass


# ---------------------------------------------------------------- data


def _const(value) -> Evaluator:
    arr = np.asarray(value, dtype=float)

    def ev(x):
        return np.broadcast_to(arr, (len(x),) + arr.shape).copy()

    return ev


@dataclass(frozen=True)
class CoefficientField:
    """Coefficients of ``-div(A grad u) + b . grad u + c u``.

    ``A``, ``b``, ``c`` map an (N, 2) array of points to (N, 2, 2), (N, 2)
    and (N,) arrays.  ``c0`` is the ellipticity constant, ``b_sup`` a bound
    on ``|b|`` and ``c_inf`` a lower bound on ``c``.
    """

    A: Evaluator = field(default_factory=lambda: _const(np.eye(2)))
    b: Evaluator | None = None
    c: Evaluator | None = None
    c0: float = 1.0
    b_sup: float = 0.0
    c_inf: float = 0.0
    c_sup: float = 0.0

    @classmethod
    def laplace(cls) -> CoefficientField:
        return cls()

    @classmethod
    def constant(cls, A=None, b=None, c: float = 0.0) -> CoefficientField:
        A = np.eye(2) if A is None else np.asarray(A, dtype=float)
        c0 = float(np.linalg.eigvalsh(0.5 * (A + A.T)).min())
        bvec = None if b is None else np.asarray(b, dtype=float)
        return cls(
            A=_const(A),
            b=None if bvec is None else _const(bvec),
            c=None if c == 0 else _const(float(c)),
            c0=c0,
            b_sup=0.0 if bvec is None else float(np.linalg.norm(bvec)),
            c_inf=float(c),
            c_sup=abs(float(c)),
        )

    def check_ellipticity(self, x: np.ndarray, samples: int = 16, seed: int = 0) -> bool:
        """Spot-check ``xi^T A xi >= c0 |xi|^2`` on random directions."""
        rng = np.random.default_rng(seed)
        A = self.A(x)
        if not np.allclose(A, np.swapaxes(A, 1, 2), atol=1e-12):
            return False
        xi = rng.normal(size=(samples, 2))
        q = np.einsum("sa,nab,sb->ns", xi, A, xi)
        return bool(np.all(q >= self.c0 * np.sum(xi**2, axis=1) * (1 - 1e-12)))


@dataclass(frozen=True)
class RobinModel:
    """Boundary nonlinearity ``a(x, u)`` on Robin cavities.

    ``a`` maps points (N, 2) and values (N,) to (N,).  ``c1`` is the
    constant of the lower bound ``a(x,u) u >= -c1 eps eta^(1-n) u^2``;
    ``alpha(k, x)`` is the weight on sign-definite cavity ``k``.
    """

    a: Callable[[np.ndarray, np.ndarray], np.ndarray]
    a0: float
    c1: float = 0.0
    mu: float = 1.0
    alpha: Callable[[int, np.ndarray], np.ndarray] | None = None
    c2: float = 1.0
    c3: float = 1.0
    eps: float = 1.0
    eta: float = 1.0

    @classmethod
    def linear(cls, mu: float, **kw) -> RobinModel:
        return cls(a=lambda x, u: mu * u, a0=abs(mu), mu=mu,
                   alpha=lambda k, x: np.ones(len(x)), **kw)

    @classmethod
    def zero(cls) -> RobinModel:
        return cls(a=lambda x, u: np.zeros_like(u), a0=0.0)

    def sign_bound(self, n: int = 2) -> float:
        """``c1 eps eta^(1-n)``; the form loses at most this times ``||u||^2`` on the boundary."""
        return self.c1 * self.eps * self.eta ** (1 - n)

    def check_lipschitz(self, x: np.ndarray, samples: int = 64, spread: float = 10.0, seed: int = 0) -> bool:
        rng = np.random.default_rng(seed)
        u1 = rng.uniform(-spread, spread, (samples, len(x)))
        u2 = rng.uniform(-spread, spread, (samples, len(x)))
        ok = True
        for a, b in zip(u1, u2):
            ok &= bool(np.all(np.abs(self.a(x, a) - self.a(x, b)) <= self.a0 * np.abs(a - b) * (1 + 1e-10) + 1e-14))
        return ok

    def check_sign(self, x: np.ndarray, samples: int = 64, spread: float = 10.0, seed: int = 0, n: int = 2) -> bool:
        rng = np.random.default_rng(seed)
        s = self.sign_bound(n)
        for u in rng.uniform(-spread, spread, (samples, len(x))):
            if np.any(self.a(x, u) * u < -s * u * u - 1e-12):
                return False
        return True

    def check_sign_definite(self, k: int, x: np.ndarray, samples: int = 64, spread: float = 10.0,
                            seed: int = 0) -> bool:
        if self.alpha is None:
            return False
        rng = np.random.default_rng(seed)
        al = self.alpha(k, x)
        for u in rng.uniform(-spread, spread, (samples, len(x))):
            if np.any(self.a(x, u) * u < self.mu * al * u * u - 1e-12):
                return False
        return True


@dataclass(frozen=True)
class ProblemData:
    f: Evaluator
    lam: float = 0.0
    lambda0: float | None = None
    g: Evaluator | None = None  # Robin boundary data


@dataclass(frozen=True, eq=False)
class Solution:
    mesh: Mesh
    values: np.ndarray
    residual: float = 0.0
    iterations: int = 0
    method: str = "newton"


# ---------------------------------------------------------------- geometry helpers


def _midpoints(mesh: Mesh) -> np.ndarray:
    p = mesh.vertices[mesh.triangles]
    # midpoint q is opposite vertex q
    return 0.5 * np.stack([p[:, 1] + p[:, 2], p[:, 2] + p[:, 0], p[:, 0] + p[:, 1]], axis=1)


def gradients(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    """Piecewise-constant gradient of a P1 field, shape (T, 2)."""
    p = mesh.vertices[mesh.triangles]
    u = values[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    du1 = u[:, 1] - u[:, 0]
    du2 = u[:, 2] - u[:, 0]
    gx = (du1 * d2[:, 1] - du2 * d1[:, 1]) / det
    gy = (du2 * d1[:, 0] - du1 * d2[:, 0]) / det
    return np.column_stack([gx, gy])


def evaluate(mesh: Mesh, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Interpolate a P1 field at points; NaN outside the mesh."""
    tri, bary = kernels.locate_points(mesh.vertices, mesh.triangles, points)
    out = np.full(len(tri), np.nan)
    ok = tri >= 0
    out[ok] = np.einsum("ij,ij->i", bary[ok], values[mesh.triangles[tri[ok]]])
    return out


def lumped_edge_weights(mesh: Mesh, edges: np.ndarray) -> np.ndarray:
    """Trapezoid weights: each edge gives half its length to both endpoints."""
    w = np.zeros(mesh.n_vertices)
    if len(edges):
        L = np.linalg.norm(mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]], axis=1)
        np.add.at(w, edges[:, 0], 0.5 * L)
        np.add.at(w, edges[:, 1], 0.5 * L)
    return w


# ---------------------------------------------------------------- assembly


@dataclass(eq=False)
class Assembly:
    mesh: Mesh
    stiffness: sp.csr_matrix  # h_A form
    mass: sp.csr_matrix
    lam: float = 0.0

    @property
    def operator(self) -> sp.csr_matrix:
        return (self.stiffness - self.lam * self.mass).tocsr()

    def load(self, f: Evaluator) -> np.ndarray:
        return load_vector(self.mesh, f)


def load_vector(mesh: Mesh, f: Evaluator) -> np.ndarray:
    """``(f, phi_i)`` by the edge-midpoint rule."""
    mid = _midpoints(mesh)
    fv = np.asarray(f(mid.reshape(-1, 2)), dtype=float).reshape(-1, 3)
    area = mesh.areas()
    # phi_i is 1/2 at the two midpoints adjacent to vertex i
    contrib = (area / 3.0)[:, None] * 0.5 * (fv.sum(axis=1)[:, None] - fv)
    out = np.zeros(mesh.n_vertices)
    np.add.at(out, mesh.triangles.ravel(), contrib.ravel())
    return out


def _coefficients_at_midpoints(mesh: Mesh, coeffs: CoefficientField):
    mid = _midpoints(mesh).reshape(-1, 2)
    T = mesh.n_triangles
    aq = np.asarray(coeffs.A(mid), dtype=float).reshape(T, 3, 2, 2)
    bq = np.zeros((T, 3, 2)) if coeffs.b is None else np.asarray(coeffs.b(mid), dtype=float).reshape(T, 3, 2)
    cq = np.zeros((T, 3)) if coeffs.c is None else np.asarray(coeffs.c(mid), dtype=float).reshape(T, 3)
    return aq, bq, cq


def assemble(mesh: Mesh, coeffs: CoefficientField | None = None, lam: float = 0.0,
             min_angle: float = 1.0, backend: str | None = None) -> Assembly:
    """Sparse matrices of ``h_A`` and of the L2 product."""
    coeffs = coeffs or CoefficientField.laplace()
    q = mesh_quality(mesh)
    if not q["valid"] or q["min_angle"] < min_angle:
        raise MeshQualityError(f"mesh rejected: {q}")
    aq, bq, cq = _coefficients_at_midpoints(mesh, coeffs)
    rows, cols, kv, mv = kernels.assemble_p1(mesh.vertices, mesh.triangles, aq, bq, cq, backend=backend)
    n = mesh.n_vertices
    K = sp.coo_matrix((kv, (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((mv, (rows, cols)), shape=(n, n)).tocsr()
    return Assembly(mesh, K, M, lam)


_P1_CACHE: "weakref.WeakKeyDictionary[Mesh, tuple]" = weakref.WeakKeyDictionary()


def p1_matrices(mesh: Mesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Laplacian stiffness and mass (cached per mesh)."""
    hit = _P1_CACHE.get(mesh)
    if hit is None:
        asm = assemble(mesh, CoefficientField.laplace(), min_angle=0.0)
        hit = (asm.stiffness, asm.mass)
        _P1_CACHE[mesh] = hit
    return hit


def _fd_derivative(robin: RobinModel, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    h = 1e-6 * (1.0 + np.abs(u))
    return (robin.a(x, u + h) - robin.a(x, u - h)) / (2 * h)


def assemble_robin_residual(mesh: Mesh, robin: RobinModel, u: np.ndarray | Solution):
    """Lumped ``(a(., u), phi_i)`` over Robin edges and its diagonal tangent.

    Returns the residual vector and the tangent as a sparse diagonal matrix.
    """
    values = u.values if isinstance(u, Solution) else np.asarray(u, dtype=float)
    w = lumped_edge_weights(mesh, mesh.edges_where(lambda t: t.is_robin))
    nodes = np.nonzero(w)[0]
    res = np.zeros(mesh.n_vertices)
    diag = np.zeros(mesh.n_vertices)
    if len(nodes):
        x = mesh.vertices[nodes]
        av = np.asarray(robin.a(x, values[nodes]), dtype=float)
        dv = _fd_derivative(robin, x, values[nodes])
        if not (np.all(np.isfinite(av)) and np.all(np.isfinite(dv))):
            raise FloatingPointError("Robin nonlinearity returned non-finite values")
        res[nodes] = w[nodes] * av
        diag[nodes] = w[nodes] * dv
    return res, sp.diags(diag).tocsr()


def robin_load(mesh: Mesh, g: Evaluator | None) -> np.ndarray:
    if g is None:
        return np.zeros(mesh.n_vertices)
    w = lumped_edge_weights(mesh, mesh.edges_where(lambda t: t.is_robin))
    nodes = np.nonzero(w)[0]
    out = np.zeros(mesh.n_vertices)
    if len(nodes):
        out[nodes] = w[nodes] * np.asarray(g(mesh.vertices[nodes]), dtype=float)
    return out


# ---------------------------------------------------------------- dof handling


def dirichlet_nodes(mesh: Mesh) -> np.ndarray:
    return mesh.nodes_where(lambda t: t.is_dirichlet)


def restriction(mesh: Mesh, fixed: np.ndarray | None = None) -> sp.csr_matrix:
    """Prolongation ``P`` (vertices x free dofs) eliminating ``fixed`` nodes."""
    fixed = dirichlet_nodes(mesh) if fixed is None else fixed
    free = np.setdiff1d(np.arange(mesh.n_vertices), fixed)
    return sp.csr_matrix((np.ones(len(free)), (free, np.arange(len(free)))),
                         shape=(mesh.n_vertices, len(free)))


# ---------------------------------------------------------------- nonlinear solve


class _Capacitance:
    """Solves ``(L + P D P^T) x = r`` reusing one factorization of ``L``.

    ``D`` is diagonal and lives on a small set of boundary dofs, so each
    tangent solve costs two back-substitutions plus a dense solve of the
    boundary size.
    """

    def __init__(self, lu, bdofs: np.ndarray, n: int):
        self.lu = lu
        self.bdofs = bdofs
        E = np.zeros((n, len(bdofs)))
        E[bdofs, np.arange(len(bdofs))] = 1.0
        self.C = lu.solve(E)[bdofs] if len(bdofs) else np.zeros((0, 0))

    def solve(self, d: np.ndarray, r: np.ndarray) -> np.ndarray:
        y = self.lu.solve(r)
        if not len(self.bdofs):
            return y
        D = d[self.bdofs]
        S = np.eye(len(D)) + D[:, None] * self.C
        w = np.linalg.solve(S, D * y[self.bdofs])
        z = np.zeros_like(r)
        z[self.bdofs] = w
        return y - self.lu.solve(z)


def solve(
    mesh: Mesh,
    coeffs: CoefficientField | None,
    robin: RobinModel | None,
    data: ProblemData,
    tol: float = 1e-10,
    max_iter: int = 30,
    prolongation: sp.csr_matrix | None = None,
    u0: np.ndarray | None = None,
    capacitance_limit: int = 600,
) -> Solution:
    """Damped Newton for the discrete nonlinear problem, Picard fallback.

    The residual is measured in the Euclidean norm of the dof vector
    relative to the assembled right-hand side.
    """
    if data.lambda0 is not None and data.lam > data.lambda0:
        raise ValueError(f"lambda {data.lam} exceeds the coercivity bound {data.lambda0}")
    robin = robin or RobinModel.zero()
    asm = assemble(mesh, coeffs, data.lam)
    P = restriction(mesh) if prolongation is None else prolongation
    L = (P.T @ asm.operator @ P).tocsc()
    b = P.T @ (asm.load(data.f) + robin_load(mesh, data.g))
    n = L.shape[0]

    def F(x):
        r, _ = assemble_robin_residual(mesh, robin, P @ x)
        return L @ x + P.T @ r - b

    def tangent_diag(x):
        _, T = assemble_robin_residual(mesh, robin, P @ x)
        return (P.T @ T @ P).diagonal()

    x = np.zeros(n) if u0 is None else P.T @ u0 / np.maximum(P.T @ np.ones(mesh.n_vertices), 1)
    r = F(x)
    scale = np.linalg.norm(b)
    if scale == 0:
        scale = np.linalg.norm(F(np.zeros(n))) or 1.0
    res = np.linalg.norm(r) / scale
    if res <= tol:
        return Solution(mesh, P @ x, res, 0)

    robin_w = P.T @ lumped_edge_weights(mesh, mesh.edges_where(lambda t: t.is_robin))
    bdofs = np.nonzero(robin_w)[0]
    lu = spla.splu(L)
    cap = _Capacitance(lu, bdofs, n) if len(bdofs) <= capacitance_limit else None

    it = 0
    while it < max_iter:
        it += 1
        d = tangent_diag(x)
        if cap is not None:
            step = cap.solve(d, -r)
        else:
            step = spla.splu((L + sp.diags(d)).tocsc()).solve(-r)
        Jd = L @ step + d * step
        if float(step @ Jd) <= 0 and np.linalg.norm(step) > 0:
            raise IndefiniteSystem("tangent operator is not positive along the Newton direction")
        t = 1.0
        nrm = np.linalg.norm(r)
        while True:
            xn = x + t * step
            rn = F(xn)
            if np.linalg.norm(rn) <= (1 - 1e-4 * t) * nrm or t < 1 / 64:
                break
            t *= 0.5
        if np.linalg.norm(rn) >= nrm:
            log.info("Newton stalled at residual %.3e; switching to Picard", nrm / scale)
            return _picard(mesh, robin, L, P, b, x, F, scale, tol, max_iter, it)
        x, r = xn, rn
        res = np.linalg.norm(r) / scale
        log.debug("newton %d: residual %.3e (step %.3g)", it, res, t)
        if res <= tol:
            return Solution(mesh, P @ x, res, it, "newton")
    raise NonConvergence(it, res)


def _picard(mesh, robin, L, P, b, x, F, scale, tol, max_iter, it0):
    """Frozen secant-coefficient iteration with step halving."""
    r = F(x)
    it = it0
    while it < it0 + 4 * max_iter:
        it += 1
        u = P @ x
        w = lumped_edge_weights(mesh, mesh.edges_where(lambda t: t.is_robin))
        nodes = np.nonzero(w)[0]
        coef = np.zeros(mesh.n_vertices)
        if len(nodes):
            xv = mesh.vertices[nodes]
            un = u[nodes]
            small = np.abs(un) < 1e-8
            sec = np.where(small, _fd_derivative(robin, xv, un), robin.a(xv, un) / np.where(small, 1.0, un))
            coef[nodes] = w[nodes] * sec
        A = (L + P.T @ sp.diags(coef) @ P).tocsc()
        target = spla.splu(A).solve(b)
        step = target - x
        t = 1.0
        nrm = np.linalg.norm(r)
        while t >= 1 / 1024:
            rn = F(x + t * step)
            if np.linalg.norm(rn) < nrm:
                break
            t *= 0.5
        x = x + t * step
        r = rn
        res = np.linalg.norm(r) / scale
        if res <= tol:
            return Solution(mesh, P @ x, res, it, "picard")
    raise NonConvergence(it, np.linalg.norm(r) / scale)


# ---------------------------------------------------------------- norms


def norms(u: Solution | tuple[Mesh, np.ndarray]) -> dict[str, float]:
    mesh, values = (u.mesh, u.values) if isinstance(u, Solution) else u
    K, M = p1_matrices(mesh)
    l2 = math.sqrt(max(float(values @ (M @ values)), 0.0))
    h1 = math.sqrt(max(float(values @ (K @ values)), 0.0))
    return {"l2": l2, "h1_semi": h1, "w12": math.hypot(l2, h1)}


def boundary_trace_norm(u: Solution | tuple[Mesh, np.ndarray], tag: Tag) -> float:
    """``||u||_{L2}`` over the edges carrying ``tag`` (exact for P1)."""
    mesh, values = (u.mesh, u.values) if isinstance(u, Solution) else u
    edges = mesh.tagged_edges(tag)
    a = values[edges[:, 0]]
    b = values[edges[:, 1]]
    L = np.linalg.norm(mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]], axis=1)
    return math.sqrt(float(np.sum(L / 3.0 * (a * a + a * b + b * b))))


def mean_free_decompose(u: Solution | tuple[Mesh, np.ndarray], center, r_in: float, r_out: float):
    """Average over the annulus ``r_in < |x - center| < r_out`` and the fluctuation field.

    Triangles are assigned to the region by their centroid.
    """
    mesh, values = (u.mesh, u.values) if isinstance(u, Solution) else u
    cen = mesh.vertices[mesh.triangles].mean(axis=1)
    r = np.hypot(cen[:, 0] - center[0], cen[:, 1] - center[1])
    sel = (r >= r_in) & (r <= r_out)
    if not np.any(sel):
        raise ValueError("region contains no triangles")
    area = mesh.areas()[sel]
    tmean = values[mesh.triangles[sel]].mean(axis=1)
    mean = float(np.sum(area * tmean) / np.sum(area))
    return mean, values - mean, sel


def region_integral(mesh: Mesh, values: np.ndarray, selection: np.ndarray) -> float:
    return float(np.sum(mesh.areas()[selection] * values[mesh.triangles[selection]].mean(axis=1)))


# ---------------------------------------------------------------- eigenvalues


def inverse_iteration(
    K: sp.spmatrix,
    M: sp.spmatrix,
    shift: float = 0.0,
    deflate_constants: bool = False,
    tol: float = 1e-11,
    max_iter: int = 500,
    seed: int = 0,
    block: int = 4,
) -> tuple[float, np.ndarray, int]:
    """Smallest eigenpair of ``K x = lam M x`` (above ``shift``).

    With ``deflate_constants`` the iteration runs in the M-orthogonal
    complement of the constant vector through a bordered solve.
    """
    n = K.shape[0]
    A = (K - shift * M).tocsc()
    if deflate_constants:
        m1 = M @ np.ones(n)
        A = sp.bmat([[A, sp.csc_matrix(m1[:, None])], [sp.csr_matrix(m1[None, :]), None]]).tocsc()
        lu = spla.splu(A)

        def apply(y):
            return lu.solve(np.append(M @ y, 0.0))[:n]
    else:
        lu = spla.splu(A)

        def apply(y):
            return lu.solve(M @ y)

    # a small block avoids stalling on (nearly) degenerate eigenvalues
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, min(block, n)))
    if deflate_constants:
        one = np.ones(n)
        X -= np.outer(one, (one @ (M @ X)) / (one @ (M @ one)))
    lam_old = np.inf
    lam = np.inf
    for it in range(1, max_iter + 1):
        Y = np.column_stack([apply(X[:, j]) for j in range(X.shape[1])])
        Kr = Y.T @ (K @ Y)
        Mr = Y.T @ (M @ Y)
        w, V = sla.eigh(0.5 * (Kr + Kr.T), 0.5 * (Mr + Mr.T))
        X = Y @ V
        X /= np.sqrt(np.einsum("ij,ij->j", X, M @ X))
        lam = float(w[0])
        if abs(lam - lam_old) <= tol * max(abs(lam), 1e-300):
            return lam, X[:, 0], it
        lam_old = lam
    raise NonConvergence(max_iter, abs(lam - lam_old), "inverse iteration")


def poincare_constant(mesh: Mesh, variant: str, tol: float = 1e-11) -> float:
    """Best ``C`` in ``||u||^2 <= C ||grad u||^2`` on the mesh.

    ``"DirichletHole"``: zero trace on cavity loops; ``"DirichletOuter"``:
    zero trace on outer loops; ``"MeanFree"``: zero mean, no trace condition.
    """
    K, M = p1_matrices(mesh)
    if variant == "MeanFree":
        lam, _, _ = inverse_iteration(K, M, deflate_constants=True, tol=tol)
        return 1.0 / lam
    if variant == "DirichletHole":
        fixed = mesh.nodes_where(lambda t: t.kind.startswith("cavity"))
    elif variant == "DirichletOuter":
        fixed = mesh.nodes_where(lambda t: t.kind.startswith("outer"))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    P = restriction(mesh, fixed)
    lam, _, _ = inverse_iteration(P.T @ K @ P, P.T @ M @ P, tol=tol)
    return 1.0 / lam


def local_cavity_mesh(layout, k: int, variant: str, h_rel: float = 0.15, hole_divisions: int = 64) -> Mesh:
    """Mesh of the cell around cavity ``k`` for a local Poincare variant.

    Built in units of the local scale and mapped back, so scaling eps only
    dilates the mesh.  ``MeanFree`` uses ``B_{eps eta R3}`` as in the
    zero-mean lemma, the other variants ``B_{eps R3}``.
    """
    cav = layout.cavities[k]
    r3 = layout.radii[2]
    shape_r = getattr(cav.reference_shape, "radius", None)
    if shape_r is None:
        raise ValueError("local Poincare meshes support disk cavities only")
    if variant == "MeanFree":
        unit = layout.epsilon * layout.eta
        outer, hole = r3, shape_r
    else:
        unit = layout.epsilon
        outer, hole = r3, layout.eta * shape_r
    if variant == "DirichletHole":
        kinds = ("outer_neumann", "cavity_dirichlet")
    elif variant == "DirichletOuter":
        kinds = ("outer_dirichlet", "cavity_neumann")
    elif variant == "MeanFree":
        kinds = ("outer_neumann", "cavity_neumann")
    else:
        raise ValueError(f"unknown variant {variant!r}")
    ref = disk_with_hole_mesh(outer, hole, kinds[0], kinds[1], h_outer=h_rel * outer,
                              hole_divisions=hole_divisions)
    return ref.transformed(unit, cav.center)


def local_poincare_constant(layout, k: int, variant: str, h_rel: float = 0.15,
                            hole_divisions: int = 64) -> float:
    mesh = local_cavity_mesh(layout, k, variant, h_rel, hole_divisions)
    return poincare_constant(mesh, variant)


# ---------------------------------------------------------------- coercivity


@dataclass
class CoercivityReport:
    lambda0: float
    analytic: float
    trace_term: float
    probe_min: float
    ok: bool


def _sym(A):
    return (0.5 * (A + A.T)).tocsr()


def coercivity_bound(mesh: Mesh, coeffs: CoefficientField | None, robin: RobinModel | None,
                     probe: bool = True, slack: float = 1e-8) -> CoercivityReport:
    """Certified shift below which the discrete form stays coercive.

    ``c_inf - b_sup^2 / (2 c0)`` from Young's inequality, lowered by the
    largest loss the Robin sign bound can cause against ``c0/2 ||grad u||^2``.
    The bound is checked a posteriori by inverse iteration on the symmetric
    part of the shifted operator.
    """
    coeffs = coeffs or CoefficientField.laplace()
    robin = robin or RobinModel.zero()
    analytic = coeffs.c_inf - coeffs.b_sup**2 / (2 * coeffs.c0)
    asm = assemble(mesh, coeffs)
    P = restriction(mesh)
    K, M = p1_matrices(mesh)
    Kf, Mf = P.T @ K @ P, (P.T @ M @ P).tocsr()
    wR = P.T @ lumped_edge_weights(mesh, mesh.edges_where(lambda t: t.is_robin))
    s = max(robin.sign_bound(), 0.0)
    trace = 0.0
    if s > 0 and np.any(wR > 0):
        B = sp.diags(s * wR)
        Q = (0.5 * coeffs.c0 * Kf - B).tocsc()
        # M >= M_lumped / 4 gives a guaranteed lower bound on the spectrum
        ml = np.asarray(Mf.sum(axis=1)).ravel()
        sigma = -4 * s * float(np.max(wR / ml)) - 1.0
        nu = float(spla.eigsh(Q, k=1, M=Mf.tocsc(), sigma=sigma, which="LM", return_eigenvectors=False)[0])
        trace = max(0.0, -nu)
    lam0 = analytic - trace
    probe_min = math.nan
    ok = True
    if probe:
        S = _sym(P.T @ asm.stiffness @ P) - sp.diags(s * wR)
        mu, _, _ = inverse_iteration(S, Mf, shift=lam0 - 1.0, tol=1e-10)
        probe_min = mu
        ok = mu >= lam0 - slack * max(1.0, abs(lam0))
        if not ok:
            raise AssertionError(f"eigenvalue probe {mu} contradicts analytic bound {lam0}")
    return CoercivityReport(lam0, analytic, trace, probe_min, ok)

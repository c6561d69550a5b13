"""Perforation layouts and audits of the geometric hypotheses.

A layout is a finite family of cavities ``M_k + eps*eta*omega_k`` inside a
bounded outer domain (box or disk).  Reference shapes are disks or
star-shaped polygons living in the reference ball ``B_{R2}(0)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

DEFAULT_RADII = (0.5, 1.0, 1.9, 3.0)


class GeometryError(ValueError):
    """Invalid layout configuration."""


# ---------------------------------------------------------------- shapes


@dataclass(frozen=True)
class Disk:
    radius: float = 1.0


@dataclass(frozen=True)
class Polygon:
    vertices: tuple[tuple[float, float], ...]
    star_shaped: bool = True

    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)


@dataclass(frozen=True)
class Dirichlet:
    pass


@dataclass(frozen=True)
class Robin:
    sign_definite: bool = True


@dataclass(frozen=True)
class CavitySpec:
    center: tuple[float, float]
    reference_shape: Disk | Polygon
    inner_ball: tuple[tuple[float, float], float]
    bc: Dirichlet | Robin

    @property
    def is_dirichlet(self) -> bool:
        return isinstance(self.bc, Dirichlet)


@dataclass(frozen=True)
class OuterDomain:
    kind: str  # "box" or "disk"
    box: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if self.kind == "box":
            x0, y0, x1, y1 = self.box
            if not (x1 > x0 and y1 > y0):
                raise GeometryError(f"empty box {self.box}")
        elif self.kind == "disk":
            if self.radius <= 0:
                raise GeometryError("outer disk radius must be positive")
        else:
            raise GeometryError(f"unknown outer domain kind {self.kind!r}")

    @classmethod
    def unit_box(cls) -> OuterDomain:
        return cls("box", box=(0.0, 0.0, 1.0, 1.0))

    def area(self) -> float:
        if self.kind == "box":
            x0, y0, x1, y1 = self.box
            return (x1 - x0) * (y1 - y0)
        return math.pi * self.radius**2

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if self.kind == "box":
            x0, y0, x1, y1 = self.box
            return (pts[:, 0] > x0) & (pts[:, 0] < x1) & (pts[:, 1] > y0) & (pts[:, 1] < y1)
        d = np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1])
        return d < self.radius

    def boundary_distance(self, pts: np.ndarray) -> np.ndarray:
        """Distance from interior points to the outer boundary."""
        pts = np.atleast_2d(pts)
        if self.kind == "box":
            x0, y0, x1, y1 = self.box
            return np.minimum.reduce(
                [pts[:, 0] - x0, x1 - pts[:, 0], pts[:, 1] - y0, y1 - pts[:, 1]]
            )
        d = np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1])
        return self.radius - d

    def bounding_box(self) -> tuple[float, float, float, float]:
        if self.kind == "box":
            return self.box
        cx, cy = self.center
        r = self.radius
        return (cx - r, cy - r, cx + r, cy + r)

    def scaled(self, s: float) -> OuterDomain:
        if self.kind == "box":
            return replace(self, box=tuple(s * v for v in self.box))
        return replace(self, center=(s * self.center[0], s * self.center[1]), radius=s * self.radius)


# ---------------------------------------------------------------- layout


@dataclass(frozen=True)
class PerforationLayout:
    epsilon: float
    eta: float
    cavities: tuple[CavitySpec, ...]
    radii: tuple[float, float, float, float] = DEFAULT_RADII
    outer_domain: OuterDomain = field(default_factory=OuterDomain.unit_box)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise GeometryError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.eta <= 1:
            raise GeometryError(f"eta must lie in (0, 1], got {self.eta}")
        r1, r2, r3, r4 = self.radii
        if not (0 < r1 < r2 < r3 and r4 > 0):
            raise GeometryError(f"radii must satisfy 0 < R1 < R2 < R3, got {self.radii}")
        if not self.cavities:
            raise GeometryError("layout has no cavities")

    # index sets M_D, M_R \ M_R0, M_R0
    @property
    def dirichlet_indices(self) -> tuple[int, ...]:
        return tuple(k for k, c in enumerate(self.cavities) if isinstance(c.bc, Dirichlet))

    @property
    def robin_indices(self) -> tuple[int, ...]:
        return tuple(
            k for k, c in enumerate(self.cavities)
            if isinstance(c.bc, Robin) and not c.bc.sign_definite
        )

    @property
    def sign_definite_indices(self) -> tuple[int, ...]:
        return tuple(
            k for k, c in enumerate(self.cavities)
            if isinstance(c.bc, Robin) and c.bc.sign_definite
        )

    @property
    def index_sets(self) -> dict[str, tuple[int, ...]]:
        return {
            "dirichlet": self.dirichlet_indices,
            "robin": self.robin_indices,
            "robin_sign_definite": self.sign_definite_indices,
        }

    @property
    def centers(self) -> np.ndarray:
        return np.array([c.center for c in self.cavities], dtype=float)

    @property
    def scale(self) -> float:
        """Physical size factor eps*eta of every cavity."""
        return self.epsilon * self.eta

    def cavity_polygon(self, k: int, divisions: int = 64) -> np.ndarray:
        """Physical boundary polygon of cavity ``k`` (counterclockwise)."""
        cav = self.cavities[k]
        return np.asarray(cav.center) + self.scale * reference_boundary(cav.reference_shape, divisions)

    def cavity_area(self, k: int) -> float:
        shape = self.cavities[k].reference_shape
        if isinstance(shape, Disk):
            return math.pi * (self.scale * shape.radius) ** 2
        return self.scale**2 * polygon_area(shape.array())

    def cavity_perimeter(self, k: int) -> float:
        shape = self.cavities[k].reference_shape
        if isinstance(shape, Disk):
            return 2 * math.pi * self.scale * shape.radius
        return self.scale * polygon_perimeter(shape.array())

    def with_center(self, k: int, center: tuple[float, float]) -> PerforationLayout:
        cav = list(self.cavities)
        cav[k] = replace(cav[k], center=tuple(map(float, center)))
        return replace(self, cavities=tuple(cav))

    def scaled(self, s: float) -> PerforationLayout:
        """Dilate centers, epsilon and the outer domain by ``s``."""
        cav = tuple(replace(c, center=(s * c.center[0], s * c.center[1])) for c in self.cavities)
        return replace(self, epsilon=s * self.epsilon, cavities=cav,
                       outer_domain=self.outer_domain.scaled(s))


def polygon_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_perimeter(v: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))


def reference_boundary(shape: Disk | Polygon, divisions: int) -> np.ndarray:
    """Counterclockwise boundary points of a reference shape.

    Disks are sampled at ``divisions`` equiangular points; polygon edges are
    subdivided so that the total count is at least ``divisions``.
    """
    if isinstance(shape, Disk):
        t = 2 * np.pi * np.arange(divisions) / divisions
        return shape.radius * np.column_stack([np.cos(t), np.sin(t)])
    v = shape.array()
    if polygon_area(v) < 0:
        v = v[::-1]
    lengths = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
    per = lengths.sum()
    pts = []
    for i, L in enumerate(lengths):
        m = max(1, int(math.ceil(divisions * L / per)))
        a, b = v[i], v[(i + 1) % len(v)]
        for j in range(m):
            pts.append(a + (b - a) * j / m)
    return np.array(pts)


# ---------------------------------------------------------------- config / build


@dataclass
class LayoutConfig:
    """Declarative description of a cavity family.

    ``generator`` is ``"periodic"`` (centers on the ``4*eps`` lattice),
    ``"explicit"`` (``centers`` given) or ``"jittered"`` (lattice plus a
    seeded uniform perturbation of relative size ``jitter``).
    ``bc_rule`` is ``"dirichlet"``, ``"robin"``, ``"robin_indefinite"`` or
    ``"split"`` (Dirichlet above the horizontal midline, Robin below).
    """

    epsilon: float
    eta: float
    generator: str = "periodic"
    outer: OuterDomain = field(default_factory=OuterDomain.unit_box)
    shape: Disk | Polygon = field(default_factory=Disk)
    bc_rule: str = "dirichlet"
    radii: tuple[float, float, float, float] = DEFAULT_RADII
    centers: Sequence[tuple[float, float]] = ()
    lattice_offset: tuple[float, float] | None = None
    spacing: float = 4.0
    jitter: float = 0.0
    seed: int = 0


def _lattice_centers(cfg: LayoutConfig) -> np.ndarray:
    eps = cfg.epsilon
    step = cfg.spacing * eps
    x0, y0, x1, y1 = cfg.outer.bounding_box()
    if cfg.lattice_offset is None:
        # lattice cells tile the box: centers sit half a step inside
        ox, oy = x0 + step / 2, y0 + step / 2
    else:
        ox, oy = cfg.lattice_offset
    i0 = math.floor((x0 - ox) / step) - 1
    i1 = math.ceil((x1 - ox) / step) + 1
    j0 = math.floor((y0 - oy) / step) - 1
    j1 = math.ceil((y1 - oy) / step) + 1
    ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
    pts = np.column_stack([ox + step * ii.ravel(), oy + step * jj.ravel()])
    # round away representation noise so lattice points are reproducible
    pts = np.round(pts, 14)
    keep = cfg.outer.boundary_distance(pts) >= cfg.radii[2] * eps * (1 - 1e-12)
    pts = pts[keep]
    order = np.lexsort((pts[:, 0], pts[:, 1]))
    return pts[order]


def _inner_ball(shape: Disk | Polygon, r1: float) -> tuple[tuple[float, float], float]:
    if isinstance(shape, Disk):
        return ((0.0, 0.0), min(r1, shape.radius))
    v = shape.array()
    c = v.mean(axis=0)
    return ((float(c[0]), float(c[1])), r1)


def _assign_bc(rule: str, center: np.ndarray, outer: OuterDomain):
    if rule == "dirichlet":
        return Dirichlet()
    if rule == "robin":
        return Robin(sign_definite=True)
    if rule == "robin_indefinite":
        return Robin(sign_definite=False)
    if rule == "split":
        x0, y0, x1, y1 = outer.bounding_box()
        return Dirichlet() if center[1] > 0.5 * (y0 + y1) else Robin(sign_definite=True)
    raise GeometryError(f"unknown bc rule {rule!r}")


def build_layout(config: LayoutConfig) -> PerforationLayout:
    """Instantiate all cavities of ``config`` in physical coordinates."""
    if not config.epsilon > 0:
        raise GeometryError(f"epsilon must be positive, got {config.epsilon}")
    if not 0 < config.eta <= 1:
        raise GeometryError(f"eta must lie in (0, 1], got {config.eta}")
    shape = config.shape
    if isinstance(shape, Polygon):
        if not shape.star_shaped:
            raise GeometryError("only star-shaped polygons are accepted as reference shapes")
        if len(shape.vertices) < 3:
            raise GeometryError("polygon needs at least three vertices")
    elif not isinstance(shape, Disk):
        raise GeometryError(f"unsupported reference shape {shape!r}")

    if config.generator == "periodic":
        centers = _lattice_centers(config)
    elif config.generator == "explicit":
        centers = np.asarray(config.centers, dtype=float).reshape(-1, 2)
    elif config.generator == "jittered":
        centers = _lattice_centers(config)
        rng = np.random.default_rng(config.seed)
        centers = centers + config.jitter * config.epsilon * rng.uniform(-1, 1, centers.shape)
    else:
        raise GeometryError(f"unknown generator {config.generator!r}")
    if len(centers) == 0:
        raise GeometryError("layout has no cavities")

    ball = _inner_ball(shape, config.radii[0])
    cavities = tuple(
        CavitySpec(
            center=(float(c[0]), float(c[1])),
            reference_shape=shape,
            inner_ball=ball,
            bc=_assign_bc(config.bc_rule, c, config.outer),
        )
        for c in centers
    )
    return PerforationLayout(
        epsilon=float(config.epsilon),
        eta=float(config.eta),
        cavities=cavities,
        radii=tuple(config.radii),
        outer_domain=config.outer,
    )


# ---------------------------------------------------------------- checks


@dataclass
class GeometryCheckReport:
    a1_inclusions: list[bool] = field(default_factory=list)
    a1_connected: list[bool] = field(default_factory=list)
    a1_separation: float = math.inf
    a1_separation_pass: bool = True
    a1_boundary_clearance: float = math.inf
    a1_boundary_clearance_pass: bool = True
    a3_covering: bool | None = None
    a3_worst_point: tuple[float, float] | None = None
    a3_worst_ratio: float | None = None
    alpha_bounds: list[tuple[float, float]] | None = None
    alpha_pass: bool | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def inclusion_pass(self) -> bool:
        return all(self.a1_inclusions)

    @property
    def a1_pass(self) -> bool:
        return (
            self.inclusion_pass
            and all(self.a1_connected)
            and self.a1_separation_pass
            and self.a1_boundary_clearance_pass
        )

    @property
    def passed(self) -> bool:
        ok = self.a1_pass
        if self.a3_covering is not None:
            ok = ok and self.a3_covering
        if self.alpha_pass is not None:
            ok = ok and self.alpha_pass
        return ok

    def verdicts(self) -> dict[str, bool | None]:
        return {
            "inclusion": self.inclusion_pass,
            "connected": all(self.a1_connected),
            "separation": self.a1_separation_pass,
            "boundary_clearance": self.a1_boundary_clearance_pass,
            "covering": self.a3_covering,
            "alpha": self.alpha_pass,
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("a1_separation", "a1_boundary_clearance"):
            if math.isinf(d[key]):
                d[key] = None
        d["verdicts"] = self.verdicts()
        d["passed"] = self.passed
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _shape_inclusion(cav: CavitySpec, r1: float, r2: float) -> bool:
    (yc, rin) = cav.inner_ball
    y = np.asarray(yc, dtype=float)
    tol = 1e-12
    if rin < r1 * (1 - tol):
        return False
    shape = cav.reference_shape
    if isinstance(shape, Disk):
        # B_rin(y) in B_R(0) and B_R(0) in B_R2(0)
        return (np.hypot(*y) + rin <= shape.radius * (1 + tol)) and shape.radius <= r2 * (1 + tol)
    v = shape.array()
    if np.any(np.hypot(v[:, 0], v[:, 1]) > r2 * (1 + tol)):
        return False
    if not _point_in_polygon(y, v):
        return False
    return _point_segment_distance(y, v).min() >= rin * (1 - tol)


def _point_in_polygon(p: np.ndarray, v: np.ndarray) -> bool:
    x, y = p
    inside = False
    n = len(v)
    for i in range(n):
        x1, y1 = v[i]
        x2, y2 = v[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xi > x:
                inside = not inside
    return inside


def _point_segment_distance(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    a = v
    b = np.roll(v, -1, axis=0)
    ab = b - a
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(proj - p, axis=1)


def _star_shaped_about(v: np.ndarray, c: np.ndarray) -> bool:
    """Every vertex sees ``c``: consecutive cross products keep one sign."""
    d = v - c
    cross = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
    return bool(np.all(cross > 0) or np.all(cross < 0))


def check_assumption_a1(layout: PerforationLayout) -> GeometryCheckReport:
    """Inclusion, separation, clearance and connectedness audit."""
    r1, r2, r3, _ = layout.radii
    rep = GeometryCheckReport()
    for cav in layout.cavities:
        rep.a1_inclusions.append(bool(_shape_inclusion(cav, r1, r2)))
        shape = cav.reference_shape
        if isinstance(shape, Disk):
            rep.a1_connected.append(True)
        else:
            ok = shape.star_shaped and _star_shaped_about(shape.array(), np.asarray(cav.inner_ball[0]))
            rep.a1_connected.append(bool(ok))
            if not ok:
                rep.notes.append("polygon cavity not verifiably star-shaped; connectedness flagged")

    centers = layout.centers
    eps = layout.epsilon
    if len(centers) > 1:
        tree = cKDTree(centers)
        dist, _ = tree.query(centers, k=2)
        dmin = float(dist[:, 1].min())
        rep.a1_separation = dmin / (2 * eps * r3)
    rep.a1_separation_pass = rep.a1_separation >= 1.0 - 1e-12
    clearance = layout.outer_domain.boundary_distance(centers)
    rep.a1_boundary_clearance = float(clearance.min()) / (eps * r3)
    rep.a1_boundary_clearance_pass = rep.a1_boundary_clearance >= 1.0 - 1e-12
    return rep


def check_covering(
    layout: PerforationLayout,
    pitch: float | None = None,
    report: GeometryCheckReport | None = None,
) -> tuple[bool, tuple[float, float], float]:
    """Certified grid test that the balls ``B_{eps*R4}(M_k)`` cover the domain.

    Only Dirichlet and sign-definite Robin cavities count.  The grid has
    spacing ``pitch`` (default ``eps*R4/32``); a sample passes if it is within
    ``eps*R4 - pitch*sqrt(2)`` of a qualifying center, which certifies every
    point of the grid square around it.  Returns the verdict, the worst
    sample point and its distance ratio against ``eps*R4``.
    """
    r4 = layout.radii[3]
    rad = layout.epsilon * r4
    if pitch is None:
        pitch = rad / 32
    if pitch > rad / 2:
        raise GeometryError(f"sampling pitch {pitch} exceeds eps*R4/2 = {rad / 2}; cannot certify")
    idx = layout.dirichlet_indices + layout.sign_definite_indices
    if not idx:
        raise GeometryError("covering needs at least one Dirichlet or sign-definite Robin cavity")
    centers = layout.centers[list(idx)]
    tree = cKDTree(centers)

    outer = layout.outer_domain
    x0, y0, x1, y1 = outer.bounding_box()
    nx = int(math.ceil((x1 - x0) / pitch)) + 1
    ny = int(math.ceil((y1 - y0) / pitch)) + 1
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    step = max(xs[1] - xs[0] if nx > 1 else 0.0, ys[1] - ys[0] if ny > 1 else 0.0)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    if outer.kind == "disk":
        # keep samples whose grid square can touch the disk
        d = np.hypot(pts[:, 0] - outer.center[0], pts[:, 1] - outer.center[1])
        pts = pts[d <= outer.radius + step * math.sqrt(2)]
    dist, _ = tree.query(pts)
    worst = int(np.argmax(dist))
    certified = rad - step * math.sqrt(2)
    ok = bool(dist.max() <= certified)
    wp = (float(pts[worst, 0]), float(pts[worst, 1]))
    ratio = float(dist[worst] / rad)
    if report is not None:
        report.a3_covering = ok
        report.a3_worst_point = wp
        report.a3_worst_ratio = ratio
    return ok, wp, ratio


def circle_quadrature(n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Equispaced angles and weights for periodic trapezoid integration."""
    t = 2 * np.pi * (np.arange(n_points) + 0.5) / n_points
    w = np.full(n_points, 2 * np.pi / n_points)
    return t, w


def boundary_quadrature(layout: PerforationLayout, k: int, order: int = 256):
    """Quadrature nodes and arc-length weights on the physical boundary of cavity ``k``."""
    cav = layout.cavities[k]
    shape = cav.reference_shape
    c = np.asarray(cav.center)
    if isinstance(shape, Disk):
        t, w = circle_quadrature(order)
        r = layout.scale * shape.radius
        nodes = c + r * np.column_stack([np.cos(t), np.sin(t)])
        return nodes, w * r
    # Gauss-Legendre on every polygon edge
    v = c + layout.scale * shape.array()
    g, gw = np.polynomial.legendre.leggauss(max(2, order // len(v)))
    nodes, weights = [], []
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        L = float(np.linalg.norm(b - a))
        s = 0.5 * (g + 1)
        nodes.append(a + s[:, None] * (b - a))
        weights.append(0.5 * L * gw)
    return np.vstack(nodes), np.concatenate(weights)


def check_alpha_bounds(
    layout: PerforationLayout,
    alpha: Callable[[int, np.ndarray], np.ndarray],
    c2: float,
    c3: float,
    order: int = 256,
    report: GeometryCheckReport | None = None,
    n: int = 2,
) -> list[tuple[float, float]]:
    """Weight-bound ratios on every sign-definite Robin cavity.

    Returns ``(||alpha||_2^2 / (c2 (eps eta)^(n-1)), ||alpha||_1 / (c3 (eps eta)^(n-1)))``
    per cavity; the bounds hold when the first ratio is at most 1 and the
    second at least 1.  Negative weights at any node raise.
    """
    scale = layout.scale ** (n - 1)
    out = []
    ok = True
    for k in layout.sign_definite_indices:
        x, w = boundary_quadrature(layout, k, order)
        a = np.asarray(alpha(k, x), dtype=float) * np.ones(len(x))
        if np.any(a < 0):
            raise GeometryError(f"alpha_{k} is negative at a quadrature node")
        l2sq = float(np.sum(w * a * a))
        l1 = float(np.sum(w * np.abs(a)))
        pair = (l2sq / (c2 * scale), l1 / (c3 * scale))
        ok = ok and pair[0] <= 1 + 1e-12 and pair[1] >= 1 - 1e-12
        out.append(pair)
    if report is not None:
        report.alpha_bounds = out
        report.alpha_pass = ok
    return out


def kappa(eta: float, n: int = 2) -> float:
    """Logarithmic factor: ``|ln eta| + 1`` in 2D, 1 for ``n >= 3``."""
    if not eta > 0:
        raise GeometryError(f"eta must be positive, got {eta}")
    if eta > 1:
        raise GeometryError(f"eta must not exceed 1, got {eta}")
    if n < 2:
        raise GeometryError("dimension must be at least 2")
    return abs(math.log(eta)) + 1.0 if n == 2 else 1.0


def smallness_indicators(eps: float, eta: float, mu: float, n: int = 2) -> tuple[float, float]:
    """``(eps eta^(1-n) / mu, eps^2 eta^(2-n) kappa)``."""
    if not eps > 0:
        raise GeometryError("eps must be positive")
    if mu < 1:
        raise GeometryError(f"mu must be >= 1, got {mu}")
    k = kappa(eta, n)
    return eps * eta ** (1 - n) / mu, eps**2 * eta ** (2 - n) * k


def cell_c4(eta: float, half_width: float = 2.0) -> float:
    """Area of the periodicity square minus ``B_eta`` over the hole perimeter."""
    if not 0 < eta < half_width:
        raise GeometryError("hole must fit inside the cell")
    return ((2 * half_width) ** 2 - math.pi * eta**2) / (2 * math.pi * eta)


def audit(layout: PerforationLayout, pitch: float | None = None) -> GeometryCheckReport:
    """All layout-only checks in one report."""
    rep = check_assumption_a1(layout)
    if layout.dirichlet_indices or layout.sign_definite_indices:
        check_covering(layout, pitch=pitch, report=rep)
    else:
        rep.notes.append("no Dirichlet or sign-definite cavities; covering not applicable")
    rep.notes.append("outer boundary polygonal; smooth-boundary requirement relaxed")
    return rep

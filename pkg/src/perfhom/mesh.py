"""Conforming P1 triangulations of perforated domains with tagged boundaries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np
import triangle as _triangle
from scipy.spatial import cKDTree

from .geometry import Disk, PerforationLayout, reference_boundary

TAG_KINDS = (
    "outer_dirichlet",
    "outer_neumann",
    "cavity_dirichlet",
    "cavity_robin",
    "cavity_neumann",
    "periodic",
)


class MeshError(RuntimeError):
    """Meshing failed (bad input polygon or quality target not reached)."""


class Tag(NamedTuple):
    kind: str
    cavity: int = -1

    @property
    def is_dirichlet(self) -> bool:
        return self.kind in ("outer_dirichlet", "cavity_dirichlet")

    @property
    def is_robin(self) -> bool:
        return self.kind == "cavity_robin"


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: np.ndarray
    tags: tuple[Tag, ...]
    # tag index -> (cx, cy, r) for loops that discretize a circle
    circles: dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
        )

    def area(self) -> float:
        return float(self.areas().sum())

    def edges(self) -> np.ndarray:
        e = np.sort(self.triangles[:, [[1, 2], [2, 0], [0, 1]]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0)

    def tag_index(self, tag: Tag) -> int:
        try:
            return self.tags.index(tag)
        except ValueError:
            raise KeyError(f"mesh has no boundary tagged {tag}") from None

    def tagged_edges(self, tag: Tag | Sequence[Tag]) -> np.ndarray:
        tags = [tag] if isinstance(tag, Tag) else list(tag)
        ids = [self.tag_index(t) for t in tags]
        return self.boundary_edges[np.isin(self.edge_tags, ids)]

    def edges_where(self, pred: Callable[[Tag], bool]) -> np.ndarray:
        ids = [i for i, t in enumerate(self.tags) if pred(t)]
        return self.boundary_edges[np.isin(self.edge_tags, ids)]

    def nodes_where(self, pred: Callable[[Tag], bool]) -> np.ndarray:
        return np.unique(self.edges_where(pred))

    def h_max(self) -> float:
        e = self.edges()
        return float(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1).max())

    def h_boundary(self) -> float:
        e = self.boundary_edges
        return float(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1).max())

    def transformed(self, scale: float, shift=(0.0, 0.0)) -> Mesh:
        """Image under ``x -> shift + scale*x``."""
        shift = np.asarray(shift, dtype=float)
        circles = {
            k: (shift[0] + scale * c[0], shift[1] + scale * c[1], scale * c[2])
            for k, c in self.circles.items()
        }
        return Mesh(shift + scale * self.vertices, self.triangles, self.boundary_edges,
                    self.edge_tags, self.tags, circles)


# ---------------------------------------------------------------- Delaunay core


def _walk_segment(a: np.ndarray, b: np.ndarray, size: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Points on [a, b) spaced by the local sizing function (endpoint excluded)."""
    L = float(np.linalg.norm(b - a))
    probe = a + np.linspace(0, 1, 65)[:, None] * (b - a)
    s = np.maximum(size(probe), 1e-300)
    # number of pieces from the integral of 1/size
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (1 / s[1:] + 1 / s[:-1]) * L / 64)])
    n = max(1, int(math.ceil(cum[-1])))
    targets = cum[-1] * np.arange(n) / n
    t = np.interp(targets, cum, np.linspace(0, 1, 65))
    return a + t[:, None] * (b - a)


def _polygon_loop(corners: np.ndarray, size) -> np.ndarray:
    pts = [_walk_segment(corners[i], corners[(i + 1) % len(corners)], size) for i in range(len(corners))]
    return np.vstack(pts)


def _circle_loop(center, radius: float, n: int) -> np.ndarray:
    t = 2 * np.pi * np.arange(n) / n
    return np.asarray(center) + radius * np.column_stack([np.cos(t), np.sin(t)])


@dataclass
class _Loop:
    points: np.ndarray
    tag: int
    hole_point: tuple[float, float] | None = None
    circle: tuple[float, float, float] | None = None


def _cdt(loops: list[_Loop], tags: Sequence[Tag], size, min_angle: float = 20.0,
         max_vertices: int = 2_000_000, split_boundary: bool = True) -> Mesh:
    """Graded quality CDT; boundary segments are never split by the mesher.

    If a triangle on the boundary misses the angle bound, its boundary
    segment is bisected in the input and the mesh rebuilt.  When that keeps
    moving the defect around, the whole offending loop is bisected.
    """
    for rnd in range(8):
        out, offsets = _cdt_once(loops, tags, size, min_angle, max_vertices)
        mesh = _finish(out, tags, {lp.tag: lp.circle for lp in loops if lp.circle is not None}, 0.0)
        ang = triangle_angles(mesh).min(axis=1)
        bad = np.nonzero(ang < min_angle - 1e-6)[0]
        if not len(bad):
            return mesh
        if not split_boundary:
            break
        n_in = offsets[-1]
        # output keeps input vertices first; map bad boundary segments back to loops
        split = [set() for _ in loops]
        for t in np.asarray(out["triangles"])[_raw_bad(out, min_angle)]:
            for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                if a < n_in and b < n_in:
                    la = int(np.searchsorted(offsets, a, side="right") - 1)
                    lb = int(np.searchsorted(offsets, b, side="right") - 1)
                    if la != lb:
                        continue
                    n = offsets[la + 1] - offsets[la]
                    i, j = a - offsets[la], b - offsets[la]
                    if (i + 1) % n == j:
                        split[la].add(i)
                    elif (j + 1) % n == i:
                        split[la].add(j)
        if not any(split):
            break
        if rnd >= 3:
            split = [set(range(len(lp.points))) if sp else sp for lp, sp in zip(loops, split)]
        loops = [_split_loop(lp, sorted(sp)) if sp else lp for lp, sp in zip(loops, split)]
    raise MeshError(f"minimum angle {ang.min():.2f} below target {min_angle}")


def _raw_bad(out, min_angle):
    v = np.asarray(out["vertices"])
    t = np.asarray(out["triangles"])
    p = v[t]
    ang = []
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        c = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        ang.append(np.degrees(np.arccos(np.clip(c, -1, 1))))
    return np.min(ang, axis=0) < min_angle - 1e-6


def _split_loop(lp: _Loop, idx: list[int]) -> _Loop:
    pts = lp.points
    n = len(pts)
    out = []
    s = set(idx)
    for i in range(n):
        out.append(pts[i])
        if i in s:
            m = 0.5 * (pts[i] + pts[(i + 1) % n])
            if lp.circle is not None:
                cx, cy, r = lp.circle
                d = m - (cx, cy)
                m = np.array([cx, cy]) + r * d / np.linalg.norm(d)
            out.append(m)
    return _Loop(np.asarray(out), lp.tag, lp.hole_point, lp.circle)


def _cdt_once(loops, tags, size, min_angle, max_vertices):
    verts, segs, marks, holes = [], [], [], []
    off = 0
    offsets = [0]
    for lp in loops:
        n = len(lp.points)
        if n < 3:
            raise MeshError("boundary loop needs at least three points")
        if _self_intersects(lp.points):
            raise MeshError(f"boundary loop for tag {tags[lp.tag]} self-intersects")
        verts.append(lp.points)
        idx = off + np.arange(n)
        segs.append(np.column_stack([idx, np.roll(idx, -1)]))
        marks.append(np.full(n, lp.tag + 1))
        if lp.hole_point is not None:
            holes.append(lp.hole_point)
        off += n
        offsets.append(off)
    data = {
        "vertices": np.vstack(verts),
        "segments": np.vstack(segs),
        "segment_markers": np.concatenate(marks)[:, None],
    }
    if holes:
        data["holes"] = np.asarray(holes, dtype=float)
    qflag = f"pq{min_angle:g}Y"
    out = _triangle.triangulate(data, qflag + "Q")
    for _ in range(60):
        v, t = out["vertices"], out["triangles"]
        if len(v) > max_vertices:
            raise MeshError(f"vertex budget {max_vertices} exceeded during refinement")
        cent = v[t].mean(axis=1)
        allowed = (math.sqrt(3) / 4) * size(cent) ** 2
        area = _areas(v, t)
        if np.all(area <= 1.5 * allowed):
            break
        nxt = dict(out)
        nxt["triangle_max_area"] = allowed
        if holes:
            nxt["holes"] = np.asarray(holes, dtype=float)
        out = _triangle.triangulate(nxt, "r" + qflag + "aQ")
    else:
        raise MeshError("graded refinement did not converge")
    return out, np.asarray(offsets)


def _areas(v, t):
    p = v[t]
    return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))


def _finish(out, tags, circles, min_angle) -> Mesh:
    v = np.asarray(out["vertices"], dtype=float)
    t = np.asarray(out["triangles"], dtype=np.int64)
    neg = _areas(v, t) < 0
    t[neg] = t[neg][:, [0, 2, 1]]
    # drop vertices not referenced by any triangle
    used = np.unique(t)
    if len(used) < len(v):
        remap = -np.ones(len(v), dtype=np.int64)
        remap[used] = np.arange(len(used))
        v = v[used]
        t = remap[t]
    else:
        remap = None
    seg = np.asarray(out["segments"], dtype=np.int64)
    mk = np.asarray(out["segment_markers"]).ravel().astype(np.int64)
    if remap is not None:
        seg = remap[seg]
    lookup = {(min(a, b), max(a, b)): m - 1 for (a, b), m in zip(seg.tolist(), mk.tolist())}
    bedges = _boundary_edges(t)
    etags = np.empty(len(bedges), dtype=np.int64)
    for i, (a, b) in enumerate(bedges.tolist()):
        key = (min(a, b), max(a, b))
        if key not in lookup:
            raise MeshError("boundary edge without a tag (Steiner point on boundary)")
        etags[i] = lookup[key]
    mesh = Mesh(v, t, bedges, etags, tuple(tags), dict(circles))
    q = mesh_quality(mesh)
    if q["min_angle"] < min_angle - 1e-6:
        raise MeshError(f"minimum angle {q['min_angle']:.2f} below target {min_angle}")
    return mesh


def _boundary_edges(t: np.ndarray) -> np.ndarray:
    """Edges used by exactly one triangle, oriented as in that triangle."""
    e = t[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2)
    key = np.sort(e, axis=1)
    _, inv, cnt = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    return e[cnt[inv] == 1]


def _self_intersects(p: np.ndarray) -> bool:
    n = len(p)
    a = p
    b = np.roll(p, -1, axis=0)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    for i in range(n):
        cand = np.nonzero(
            (lo[:, 0] <= hi[i, 0]) & (hi[:, 0] >= lo[i, 0]) & (lo[:, 1] <= hi[i, 1]) & (hi[:, 1] >= lo[i, 1])
        )[0]
        for j in cand:
            if j <= i or j == (i + 1) % n or i == (j + 1) % n:
                continue
            if _segments_cross(a[i], b[i], a[j], b[j]):
                return True
    return False


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


# ---------------------------------------------------------------- public builders


def default_divisions(h_target: float, scale: float = 1.0) -> int:
    """``max(32, ceil(4 pi scale / h_target))`` points per cavity loop."""
    return max(32, int(math.ceil(4 * math.pi * scale / h_target)))


def triangulate(
    layout: PerforationLayout,
    h_target: float,
    boundary_divisions: int | None = None,
    grading: float = 0.3,
    min_angle: float = 20.0,
    max_vertices: int = 2_000_000,
) -> Mesh:
    """Graded constrained-Delaunay mesh of the perforated domain.

    Elements near a cavity have the size of its boundary edges and grow
    linearly (rate ``grading``) up to ``h_target``.
    """
    if boundary_divisions is None:
        boundary_divisions = default_divisions(h_target, layout.scale)
    if boundary_divisions < 12:
        raise MeshError("boundary_divisions must be at least 12")
    tags = [Tag("outer_dirichlet")]
    loops: list[_Loop] = []
    centers = layout.centers
    radius_out = []
    h_near = []
    for k, cav in enumerate(layout.cavities):
        kind = "cavity_dirichlet" if cav.is_dirichlet else "cavity_robin"
        tags.append(Tag(kind, k))
        ref = reference_boundary(cav.reference_shape, boundary_divisions)
        pts = np.asarray(cav.center) + layout.scale * ref
        circle = None
        if isinstance(cav.reference_shape, Disk):
            r = layout.scale * cav.reference_shape.radius
            circle = (cav.center[0], cav.center[1], r)
            radius_out.append(r)
        else:
            radius_out.append(layout.scale * float(np.hypot(*ref.T).max()))
        h_near.append(float(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1).max()))
        hp = np.asarray(cav.center) + layout.scale * np.asarray(cav.inner_ball[0])
        loops.append(_Loop(pts, k + 1, (float(hp[0]), float(hp[1])), circle))
    radius_out = np.asarray(radius_out)
    h_near = np.asarray(h_near)
    tree = cKDTree(centers)

    def size(x):
        x = np.atleast_2d(x)
        kq = min(4, len(centers))
        d, j = tree.query(x, k=kq)
        d = np.atleast_2d(d.T).T.reshape(len(x), -1)
        j = np.atleast_2d(j.T).T.reshape(len(x), -1)
        s = h_near[j] + grading * np.maximum(d - radius_out[j], 0.0)
        return np.minimum(h_target, s.min(axis=1))

    outer = layout.outer_domain
    if outer.kind == "box":
        x0, y0, x1, y1 = outer.box
        corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)
        opts = _polygon_loop(corners, size)
        loops.insert(0, _Loop(opts, 0))
    else:
        n = max(32, int(math.ceil(2 * math.pi * outer.radius / float(size(np.array([outer.center]))[0]))))
        n = max(n, int(math.ceil(2 * math.pi * outer.radius / h_target)))
        loops.insert(0, _Loop(_circle_loop(outer.center, outer.radius, n), 0, None,
                              (outer.center[0], outer.center[1], outer.radius)))
    return _cdt(loops, tags, size, min_angle, max_vertices)


def disk_with_hole_mesh(
    outer_radius: float,
    hole_radius: float | None,
    outer_kind: str,
    hole_kind: str | None,
    h_outer: float,
    hole_divisions: int = 48,
    grading: float = 0.25,
    outer_divisions: int | None = None,
    center=(0.0, 0.0),
) -> Mesh:
    """Disk (optionally with a concentric disk hole) for local problems."""
    c = np.asarray(center, dtype=float)
    tags = [Tag(outer_kind)]
    loops = []
    if hole_radius is not None:
        tags.append(Tag(hole_kind, 0))
        h_in = 2 * math.pi * hole_radius / hole_divisions
        loops.append(_Loop(_circle_loop(c, hole_radius, hole_divisions), 1, tuple(c),
                           (c[0], c[1], hole_radius)))
    else:
        h_in = h_outer

    def size(x):
        r = np.hypot(x[:, 0] - c[0], x[:, 1] - c[1])
        if hole_radius is None:
            return np.full(len(x), h_outer)
        return np.minimum(h_outer, h_in + grading * np.maximum(r - hole_radius, 0.0))

    n_out = outer_divisions or max(24, int(math.ceil(2 * math.pi * outer_radius / h_outer)))
    loops.insert(0, _Loop(_circle_loop(c, outer_radius, n_out), 0, None, (c[0], c[1], outer_radius)))
    return _cdt(loops, tags, size)


def periodic_cell_mesh(
    eta: float,
    hole_kind: str,
    h_max: float = 0.25,
    hole_divisions: int = 64,
    half_width: float = 2.0,
    grading: float = 0.3,
) -> Mesh:
    """Mesh of ``(-a, a)^2 minus B_eta(0)`` with matching opposite-side vertices."""
    if not 0 < eta < half_width:
        raise MeshError("hole must lie strictly inside the periodicity cell")
    a = half_width
    h_in = 2 * math.pi * eta / hole_divisions

    def size(x):
        r = np.hypot(x[:, 0], x[:, 1])
        return np.minimum(h_max, h_in + grading * np.maximum(r - eta, 0.0))

    # same uniform subdivision on every side so opposite sides coincide
    side = np.array([[-a, -a], [a, -a]])
    n = max(4, int(math.ceil(2 * a / float(size(side).min()))))
    s = np.linspace(-a, a, n + 1)[:-1]
    bottom = np.column_stack([s, np.full(n, -a)])
    right = np.column_stack([np.full(n, a), s])
    top = np.column_stack([-s, np.full(n, a)])
    left = np.column_stack([np.full(n, -a), -s])
    square = np.vstack([bottom, right, top, left])
    tags = [Tag("periodic"), Tag(hole_kind, 0)]
    loops = [
        _Loop(square, 0),
        _Loop(_circle_loop((0.0, 0.0), eta, hole_divisions), 1, (0.0, 0.0), (0.0, 0.0, eta)),
    ]
    return _cdt(loops, tags, size, split_boundary=False)


# ---------------------------------------------------------------- refinement, quality


def refine_uniform(mesh: Mesh) -> Mesh:
    """Red refinement; new boundary points on circular loops are projected onto the circle."""
    v = mesh.vertices
    t = mesh.triangles
    nv = len(v)
    e = np.sort(t[:, [[1, 2], [2, 0], [0, 1]]].reshape(-1, 2), axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    inv = inv.ravel().reshape(-1, 3)
    mid = 0.5 * (v[uniq[:, 0]] + v[uniq[:, 1]])
    newv = np.vstack([v, mid])
    m0, m1, m2 = inv[:, 0] + nv, inv[:, 1] + nv, inv[:, 2] + nv
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    tri = np.vstack([
        np.column_stack([a, m2, m1]),
        np.column_stack([m2, b, m0]),
        np.column_stack([m1, m0, c]),
        np.column_stack([m0, m1, m2]),
    ])
    # children ordered by parent for locality
    T = len(t)
    tri = tri.reshape(4, T, 3).transpose(1, 0, 2).reshape(-1, 3)

    lookup = {tuple(p): i for i, p in enumerate(uniq.tolist())}
    be = mesh.boundary_edges
    new_edges = np.empty((2 * len(be), 2), dtype=np.int64)
    new_tags = np.repeat(mesh.edge_tags, 2)
    for i, (p, q) in enumerate(be.tolist()):
        m = lookup[(min(p, q), max(p, q))] + nv
        new_edges[2 * i] = (p, m)
        new_edges[2 * i + 1] = (m, q)
        tg = int(mesh.edge_tags[i])
        if tg in mesh.circles:
            cx, cy, r = mesh.circles[tg]
            d = newv[m] - (cx, cy)
            newv[m] = (cx, cy) + r * d / np.linalg.norm(d)
    return Mesh(newv, tri, new_edges, new_tags, mesh.tags, dict(mesh.circles))


def triangle_angles(mesh: Mesh) -> np.ndarray:
    p = mesh.vertices[mesh.triangles]
    ang = np.empty((len(p), 3))
    for i in range(3):
        u = p[:, (i + 1) % 3] - p[:, i]
        w = p[:, (i + 2) % 3] - p[:, i]
        cosv = np.einsum("ij,ij->i", u, w) / (np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1) + 1e-300)
        ang[:, i] = np.degrees(np.arccos(np.clip(cosv, -1, 1)))
    return ang


def mesh_quality(mesh: Mesh) -> dict:
    """Min angle (degrees), max aspect ratio, sizes and degeneracy flags."""
    areas = mesh.areas()
    ang = triangle_angles(mesh)
    p = mesh.vertices[mesh.triangles]
    el = np.stack([np.linalg.norm(p[:, (i + 1) % 3] - p[:, i], axis=1) for i in range(3)], axis=1)
    longest = el.max(axis=1)
    # aspect: longest edge over the smallest altitude-based width
    aspect = longest**2 / np.maximum(2 * np.abs(areas), 1e-300)
    degenerate = int(np.sum(areas <= 0))
    return {
        "min_angle": float(ang.min()),
        "max_aspect": float(aspect.max()),
        "h_max": float(el.max()),
        "h_boundary": mesh.h_boundary() if len(mesh.boundary_edges) else 0.0,
        "triangles": int(len(mesh.triangles)),
        "vertices": int(len(mesh.vertices)),
        "degenerate": degenerate,
        "valid": degenerate == 0,
    }


def check_conforming(mesh: Mesh) -> bool:
    e = np.sort(mesh.triangles[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2), axis=1)
    _, cnt = np.unique(e, axis=0, return_counts=True)
    if np.any(cnt > 2):
        return False
    return int(np.sum(cnt == 1)) == len(mesh.boundary_edges)


def loops_of(mesh: Mesh, tag: Tag) -> list[list[int]]:
    """Closed vertex loops formed by the edges carrying ``tag``."""
    edges = mesh.tagged_edges(tag)
    nxt = {}
    for a, b in edges.tolist():
        nxt.setdefault(a, []).append(b)
        nxt.setdefault(b, []).append(a)
    seen = set()
    loops = []
    for start in nxt:
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            cand = [w for w in nxt[cur] if w != prev]
            if not cand:
                break
            w = cand[0]
            if w == start:
                break
            if w in seen:
                break
            loop.append(w)
            seen.add(w)
            prev, cur = cur, w
        loops.append(loop)
    return loops


# ---------------------------------------------------------------- text format

_HEADER = "# perfhom mesh v1"


def write_mesh(mesh: Mesh, path: str | Path) -> None:
    """Whitespace-separated text; floats written with round-trip ``repr``."""
    lines = [_HEADER, f"vertices {mesh.n_vertices}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines.append(f"triangles {mesh.n_triangles}")
    lines += [f"{a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    lines.append(f"tags {len(mesh.tags)}")
    for i, tg in enumerate(mesh.tags):
        circ = mesh.circles.get(i)
        extra = " ".join(repr(float(c)) for c in circ) if circ else "-"
        lines.append(f"{tg.kind} {tg.cavity} {extra}")
    lines.append(f"edges {len(mesh.boundary_edges)}")
    lines += [f"{a} {b} {t}" for (a, b), t in zip(mesh.boundary_edges.tolist(), mesh.edge_tags.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path: str | Path) -> Mesh:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if lines[0] != _HEADER:
        raise MeshError(f"{path}: not a perfhom mesh file")
    pos = 1

    def section(name):
        nonlocal pos
        key, count = lines[pos].split()
        if key != name:
            raise MeshError(f"{path}: expected section {name!r}, found {key!r}")
        rows = lines[pos + 1: pos + 1 + int(count)]
        pos += 1 + int(count)
        return rows

    verts = np.array([[float(s) for s in r.split()] for r in section("vertices")]).reshape(-1, 2)
    tris = np.array([[int(s) for s in r.split()] for r in section("triangles")], dtype=np.int64).reshape(-1, 3)
    tags, circles = [], {}
    for i, r in enumerate(section("tags")):
        parts = r.split()
        tags.append(Tag(parts[0], int(parts[1])))
        if parts[2] != "-":
            circles[i] = tuple(float(s) for s in parts[2:5])
    rows = np.array([[int(s) for s in r.split()] for r in section("edges")], dtype=np.int64).reshape(-1, 3)
    return Mesh(verts, tris, rows[:, :2], rows[:, 2], tuple(tags), circles)


def write_values(values: np.ndarray, path: str | Path) -> None:
    """Companion vertex-value table for a mesh file."""
    Path(path).write_text(f"values {len(values)}\n" + "\n".join(repr(float(x)) for x in values) + "\n")


def read_values(path: str | Path) -> np.ndarray:
    lines = Path(path).read_text().split()
    return np.array([float(s) for s in lines[2:]])

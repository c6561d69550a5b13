"""Numpy implementations of the element kernels (fallback path)."""

from __future__ import annotations

import numpy as np

# phi_i at edge midpoint q: 0 at the midpoint opposite vertex i, 1/2 otherwise
_PHI_MID = 0.5 * (1.0 - np.eye(3))


def assemble_p1(vertices, triangles, aq, bq, cq):
    p = vertices[triangles]  # (T, 3, 2)
    x0, y0 = p[:, 0, 0], p[:, 0, 1]
    x1, y1 = p[:, 1, 0], p[:, 1, 1]
    x2, y2 = p[:, 2, 0], p[:, 2, 1]
    det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
    area = 0.5 * det
    g = np.empty((len(triangles), 3, 2))
    g[:, 0, 0] = (y1 - y2) / det
    g[:, 0, 1] = (x2 - x1) / det
    g[:, 1, 0] = (y2 - y0) / det
    g[:, 1, 1] = (x0 - x2) / det
    g[:, 2, 0] = (y0 - y1) / det
    g[:, 2, 1] = (x1 - x0) / det
    w = area / 3.0
    amean = aq.sum(axis=1)  # (T, 2, 2)
    k = w[:, None, None] * np.einsum("tia,tab,tjb->tij", g, amean, g)
    # sum_q phi_i(q) b_q . grad phi_j
    k += w[:, None, None] * np.einsum("qi,tqa,tja->tij", _PHI_MID, bq, g)
    k += w[:, None, None] * np.einsum("qi,qj,tq->tij", _PHI_MID, _PHI_MID, cq)
    m = (area / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))
    rows = np.repeat(triangles, 3, axis=1).ravel()
    cols = np.tile(triangles, (1, 3)).ravel()
    return rows.astype(np.int64), cols.astype(np.int64), k.ravel(), m.ravel()


def locate_points(vertices, triangles, points, tol=1e-10):
    nt = len(triangles)
    nb = max(1, int(nt**0.5))
    lo = vertices.min(axis=0)
    h = (vertices.max(axis=0) - lo) / nb + 1e-300
    tv = vertices[triangles]
    tlo = np.clip(np.floor((tv.min(axis=1) - lo) / h).astype(np.int64), 0, nb - 1)
    thi = np.clip(np.floor((tv.max(axis=1) - lo) / h).astype(np.int64), 0, nb - 1)

    # bucket -> triangles, via the bbox footprint of every triangle
    span = (thi - tlo + 1).prod(axis=1)
    tri_ids = np.repeat(np.arange(nt), span)
    offs = np.arange(span.sum()) - np.repeat(np.cumsum(span) - span, span)
    width = np.repeat(thi[:, 1] - tlo[:, 1] + 1, span)
    bx = np.repeat(tlo[:, 0], span) + offs // width
    by = np.repeat(tlo[:, 1], span) + offs % width
    bkey = bx * nb + by
    order = np.argsort(bkey, kind="stable")
    bkey, tri_ids = bkey[order], tri_ids[order]

    pb = np.floor((points - lo) / h).astype(np.int64)
    valid = np.all((pb >= 0) & (pb <= nb), axis=1)
    pb = np.minimum(pb, nb - 1)
    pkey = pb[:, 0] * nb + pb[:, 1]

    found = np.full(len(points), -1, dtype=np.int64)
    bary = np.zeros((len(points), 3))
    best = np.full(len(points), -np.inf)
    start = np.searchsorted(bkey, pkey, side="left")
    stop = np.searchsorted(bkey, pkey, side="right")
    count = np.where(valid, stop - start, 0)
    for step in range(int(count.max(initial=0))):
        idx = np.nonzero(count > step)[0]
        t = tri_ids[start[idx] + step]
        a, b, c = tv[t, 0], tv[t, 1], tv[t, 2]
        det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])
        x = points[idx, 0] - a[:, 0]
        y = points[idx, 1] - a[:, 1]
        l1 = (x * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * y) / det
        l2 = ((b[:, 0] - a[:, 0]) * y - x * (b[:, 1] - a[:, 1])) / det
        l0 = 1.0 - l1 - l2
        worst = np.minimum(l0, np.minimum(l1, l2))
        upd = worst > best[idx]
        j = idx[upd]
        best[j] = worst[upd]
        found[j] = t[upd]
        bary[j] = np.column_stack([l0[upd], l1[upd], l2[upd]])
    found[best < -tol] = -1
    return found, bary

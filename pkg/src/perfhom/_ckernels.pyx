# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled P1 element loop and bucketed point location."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs

cnp.import_array()


def assemble_p1(double[:, ::1] vertices, long[:, ::1] triangles,
                double[:, :, :, ::1] aq, double[:, :, ::1] bq, double[:, ::1] cq):
    cdef Py_ssize_t nt = triangles.shape[0]
    rows_a = np.empty(9 * nt, dtype=np.int64)
    cols_a = np.empty(9 * nt, dtype=np.int64)
    kv_a = np.empty(9 * nt, dtype=np.float64)
    mv_a = np.empty(9 * nt, dtype=np.float64)
    cdef long[::1] rows = rows_a
    cdef long[::1] cols = cols_a
    cdef double[::1] kv = kv_a
    cdef double[::1] mv = mv_a
    cdef Py_ssize_t t, i, j, q, p
    cdef double x0, y0, x1, y1, x2, y2, det, area, w
    cdef double gx[3]
    cdef double gy[3]
    cdef double amx[4]
    cdef double phi_i, phi_j, s
    for t in range(nt):
        x0 = vertices[triangles[t, 0], 0]; y0 = vertices[triangles[t, 0], 1]
        x1 = vertices[triangles[t, 1], 0]; y1 = vertices[triangles[t, 1], 1]
        x2 = vertices[triangles[t, 2], 0]; y2 = vertices[triangles[t, 2], 1]
        det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        area = 0.5 * det
        gx[0] = (y1 - y2) / det; gy[0] = (x2 - x1) / det
        gx[1] = (y2 - y0) / det; gy[1] = (x0 - x2) / det
        gx[2] = (y0 - y1) / det; gy[2] = (x1 - x0) / det
        w = area / 3.0
        for p in range(4):
            amx[p] = 0.0
        for q in range(3):
            amx[0] += aq[t, q, 0, 0]; amx[1] += aq[t, q, 0, 1]
            amx[2] += aq[t, q, 1, 0]; amx[3] += aq[t, q, 1, 1]
        for i in range(3):
            for j in range(3):
                p = 9 * t + 3 * i + j
                rows[p] = triangles[t, i]
                cols[p] = triangles[t, j]
                # diffusion: A grad phi_j . grad phi_i
                s = w * (gx[i] * (amx[0] * gx[j] + amx[1] * gy[j])
                         + gy[i] * (amx[2] * gx[j] + amx[3] * gy[j]))
                # convection and reaction at edge midpoints
                for q in range(3):
                    phi_i = 0.0 if q == i else 0.5
                    phi_j = 0.0 if q == j else 0.5
                    s += w * phi_i * (bq[t, q, 0] * gx[j] + bq[t, q, 1] * gy[j])
                    s += w * cq[t, q] * phi_i * phi_j
                kv[p] = s
                mv[p] = area / 12.0 * (2.0 if i == j else 1.0)
    return rows_a, cols_a, kv_a, mv_a


def locate_points(double[:, ::1] vertices, long[:, ::1] triangles,
                  double[:, ::1] points, double tol=1e-10):
    cdef Py_ssize_t nt = triangles.shape[0]
    cdef Py_ssize_t npt = points.shape[0]
    cdef Py_ssize_t t, k, p, c, ix, iy, ix0, ix1, iy0, iy1, nb
    cdef double xmin = 1e300, ymin = 1e300, xmax = -1e300, ymax = -1e300
    cdef double x, y, hx, hy
    for k in range(vertices.shape[0]):
        x = vertices[k, 0]; y = vertices[k, 1]
        if x < xmin: xmin = x
        if x > xmax: xmax = x
        if y < ymin: ymin = y
        if y > ymax: ymax = y
    nb = max(1, <Py_ssize_t>(nt ** 0.5))
    hx = (xmax - xmin) / nb + 1e-300
    hy = (ymax - ymin) / nb + 1e-300
    # count triangles per bucket
    counts_a = np.zeros(nb * nb + 1, dtype=np.int64)
    cdef long[::1] counts = counts_a
    cdef double tx0, tx1, ty0, ty1, xa, ya, xb, yb, xc, yc
    tbox_a = np.empty((nt, 4), dtype=np.int64)
    cdef long[:, ::1] tbox = tbox_a
    for t in range(nt):
        xa = vertices[triangles[t, 0], 0]; ya = vertices[triangles[t, 0], 1]
        xb = vertices[triangles[t, 1], 0]; yb = vertices[triangles[t, 1], 1]
        xc = vertices[triangles[t, 2], 0]; yc = vertices[triangles[t, 2], 1]
        tx0 = min(xa, min(xb, xc)); tx1 = max(xa, max(xb, xc))
        ty0 = min(ya, min(yb, yc)); ty1 = max(ya, max(yb, yc))
        ix0 = min(nb - 1, max(0, <Py_ssize_t>floor((tx0 - xmin) / hx)))
        ix1 = min(nb - 1, max(0, <Py_ssize_t>floor((tx1 - xmin) / hx)))
        iy0 = min(nb - 1, max(0, <Py_ssize_t>floor((ty0 - ymin) / hy)))
        iy1 = min(nb - 1, max(0, <Py_ssize_t>floor((ty1 - ymin) / hy)))
        tbox[t, 0] = ix0; tbox[t, 1] = ix1; tbox[t, 2] = iy0; tbox[t, 3] = iy1
        for ix in range(ix0, ix1 + 1):
            for iy in range(iy0, iy1 + 1):
                counts[ix * nb + iy + 1] += 1
    for k in range(nb * nb):
        counts[k + 1] += counts[k]
    fill_a = counts_a[:-1].copy()
    cdef long[::1] fill = fill_a
    items_a = np.empty(counts_a[nb * nb], dtype=np.int64)
    cdef long[::1] items = items_a
    for t in range(nt):
        for ix in range(tbox[t, 0], tbox[t, 1] + 1):
            for iy in range(tbox[t, 2], tbox[t, 3] + 1):
                items[fill[ix * nb + iy]] = t
                fill[ix * nb + iy] += 1

    found_a = np.full(npt, -1, dtype=np.int64)
    bary_a = np.zeros((npt, 3), dtype=np.float64)
    cdef long[::1] found = found_a
    cdef double[:, ::1] bary = bary_a
    cdef double det, l0, l1, l2, best, worst
    cdef long bt
    for p in range(npt):
        x = points[p, 0]; y = points[p, 1]
        ix = <Py_ssize_t>floor((x - xmin) / hx)
        iy = <Py_ssize_t>floor((y - ymin) / hy)
        if ix < 0 or iy < 0 or ix > nb or iy > nb:
            continue
        if ix == nb: ix = nb - 1
        if iy == nb: iy = nb - 1
        best = -1e300
        bt = -1
        for c in range(counts[ix * nb + iy], counts[ix * nb + iy + 1]):
            t = items[c]
            xa = vertices[triangles[t, 0], 0]; ya = vertices[triangles[t, 0], 1]
            xb = vertices[triangles[t, 1], 0]; yb = vertices[triangles[t, 1], 1]
            xc = vertices[triangles[t, 2], 0]; yc = vertices[triangles[t, 2], 1]
            det = (xb - xa) * (yc - ya) - (xc - xa) * (yb - ya)
            l1 = ((x - xa) * (yc - ya) - (xc - xa) * (y - ya)) / det
            l2 = ((xb - xa) * (y - ya) - (x - xa) * (yb - ya)) / det
            l0 = 1.0 - l1 - l2
            worst = min(l0, min(l1, l2))
            if worst > best:
                best = worst
                bt = t
                bary[p, 0] = l0; bary[p, 1] = l1; bary[p, 2] = l2
                if worst >= 0.0:
                    break
        if bt >= 0 and best >= -tol:
            found[p] = bt
    return found_a, bary_a

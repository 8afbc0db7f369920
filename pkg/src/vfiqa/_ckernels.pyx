# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_pykernels``.

Operation order mirrors the numpy versions so both backends return
identical bits. All loops release the GIL.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, floor
from libc.stdlib cimport malloc, free, llabs

cnp.import_array()


def vector_median(u, v, int n):
    cdef double[:, ::1] cu = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[:, ::1] cv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t h = cu.shape[0], w = cu.shape[1]
    out_u_arr = np.empty((h, w), dtype=np.float64)
    out_v_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] ou = out_u_arr
    cdef double[:, ::1] ov = out_v_arr
    cdef int r = n // 2
    cdef int kmax = n * n
    cdef double *nu = <double *> malloc(kmax * sizeof(double))
    cdef double *nv = <double *> malloc(kmax * sizeof(double))
    cdef double *e = <double *> malloc(kmax * sizeof(double))
    if nu == NULL or nv == NULL or e == NULL:
        free(nu); free(nv); free(e)
        raise MemoryError()
    cdef Py_ssize_t y, x, yy, xx
    cdef int dy, dx, k, c, i, j, bi
    cdef double du, dv, d, best
    try:
        with nogil:
            for y in range(h):
                for x in range(w):
                    k = 0
                    c = 0
                    for dy in range(-r, r + 1):
                        yy = y + dy
                        if yy < 0 or yy >= h:
                            continue
                        for dx in range(-r, r + 1):
                            xx = x + dx
                            if xx < 0 or xx >= w:
                                continue
                            if dy == 0 and dx == 0:
                                c = k
                            nu[k] = cu[yy, xx]
                            nv[k] = cv[yy, xx]
                            e[k] = 0.0
                            k = k + 1
                    for i in range(k):
                        for j in range(i + 1, k):
                            du = nu[i] - nu[j]
                            dv = nv[i] - nv[j]
                            d = sqrt(du * du + dv * dv)
                            e[i] = e[i] + d
                            e[j] = e[j] + d
                    best = e[c]
                    bi = c
                    for i in range(k):
                        if i != c and e[i] < best:
                            best = e[i]
                            bi = i
                    ou[y, x] = nu[bi]
                    ov[y, x] = nv[bi]
    finally:
        free(nu)
        free(nv)
        free(e)
    return out_u_arr, out_v_arr


def sad_search(i0, i1, base_u, base_v, off_x, off_y, int block, double weight):
    cdef double[:, ::1] a = np.ascontiguousarray(i0, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(i1, dtype=np.float64)
    cdef cnp.int64_t[:, ::1] bu = np.ascontiguousarray(base_u, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] bv = np.ascontiguousarray(base_v, dtype=np.int64)
    cdef cnp.int64_t[::1] ox = np.ascontiguousarray(off_x, dtype=np.int64)
    cdef cnp.int64_t[::1] oy = np.ascontiguousarray(off_y, dtype=np.int64)
    cdef Py_ssize_t h = a.shape[0], w = a.shape[1]
    cdef Py_ssize_t ncand = ox.shape[0]
    best_u_arr = np.zeros((h, w), dtype=np.int64)
    best_v_arr = np.zeros((h, w), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] best_u = best_u_arr
    cdef cnp.int64_t[:, ::1] best_v = best_v_arr
    cdef double[:, ::1] best_cost = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] integral = np.zeros((h + 1, w + 1), dtype=np.float64)
    cdef Py_ssize_t ci, y, x, tx, ty, y0, y1, x0, x1
    cdef cnp.int64_t tu, tv, mag, best_mag
    cdef int r = block // 2
    cdef double s, cost, pen, row
    with nogil:
        for ci in range(ncand):
            pen = weight * <double> (llabs(ox[ci]) + llabs(oy[ci]))
            # integral image of |a - b(displaced)|; entries are exact dyadic
            # rationals so accumulation order does not matter
            for y in range(h):
                row = 0.0
                for x in range(w):
                    tx = x + bu[y, x] + ox[ci]
                    ty = y + bv[y, x] + oy[ci]
                    if tx < 0:
                        tx = 0
                    elif tx > w - 1:
                        tx = w - 1
                    if ty < 0:
                        ty = 0
                    elif ty > h - 1:
                        ty = h - 1
                    row = row + fabs(a[y, x] - b[ty, tx])
                    integral[y + 1, x + 1] = integral[y, x + 1] + row
            for y in range(h):
                y0 = y - r if y - r > 0 else 0
                y1 = y + r + 1 if y + r + 1 < h else h
                for x in range(w):
                    x0 = x - r if x - r > 0 else 0
                    x1 = x + r + 1 if x + r + 1 < w else w
                    s = integral[y1, x1] - integral[y0, x1] - integral[y1, x0] + integral[y0, x0]
                    cost = s / <double> ((y1 - y0) * (x1 - x0)) + pen
                    tu = bu[y, x] + ox[ci]
                    tv = bv[y, x] + oy[ci]
                    if ci == 0:
                        best_cost[y, x] = cost
                        best_u[y, x] = tu
                        best_v[y, x] = tv
                        continue
                    if cost < best_cost[y, x]:
                        best_cost[y, x] = cost
                        best_u[y, x] = tu
                        best_v[y, x] = tv
                    elif cost == best_cost[y, x]:
                        mag = tu * tu + tv * tv
                        best_mag = best_u[y, x] * best_u[y, x] + best_v[y, x] * best_v[y, x]
                        if mag < best_mag:
                            best_u[y, x] = tu
                            best_v[y, x] = tv
    return best_u_arr, best_v_arr


def trajectory_residual(u0, v0, u1, v1):
    cdef double[:, ::1] a_u = np.ascontiguousarray(u0, dtype=np.float64)
    cdef double[:, ::1] a_v = np.ascontiguousarray(v0, dtype=np.float64)
    cdef double[:, ::1] b_u = np.ascontiguousarray(u1, dtype=np.float64)
    cdef double[:, ::1] b_v = np.ascontiguousarray(v1, dtype=np.float64)
    cdef Py_ssize_t h = a_u.shape[0], w = a_u.shape[1]
    values_arr = np.zeros((h, w), dtype=np.float64)
    valid_arr = np.zeros((h, w), dtype=np.bool_)
    cdef double[:, ::1] values = values_arr
    cdef cnp.npy_bool[:, ::1] valid = valid_arr
    cdef Py_ssize_t y, x, x0, y0, x1, y1
    cdef double px, py, fx, fy, gx, gy, top, bottom, su, sv, du, dv
    cdef double wmax = <double> (w - 1), hmax = <double> (h - 1)
    with nogil:
        for y in range(h):
            for x in range(w):
                px = <double> x + a_u[y, x]
                py = <double> y + a_v[y, x]
                if not (px >= 0.0 and px <= wmax and py >= 0.0 and py <= hmax):
                    continue
                x0 = <Py_ssize_t> floor(px)
                y0 = <Py_ssize_t> floor(py)
                x1 = x0 + 1 if x0 + 1 < w else w - 1
                y1 = y0 + 1 if y0 + 1 < h else h - 1
                fx = px - <double> x0
                fy = py - <double> y0
                gx = 1.0 - fx
                gy = 1.0 - fy
                top = gx * b_u[y0, x0] + fx * b_u[y0, x1]
                bottom = gx * b_u[y1, x0] + fx * b_u[y1, x1]
                su = gy * top + fy * bottom
                top = gx * b_v[y0, x0] + fx * b_v[y0, x1]
                bottom = gx * b_v[y1, x0] + fx * b_v[y1, x1]
                sv = gy * top + fy * bottom
                du = a_u[y, x] - su
                dv = a_v[y, x] - sv
                values[y, x] = sqrt(du * du + dv * dv)
                valid[y, x] = 1
    return values_arr, valid_arr


cdef inline double _ddx(const double[:, ::1] f, Py_ssize_t y, Py_ssize_t x, Py_ssize_t w) noexcept nogil:
    if x == 0:
        return f[y, 1] - f[y, 0]
    if x == w - 1:
        return f[y, w - 1] - f[y, w - 2]
    return (f[y, x + 1] - f[y, x - 1]) / 2.0


cdef inline double _ddy(const double[:, ::1] f, Py_ssize_t y, Py_ssize_t x, Py_ssize_t h) noexcept nogil:
    if y == 0:
        return f[1, x] - f[0, x]
    if y == h - 1:
        return f[h - 1, x] - f[h - 2, x]
    return (f[y + 1, x] - f[y - 1, x]) / 2.0


def divergence(u, v):
    cdef const double[:, ::1] cu = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[:, ::1] cv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t h = cu.shape[0], w = cu.shape[1]
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t y, x
    with nogil:
        for y in range(h):
            for x in range(w):
                out[y, x] = fabs(_ddx(cu, y, x, w) + _ddy(cv, y, x, h))
    return out_arr


cdef extern from "_divrow.h":
    # twice the summed divergence over columns 1..w-2, in four fixed lanes
    double vfiqa_div_row(const double *um, const double *vp, const double *vm, Py_ssize_t w) nogil


def divergence_mean(u, v):
    """Fused divergence + mean.

    Interior columns are accumulated in four fixed lanes (x mod 4) and the
    halving is applied once per row; both are exact rearrangements of the
    per-pixel formula up to summation order, which is fixed, so the result
    is deterministic.
    """
    cdef const double[:, ::1] cu = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[:, ::1] cv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t h = cu.shape[0], w = cu.shape[1]
    cdef Py_ssize_t y, x
    cdef double total = 0.0, edge, row
    with nogil:
        for y in range(h):
            if y == 0 or y == h - 1:
                edge = 0.0
                for x in range(w):
                    edge = edge + fabs(_ddx(cu, y, x, w) + _ddy(cv, y, x, h))
                total = total + edge
                continue
            edge = fabs(_ddx(cu, y, 0, w) + _ddy(cv, y, 0, h)) + fabs(_ddx(cu, y, w - 1, w) + _ddy(cv, y, w - 1, h))
            row = vfiqa_div_row(&cu[y, 0], &cv[y + 1, 0], &cv[y - 1, 0], w)
            total = total + edge + 0.5 * row
    return total / <double> (h * w)

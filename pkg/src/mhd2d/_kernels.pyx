# cython: language_level=3
"""Compiled pointwise kernels. See ``mhd2d._fallback`` for the NumPy twins."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow, INFINITY, isfinite

cnp.import_array()


def nonlinear_terms(const double[:, :, ::1] fields):
    """Fused collocation-space products for the vorticity/current tendencies.

    ``fields`` stacks, in order: u1, u2, b1, b2, omega_x, omega_y, j_x, j_y,
    d_x u1, d_x b1, (d_x u2 + d_y u1), (d_x b2 + d_y b1).

    Returns ``(out, speed_x, speed_y, finite)`` where ``out[0]`` and ``out[1]``
    are the nonlinear parts of d(omega)/dt and dj/dt.
    """
    cdef Py_ssize_t nx = fields.shape[1]
    cdef Py_ssize_t ny = fields.shape[2]
    if fields.shape[0] != 12:
        raise ValueError("expected 12 stacked fields")
    out_arr = np.empty((2, nx, ny), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, k
    cdef double u1, u2, b1, b2, wx, wy, jx, jy, u1x, b1x, su, sb
    cdef double nw, nj
    cdef double sx = 0.0, sy = 0.0, s
    cdef bint finite = True
    with nogil:
        for i in range(nx):
            for k in range(ny):
                u1 = fields[0, i, k]
                u2 = fields[1, i, k]
                b1 = fields[2, i, k]
                b2 = fields[3, i, k]
                wx = fields[4, i, k]
                wy = fields[5, i, k]
                jx = fields[6, i, k]
                jy = fields[7, i, k]
                u1x = fields[8, i, k]
                b1x = fields[9, i, k]
                su = fields[10, i, k]
                sb = fields[11, i, k]
                nw = -(u1 * wx + u2 * wy) + (b1 * jx + b2 * jy)
                nj = (-(u1 * jx + u2 * jy) + (b1 * wx + b2 * wy)) + 2.0 * (b1x * su - u1x * sb)
                out[0, i, k] = nw
                out[1, i, k] = nj
                if not (isfinite(nw) and isfinite(nj)):
                    finite = False
                s = fabs(u1) + fabs(b1)
                if s > sx:
                    sx = s
                s = fabs(u2) + fabs(b2)
                if s > sy:
                    sy = s
    return out_arr, sx, sy, bool(finite)


cdef inline double _ipow(double x, long long n) nogil:
    cdef double acc = 1.0
    while n > 0:
        if n & 1:
            acc *= x
        x *= x
        n >>= 1
    return acc


def lp_norms(const double[:, ::1] values, const double[::1] ps, double cell_area):
    """Collocation L^p norms of one field for a ladder of exponents.

    Each norm is ``M * (cell_area * sum((|f|/M)**p))**(1/p)`` with ``M = max|f|``,
    which avoids overflow for large ``p``. ``p = inf`` returns ``M``.
    """
    cdef Py_ssize_t nx = values.shape[0]
    cdef Py_ssize_t ny = values.shape[1]
    cdef Py_ssize_t npow = ps.shape[0]
    cdef Py_ssize_t i, k, q
    cdef double m = 0.0, a
    result_arr = np.zeros(npow, dtype=np.float64)
    cdef double[::1] result = result_arr
    total_arr = np.zeros(npow, dtype=np.float64)
    cdef double[::1] total = total_arr

    with nogil:
        for i in range(nx):
            for k in range(ny):
                a = fabs(values[i, k])
                if a > m or a != a:
                    m = a
    if m != m:
        result_arr[:] = np.nan
        return result_arr
    if m == 0.0:
        return result_arr

    # integer exponents use repeated squaring; pow() dominates otherwise
    ipow_arr = np.zeros(npow, dtype=np.int64)
    cdef long long[::1] ipow = ipow_arr
    for q in range(npow):
        if ps[q] != INFINITY and ps[q] == <double>(<long long>ps[q]) and 0 < ps[q] <= 1024:
            ipow[q] = <long long>ps[q]

    # visit exponents in increasing order so powers of two are reached by
    # squaring the previous power in place
    order_arr = np.argsort(ipow_arr, kind="stable").astype(np.intp)
    cdef Py_ssize_t[::1] order = order_arr
    rbuf_arr = np.empty(ny, dtype=np.float64)
    cdef double[::1] rbuf = rbuf_arr
    cur_arr = np.empty(ny, dtype=np.float64)
    cdef double[::1] cur = cur_arr
    cdef double inv_m = 1.0 / m, acc, p
    cdef long long n, cur_exp
    cdef Py_ssize_t j
    with nogil:
        for i in range(nx):
            for k in range(ny):
                rbuf[k] = fabs(values[i, k]) * inv_m
                cur[k] = rbuf[k]
            cur_exp = 1
            for j in range(npow):
                q = order[j]
                p = ps[q]
                if p == INFINITY:
                    continue
                acc = 0.0
                n = ipow[q]
                if n > 0 and (n & (n - 1)) == 0 and n >= cur_exp:
                    while cur_exp < n:
                        for k in range(ny):
                            cur[k] = cur[k] * cur[k]
                        cur_exp *= 2
                    for k in range(ny):
                        acc += cur[k]
                elif n > 0:
                    for k in range(ny):
                        acc += _ipow(rbuf[k], n)
                else:
                    for k in range(ny):
                        acc += pow(rbuf[k], p)
                total[q] += acc
        for q in range(npow):
            if ps[q] == INFINITY:
                result[q] = m
            else:
                result[q] = m * pow(cell_area * total[q], 1.0 / ps[q])
    return result_arr


def abs_triple_sum(const double[:, ::1] f, const double[:, ::1] g, const double[:, ::1] h):
    """Sum of |f*g*h| over the grid (row-blocked accumulation)."""
    cdef Py_ssize_t nx = f.shape[0]
    cdef Py_ssize_t ny = f.shape[1]
    if g.shape[0] != nx or g.shape[1] != ny or h.shape[0] != nx or h.shape[1] != ny:
        raise ValueError("shape mismatch")
    cdef Py_ssize_t i, k
    cdef double total = 0.0, row
    with nogil:
        for i in range(nx):
            row = 0.0
            for k in range(ny):
                row += fabs(f[i, k] * g[i, k] * h[i, k])
            total += row
    return total

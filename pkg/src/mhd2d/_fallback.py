"""NumPy implementations of the pointwise kernels.

These mirror ``_kernels.pyx`` operation for operation and are used when the
extension is unavailable or ``MHD2D_PURE_PYTHON`` is set.
"""
import numpy as np


def nonlinear_terms(fields):
    fields = np.ascontiguousarray(fields, dtype=np.float64)
    if fields.shape[0] != 12:
        raise ValueError("expected 12 stacked fields")
    u1, u2, b1, b2, wx, wy, jx, jy, u1x, b1x, su, sb = fields
    out = np.empty((2,) + fields.shape[1:])
    out[0] = -(u1 * wx + u2 * wy) + (b1 * jx + b2 * jy)
    out[1] = (-(u1 * jx + u2 * jy) + (b1 * wx + b2 * wy)) + 2.0 * (b1x * su - u1x * sb)
    finite = bool(np.isfinite(out).all())
    speed_x = float(np.max(np.abs(u1) + np.abs(b1)))
    speed_y = float(np.max(np.abs(u2) + np.abs(b2)))
    return out, speed_x, speed_y, finite


def lp_norms(values, ps, cell_area):
    a = np.abs(np.asarray(values, dtype=np.float64))
    ps = np.asarray(ps, dtype=np.float64)
    result = np.zeros(ps.shape)
    m = a.max()
    if np.isnan(m):
        result[:] = np.nan
        return result
    if m == 0.0:
        return result
    r = a / m
    for q, p in enumerate(ps):
        if np.isinf(p):
            result[q] = m
            continue
        if p == 2.0:
            s = np.sum(r * r, axis=1).sum()
        elif p == 1.0:
            s = np.sum(r, axis=1).sum()
        else:
            s = np.sum(r**p, axis=1).sum()
        result[q] = m * (cell_area * s) ** (1.0 / p)
    return result


def abs_triple_sum(f, g, h):
    if not (np.shape(f) == np.shape(g) == np.shape(h)):
        raise ValueError("shape mismatch")
    return float(np.sum(np.abs(f * g * h), axis=1).sum())

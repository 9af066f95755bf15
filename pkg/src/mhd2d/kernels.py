"""Backend selection for the hot pointwise kernels.

The compiled extension is used when it imports cleanly; setting the
environment variable ``MHD2D_PURE_PYTHON=1`` forces the NumPy fallback.
Both backends expose ``nonlinear_terms``, ``lp_norms`` and ``abs_triple_sum``.
"""
import os

import numpy as np

from . import _fallback

_compiled = None
if not os.environ.get("MHD2D_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _fallback



def _as_c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def nonlinear_terms(fields):
    return _impl.nonlinear_terms(_as_c(fields))


def lp_norms(values, ps, cell_area):
    return _impl.lp_norms(_as_c(values), _as_c(np.atleast_1d(ps)), float(cell_area))


def abs_triple_sum(f, g, h):
    return _impl.abs_triple_sum(_as_c(f), _as_c(g), _as_c(h))


def backends():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _fallback}
    if _compiled is not None:
        found["cython"] = _compiled
    else:
        try:
            from . import _kernels
        except ImportError:
            pass
        else:
            found["cython"] = _kernels
    return found

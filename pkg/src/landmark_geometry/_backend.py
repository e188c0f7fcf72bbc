"""Select the compiled core when it is importable, else the numpy fallback.

Set ``LANDMARK_GEOMETRY_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _core_py
from .kernels import FLAT_TAIL_PLATEAU, KernelSpec

_FAMILY_CODES = {"gaussian": 0, "matern": 1, "cauchy": 2, "flat_tail": 3}

_compiled = None
if os.environ.get("LANDMARK_GEOMETRY_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def _codes(kernel: KernelSpec):
    order = 0 if kernel.order is None else int(2 * kernel.order)
    return _FAMILY_CODES[kernel.family], order, kernel.scale, FLAT_TAIL_PLATEAU


def ham_rhs(q, p, kernel: KernelSpec, backend: str | None = None):
    """(qdot, pdot) of the landmark Hamiltonian at (q, p)."""
    use = backend or BACKEND
    q = np.ascontiguousarray(q, dtype=float)
    p = np.ascontiguousarray(p, dtype=float)
    if use == "cython":
        if _compiled is None:
            raise RuntimeError("compiled core is not available")
        return _compiled.ham_rhs(q, p, *_codes(kernel))
    return _core_py.ham_rhs(q, p, kernel)


def field_velocity(x, q, p, kernel: KernelSpec, backend: str | None = None):
    """sum_b gamma(|x - q_b|) p_b at each row of ``x``."""
    use = backend or BACKEND
    x = np.ascontiguousarray(x, dtype=float)
    q = np.ascontiguousarray(q, dtype=float)
    p = np.ascontiguousarray(p, dtype=float)
    if use == "cython":
        if _compiled is None:
            raise RuntimeError("compiled core is not available")
        return _compiled.field_velocity(x, q, p, *_codes(kernel))
    return _core_py.field_velocity(x, q, p, kernel)

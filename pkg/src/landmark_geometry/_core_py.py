"""Pure numpy versions of the hot loops; used when the compiled core is absent."""

from __future__ import annotations

import numpy as np

from .kernels import KernelSpec


def ham_rhs(q: np.ndarray, p: np.ndarray, kernel: KernelSpec):
    diff = q[:, None, :] - q[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    g = kernel.gamma(dist)
    ratio = kernel.slope_over_r(dist)
    np.fill_diagonal(ratio, 0.0)
    pp = p @ p.T
    qdot = g @ p
    pdot = -np.einsum("ab,abi->ai", ratio * pp, diff)
    return qdot, pdot


def field_velocity(x: np.ndarray, q: np.ndarray, p: np.ndarray, kernel: KernelSpec):
    dist = np.linalg.norm(x[:, None, :] - q[None, :, :], axis=-1)
    return kernel.gamma(dist) @ p

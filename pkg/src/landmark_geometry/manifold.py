"""Metric data of the landmark manifold.

Configurations ``q``, covectors (momenta) and tangent vectors are all plain
``(N, D)`` float arrays, one row per landmark. The cometric between two
covectors is ``sum_ab gamma(|q_a - q_b|) <alpha_a, beta_b>``; the metric is
block diagonal with ``D`` copies of ``(K(q) + I/lambda)^{-1}``.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .kernels import KernelSpec, grad_K, hess_K

COND_THRESHOLD = 1e12
EPS_SEP = 1e-8


class DegenerateConfigurationError(ValueError):
    """Landmarks too close together for the Gram matrix to be trusted."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


def as_points(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        q = q[:, None]
    if q.ndim != 2 or q.shape[0] < 1 or q.shape[1] < 1:
        raise ValueError(f"expected an (N, D) array of landmarks, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("landmark coordinates must be finite")
    return q


def as_covector(q: np.ndarray, alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim == 1 and q.shape[1] == 1:
        alpha = alpha[:, None]
    if alpha.shape != q.shape:
        raise ValueError(f"covector shape {alpha.shape} does not match configuration {q.shape}")
    return alpha


def pairwise(q: np.ndarray):
    """Displacements q_a - q_b with shape (N, N, D) and distances (N, N)."""
    diff = q[:, None, :] - q[None, :, :]
    return diff, np.linalg.norm(diff, axis=-1)


def min_separation(q: np.ndarray) -> float:
    n = q.shape[0]
    if n < 2:
        return np.inf
    _, dist = pairwise(q)
    return float(dist[~np.eye(n, dtype=bool)].min())


def check_separation(q: np.ndarray, kernel: KernelSpec, eps_sep: float | None = None) -> None:
    eps = EPS_SEP if eps_sep is None else eps_sep
    sep = min_separation(q)
    if sep < eps * kernel.scale:
        raise DegenerateConfigurationError(f"landmarks closer than {eps * kernel.scale:g} (min separation {sep:g})")


def kernel_matrix(q, kernel: KernelSpec) -> np.ndarray:
    """K(q) with entries gamma(|q_a - q_b|), no regularisation."""
    q = as_points(q)
    _, dist = pairwise(q)
    return kernel.gamma(dist)


def gram(q, kernel: KernelSpec, lam: float = np.inf) -> np.ndarray:
    """K(q) + I/lambda, checked for numerical definiteness."""
    if not lam > 0:
        raise ValueError(f"smoothing parameter must be positive, got {lam}")
    q = as_points(q)
    mat = kernel_matrix(q, kernel)
    if np.isfinite(lam):
        mat = mat + np.eye(q.shape[0]) / lam
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > COND_THRESHOLD:
        raise DegenerateConfigurationError(f"Gram matrix condition number {cond:.3g} exceeds {COND_THRESHOLD:g}")
    return mat


def gram_factor(q, kernel: KernelSpec, lam: float = np.inf):
    mat = gram(q, kernel, lam)
    try:
        return cho_factor(mat, lower=True)
    except np.linalg.LinAlgError as exc:
        raise DegenerateConfigurationError("Gram matrix is not positive definite") from exc


def cometric_pair(q, kernel: KernelSpec, alpha, beta) -> float:
    q = as_points(q)
    alpha = as_covector(q, alpha)
    beta = as_covector(q, beta)
    return float(np.sum(kernel_matrix(q, kernel) * (alpha @ beta.T)))


def sharp(q, kernel: KernelSpec, alpha) -> np.ndarray:
    """Raise indices: landmark velocities sum_b K^{ab} alpha_b."""
    q = as_points(q)
    return kernel_matrix(q, kernel) @ as_covector(q, alpha)


def flat(q, kernel: KernelSpec, v, lam: float = np.inf) -> np.ndarray:
    """Lower indices: momenta (K + I/lambda)^{-1} v, column by column."""
    q = as_points(q)
    v = as_covector(q, v)
    return cho_solve(gram_factor(q, kernel, lam), v)


def metric_pair(q, kernel: KernelSpec, v, w, lam: float = np.inf) -> float:
    return float(np.sum(flat(q, kernel, v, lam) * as_covector(q, w)))


def _delta_factor(a: int, b: int, c: int) -> int:
    return int(a == c) - int(b == c)


def cometric_d1(q, kernel: KernelSpec, a: int, b: int, c: int, k: int) -> float:
    """d/dq^{ck} of K^{ab}, i.e. partial_k K^{ab} (delta_ac - delta_bc)."""
    q = as_points(q)
    fac = _delta_factor(a, b, c)
    if fac == 0 or a == b:
        return 0.0
    return float(grad_K(kernel, q[a] - q[b])[k] * fac)


def cometric_d2(q, kernel: KernelSpec, a: int, b: int, c: int, d: int, k: int, l: int) -> float:
    q = as_points(q)
    fac = _delta_factor(a, b, c) * _delta_factor(a, b, d)
    if fac == 0 or a == b:
        return 0.0
    return float(hess_K(kernel, q[a] - q[b])[k, l] * fac)


def cometric_d1_array(q, kernel: KernelSpec) -> np.ndarray:
    """All first partials as an (N, N, N, D) array T[a, b, c, k]."""
    q = as_points(q)
    n = q.shape[0]
    diff, _ = pairwise(q)
    grads = grad_K(kernel, diff)
    eye = np.eye(n)
    sel = eye[:, None, :] - eye[None, :, :]  # [a, b, c] = delta_ac - delta_bc
    return sel[..., None] * grads[:, :, None, :]


def cometric_d2_array(q, kernel: KernelSpec) -> np.ndarray:
    """All second partials as an (N, N, N, N, D, D) array T[a, b, c, d, k, l]."""
    q = as_points(q)
    n = q.shape[0]
    diff, _ = pairwise(q)
    hess = hess_K(kernel, diff)
    hess[np.arange(n), np.arange(n)] = 0.0
    eye = np.eye(n)
    sel = eye[:, None, :] - eye[None, :, :]
    both = sel[:, :, :, None] * sel[:, :, None, :]
    return both[..., None, None] * hess[:, :, None, None, :, :]


def path_energy(times, path, kernel: KernelSpec, lam: float = np.inf) -> float:
    """Trapezoid approximation of the integral of qdot^T g(q) qdot.

    Velocities come from central differences (one-sided at the ends).
    """
    times = np.asarray(times, dtype=float)
    path = np.asarray(path, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("need at least two time samples")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    if path.ndim == 2:
        path = path[:, :, None]
    if path.shape[0] != times.size:
        raise ValueError("path and times have different lengths")
    vel = np.gradient(path, times, axis=0, edge_order=1)
    integrand = np.array([np.sum(flat(qt, kernel, vt, lam) * vt) for qt, vt in zip(path, vel)])
    return float(np.trapezoid(integrand, times))


def horizontal_field(q, kernel: KernelSpec, alpha, x):
    """Value and spatial Jacobian of alpha^hor(x) = sum_b K(x - q_b) alpha_b.

    ``jacobian[i, j]`` is the derivative of component ``j`` along axis ``i``.
    """
    q = as_points(q)
    alpha = as_covector(q, alpha)
    x = np.asarray(x, dtype=float)
    diff = x[None, :] - q
    weights = kernel.gamma(np.linalg.norm(diff, axis=-1))
    value = weights @ alpha
    jac = grad_K(kernel, diff).T @ alpha
    return value, jac

"""Curvature of the landmark manifold through forces, strains and compressions.

Everything here is specialised to lambda = infinity and to rotationally
invariant kernels, so the cost is O(N^2 D) per section apart from one
Cholesky solve for the R4 term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .curvature_engine import CurvatureReport
from .kernels import KernelSpec, grad_K, hess_K
from .manifold import (as_covector, as_points, check_separation, gram_factor,
                       kernel_matrix, pairwise)


@dataclass(frozen=True)
class GeometricAux:
    force: np.ndarray
    strain: np.ndarray
    compression: np.ndarray
    lderiv: np.ndarray


def _setup(q, kernel, *covectors):
    q = as_points(q)
    return (q,) + tuple(as_covector(q, c) for c in covectors)


def _grads(q, kernel):
    diff, _ = pairwise(q)
    return grad_K(kernel, diff)  # [a, b, :] = grad K(q_a - q_b)


def _force(grads, alpha, beta):
    pair = alpha @ beta.T
    return 0.5 * np.einsum("abi,ab->ai", grads, pair + pair.T)


def mixed_force(q, kernel: KernelSpec, alpha, beta) -> np.ndarray:
    """F_a(alpha, beta) = 1/2 sum_b grad K^{ab} (<alpha_a, beta_b> + <beta_a, alpha_b>)."""
    q, alpha, beta = _setup(q, kernel, alpha, beta)
    return _force(_grads(q, kernel), alpha, beta)


def _strain(kmat, alpha):
    vel = kmat @ alpha
    return vel[:, None, :] - vel[None, :, :]


def strain(q, kernel: KernelSpec, alpha) -> np.ndarray:
    """S^{ab}(alpha) = (alpha^sharp)_a - (alpha^sharp)_b, shape (N, N, D)."""
    q, alpha = _setup(q, kernel, alpha)
    return _strain(kernel_matrix(q, kernel), alpha)


def compression(q, kernel: KernelSpec, alpha) -> np.ndarray:
    """C^{ab}(alpha) = <S^{ab}(alpha), grad K^{ab}>, shape (N, N)."""
    q, alpha = _setup(q, kernel, alpha)
    return np.einsum("abi,abi->ab", _strain(kernel_matrix(q, kernel), alpha), _grads(q, kernel))


def landmark_derivative(q, kernel: KernelSpec, alpha, beta) -> np.ndarray:
    """D^a(alpha, beta) = sum_b C^{ab}(alpha) beta_b."""
    q, alpha, beta = _setup(q, kernel, alpha, beta)
    return compression(q, kernel, alpha) @ beta


def geometric_aux(q, kernel: KernelSpec, alpha, beta) -> GeometricAux:
    q, alpha, beta = _setup(q, kernel, alpha, beta)
    kmat = kernel_matrix(q, kernel)
    grads = _grads(q, kernel)
    s = _strain(kmat, alpha)
    c = np.einsum("abi,abi->ab", s, grads)
    return GeometricAux(_force(grads, alpha, beta), s, c, c @ beta)


def landmark_denominator(q, kernel: KernelSpec, alpha, beta) -> float:
    q, alpha, beta = _setup(q, kernel, alpha, beta)
    kmat = kernel_matrix(q, kernel)
    aa = np.sum(kmat * (alpha @ alpha.T))
    bb = np.sum(kmat * (beta @ beta.T))
    ab = np.sum(kmat * (alpha @ beta.T))
    return float(aa * bb - ab * ab)


def _r1_rotinv(q, kernel, kmat, alpha, beta):
    diff, dist = pairwise(q)
    n = q.shape[0]
    off = ~np.eye(n, dtype=bool)
    _, dg, ddg = kernel.derivs(dist)
    ratio = kernel.slope_over_r(dist)
    safe = np.where(off, dist, 1.0)
    u = diff / safe[..., None]
    sa = _strain(kmat, alpha)
    sb = _strain(kmat, beta)
    pa = np.einsum("abi,abi->ab", sa, u)  # parallel components
    pb = np.einsum("abi,abi->ab", sb, u)
    ta = sa - pa[..., None] * u
    tb = sb - pb[..., None] * u
    # parallel part: <S_par(beta) alpha_a - S_par(alpha) beta_a, same with b>
    aa = alpha @ alpha.T
    bb = beta @ beta.T
    ab = alpha @ beta.T  # [a, b] = <alpha_a, beta_b>
    par = pb * pb * aa - pb * pa * ab - pa * pb * ab.T + pa * pa * bb
    perp = (np.einsum("abi,abi->ab", tb, tb) * aa
            - np.einsum("abi,abi->ab", tb, ta) * ab
            - np.einsum("abi,abi->ab", ta, tb) * ab.T
            + np.einsum("abi,abi->ab", ta, ta) * bb)
    terms = 0.5 * (ddg * par + ratio * perp)
    return float(np.sum(terms[off]))


def r1_hessian(q, kernel: KernelSpec, alpha, beta) -> float:
    """R1 by contracting full kernel Hessians pair by pair (debug route)."""
    q, alpha, beta = _setup(q, kernel, alpha, beta)
    kmat = kernel_matrix(q, kernel)
    diff, _ = pairwise(q)
    hess = hess_K(kernel, diff)
    sa = _strain(kmat, alpha)
    sb = _strain(kmat, beta)
    total = 0.0
    n = q.shape[0]
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            xa = np.outer(alpha[a], sb[a, b]) - np.outer(beta[a], sa[a, b])
            xb = np.outer(alpha[b], sb[a, b]) - np.outer(beta[b], sa[a, b])
            total += 0.5 * np.sum(xa * (xb @ hess[a, b].T))
    return float(total)


def curvature_terms(q, kernel: KernelSpec, alpha, beta) -> CurvatureReport:
    """Four-term split of the sectional curvature numerator at ``q``."""
    q, alpha, beta = _setup(q, kernel, alpha, beta)
    check_separation(q, kernel)
    factor = gram_factor(q, kernel)
    kmat = kernel_matrix(q, kernel)
    grads = _grads(q, kernel)

    comp_a = np.einsum("abi,abi->ab", _strain(kmat, alpha), grads)
    comp_b = np.einsum("abi,abi->ab", _strain(kmat, beta), grads)
    d_aa, d_ab = comp_a @ alpha, comp_a @ beta
    d_ba, d_bb = comp_b @ alpha, comp_b @ beta
    f_aa = _force(grads, alpha, alpha)
    f_bb = _force(grads, beta, beta)
    f_ab = _force(grads, alpha, beta)

    r1 = _r1_rotinv(q, kernel, kmat, alpha, beta)
    r2 = float(np.sum(d_aa * f_bb) + np.sum(d_bb * f_aa) - np.sum((d_ab + d_ba) * f_ab))
    r3 = float(np.sum(kmat * (f_ab @ f_ab.T)) - np.sum(kmat * (f_aa @ f_bb.T)))
    h = d_ba - d_ab
    r4 = -0.75 * float(np.sum(h * cho_solve(factor, h)))

    aa = np.sum(kmat * (alpha @ alpha.T))
    bb = np.sum(kmat * (beta @ beta.T))
    ab = np.sum(kmat * (alpha @ beta.T))
    return CurvatureReport(r1, r2, r3, r4, float(aa * bb - ab * ab), float(aa * bb))


def one_momentum_curvature(q, kernel: KernelSpec, alpha1, beta1) -> CurvatureReport:
    """Curvature for a section carried by the first landmark only.

    Only R4 survives. For N = 2 the closed forms in terms of the parallel and
    perpendicular parts relative to u = (q_1 - q_2)/rho are used. Parallel
    covectors give numerator 0 and no sectional value.
    """
    q = as_points(q)
    n, dim = q.shape
    if n < 2:
        raise ValueError("one-momentum curvature needs at least two landmarks")
    alpha1 = np.asarray(alpha1, dtype=float).reshape(dim)
    beta1 = np.asarray(beta1, dtype=float).reshape(dim)
    check_separation(q, kernel)
    g0 = kernel.gamma0
    scale = float(g0**2 * (alpha1 @ alpha1) * (beta1 @ beta1))

    if n == 2:
        diff = q[0] - q[1]
        rho = float(np.linalg.norm(diff))
        u = diff / rho
        g, dg, _ = kernel.derivs(rho)
        a_par, b_par = alpha1 @ u, beta1 @ u
        a_perp, b_perp = alpha1 - a_par * u, beta1 - b_par * u
        mixed = b_par * a_perp - a_par * b_perp
        wedge = np.outer(b_perp, a_perp) - np.outer(a_perp, b_perp)
        num = -0.75 * g0 * (g0 - g) / (g0 + g) * dg**2 * float(mixed @ mixed)
        den = g0**2 * (float(mixed @ mixed) + 0.5 * float(np.sum(wedge * wedge)))
        return CurvatureReport(0.0, 0.0, 0.0, float(num), float(den), scale)

    factor = gram_factor(q, kernel)
    kmat = kernel_matrix(q, kernel)
    grads = grad_K(kernel, q - q[0])  # grad K^{a1}
    h = (kmat[:, 0] - g0)[:, None] * (np.outer(grads @ alpha1, beta1) - np.outer(grads @ beta1, alpha1))
    r4 = -0.75 * float(np.sum(h * cho_solve(factor, h)))
    den = g0**2 * float((alpha1 @ alpha1) * (beta1 @ beta1) - (alpha1 @ beta1) ** 2)
    return CurvatureReport(0.0, 0.0, 0.0, r4, den, scale)

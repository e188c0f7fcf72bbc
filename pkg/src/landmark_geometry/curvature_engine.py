"""Sectional curvature of a Riemannian manifold presented through its cometric.

Two independent routes are provided:

* :func:`mario_numerator` works directly with the cometric ``g^{ij}``, its
  first and second partials, and a single metric contraction.
* :func:`classical_numerator` inverts the cometric, builds metric partials,
  Christoffel symbols and the (4,0) curvature tensor, then contracts.

Both evaluate ``R(X, Y, Y, X)`` with ``X = alpha^sharp`` and ``Y = beta^sharp``.
Array conventions: ``d1[i, j, k] = d g^{ij} / d x^k`` and
``d2[i, j, k, l] = d^2 g^{ij} / d x^k d x^l``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .kernels import KernelSpec
from .manifold import as_points, cometric_d1_array, cometric_d2_array, kernel_matrix

SECTIONAL_RTOL = 1e-14


class SingularCometricError(ValueError):
    pass


@dataclass(frozen=True)
class CurvatureReport:
    r1: float
    r2: float
    r3: float
    r4: float
    denominator: float
    scale: float = 1.0

    @property
    def numerator(self) -> float:
        return self.r1 + self.r2 + self.r3 + self.r4

    @property
    def sectional(self) -> float | None:
        """numerator / denominator, or None for (numerically) degenerate sections."""
        if self.denominator > SECTIONAL_RTOL * self.scale:
            return self.numerator / self.denominator
        return None

    def to_dict(self) -> dict:
        out = asdict(self)
        del out["scale"]
        out["numerator"] = self.numerator
        out["sectional"] = self.sectional
        return out


class CometricModel:
    """A chart on an ``n``-dimensional manifold given by its cometric.

    Subclasses implement :meth:`cometric`, :meth:`d1` and :meth:`d2`.
    """

    dim: int

    def cometric(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def d1(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def d2(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class EuclideanModel(CometricModel):
    def __init__(self, dim: int):
        self.dim = dim

    def cometric(self, x):
        return np.eye(self.dim)

    def d1(self, x):
        return np.zeros((self.dim,) * 3)

    def d2(self, x):
        return np.zeros((self.dim,) * 4)


class SphereModel(CometricModel):
    """Round 2-sphere of the given radius in stereographic coordinates.

    Metric ``4 r^2 / (1 + |x|^2)^2 I``, so the cometric is
    ``(1 + |x|^2)^2 / (4 r^2) I``.
    """

    dim = 2

    def __init__(self, radius: float = 1.0):
        self.radius = float(radius)

    def _factor_derivs(self, x):
        x = np.asarray(x, dtype=float)
        s = x @ x
        r2 = self.radius**2
        f = (1 + s) ** 2 / (4 * r2)
        df = (1 + s) * x / r2
        ddf = (2 * np.outer(x, x) + (1 + s) * np.eye(2)) / r2
        return f, df, ddf

    def cometric(self, x):
        return self._factor_derivs(x)[0] * np.eye(2)

    def d1(self, x):
        _, df, _ = self._factor_derivs(x)
        return np.eye(2)[:, :, None] * df[None, None, :]

    def d2(self, x):
        _, _, ddf = self._factor_derivs(x)
        return np.eye(2)[:, :, None, None] * ddf[None, None, :, :]


class HyperbolicModel(CometricModel):
    """Upper half-space model: cometric ``x_n^2 I`` on ``{x_n > 0}``."""

    def __init__(self, dim: int = 2):
        self.dim = dim

    def cometric(self, x):
        return x[-1] ** 2 * np.eye(self.dim)

    def d1(self, x):
        out = np.zeros((self.dim,) * 3)
        out[:, :, -1] = 2 * x[-1] * np.eye(self.dim)
        return out

    def d2(self, x):
        out = np.zeros((self.dim,) * 4)
        out[:, :, -1, -1] = 2 * np.eye(self.dim)
        return out


class LandmarkModel(CometricModel):
    """The landmark manifold (lambda = infinity) as a generic cometric model.

    Coordinates are the flattened configuration, index ``a * D + i``.
    """

    def __init__(self, kernel: KernelSpec, n_landmarks: int, dim: int):
        self.kernel = kernel
        self.n_landmarks = n_landmarks
        self.space_dim = dim
        self.dim = n_landmarks * dim

    def points(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float).reshape(self.n_landmarks, self.space_dim)

    def cometric(self, x):
        return np.kron(kernel_matrix(self.points(x), self.kernel), np.eye(self.space_dim))

    def d1(self, x):
        t = cometric_d1_array(self.points(x), self.kernel)  # [a, b, c, k]
        full = np.einsum("abck,ij->aibjck", t, np.eye(self.space_dim))
        return full.reshape((self.dim,) * 3)

    def d2(self, x):
        t = cometric_d2_array(self.points(x), self.kernel)  # [a, b, c, d, k, l]
        full = np.einsum("abcdkl,ij->aibjckdl", t, np.eye(self.space_dim))
        return full.reshape((self.dim,) * 4)


class FiniteDifferenceModel(CometricModel):
    """Cometric partials by central differences of a cometric-only callable."""

    def __init__(self, cometric: Callable[[np.ndarray], np.ndarray], dim: int,
                 h1: float | None = None, h2: float = 1e-3):
        if (h1 is not None and h1 <= 0) or h2 <= 0:
            raise ValueError("finite-difference steps must be positive")
        self._cometric = cometric
        self.dim = dim
        self.h1 = h1
        self.h2 = h2

    def cometric(self, x):
        return np.asarray(self._cometric(np.asarray(x, dtype=float)), dtype=float)

    def d1(self, x):
        x = np.asarray(x, dtype=float)
        h = self.h1 if self.h1 is not None else 1e-4 * (1 + np.linalg.norm(x))
        out = np.empty((self.dim,) * 3)
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = h
            out[:, :, k] = (self.cometric(x + e) - self.cometric(x - e)) / (2 * h)
        return out

    def d2(self, x):
        x = np.asarray(x, dtype=float)
        h = self.h2
        n = self.dim
        out = np.empty((n,) * 4)
        centre = self.cometric(x)
        eye = np.eye(n) * h
        for k in range(n):
            out[:, :, k, k] = (self.cometric(x + eye[k]) - 2 * centre + self.cometric(x - eye[k])) / h**2
            for l in range(k + 1, n):
                val = (self.cometric(x + eye[k] + eye[l]) - self.cometric(x + eye[k] - eye[l])
                       - self.cometric(x - eye[k] + eye[l]) + self.cometric(x - eye[k] - eye[l])) / (4 * h**2)
                out[:, :, k, l] = val
                out[:, :, l, k] = val
        return out


def fd_cometric_partials(cometric: Callable[[np.ndarray], np.ndarray], dim: int,
                         h1: float | None = None, h2: float = 1e-3) -> FiniteDifferenceModel:
    return FiniteDifferenceModel(cometric, dim, h1, h2)


def _eval(model: CometricModel, x):
    x = np.asarray(x, dtype=float)
    co = model.cometric(x)
    try:
        cond = np.linalg.cond(co)
    except np.linalg.LinAlgError as exc:
        raise SingularCometricError("cometric evaluation failed") from exc
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularCometricError(f"cometric is singular at x (condition {cond:.3g})")
    return x, co


def denominator(model: CometricModel, x, alpha, beta) -> float:
    """alpha_u alpha_s beta_r beta_v (g^{us} g^{rv} - g^{uv} g^{sr})."""
    co = model.cometric(np.asarray(x, dtype=float))
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    aa = alpha @ co @ alpha
    bb = beta @ co @ beta
    ab = alpha @ co @ beta
    return float(aa * bb - ab * ab)


def mario_terms(model: CometricModel, x, alpha, beta) -> tuple[float, float, float, float]:
    x, co = _eval(model, x)
    alpha = np.asarray(alpha, dtype=float).ravel()
    beta = np.asarray(beta, dtype=float).ravel()
    d1 = model.d1(x)
    d2 = model.d2(x)
    w = np.outer(alpha, beta) - np.outer(beta, alpha)  # W_{ur}
    up1 = np.einsum("ijx,xk->ijk", d1, co)  # g^{ij,k}
    up2 = np.einsum("ijxy,xk,yl->ijkl", d2, co, co, optimize=True)  # g^{ij,kl}

    r1 = 0.5 * np.einsum("ur,surv,sv->", w, up2, w, optimize=True)
    r2 = 0.5 * np.einsum("ur,usp,prv,sv->", w, d1, up1, w, optimize=True)
    r3 = -0.125 * np.einsum("ur,usz,rvz,sv->", w, d1, up1, w, optimize=True)
    lift = np.einsum("lur,ur->l", up1, w)
    r4 = -0.75 * float(lift @ np.linalg.solve(co, lift))
    return float(r1), float(r2), float(r3), r4


def mario_numerator(model: CometricModel, x, alpha, beta) -> CurvatureReport:
    r1, r2, r3, r4 = mario_terms(model, x, alpha, beta)
    co = model.cometric(np.asarray(x, dtype=float))
    a = np.asarray(alpha, dtype=float).ravel()
    b = np.asarray(beta, dtype=float).ravel()
    scale = float((a @ co @ a) * (b @ co @ b))
    return CurvatureReport(r1, r2, r3, r4, denominator(model, x, a, b), scale)


def _metric_partials(model: CometricModel, x):
    x, co = _eval(model, x)
    g = np.linalg.inv(co)
    g = 0.5 * (g + g.T)
    d1 = model.d1(x)
    d2 = model.d2(x)
    # d_k g = -g (d_k Q) g ;  d_k d_l g = g (d_l Q g d_k Q + d_k Q g d_l Q - d_kl Q) g
    dg = -np.einsum("ia,abk,bj->ijk", g, d1, g, optimize=True)
    inner = (np.einsum("abl,bc,cdk->adkl", d1, g, d1, optimize=True)
             + np.einsum("abk,bc,cdl->adkl", d1, g, d1, optimize=True)
             - d2)
    ddg = np.einsum("ia,adkl,dj->ijkl", g, inner, g, optimize=True)
    return co, g, dg, ddg


def christoffel(model: CometricModel, x) -> np.ndarray:
    """Gamma^k_{ij} as an array indexed [k, i, j]."""
    _, g, dg, _ = _metric_partials(model, x)
    return _christoffel(g, dg)


def _christoffel(g, dg):
    # dg[i, l, j] = g_{il,j}
    # lowered[i, j, l] = g_{il,j} + g_{jl,i} - g_{ij,l}
    lowered = np.einsum("ilj->ijl", dg) + np.einsum("jli->ijl", dg) - dg
    return 0.5 * np.einsum("kl,ijl->kij", np.linalg.inv(g), lowered)


def curvature_tensor(model: CometricModel, x) -> np.ndarray:
    """R_{ijkm} = <R(d_i, d_j) d_k, d_m> from the classical second-derivative formula."""
    _, g, dg, ddg = _metric_partials(model, x)
    gam = _christoffel(g, dg)
    # g_{ik,jm} = ddg[i, k, j, m]
    two_r = (np.einsum("ikjm->ijkm", ddg) + np.einsum("jmik->ijkm", ddg)
             - np.einsum("jkim->ijkm", ddg) - np.einsum("imjk->ijkm", ddg))
    two_r += 2 * np.einsum("aik,bjm,ab->ijkm", gam, gam, g, optimize=True)
    two_r -= 2 * np.einsum("ajk,bim,ab->ijkm", gam, gam, g, optimize=True)
    return 0.5 * two_r


def dual_curvature_tensor(model: CometricModel, x) -> np.ndarray:
    """R^{ursv} = R_{ijkm} g^{iu} g^{jr} g^{ks} g^{mv}."""
    co = model.cometric(np.asarray(x, dtype=float))
    r = curvature_tensor(model, x)
    return np.einsum("ijkm,iu,jr,ks,mv->ursv", r, co, co, co, co, optimize=True)


def classical_numerator(model: CometricModel, x, alpha, beta) -> float:
    co = model.cometric(np.asarray(x, dtype=float))
    big_x = co @ np.asarray(alpha, dtype=float).ravel()
    big_y = co @ np.asarray(beta, dtype=float).ravel()
    r = curvature_tensor(model, x)
    return float(np.einsum("ijkm,i,j,k,m->", r, big_x, big_y, big_y, big_x, optimize=True))


def classical_sectional(model: CometricModel, x, alpha, beta) -> float:
    """Sectional curvature on the metric side: R(X,Y,Y,X) / (|X|^2 |Y|^2 - <X,Y>^2)."""
    co = model.cometric(np.asarray(x, dtype=float))
    g = np.linalg.inv(co)
    big_x = co @ np.asarray(alpha, dtype=float).ravel()
    big_y = co @ np.asarray(beta, dtype=float).ravel()
    den = (big_x @ g @ big_x) * (big_y @ g @ big_y) - (big_x @ g @ big_y) ** 2
    return classical_numerator(model, x, alpha, beta) / den


def landmark_model_point(q) -> np.ndarray:
    return as_points(q).ravel()

"""Rotationally invariant scalar kernels K(x) = gamma(|x|) and their derivatives.

Supported families
------------------
gaussian
    gamma(rho) = exp(-rho^2 / (2 sigma^2)), ``scale`` is sigma.
matern
    Half-integer Matern / Bessel kernels, gamma(rho) proportional to
    x^nu K_nu(x) with x = rho / A. For nu in {1/2, 3/2, 5/2, 7/2} this is a
    polynomial in x times exp(-x); we normalise so gamma(0) = 1.
cauchy
    gamma(rho) = 1 / (1 + rho^2 / A^2).
flat_tail
    Test-only kernel whose slope vanishes identically for rho >= A (a
    Wendland bump on top of a constant plateau). Used for analytic ODE edge
    cases; it carries no positive-definiteness guarantee in this package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

FAMILIES = ("gaussian", "matern", "cauchy", "flat_tail")
MATERN_ORDERS = (Fraction(1, 2), Fraction(3, 2), Fraction(5, 2), Fraction(7, 2))

# Normalised polynomial factors P(x) of x^nu K_nu(x) for half-integer nu.
_MATERN_POLY = {
    Fraction(1, 2): (1.0,),
    Fraction(3, 2): (1.0, 1.0),
    Fraction(5, 2): (1.0, 1.0, 1.0 / 3.0),
    Fraction(7, 2): (1.0, 1.0, 2.0 / 5.0, 1.0 / 15.0),
}

FLAT_TAIL_PLATEAU = 0.5


class KernelError(ValueError):
    """Invalid kernel specification."""


def _parse_order(order: Any) -> Fraction:
    try:
        frac = Fraction(order) if not isinstance(order, float) else Fraction(order).limit_denominator(16)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise KernelError(f"cannot parse matern order {order!r}") from exc
    if frac not in MATERN_ORDERS:
        raise KernelError(f"matern order must be one of 1/2, 3/2, 5/2, 7/2; got {order!r}")
    return frac


@dataclass(frozen=True)
class KernelSpec:
    family: str
    scale: float = 1.0
    order: Fraction | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise KernelError(f"unknown kernel family {self.family!r}")
        scale = float(self.scale)
        if not np.isfinite(scale) or scale <= 0:
            raise KernelError(f"kernel scale must be positive, got {self.scale!r}")
        object.__setattr__(self, "scale", scale)
        if self.family == "matern":
            if self.order is None:
                raise KernelError("matern kernel requires an order")
            object.__setattr__(self, "order", _parse_order(self.order))
        elif self.order is not None:
            raise KernelError(f"order is only meaningful for matern, not {self.family}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "KernelSpec":
        return cls("gaussian", sigma)

    @classmethod
    def matern(cls, order: Any = "3/2", scale: float = 1.0) -> "KernelSpec":
        return cls("matern", scale, order)

    @classmethod
    def cauchy(cls, scale: float = 1.0) -> "KernelSpec":
        return cls("cauchy", scale)

    @classmethod
    def flat_tail(cls, scale: float = 1.0) -> "KernelSpec":
        return cls("flat_tail", scale)

    @classmethod
    def from_dict(cls, data: dict) -> "KernelSpec":
        if not isinstance(data, dict):
            raise KernelError("kernel specification must be a JSON object")
        unknown = set(data) - {"family", "scale", "order"}
        if unknown:
            raise KernelError(f"unknown kernel fields: {sorted(unknown)}")
        if "family" not in data:
            raise KernelError("kernel specification needs a 'family'")
        return cls(data["family"], data.get("scale", 1.0), data.get("order"))

    @classmethod
    def from_json(cls, text: str) -> "KernelSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise KernelError(f"malformed kernel JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out: dict = {"family": self.family, "scale": self.scale}
        if self.order is not None:
            out["order"] = f"{self.order.numerator}/{self.order.denominator}"
        return out

    # -- properties ---------------------------------------------------------

    @property
    def gamma0(self) -> float:
        return 1.0

    @property
    def is_c2(self) -> bool:
        """False only for the exponential (nu = 1/2) kernel, which has a cusp at 0."""
        return not (self.family == "matern" and self.order == Fraction(1, 2))

    # -- evaluation ---------------------------------------------------------

    def derivs(self, rho):
        """Vectorised (gamma, gamma', gamma'') at distances ``rho`` >= 0."""
        rho = np.asarray(rho, dtype=float)
        a = self.scale
        if self.family == "gaussian":
            s2 = a * a
            g = np.exp(-0.5 * rho * rho / s2)
            return g, -rho / s2 * g, (rho * rho / s2 - 1.0) / s2 * g
        if self.family == "cauchy":
            s2 = a * a
            w = 1.0 / (1.0 + rho * rho / s2)
            return w, -2.0 * rho / s2 * w * w, (-2.0 / s2 + 8.0 * rho * rho / (s2 * s2) * w) * w * w
        if self.family == "matern":
            poly = np.polynomial.Polynomial(_MATERN_POLY[self.order])
            d1 = poly.deriv(1)
            d2 = poly.deriv(2)
            x = rho / a
            e = np.exp(-x)
            p0, p1, p2 = poly(x), d1(x), d2(x)
            return p0 * e, (p1 - p0) * e / a, (p2 - 2.0 * p1 + p0) * e / (a * a)
        # flat_tail
        c = FLAT_TAIL_PLATEAU
        x = np.minimum(rho / a, 1.0)
        om = 1.0 - x
        g = c + (1.0 - c) * om**4 * (4.0 * x + 1.0)
        dg = -(1.0 - c) * 20.0 * x * om**3 / a
        ddg = -(1.0 - c) * 20.0 * om**2 * (1.0 - 4.0 * x) / (a * a)
        return g, dg, ddg

    def gamma(self, rho):
        return self.derivs(rho)[0]

    def slope_over_r(self, rho):
        """gamma'(rho) / rho, continuously extended by gamma''(0) at rho = 0."""
        rho = np.asarray(rho, dtype=float)
        _, dg, _ = self.derivs(rho)
        limit = self.derivs(0.0)[2]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(rho > 0, dg / np.where(rho > 0, rho, 1.0), limit)
        return out


def gamma_derivs(kernel: KernelSpec, rho: float) -> tuple[float, float, float]:
    if rho < 0:
        raise ValueError(f"rho must be non-negative, got {rho}")
    g, dg, ddg = kernel.derivs(float(rho))
    return float(g), float(dg), float(ddg)


def grad_K(kernel: KernelSpec, x) -> np.ndarray:
    """Spatial gradient gamma'(|x|) x/|x| of K; zero at the origin.

    ``x`` may carry leading batch axes; the last axis is the spatial one.
    """
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    _, dg, _ = kernel.derivs(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(r > 0, dg / np.where(r > 0, r, 1.0), 0.0)
    return coef[..., None] * x


def hess_K(kernel: KernelSpec, x) -> np.ndarray:
    """Hessian gamma'' u u^T + (gamma'/|x|) (I - u u^T), with u = x/|x|.

    At the origin the continuous extension gamma''(0) I is returned.
    """
    x = np.asarray(x, dtype=float)
    dim = x.shape[-1]
    r = np.linalg.norm(x, axis=-1)
    _, _, ddg = kernel.derivs(r)
    ratio = kernel.slope_over_r(r)
    safe = np.where(r > 0, r, 1.0)
    u = x / safe[..., None]
    uu = u[..., :, None] * u[..., None, :]
    eye = np.eye(dim)
    hess = ddg[..., None, None] * uu + ratio[..., None, None] * (eye - uu)
    at_zero = r == 0
    if np.any(at_zero):
        hess = np.where(at_zero[..., None, None], ddg[..., None, None] * eye, hess)
    return hess

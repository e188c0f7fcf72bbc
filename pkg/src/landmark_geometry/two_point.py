"""Geodesics and curvature when only two landmarks carry momentum.

With means and semi-differences

    qbar = (q1 + q2)/2,  dq = (q1 - q2)/2,  pbar = (p1 + p2)/2,  dp = (p1 - p2)/2,

the mean momentum ``pbar`` is constant, ``qbar`` moves on a straight line, the
motion of ``dq`` stays in the plane of the (constant) bivector dq ^ dp, and the
distance rho = 2|dq| obeys rho_dot^2 = 4 F(rho) / rho^2 with

    F(x) = H x^2 (g0 - g(x)) - |pbar|^2 x^2 (g0^2 - g(x)^2) - 4 omega^2 (g0 - g(x))^2.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .curvature_engine import CurvatureReport
from .kernels import KernelSpec
from .manifold import as_covector, as_points


DOUBLE_ROOT_TOL = 1e-5


class TwoPointError(ValueError):
    pass


class TurningPointDegeneracy(TwoPointError):
    """The radial motion reached a double root of F."""


class ClassificationError(TwoPointError):
    """Root analysis of F did not match a known regime."""


class Regime(str, Enum):
    SCATTERING = "scattering"
    CAPTURE_FORWARD = "capture_forward"
    CAPTURE_BACKWARD = "capture_backward"


# -- state ------------------------------------------------------------------


@dataclass(frozen=True)
class TwoPointState:
    qbar: np.ndarray
    dq: np.ndarray
    pbar: np.ndarray
    dp: np.ndarray

    @property
    def rho(self) -> float:
        return float(2.0 * np.linalg.norm(self.dq))

    @property
    def u(self) -> np.ndarray:
        return self.dq / np.linalg.norm(self.dq)


def to_mean_diff(q1, q2, p1, p2) -> TwoPointState:
    q1, q2, p1, p2 = (np.asarray(v, dtype=float).ravel() for v in (q1, q2, p1, p2))
    if not (q1.shape == q2.shape == p1.shape == p2.shape):
        raise TwoPointError("all four vectors must have the same dimension")
    if np.array_equal(q1, q2):
        raise TwoPointError("the two landmarks coincide")
    return TwoPointState(0.5 * (q1 + q2), 0.5 * (q1 - q2), 0.5 * (p1 + p2), 0.5 * (p1 - p2))


def from_mean_diff(state: TwoPointState):
    """Returns (q1, q2, p1, p2)."""
    return (state.qbar + state.dq, state.qbar - state.dq,
            state.pbar + state.dp, state.pbar - state.dp)


def state_from_arrays(q, p) -> TwoPointState:
    q = as_points(q)
    p = as_covector(q, p)
    if q.shape[0] != 2:
        raise TwoPointError(f"expected two landmarks, got {q.shape[0]}")
    return to_mean_diff(q[0], q[1], p[0], p[1])


# -- conserved quantities and the radial function ---------------------------


@dataclass(frozen=True)
class ConservedSet:
    energy: float
    pbar: np.ndarray
    omega: float


def _omega(dq, dp) -> float:
    return float(np.sqrt(max((dp @ dp) * (dq @ dq) - (dp @ dq) ** 2, 0.0)))


def conserved(state: TwoPointState, kernel: KernelSpec) -> ConservedSet:
    g0 = kernel.gamma0
    g = float(kernel.gamma(state.rho))
    energy = (g0 + g) * float(state.pbar @ state.pbar) + (g0 - g) * float(state.dp @ state.dp)
    return ConservedSet(float(energy), state.pbar.copy(), _omega(state.dq, state.dp))


def radial_poly_F(kernel: KernelSpec, cons: ConservedSet, x):
    x = np.asarray(x, dtype=float)
    g0 = kernel.gamma0
    g = kernel.gamma(x)
    pb2 = float(cons.pbar @ cons.pbar)
    return cons.energy * x**2 * (g0 - g) - pb2 * x**2 * (g0**2 - g**2) - 4 * cons.omega**2 * (g0 - g) ** 2


def radial_poly_dF(kernel: KernelSpec, cons: ConservedSet, x):
    x = np.asarray(x, dtype=float)
    g0 = kernel.gamma0
    g, dg, _ = kernel.derivs(x)
    pb2 = float(cons.pbar @ cons.pbar)
    return (cons.energy * (2 * x * (g0 - g) - x**2 * dg)
            - pb2 * (2 * x * (g0**2 - g**2) - 2 * x**2 * g * dg)
            + 8 * cons.omega**2 * (g0 - g) * dg)


def rho_dot(state: TwoPointState, kernel: KernelSpec) -> float:
    g = float(kernel.gamma(state.rho))
    return float(4 * (kernel.gamma0 - g) * (state.dp @ state.dq) / state.rho)


# -- trajectories -----------------------------------------------------------


def _plane(state: TwoPointState):
    e1 = state.u
    rest = state.dp - (state.dp @ e1) * e1
    norm = np.linalg.norm(rest)
    if norm > 1e-14 * max(np.linalg.norm(state.dp), 1e-300):
        return e1, rest / norm
    # radial motion: any unit vector orthogonal to e1 will do
    d = e1.size
    if d == 1:
        return e1, np.zeros(1)
    trial = np.eye(d)[np.argmin(np.abs(e1))]
    rest = trial - (trial @ e1) * e1
    return e1, rest / np.linalg.norm(rest)


@dataclass
class TwoPointSolution:
    """Dense solution of the reduced two-point system on [0, t_end]."""

    kernel: KernelSpec
    conserved: ConservedSet
    e1: np.ndarray
    e2: np.ndarray
    t_end: float
    turning_times: np.ndarray
    _sol: object

    def _eval(self, t):
        return self._sol.sol(np.asarray(t, dtype=float))

    def rho(self, t):
        return self._eval(t)[0]

    def rho_dot(self, t):
        return self._eval(t)[1]

    def theta(self, t):
        return self._eval(t)[2]

    def qbar(self, t):
        y = self._eval(t)
        return np.moveaxis(y[3:], 0, -1)

    def state(self, t: float) -> TwoPointState:
        y = self._eval(float(t))
        rho, rdot, theta = y[0], y[1], y[2]
        radial = np.cos(theta) * self.e1 + np.sin(theta) * self.e2
        tangential = -np.sin(theta) * self.e1 + np.cos(theta) * self.e2
        dq = 0.5 * rho * radial
        g0 = self.kernel.gamma0
        g = float(self.kernel.gamma(rho))
        thdot = 4 * (g0 - g) * self.conserved.omega / rho**2
        dq_dot = 0.5 * rdot * radial + 0.5 * rho * thdot * tangential
        return TwoPointState(y[3:].copy(), dq, self.conserved.pbar.copy(), dq_dot / (g0 - g))

    def positions(self, t):
        """(q1, q2) at each time, each of shape (len(t), D)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        y = self._eval(t)
        rho, theta = y[0], y[2]
        dq = 0.5 * rho[:, None] * (np.cos(theta)[:, None] * self.e1 + np.sin(theta)[:, None] * self.e2)
        qbar = y[3:].T
        return qbar + dq, qbar - dq


def solve_two_point(state0: TwoPointState, kernel: KernelSpec, t_end: float,
                    tol: float = 1e-10) -> TwoPointSolution:
    """Integrate (rho, theta, qbar) from ``state0`` over [0, t_end].

    The radial coordinate follows rho'' = 2 F'(rho)/rho^2 - 4 F(rho)/rho^3,
    whose first integral is rho'^2 = 4 F / rho^2; this passes through simple
    turning points smoothly. theta and qbar are carried as quadrature states.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    cons = conserved(state0, kernel)
    g0 = kernel.gamma0
    rho0 = state0.rho
    f0 = float(radial_poly_F(kernel, cons, rho0))
    size = abs(cons.energy) * rho0**2 + 4 * cons.omega**2 + 1e-300
    if f0 < -1e-9 * size:
        raise TwoPointError(f"radial function is negative at the initial distance (F = {f0:.3g})")
    e1, e2 = _plane(state0)
    pbar = cons.pbar
    omega = cons.omega
    rdot0 = rho_dot(state0, kernel)

    def rhs(t, y):
        rho = y[0]
        f = radial_poly_F(kernel, cons, rho)
        df = radial_poly_dF(kernel, cons, rho)
        gap = g0 - kernel.gamma(rho)
        out = np.empty_like(y)
        out[0] = y[1]
        out[1] = 2 * df / rho**2 - 4 * f / rho**3
        out[2] = 4 * gap * omega / rho**2
        out[3:] = (g0 + kernel.gamma(rho)) * pbar
        return out

    def turning(t, y):
        return y[1]

    def collapse(t, y):
        return y[0] - 1e-8 * kernel.scale

    collapse.terminal = True

    y0 = np.concatenate([[rho0, rdot0, 0.0], state0.qbar])
    sol = solve_ivp(rhs, (0.0, t_end), y0, method="DOP853", rtol=tol, atol=tol * 1e-2,
                    dense_output=True, events=(turning, collapse))
    if sol.status == -1:
        raise TwoPointError(f"radial integration failed: {sol.message}")
    if sol.status == 1:
        raise TwoPointError(f"landmarks collapsed at t = {sol.t[-1]:.6g}")
    # Starting at rest on a double root is an exact equilibrium (e.g. a circular
    # orbit), which the second-order equation keeps. Passing close to a double
    # root later on makes the turning behaviour unresolvable, so it is reported.
    at_rest = rdot0 == 0 and abs(float(radial_poly_dF(kernel, cons, rho0))) * rho0 <= DOUBLE_ROOT_TOL * size
    turns = np.asarray(sol.t_events[0])
    if at_rest:
        turns = turns[:0]
    else:
        probe = np.union1d(np.linspace(0.0, sol.t[-1], 4001), turns)
        rho = sol.sol(probe)[0]
        closeness = np.maximum(np.abs(radial_poly_F(kernel, cons, rho)),
                               np.abs(radial_poly_dF(kernel, cons, rho)) * rho) / size
        worst = int(np.argmin(closeness))
        if closeness[worst] <= DOUBLE_ROOT_TOL:
            raise TurningPointDegeneracy(
                f"trajectory passes a double root of F near rho = {rho[worst]:.6g} (t = {probe[worst]:.6g})")
    return TwoPointSolution(kernel, cons, e1, e2, float(t_end), turns, sol)


def classify(state0: TwoPointState, kernel: KernelSpec, n_grid: int = 2000) -> Regime:
    """Scattering or capture, from the roots of F either side of rho(0)."""
    cons = conserved(state0, kernel)
    rho0 = state0.rho
    grid = np.geomspace(1e-3 * kernel.scale, 50 * kernel.scale, n_grid)
    values = radial_poly_F(kernel, cons, grid)
    inner = values[grid < rho0]
    outer = values[grid > rho0]
    inward_root = bool(np.any(inner < 0))
    outward_root = bool(np.any(outer < 0))
    rdot0 = rho_dot(state0, kernel)
    if not inward_root and not outward_root:
        if rdot0 < 0:
            return Regime.CAPTURE_FORWARD
        if rdot0 > 0:
            return Regime.CAPTURE_BACKWARD
        raise ClassificationError("no radial motion and no turning point")
    if inward_root and not outward_root:
        return Regime.SCATTERING
    raise ClassificationError(
        f"inconclusive root structure (inward root: {inward_root}, outward root: {outward_root})")


# -- curvature --------------------------------------------------------------


@dataclass(frozen=True)
class TDecomposition:
    t1: float
    t2: float
    t3: float
    t4: float
    t5: float

    def as_array(self) -> np.ndarray:
        return np.array([self.t1, self.t2, self.t3, self.t4, self.t5])


def _split(u, v1, v2):
    mean = 0.5 * (v1 + v2)
    half = 0.5 * (v1 - v2)
    par = float(half @ u)
    return mean, par, half - par * u


def _wedge2(a, b):
    m = np.outer(a, b) - np.outer(b, a)
    return float(np.sum(m * m))


def t_decomposition(u, alpha, beta) -> TDecomposition:
    """The five norm pieces for covectors alpha = (alpha_1, alpha_2), beta likewise.

    ``u`` is the unit vector (q1 - q2)/rho.
    """
    u = np.asarray(u, dtype=float).ravel()
    alpha = np.asarray(alpha, dtype=float).reshape(2, u.size)
    beta = np.asarray(beta, dtype=float).reshape(2, u.size)
    am, ap, aq = _split(u, alpha[0], alpha[1])
    bm, bp, bq = _split(u, beta[0], beta[1])
    v1 = bp * am - ap * bm
    m2 = np.outer(bq, am) - np.outer(aq, bm)
    v3 = bp * aq - ap * bq
    return TDecomposition(float(v1 @ v1), float(np.sum(m2 * m2)), float(v3 @ v3),
                          _wedge2(bq, aq), _wedge2(bm, am))


@dataclass(frozen=True)
class KCoefficients:
    k1: float
    k2: float
    k3: float
    k4: float

    def t_coefficients(self) -> np.ndarray:
        """Numerator weights of T1..T5."""
        k1, k2, k3, k4 = self.k1, self.k2, self.k3, self.k4
        return np.array([2 * (2 * k1 - k3 - 3 * k4), 2 * (2 * k2 + k3),
                         4 * (-k1 - k2 - k3), -4 * k2 - k3, -k3])


def k_coefficients(kernel: KernelSpec, rho: float) -> KCoefficients:
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    g0 = kernel.gamma0
    g, dg, ddg = (float(v) for v in kernel.derivs(rho))
    gap = g0 - g
    return KCoefficients(gap**2 * ddg, gap**2 * dg / rho, gap * dg**2, gap**2 * dg**2 / (g0 + g))


def two_point_denominator(kernel: KernelSpec, rho: float, t: TDecomposition) -> float:
    g0 = kernel.gamma0
    g = float(kernel.gamma(rho))
    return float(4 * (g0**2 - g**2) * (t.t1 + t.t2) + 2 * (g0 - g) ** 2 * (2 * t.t3 + t.t4)
                 + 2 * (g0 + g) ** 2 * t.t5)


@dataclass(frozen=True)
class TwoPointCurvature:
    report: CurvatureReport
    t: TDecomposition
    k: KCoefficients
    rho: float
    r4_upper_bound: bool  # True when N > 2: the exact R4 is at most the reported one


def two_point_curvature(q, kernel: KernelSpec, alpha, beta) -> TwoPointCurvature:
    """Closed-form curvature split for covectors supported on landmarks 1 and 2."""
    q = as_points(q)
    alpha = as_covector(q, alpha)
    beta = as_covector(q, beta)
    n = q.shape[0]
    if n < 2:
        raise TwoPointError("need at least two landmarks")
    if np.any(alpha[2:] != 0) or np.any(beta[2:] != 0):
        raise TwoPointError("covectors must vanish outside landmarks 1 and 2")
    diff = q[0] - q[1]
    rho = float(np.linalg.norm(diff))
    if rho == 0:
        raise TwoPointError("the two landmarks coincide")
    t = t_decomposition(diff / rho, alpha[:2], beta[:2])
    k = k_coefficients(kernel, rho)
    r1 = 4 * k.k1 * (t.t1 - t.t3) + 4 * k.k2 * (t.t2 - t.t3 - t.t4)
    r2 = -4 * k.k3 * (t.t1 - t.t3)
    r3 = k.k3 * (2 * (t.t1 + t.t2) - 2 * t.t3 - t.t4 - t.t5)
    r4 = -6 * (k.k3 * t.t3 + k.k4 * t.t1)
    g0 = kernel.gamma0
    g = float(kernel.gamma(rho))
    kmat = np.array([[g0, g], [g, g0]])
    scale = float(np.sum(kmat * (alpha[:2] @ alpha[:2].T)) * np.sum(kmat * (beta[:2] @ beta[:2].T)))
    report = CurvatureReport(r1, r2, r3, r4, two_point_denominator(kernel, rho, t), scale)
    return TwoPointCurvature(report, t, k, rho, n > 2)


def curvature_L2R1(kernel: KernelSpec, rho):
    """Sectional curvature of two landmarks on the line at distance ``rho``."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("rho must be positive")
    g0 = kernel.gamma0
    g, dg, ddg = kernel.derivs(rho)
    out = (g0 - g) / (g0 + g) * ddg - (2 * g0 - g) / (g0 + g) ** 2 * dg**2
    return float(out) if out.ndim == 0 else out


def circular_orbit_radius(kernel: KernelSpec, search_interval: tuple[float, float] | None = None,
                          n_grid: int = 2000) -> float | None:
    """Radius r with g0 - g(2r) + r g'(2r) = 0, or None when no sign change is found."""
    lo, hi = search_interval if search_interval is not None else (1e-3 * kernel.scale, 10 * kernel.scale)
    if not 0 < lo < hi:
        raise ValueError("search interval must satisfy 0 < a < b")

    def f(r):
        g, dg, _ = kernel.derivs(2 * np.asarray(r, dtype=float))
        return kernel.gamma0 - g + r * dg

    grid = np.linspace(lo, hi, n_grid)
    vals = f(grid)
    change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    exact = np.nonzero(vals == 0)[0]
    if exact.size and (not change.size or exact[0] <= change[0]):
        return float(grid[exact[0]])
    if not change.size:
        return None
    i = change[0]
    return float(brentq(lambda r: float(f(r)), grid[i], grid[i + 1], xtol=1e-14))


TABLE_HEADER = ["rho", "k1", "k2", "k3", "k4", "coefT1", "coefT2", "coefT3", "coefT4", "coefT5", "K_L2R1"]
GAMMA_COLUMNS = ["gamma", "dgamma", "ddgamma"]


def coefficient_table(kernel: KernelSpec, rhos, include_gamma: bool = False) -> np.ndarray:
    rows = []
    for rho in np.asarray(rhos, dtype=float):
        k = k_coefficients(kernel, rho)
        row = [rho, k.k1, k.k2, k.k3, k.k4, *k.t_coefficients(), curvature_L2R1(kernel, rho)]
        if include_gamma:
            row += [float(v) for v in kernel.derivs(rho)]
        rows.append(row)
    return np.array(rows)


def write_coefficient_table(fh, kernel: KernelSpec, rhos, include_gamma: bool = False) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TABLE_HEADER + (GAMMA_COLUMNS if include_gamma else []))
    for row in coefficient_table(kernel, rhos, include_gamma):
        writer.writerow([format(float(v), ".17g") for v in row])

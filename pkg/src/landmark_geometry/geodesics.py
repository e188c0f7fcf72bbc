"""Geodesic shooting on the landmark manifold (lambda = infinity).

The cogeodesic flow is Hamilton's flow for H(q, p) = 1/2 sum K^{ab} <p_a, p_b>:

    qdot_a = sum_b K^{ab} p_b,
    pdot_a = -sum_b grad K^{ab} <p_a, p_b>.

Integration is classical fixed-step RK4 so that paths are reproducible
bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _backend
from .kernels import KernelSpec
from .manifold import (EPS_SEP, DegenerateConfigurationError, as_covector,
                       as_points, cometric_pair, min_separation)


def hamiltonian(q, kernel: KernelSpec, p) -> float:
    return 0.5 * cometric_pair(q, kernel, p, p)


def ham_rhs(q, kernel: KernelSpec, p, backend: str | None = None):
    """Returns (qdot, pdot)."""
    q = as_points(q)
    p = as_covector(q, p)
    return _backend.ham_rhs(q, p, kernel, backend)


@dataclass
class GeodesicPath:
    times: np.ndarray
    q_samples: np.ndarray  # (T, N, D)
    p_samples: np.ndarray
    hamiltonian_samples: np.ndarray

    @property
    def energy_drift(self) -> float:
        """max_t |H(t) - H(0)| / |H(0)| (absolute drift when H(0) = 0)."""
        h0 = self.hamiltonian_samples[0]
        dev = np.max(np.abs(self.hamiltonian_samples - h0))
        return float(dev / abs(h0)) if h0 != 0 else float(dev)

    @property
    def momentum_drift(self) -> float:
        total = self.p_samples.sum(axis=1)
        return float(np.max(np.abs(total - total[0])))

    def path_energy(self) -> float:
        """Energy of the geodesic, 2 H T, which is exact along the flow."""
        return float(2.0 * self.hamiltonian_samples[0] * (self.times[-1] - self.times[0]))

    def summary(self) -> dict:
        return {
            "steps": int(self.times.size - 1),
            "t_end": float(self.times[-1]),
            "H0": float(self.hamiltonian_samples[0]),
            "relative_H_drift": self.energy_drift,
            "momentum_drift": self.momentum_drift,
            "path_energy": self.path_energy(),
        }

    def header(self) -> list[str]:
        _, n, d = self.q_samples.shape
        cols = ["t"]
        cols += [f"q_{a}_{i}" for a in range(1, n + 1) for i in range(1, d + 1)]
        cols += [f"p_{a}_{i}" for a in range(1, n + 1) for i in range(1, d + 1)]
        return cols + ["H"]

    def rows(self):
        for t, q, p, h in zip(self.times, self.q_samples, self.p_samples, self.hamiltonian_samples):
            yield [t, *q.ravel(), *p.ravel(), h]

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(self.header())
        for row in self.rows():
            writer.writerow([format(float(v), ".17g") for v in row])


def _rk4_step(q, p, h, kernel, mask, backend):
    def f(qq, pp):
        qd, pd = _backend.ham_rhs(qq, pp, kernel, backend)
        if mask is not None:
            pd[mask] = 0.0
        return qd, pd

    k1q, k1p = f(q, p)
    k2q, k2p = f(q + 0.5 * h * k1q, p + 0.5 * h * k1p)
    k3q, k3p = f(q + 0.5 * h * k2q, p + 0.5 * h * k2p)
    k4q, k4p = f(q + h * k3q, p + h * k3p)
    q_new = q + h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
    p_new = p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
    return q_new, p_new


def integrate(q0, p0, kernel: KernelSpec, t_end: float, steps: int,
              eps_sep: float | None = None, backend: str | None = None) -> GeodesicPath:
    """Fixed-step RK4 from (q0, p0) over [0, t_end] with ``steps`` steps.

    Rows of p0 that are exactly zero stay zero for all time. Raises
    DegenerateConfigurationError (with ``.time`` set) if two landmarks come
    closer than eps_sep * scale.
    """
    if int(steps) != steps or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps!r}")
    steps = int(steps)
    if not np.isfinite(t_end):
        raise ValueError("t_end must be finite")
    q = as_points(q0).copy()
    p = as_covector(q, p0).copy()
    eps = (EPS_SEP if eps_sep is None else eps_sep) * kernel.scale
    if min_separation(q) < eps:
        raise DegenerateConfigurationError("initial landmarks coincide", time=0.0)
    zero_rows = np.all(p == 0.0, axis=1)
    mask = zero_rows if zero_rows.any() else None

    h = t_end / steps
    times = np.linspace(0.0, t_end, steps + 1)
    qs = np.empty((steps + 1,) + q.shape)
    ps = np.empty_like(qs)
    hs = np.empty(steps + 1)
    qs[0], ps[0], hs[0] = q, p, hamiltonian(q, kernel, p)
    for k in range(1, steps + 1):
        q, p = _rk4_step(q, p, h, kernel, mask, backend)
        if mask is not None:
            p[mask] = 0.0
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise DegenerateConfigurationError("integration produced non-finite values", time=float(times[k]))
        sep = min_separation(q)
        if sep < eps:
            raise DegenerateConfigurationError(
                f"landmarks collided (separation {sep:.3g}) at t = {times[k]:.6g}", time=float(times[k]))
        qs[k], ps[k], hs[k] = q, p, hamiltonian(q, kernel, p)
    return GeodesicPath(times, qs, ps, hs)


def advect(path: GeodesicPath, kernel: KernelSpec, passive, backend: str | None = None) -> np.ndarray:
    """Trajectories (T, M, D) of passive points dragged by the geodesic flow.

    Each point follows xdot = sum_b gamma(|x - q_b(t)|) p_b(t), integrated by
    RK4 on the path's time grid with (q, p) interpolated linearly in time.
    """
    x = np.array(passive, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != path.q_samples.shape[2]:
        raise ValueError("passive points must be an (M, D) array matching the path dimension")
    out = np.empty((path.times.size,) + x.shape)
    out[0] = x

    def vel(xx, q, p):
        return _backend.field_velocity(xx, q, p, kernel, backend)

    for k in range(path.times.size - 1):
        h = path.times[k + 1] - path.times[k]
        q0, q1 = path.q_samples[k], path.q_samples[k + 1]
        p0, p1 = path.p_samples[k], path.p_samples[k + 1]
        qm, pm = 0.5 * (q0 + q1), 0.5 * (p0 + p1)
        k1 = vel(x, q0, p0)
        k2 = vel(x + 0.5 * h * k1, qm, pm)
        k3 = vel(x + 0.5 * h * k2, qm, pm)
        k4 = vel(x + h * k3, q1, p1)
        x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = x
    return out


def write_advection_csv(fh, times, trajectories) -> None:
    """Long-format CSV with header t,index,x_1,...,x_D (index is 1-based)."""
    trajectories = np.asarray(trajectories)
    d = trajectories.shape[2]
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["t", "index"] + [f"x_{i}" for i in range(1, d + 1)])
    for t, pts in zip(times, trajectories):
        for idx, pt in enumerate(pts, start=1):
            writer.writerow([format(float(t), ".17g"), idx] + [format(float(v), ".17g") for v in pt])

"""Command-line front end.

Exit codes: 0 success, 1 malformed input, 2 degenerate configuration,
3 oracle residual above threshold.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .curvature_engine import SingularCometricError
from .geodesics import advect, integrate, write_advection_csv
from .kernels import KernelError, KernelSpec
from .landmark_curvature import curvature_terms
from .manifold import DegenerateConfigurationError
from .oracle import run_oracle
from .two_point import (ClassificationError, TwoPointError, TurningPointDegeneracy, classify,
                        conserved, solve_two_point, state_from_arrays, write_coefficient_table)

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_ORACLE = 0, 1, 2, 3


class InputError(ValueError):
    pass


# -- problem files ----------------------------------------------------------


@dataclass
class ProblemSpec:
    kernel: KernelSpec
    q: np.ndarray
    lam: float = math.inf
    p: np.ndarray | None = None
    alpha: np.ndarray | None = None
    beta: np.ndarray | None = None
    passive: np.ndarray | None = None
    t_end: float | None = None
    steps: int | None = None

    FIELDS = ("kernel", "lambda", "q", "p", "alpha", "beta", "passive", "grid", "t_end", "steps")

    @classmethod
    def from_dict(cls, data: dict, kernel: KernelSpec | None = None) -> "ProblemSpec":
        if not isinstance(data, dict):
            raise InputError("problem must be a JSON object")
        unknown = set(data) - set(cls.FIELDS)
        if unknown:
            raise InputError(f"unknown problem fields: {sorted(unknown)}")
        if kernel is None:
            if "kernel" not in data:
                raise InputError("problem needs a kernel (or pass --kernel-json)")
            kernel = KernelSpec.from_dict(data["kernel"])
        if "q" not in data:
            raise InputError("problem needs landmark positions 'q'")
        q = _matrix(data["q"], "q")
        shaped = {name: _matrix(data[name], name, q.shape) for name in ("p", "alpha", "beta") if name in data}
        lam = _parse_lambda(data.get("lambda", "inf"))
        passive = None
        if "passive" in data:
            passive = _matrix(data["passive"], "passive")
            if passive.shape[1] != q.shape[1]:
                raise InputError("passive points must have the same dimension as q")
        if "grid" in data:
            grid = _grid(data["grid"], q.shape[1])
            passive = grid if passive is None else np.vstack([passive, grid])
        t_end = data.get("t_end")
        steps = data.get("steps")
        if t_end is not None and not isinstance(t_end, (int, float)):
            raise InputError("t_end must be a number")
        if steps is not None and (not isinstance(steps, int) or isinstance(steps, bool)):
            raise InputError("steps must be an integer")
        return cls(kernel, q, lam, passive=passive, t_end=t_end, steps=steps, **shaped)


def _matrix(value, name, shape=None) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"'{name}' must be a rectangular numeric array") from exc
    if arr.ndim != 2 or arr.size == 0:
        raise InputError(f"'{name}' must be a non-empty N x D array")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"'{name}' contains non-finite values")
    if shape is not None and arr.shape != shape:
        raise InputError(f"'{name}' has shape {arr.shape}, expected {shape}")
    return arr


def _parse_lambda(value) -> float:
    if isinstance(value, str) and value.lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0:
        return float(value)
    raise InputError(f"lambda must be a positive number or \"inf\", got {value!r}")


def _grid(spec, dim) -> np.ndarray:
    if not isinstance(spec, dict) or set(spec) != {"lo", "hi", "n"}:
        raise InputError("grid must be an object with fields lo, hi, n")
    lo = np.array(spec["lo"], dtype=float).ravel()
    hi = np.array(spec["hi"], dtype=float).ravel()
    n = np.array(spec["n"]).ravel()
    if not (lo.size == hi.size == n.size == dim):
        raise InputError("grid lo, hi and n must each have one entry per dimension")
    if np.any(n < 1) or np.any(n != np.round(n)):
        raise InputError("grid counts must be positive integers")
    axes = [np.linspace(a, b, int(k)) for a, b, k in zip(lo, hi, n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _load_json(text_or_path: str, what: str):
    text = text_or_path
    if not text_or_path.lstrip().startswith("{"):
        try:
            text = Path(text_or_path).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {what} file {text_or_path!r}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed {what} JSON: {exc}") from exc


def _kernel_from_args(args) -> KernelSpec | None:
    if getattr(args, "kernel_json", None):
        return KernelSpec.from_dict(_load_json(args.kernel_json, "kernel"))
    return None


def _problem(args) -> ProblemSpec:
    if not args.problem:
        raise InputError("this subcommand needs --problem")
    return ProblemSpec.from_dict(_load_json(args.problem, "problem"), _kernel_from_args(args))


# -- output -----------------------------------------------------------------


class _Num:
    """A number already rendered to 17 significant digits."""

    def __init__(self, value: float):
        self.text = format(value + 0.0, ".17g")  # no negative zero


def _fmt(obj):
    if isinstance(obj, dict):
        return {k: _fmt(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_fmt(v) for v in obj]
    if obj is None or isinstance(obj, (bool, np.bool_, str)):
        return bool(obj) if isinstance(obj, np.bool_) else obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    value = float(obj)
    return _Num(value) if math.isfinite(value) else None


def _encode(obj, indent=0) -> str:
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        pad = "  " * (indent + 1)
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, list):
        return "[" + ", ".join(_encode(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, _Num):
        return obj.text
    return json.dumps(obj)


def _dumps(obj) -> str:
    """JSON text with floats at 17 significant digits and null for non-finite values."""
    return _encode(_fmt(obj))


@contextlib.contextmanager
def _open_out(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


# -- subcommands ------------------------------------------------------------


def cmd_kernel_table(args) -> int:
    kernel = _kernel_from_args(args)
    if kernel is None:
        kernel = KernelSpec(args.family, args.scale, args.order)
    rho_max = args.rho_max if args.rho_max is not None else 5.0 * kernel.scale
    if not rho_max > 0 or args.n < 1:
        raise InputError("--rho-max must be positive and --n at least 1")
    rhos = np.linspace(0.0, rho_max, args.n + 1)[1:]
    with _open_out(args.out) as fh:
        write_coefficient_table(fh, kernel, rhos, include_gamma=args.with_gamma)
    return EXIT_OK


def cmd_curvature(args) -> int:
    prob = _problem(args)
    if prob.alpha is None or prob.beta is None:
        raise InputError("curvature needs 'alpha' and 'beta'")
    if math.isfinite(prob.lam):
        raise InputError("curvature is only available for lambda = inf")
    report = curvature_terms(prob.q, prob.kernel, prob.alpha, prob.beta)
    with _open_out(args.out) as fh:
        fh.write(_dumps(report.to_dict()) + "\n")
    return EXIT_OK


def _time_args(args, prob: ProblemSpec):
    t_end = args.t_end if args.t_end is not None else (prob.t_end if prob.t_end is not None else 1.0)
    steps = args.steps if args.steps is not None else (prob.steps if prob.steps is not None else 1000)
    if steps < 1 or not t_end > 0:
        raise InputError("need steps >= 1 and t_end > 0")
    return float(t_end), int(steps)


def _geodesic_problem(args):
    prob = _problem(args)
    if prob.p is None:
        raise InputError("this subcommand needs momenta 'p'")
    if math.isfinite(prob.lam):
        raise InputError("geodesics are only available for lambda = inf")
    t_end, steps = _time_args(args, prob)
    return prob, integrate(prob.q, prob.p, prob.kernel, t_end, steps)


def cmd_geodesic(args) -> int:
    _, path = _geodesic_problem(args)
    with _open_out(args.out) as fh:
        path.write_csv(fh)
    summary = sys.stdout if args.out not in (None, "-") else sys.stderr
    summary.write(_dumps(path.summary()) + "\n")
    return EXIT_OK


def cmd_advect(args) -> int:
    prob, path = _geodesic_problem(args)
    if prob.passive is None:
        raise InputError("advect needs 'passive' points or a 'grid'")
    traj = advect(path, prob.kernel, prob.passive)
    with _open_out(args.out) as fh:
        write_advection_csv(fh, path.times, traj)
    return EXIT_OK


def cmd_two_point(args) -> int:
    prob = _problem(args)
    if prob.p is None:
        raise InputError("two-point needs momenta 'p'")
    if prob.q.shape[0] != 2:
        raise InputError("two-point needs exactly two landmarks")
    t_end, steps = _time_args(args, prob)
    state = state_from_arrays(prob.q, prob.p)
    cons = conserved(state, prob.kernel)
    try:
        regime = classify(state, prob.kernel).value
        regime_error = None
    except ClassificationError as exc:
        regime, regime_error = None, str(exc)
    sol = solve_two_point(state, prob.kernel, t_end, tol=args.tol if args.tol is not None else 1e-10)
    path = integrate(prob.q, prob.p, prob.kernel, t_end, steps)
    q1, q2 = sol.positions(path.times)
    residual = max(np.max(np.abs(q1 - path.q_samples[:, 0])), np.max(np.abs(q2 - path.q_samples[:, 1])))
    summary = {
        "energy": cons.energy,
        "pbar": list(cons.pbar),
        "omega": cons.omega,
        "classification": regime,
        "classification_error": regime_error,
        "turning_times": list(sol.turning_times),
        "quadrature_vs_ode_residual": float(residual),
    }
    d = prob.q.shape[1]
    with _open_out(args.out) as fh:
        fh.write(",".join(["t", "rho", "theta"] + [f"qbar_{i}" for i in range(1, d + 1)]) + "\n")
        rho, theta, qbar = sol.rho(path.times), sol.theta(path.times), sol.qbar(path.times)
        for row in zip(path.times, rho, theta, *qbar.T):
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")
    out = sys.stdout if args.out not in (None, "-") else sys.stderr
    out.write(_dumps(summary) + "\n")
    return EXIT_OK


def cmd_oracle(args) -> int:
    tol = args.tol if args.tol is not None else 1e-8
    trials = args.trials if args.trials is not None else 50
    if trials < 0:
        raise InputError("--trials must be non-negative")
    result = run_oracle(trials, args.seed)
    summary = {
        "trials": result.trials,
        "seed": args.seed,
        "max_residual": result.max_residual,
        "max_landmark_residual": result.max_landmark_residual,
        "max_builtin_residual": result.max_builtin_residual,
        "max_specialization_residual": result.max_specialization_residual,
        "tol": tol,
        "pass": result.max_residual < tol,
    }
    with _open_out(args.out) as fh:
        fh.write(_dumps(summary) + "\n")
    return EXIT_OK if result.max_residual < tol else EXIT_ORACLE


# -- entry points -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="landmark-geometry",
                                     description="Curvature and geodesics on landmark manifolds.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kernel-json", help="kernel JSON, inline or a file path")
    common.add_argument("--problem", help="problem JSON file (or inline JSON)")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--steps", type=int)
    common.add_argument("--t-end", type=float)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int)
    common.add_argument("--tol", type=float)
    sub = parser.add_subparsers(dest="command", required=True)

    kt = sub.add_parser("kernel-table", parents=[common], help="k coefficients and L2(R1) curvature on a rho grid")
    kt.add_argument("--family", default="gaussian")
    kt.add_argument("--scale", type=float, default=1.0)
    kt.add_argument("--order", default=None, help="matern order, e.g. 3/2")
    kt.add_argument("--rho-max", type=float, default=None)
    kt.add_argument("--n", type=int, default=400, help="number of grid points")
    kt.add_argument("--with-gamma", action="store_true", help="append gamma, gamma', gamma'' columns")
    kt.set_defaults(func=cmd_kernel_table)

    for name, func, text in [
        ("curvature", cmd_curvature, "curvature report for a section (alpha, beta)"),
        ("geodesic", cmd_geodesic, "integrate a geodesic and write the path CSV"),
        ("advect", cmd_advect, "drag passive points along a geodesic"),
        ("two-point", cmd_two_point, "reduced two-point solution and diagnostics"),
        ("oracle", cmd_oracle, "compare the cometric and classical curvature routes"),
    ]:
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.set_defaults(func=func)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (DegenerateConfigurationError, SingularCometricError, TurningPointDegeneracy) as exc:
        print(f"degenerate configuration: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InputError, KernelError, TwoPointError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())

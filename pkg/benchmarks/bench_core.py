"""Compare the compiled and numpy backends on the two hot loops.

Usage: python benchmarks/bench_core.py [--n 50] [--steps 200] [--grid 50]
"""

import argparse
import time

import numpy as np

from landmark_geometry import _backend
from landmark_geometry.geodesics import advect, integrate
from landmark_geometry.kernels import KernelSpec


def best_of(fn, repeat=3):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=50, help="landmarks")
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--grid", type=int, default=50, help="passive grid is grid x grid")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    kernel = KernelSpec.gaussian(0.5)
    theta = np.linspace(0, 2 * np.pi, args.n, endpoint=False)
    q0 = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    p0 = 0.3 * rng.normal(size=q0.shape)
    axis = np.linspace(-1.5, 1.5, args.grid)
    passive = np.stack([m.ravel() for m in np.meshgrid(axis, axis)], axis=1)

    backends = ["python"] + (["cython"] if _backend.BACKEND == "cython" else [])
    results = {}
    for name in backends:
        path = integrate(q0, p0, kernel, 1.0, args.steps, backend=name)
        t_int = best_of(lambda: integrate(q0, p0, kernel, 1.0, args.steps, backend=name))
        t_adv = best_of(lambda: advect(path, kernel, passive, backend=name))
        results[name] = (t_int, t_adv, path, advect(path, kernel, passive, backend=name))
        print(f"{name:>7}: integrate N={args.n} x {args.steps} steps {t_int * 1e3:9.1f} ms | "
              f"advect {passive.shape[0]} points {t_adv * 1e3:9.1f} ms")
    if len(results) == 2:
        (pi, pa, ppath, ptraj), (ci, ca, cpath, ctraj) = results["python"], results["cython"]
        print(f"speed-up: integrate {pi / ci:.1f}x, advect {pa / ca:.1f}x")
        print(f"max |q_python - q_cython| = {np.abs(ppath.q_samples - cpath.q_samples).max():.2e}, "
              f"max |x_python - x_cython| = {np.abs(ptraj - ctraj).max():.2e}")
    else:
        print("compiled core not built; only the numpy backend was timed")


if __name__ == "__main__":
    main()

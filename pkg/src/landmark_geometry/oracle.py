"""Seeded random sections and the Mario-versus-classical comparison suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvature_engine import (EuclideanModel, HyperbolicModel, LandmarkModel, SphereModel,
                               classical_numerator, mario_numerator)
from .kernels import KernelSpec
from .landmark_curvature import curvature_terms
from .manifold import min_separation

ORACLE_KERNELS = (KernelSpec.gaussian(1.0), KernelSpec.matern("3/2", 1.0))
ORACLE_SHAPES = tuple((n, d) for n in (2, 3, 4) for d in (1, 2, 3))


def random_configuration(rng: np.random.Generator, n: int, d: int, kernel: KernelSpec,
                         min_sep: float = 0.3, spread: float = 1.0) -> np.ndarray:
    """Gaussian cloud of ``n`` points, redrawn until separated by min_sep * scale."""
    width = spread * kernel.scale * max(1.0, n ** (1.0 / d))
    for _ in range(10_000):
        q = rng.normal(scale=width, size=(n, d))
        if min_separation(q) >= min_sep * kernel.scale:
            return q
    raise RuntimeError("could not draw a separated configuration")


@dataclass(frozen=True)
class Section:
    kernel: KernelSpec
    q: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray


def random_sections(trials: int, seed: int = 0, kernels=ORACLE_KERNELS, shapes=ORACLE_SHAPES):
    """``trials`` sections cycling through every (kernel, N, D) combination."""
    rng = np.random.default_rng(seed)
    combos = [(k, n, d) for k in kernels for n, d in shapes]
    out = []
    for i in range(trials):
        kernel, n, d = combos[i % len(combos)]
        q = random_configuration(rng, n, d, kernel)
        alpha, beta = rng.normal(size=(2, n, d))
        out.append(Section(kernel, q, alpha, beta))
    return out


def oracle_residual(section: Section) -> float:
    """|mario - classical| / (1 + |classical|) on the landmark model."""
    n, d = section.q.shape
    model = LandmarkModel(section.kernel, n, d)
    x, a, b = section.q.ravel(), section.alpha.ravel(), section.beta.ravel()
    classical = classical_numerator(model, x, a, b)
    mario = mario_numerator(model, x, a, b).numerator
    return abs(mario - classical) / (1.0 + abs(classical))


def specialization_residual(section: Section) -> float:
    """Largest relative gap between the landmark formulas and the generic engine."""
    n, d = section.q.shape
    model = LandmarkModel(section.kernel, n, d)
    generic = mario_numerator(model, section.q.ravel(), section.alpha.ravel(), section.beta.ravel())
    special = curvature_terms(section.q, section.kernel, section.alpha, section.beta)
    pairs = [(special.r1, generic.r1), (special.r2, generic.r2), (special.r3, generic.r3),
             (special.r4, generic.r4), (special.numerator, generic.numerator),
             (special.denominator, generic.denominator)]
    scale = max(1.0, max(abs(g) for _, g in pairs))
    return max(abs(s - g) for s, g in pairs) / scale


def builtin_model_cases(rng: np.random.Generator):
    """(name, model, x) triples for the constant-curvature and flat models."""
    cases = [("euclidean-3", EuclideanModel(3), rng.normal(size=3))]
    for r in (0.5, 1.0, 2.0):
        cases.append((f"sphere-{r:g}", SphereModel(r), rng.normal(size=2)))
    cases.append(("hyperbolic-2", HyperbolicModel(2), np.array([rng.normal(), 0.5 + rng.random()])))
    cases.append(("hyperbolic-3", HyperbolicModel(3), np.array([rng.normal(), rng.normal(), 0.5 + rng.random()])))
    return cases


@dataclass(frozen=True)
class OracleResult:
    trials: int
    max_landmark_residual: float
    max_builtin_residual: float
    max_specialization_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.max_landmark_residual, self.max_builtin_residual)


def run_oracle(trials: int = 50, seed: int = 0) -> OracleResult:
    rng = np.random.default_rng(seed)
    builtin = 0.0
    for _, model, x in builtin_model_cases(rng):
        a, b = rng.normal(size=(2, model.dim))
        c = classical_numerator(model, x, a, b)
        m = mario_numerator(model, x, a, b).numerator
        builtin = max(builtin, abs(m - c) / (1.0 + abs(c)))
    sections = random_sections(trials, seed)
    land = max((oracle_residual(s) for s in sections), default=0.0)
    spec = max((specialization_residual(s) for s in sections), default=0.0)
    return OracleResult(trials, land, builtin, spec)

import numpy as np
import pytest

from landmark_geometry.kernels import KernelSpec

ALL_KERNELS = [
    KernelSpec.gaussian(1.0),
    KernelSpec.gaussian(0.7),
    KernelSpec.matern("1/2", 1.0),
    KernelSpec.matern("3/2", 1.2),
    KernelSpec.matern("5/2", 0.8),
    KernelSpec.matern("7/2", 1.0),
    KernelSpec.cauchy(1.5),
]
C2_KERNELS = [k for k in ALL_KERNELS if k.is_c2]


def kernel_id(k):
    return f"{k.family}-{k.order}-{k.scale:g}" if k.order else f"{k.family}-{k.scale:g}"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def separated(rng, n, d, min_sep=0.3, width=1.0):
    while True:
        q = rng.normal(scale=width * max(1.0, n ** (1 / d)), size=(n, d))
        dist = np.linalg.norm(q[:, None] - q[None], axis=-1)
        if n < 2 or dist[~np.eye(n, dtype=bool)].min() >= min_sep:
            return q

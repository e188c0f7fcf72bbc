from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma as gamma_fn
from scipy.special import kv

from conftest import ALL_KERNELS, C2_KERNELS, kernel_id
from landmark_geometry.kernels import KernelError, KernelSpec, gamma_derivs, grad_K, hess_K


def bessel_gamma(nu, a, rho):
    """x^nu K_nu(x) normalised to 1 at 0, straight from scipy's Bessel function."""
    x = rho / a
    return x**nu * kv(nu, x) / (2 ** (nu - 1) * gamma_fn(nu))


class TestGammaDerivs:
    def test_gaussian_origin(self):
        assert gamma_derivs(KernelSpec.gaussian(), 0.0) == pytest.approx((1.0, 0.0, -1.0))

    def test_gaussian_at_one(self):
        # [DERIVED] math.exp(-1/2) = 0.60653...
        g, dg, ddg = gamma_derivs(KernelSpec.gaussian(), 1.0)
        assert g == pytest.approx(np.exp(-0.5), abs=1e-15)
        assert dg == pytest.approx(-np.exp(-0.5), abs=1e-15)
        assert ddg == pytest.approx(0.0, abs=1e-15)
        assert g == pytest.approx(0.60653, abs=1e-5)

    @pytest.mark.parametrize("order", ["3/2", "5/2", "7/2"])
    def test_matern_flat_at_origin(self, order):
        assert gamma_derivs(KernelSpec.matern(order), 0.0)[1] == 0.0

    def test_exponential_kernel_has_cusp(self):
        k = KernelSpec.matern("1/2", 2.0)
        assert not k.is_c2
        assert gamma_derivs(k, 0.0)[1] == pytest.approx(-0.5)

    @pytest.mark.parametrize("nu", [0.5, 1.5, 2.5, 3.5])
    def test_matern_matches_bessel(self, nu):
        a = 1.3
        rho = np.linspace(0.05, 6.0, 40)
        k = KernelSpec.matern(Fraction(nu), a)
        np.testing.assert_allclose(k.gamma(rho), bessel_gamma(nu, a, rho), rtol=1e-12)

    @pytest.mark.parametrize("kernel", ALL_KERNELS, ids=kernel_id)
    def test_derivatives_match_finite_differences(self, kernel):
        rho = np.linspace(0.2, 4.0, 25)
        h = 1e-5
        g, dg, ddg = kernel.derivs(rho)
        np.testing.assert_allclose(dg, (kernel.gamma(rho + h) - kernel.gamma(rho - h)) / (2 * h), atol=1e-8)
        fd2 = (kernel.derivs(rho + h)[1] - kernel.derivs(rho - h)[1]) / (2 * h)
        np.testing.assert_allclose(ddg, fd2, atol=1e-8)

    def test_cauchy_closed_form(self):
        k = KernelSpec.cauchy(2.0)
        assert gamma_derivs(k, 2.0)[0] == pytest.approx(0.5)

    def test_negative_rho_rejected(self):
        with pytest.raises(ValueError):
            gamma_derivs(KernelSpec.gaussian(), -1.0)

    @pytest.mark.parametrize("kernel", ALL_KERNELS, ids=kernel_id)
    def test_bounded_by_value_at_zero(self, kernel):
        rho = np.linspace(0, 20 * kernel.scale, 5000)
        assert np.all(np.abs(kernel.gamma(rho)) <= kernel.gamma(0.0) + 1e-15)


class TestSpec:
    def test_json_round_trip(self):
        k = KernelSpec.from_json('{"family":"matern","scale":1.0,"order":"3/2"}')
        assert k.order == Fraction(3, 2)
        assert KernelSpec.from_dict(k.to_dict()) == k

    @pytest.mark.parametrize("bad", [
        {"family": "laplace"},
        {"family": "gaussian", "scale": -1},
        {"family": "gaussian", "scale": 0},
        {"family": "matern", "order": "2"},
        {"family": "matern"},
        {"family": "gaussian", "order": "3/2"},
        {"family": "gaussian", "width": 1},
        {"scale": 1},
    ])
    def test_rejects_invalid(self, bad):
        with pytest.raises(KernelError):
            KernelSpec.from_dict(bad)

    def test_malformed_json(self):
        with pytest.raises(KernelError):
            KernelSpec.from_json("{family")


class TestGradHess:
    def test_grad_origin(self):
        for k in ALL_KERNELS:
            np.testing.assert_array_equal(grad_K(k, np.zeros(3)), 0.0)

    def test_grad_value(self):
        np.testing.assert_allclose(grad_K(KernelSpec.gaussian(), [1.0, 0.0]), [-np.exp(-0.5), 0.0], atol=1e-15)

    def test_hess_origin(self):
        np.testing.assert_allclose(hess_K(KernelSpec.gaussian(), np.zeros(3)), -np.eye(3))

    def test_hess_value(self):
        np.testing.assert_allclose(hess_K(KernelSpec.gaussian(), [1.0, 0.0]),
                                   np.diag([0.0, -np.exp(-0.5)]), atol=1e-15)

    @pytest.mark.parametrize("kernel", C2_KERNELS, ids=kernel_id)
    def test_fd(self, kernel, rng):
        h = 1e-5
        for _ in range(5):
            x = rng.normal(size=3)
            fd = np.array([(kernel.gamma(np.linalg.norm(x + h * e)) - kernel.gamma(np.linalg.norm(x - h * e))) / (2 * h)
                           for e in np.eye(3)])
            np.testing.assert_allclose(grad_K(kernel, x), fd, atol=1e-7)
            fdh = np.array([(grad_K(kernel, x + h * e) - grad_K(kernel, x - h * e)) / (2 * h) for e in np.eye(3)])
            np.testing.assert_allclose(hess_K(kernel, x), fdh, atol=1e-5)

    def test_batched_matches_single(self, rng):
        k = KernelSpec.matern("5/2")
        xs = rng.normal(size=(4, 5, 2))
        xs[0, 0] = 0.0
        batch_g, batch_h = grad_K(k, xs), hess_K(k, xs)
        for idx in np.ndindex(4, 5):
            np.testing.assert_allclose(batch_g[idx], grad_K(k, xs[idx]))
            np.testing.assert_allclose(batch_h[idx], hess_K(k, xs[idx]))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.sampled_from(ALL_KERNELS))
    def test_symmetries(self, xs, kernel):
        x = np.array(xs)
        np.testing.assert_allclose(grad_K(kernel, -x), -grad_K(kernel, x))
        hess = hess_K(kernel, x)
        np.testing.assert_allclose(hess, hess.T)

    @pytest.mark.parametrize("kernel", ALL_KERNELS, ids=kernel_id)
    def test_gram_positive_definite(self, kernel, rng):
        from conftest import separated
        for _ in range(20):
            n, d = rng.integers(2, 7), rng.integers(1, 4)
            q = separated(rng, n, d, min_sep=0.1 * kernel.scale)
            dist = np.linalg.norm(q[:, None] - q[None], axis=-1)
            assert np.linalg.eigvalsh(kernel.gamma(dist)).min() > 0

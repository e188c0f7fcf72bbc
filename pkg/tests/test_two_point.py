import io

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from landmark_geometry.curvature_engine import LandmarkModel, mario_numerator
from landmark_geometry.geodesics import integrate
from landmark_geometry.kernels import KernelSpec
from landmark_geometry.landmark_curvature import curvature_terms
from landmark_geometry.two_point import (TABLE_HEADER, ClassificationError, Regime, TwoPointError,
                                         TurningPointDegeneracy, circular_orbit_radius, classify, coefficient_table,
                                         conserved, curvature_L2R1, from_mean_diff, k_coefficients, radial_poly_dF,
                                         radial_poly_F, rho_dot, solve_two_point, state_from_arrays,
                                         t_decomposition, to_mean_diff, two_point_curvature,
                                         two_point_denominator, write_coefficient_table)

G = KernelSpec.gaussian()
FIG_Q = np.array([[1.0, 0.0], [-1.0, 0.0]])
FIG_P_CAPTURE = np.array([[-10.0, 8.6], [10.0, -8.6]])
FIG_P_SCATTER = np.array([[-10.0, 9.0], [10.0, -9.0]])


class SteepKernel:
    """gamma = 1/(1 + rho^8): not positive definite, but f(r) has a root at (2r)^8 = 3."""

    family, scale, gamma0, order = "steep", 1.0, 1.0, None

    def derivs(self, rho):
        rho = np.asarray(rho, dtype=float)
        w = 1 + rho**8
        return 1 / w, -8 * rho**7 / w**2, -56 * rho**6 / w**2 + 128 * rho**14 / w**3

    def gamma(self, rho):
        return self.derivs(rho)[0]

    def slope_over_r(self, rho):
        rho = np.asarray(rho, dtype=float)
        return -8 * rho**6 / (1 + rho**8) ** 2


STEEP_ROOT = 3 ** 0.125 / 2


def random_state(rng, d=2):
    q1, q2, p1, p2 = rng.normal(size=(4, d))
    return to_mean_diff(q1, q2, p1, p2)


class TestMeanDiff:
    def test_example(self):
        s = to_mean_diff([1, 0], [-1, 0], [0, 0], [0, 0])
        np.testing.assert_array_equal(s.qbar, [0, 0])
        np.testing.assert_array_equal(s.dq, [1, 0])

    def test_round_trip(self, rng):
        vecs = rng.normal(size=(4, 3))
        back = from_mean_diff(to_mean_diff(*vecs))
        np.testing.assert_allclose(np.array(back), vecs, atol=1e-15)

    def test_equal_momenta(self):
        s = to_mean_diff([0, 0], [1, 1], [2, 3], [2, 3])
        np.testing.assert_array_equal(s.dp, 0.0)
        np.testing.assert_array_equal(s.pbar, [2, 3])

    def test_coincident(self):
        with pytest.raises(TwoPointError):
            to_mean_diff([1, 1], [1, 1], [0, 0], [0, 0])


class TestConserved:
    def test_zero(self):
        c = conserved(to_mean_diff([1, 0], [-1, 0], [0, 0], [0, 0]), G)
        assert (c.energy, c.omega) == (0.0, 0.0) and not c.pbar.any()

    def test_parallel(self):
        assert conserved(to_mean_diff([1, 0], [-1, 0], [2, 0], [-2, 0]), G).omega == 0.0

    def test_energy_is_hamiltonian(self, rng):
        from landmark_geometry.geodesics import hamiltonian
        s = random_state(rng, 3)
        q1, q2, p1, p2 = from_mean_diff(s)
        assert conserved(s, G).energy == pytest.approx(hamiltonian([q1, q2], G, [p1, p2]), rel=1e-13)

    def test_constant_along_rk4(self):
        path = integrate(FIG_Q, FIG_P_CAPTURE, G, 1.0, 1000)
        vals = []
        for q, p in zip(path.q_samples, path.p_samples):
            c = conserved(state_from_arrays(q, p), G)
            vals.append([c.energy, *c.pbar, c.omega])
        vals = np.array(vals)
        drift = np.abs(vals - vals[0]).max(axis=0) / np.maximum(np.abs(vals[0]), 1.0)
        assert drift.max() < 1e-7


class TestRadial:
    def test_no_wedge_no_mean(self):
        c = conserved(to_mean_diff([1, 0], [-1, 0], [2, 0], [-2, 0]), G)
        assert np.all(radial_poly_F(G, c, np.linspace(0.01, 10, 200)) >= 0)

    def test_vanishes_at_zero(self, rng):
        c = conserved(random_state(rng), G)
        assert abs(radial_poly_F(G, c, 1e-6)) < 1e-20

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31), st.sampled_from([G, KernelSpec.matern("5/2", 0.7), KernelSpec.cauchy(1.3)]))
    def test_rho_dot_identity(self, seed, kernel):
        s = random_state(np.random.default_rng(seed), 3)
        c = conserved(s, kernel)
        f = radial_poly_F(kernel, c, s.rho)
        size = abs(c.energy) * s.rho**2 + 4 * c.omega**2
        assert f >= -1e-12 * size
        assert rho_dot(s, kernel) ** 2 == pytest.approx(4 * f / s.rho**2, rel=1e-9, abs=1e-12 * size)

    def test_derivative(self, rng):
        c = conserved(random_state(rng), G)
        x, h = 1.7, 1e-6
        fd = (radial_poly_F(G, c, x + h) - radial_poly_F(G, c, x - h)) / (2 * h)
        assert radial_poly_dF(G, c, x) == pytest.approx(fd, rel=1e-7)


class TestSolve:
    @pytest.mark.parametrize("p", [FIG_P_CAPTURE, FIG_P_SCATTER], ids=["capture", "scatter"])
    def test_matches_rk4(self, p):
        path = integrate(FIG_Q, p, G, 0.5, 2000)
        sol = solve_two_point(state_from_arrays(FIG_Q, p), G, 0.5)
        q1, q2 = sol.positions(path.times)
        assert np.abs(q1 - path.q_samples[:, 0]).max() < 1e-5
        assert np.abs(q2 - path.q_samples[:, 1]).max() < 1e-5

    def test_state_reconstruction(self):
        path = integrate(FIG_Q, FIG_P_SCATTER, G, 0.6, 2000)
        sol = solve_two_point(state_from_arrays(FIG_Q, FIG_P_SCATTER), G, 0.6)
        q1, q2, p1, p2 = from_mean_diff(sol.state(0.6))
        np.testing.assert_allclose([p1, p2], path.p_samples[-1], atol=1e-5)
        assert sol.turning_times.size == 1  # passes a simple turning point

    def test_pure_radial_theta_constant(self):
        sol = solve_two_point(to_mean_diff([1, 0], [-1, 0], [1, 0], [-1, 0]), G, 1.0)
        assert np.all(sol.theta(np.linspace(0, 1, 20)) == 0.0)

    def test_theta_monotone(self):
        sol = solve_two_point(state_from_arrays(FIG_Q, FIG_P_SCATTER), G, 1.0)
        assert np.all(np.diff(sol.theta(np.linspace(0, 1, 200))) > 0)

    def test_flat_region_translation(self):
        k = KernelSpec.flat_tail(1.0)
        s = to_mean_diff([1.5, 0], [-1.5, 0], [0.3, 0.4], [0.3, 0.4])
        sol = solve_two_point(s, k, 2.0)
        t = np.linspace(0, 2, 11)
        np.testing.assert_allclose(sol.rho(t), 3.0, atol=1e-12)
        slope = (1.0 + 0.5) * np.array([0.3, 0.4])
        np.testing.assert_allclose(sol.qbar(t), t[:, None] * slope, atol=1e-12)

    def test_circular_equilibrium(self):
        k = SteepKernel()
        r = STEEP_ROOT
        sol = solve_two_point(to_mean_diff([r, 0], [-r, 0], [0, 1.0], [0, -1.0]), k, 3.0)
        np.testing.assert_allclose(sol.rho(np.linspace(0, 3, 30)), 2 * r, rtol=1e-12)
        assert sol.turning_times.size == 0

    @staticmethod
    def _barrier_state(eps):
        """Inbound state whose energy sits a relative eps below the circular-orbit barrier."""
        k = SteepKernel()
        r = STEEP_ROOT
        energy = (1 - k.gamma(2 * r)) * (1 - eps)
        rho0 = 3 * r
        y = 2 * r / rho0
        x = -np.sqrt(energy / (1 - k.gamma(rho0)) - y**2)
        return to_mean_diff([rho0 / 2, 0], [-rho0 / 2, 0], [x, y], [-x, -y])

    def test_turns_below_barrier(self):
        sol = solve_two_point(self._barrier_state(1e-4), SteepKernel(), 10.0)
        assert sol.turning_times.size == 1
        assert sol.rho(10.0) > 2 * STEEP_ROOT

    @pytest.mark.parametrize("eps", [1e-11, 1e-13])
    def test_near_double_root_reported(self, eps):
        with pytest.raises(TurningPointDegeneracy):
            solve_two_point(self._barrier_state(eps), SteepKernel(), 60.0)

    def test_negative_t_end(self):
        with pytest.raises(ValueError):
            solve_two_point(state_from_arrays(FIG_Q, FIG_P_CAPTURE), G, -1.0)


class TestClassify:
    def test_capture(self):
        assert classify(state_from_arrays(FIG_Q, FIG_P_CAPTURE), G) is Regime.CAPTURE_FORWARD

    def test_scattering(self):
        assert classify(state_from_arrays(FIG_Q, FIG_P_SCATTER), G) is Regime.SCATTERING

    def test_reversed_capture(self):
        assert classify(state_from_arrays(FIG_Q, -FIG_P_CAPTURE), G) is Regime.CAPTURE_BACKWARD

    def test_large_angular_momentum(self):
        s = to_mean_diff([1, 0], [-1, 0], [-1, 50], [1, -50])
        assert classify(s, G) is Regime.SCATTERING

    def test_inconclusive(self):
        with pytest.raises(ClassificationError):
            classify(to_mean_diff([1, 0], [-1, 0], [0, 0], [0, 0]), G)


class TestTDecomposition:
    def test_only_t1(self):
        u = np.array([0.6, 0.8])
        t = t_decomposition(u, [1.5 * u, -1.5 * u], [[2.0, -1.0], [2.0, -1.0]])
        assert t.t1 == pytest.approx(1.5**2 * 5.0)
        np.testing.assert_allclose([t.t2, t.t3, t.t4, t.t5], 0.0, atol=1e-28)

    def test_one_dimensional(self, rng):
        t = t_decomposition([1.0], rng.normal(size=(2, 1)), rng.normal(size=(2, 1)))
        assert t.t3 == 0.0 and t.t4 == 0.0

    def test_planar_t4(self, rng):
        u = np.array([1.0, 0.0])
        assert t_decomposition(u, rng.normal(size=(2, 2)), rng.normal(size=(2, 2))).t4 == pytest.approx(0.0, abs=1e-15)

    def test_orthogonality(self, rng):
        """Changing alpha along dq-perp alone leaves T1 and T5 fixed."""
        u = np.array([0.0, 0.0, 1.0])
        a, b = rng.normal(size=(2, 2, 3))
        t0 = t_decomposition(u, a, b)
        bump = np.array([0.3, -0.2, 0.0])
        t1 = t_decomposition(u, a + np.array([bump, -bump]), b)
        assert t1.t1 == pytest.approx(t0.t1) and t1.t5 == pytest.approx(t0.t5)

    def test_denominator(self, rng):
        for d in (1, 2, 3):
            q, a, b = rng.normal(size=(3, 2, d))
            rho = np.linalg.norm(q[0] - q[1])
            t = t_decomposition((q[0] - q[1]) / rho, a, b)
            full = curvature_terms(q, G, a, b).denominator
            assert two_point_denominator(G, rho, t) == pytest.approx(full, rel=1e-10)


class TestKCoefficients:
    def test_k1_zero_at_sigma(self):
        assert k_coefficients(G, 1.0).k1 == pytest.approx(0.0, abs=1e-16)

    def test_reference_values(self):
        # [DERIVED] sympy evaluation of the four coefficient formulas
        r = sp.Symbol("r", positive=True)
        g = sp.exp(-r**2 / 2)
        gp, gpp = sp.diff(g, r), sp.diff(g, r, 2)
        exact = [(1 - g) ** 2 * gpp, (1 - g) ** 2 * gp / r, (1 - g) * gp**2, (1 - g) ** 2 * gp**2 / (1 + g)]
        want = [float(e.subs(r, 2).evalf(30)) for e in exact]
        k = k_coefficients(G, 2.0)
        np.testing.assert_allclose([k.k1, k.k2, k.k3, k.k4], want, rtol=1e-13)
        np.testing.assert_allclose([k.k1, k.k2, k.k3, k.k4], [0.3035, -0.1012, 0.06335, 0.04824], atol=5e-5)

    @pytest.mark.parametrize("kernel", [G, KernelSpec.matern("3/2"), KernelSpec.matern("7/2"), KernelSpec.cauchy()])
    def test_sign_pattern(self, kernel):
        ks = [k_coefficients(kernel, r) for r in np.linspace(0.01, 5, 500)]
        assert all(k.k2 <= 0 and k.k3 >= 0 and k.k4 >= 0 for k in ks)

    def test_bad_rho(self):
        with pytest.raises(ValueError):
            k_coefficients(G, 0.0)


class TestTwoPointCurvature:
    def test_matches_general(self, rng):
        for d in (1, 2, 3):
            q, a, b = rng.normal(size=(3, 2, d))
            tp = two_point_curvature(q, G, a, b).report
            r = curvature_terms(q, G, a, b)
            for x, y in zip((tp.r1, tp.r2, tp.r3, tp.r4), (r.r1, r.r2, r.r3, r.r4)):
                assert x == pytest.approx(y, abs=1e-10 * max(1, abs(y)))

    def test_total_from_t_coefficients(self, rng):
        q, a, b = rng.normal(size=(3, 2, 3))
        res = two_point_curvature(q, G, a, b)
        total = res.k.t_coefficients() @ res.t.as_array()
        assert total == pytest.approx(res.report.numerator, rel=1e-12)

    def test_passive_third_point(self, rng):
        q = rng.normal(size=(3, 2))
        a, b = np.zeros((2, 3, 2))
        a[:2], b[:2] = rng.normal(size=(2, 2, 2))
        res = two_point_curvature(q, G, a, b)
        assert res.r4_upper_bound
        assert curvature_terms(q, G, a, b).r4 <= res.report.r4 + 1e-12

    def test_only_t4(self):
        q = np.array([[0.0, 0.0, 0.7], [0.0, 0.0, -0.7]])
        a = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
        b = np.array([[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]])
        res = two_point_curvature(q, G, a, b)
        t = res.t
        assert t.t4 > 0 and t.t1 == t.t2 == t.t3 == t.t5 == 0.0
        assert res.report.numerator == pytest.approx((-4 * res.k.k2 - res.k.k3) * t.t4)

    def test_support_check(self, rng):
        a = np.ones((3, 2))
        with pytest.raises(TwoPointError):
            two_point_curvature(rng.normal(size=(3, 2)), G, a, a)


class TestL2R1:
    def test_value_at_one(self):
        # [DERIVED] gamma''(1) = 0 leaves -(2 - e^{-1/2}) e^{-1} / (1 + e^{-1/2})^2
        e = np.exp(-0.5)
        assert curvature_L2R1(G, 1.0) == pytest.approx(-(2 - e) * e**2 / (1 + e) ** 2, rel=1e-14)
        assert curvature_L2R1(G, 1.0) == pytest.approx(-0.1986, abs=5e-5)

    def test_sign_change(self):
        rho = np.linspace(1e-3, 4, 4000)
        k = curvature_L2R1(G, rho)
        changes = np.nonzero(np.diff(np.sign(k)))[0]
        assert changes.size == 1
        assert 1.50 <= rho[changes[0]] <= 1.56

    def test_equals_sectional(self, rng):
        for _ in range(5):
            q, a, b = rng.normal(size=(3, 2, 1))
            rho = abs(q[0, 0] - q[1, 0])
            assert curvature_terms(q, G, a, b).sectional == pytest.approx(curvature_L2R1(G, rho), rel=1e-10)


class TestCircularOrbit:
    @pytest.mark.parametrize("kernel", [G, KernelSpec.cauchy(), KernelSpec.matern("3/2"), KernelSpec.matern("7/2")])
    def test_none_for_standard_kernels(self, kernel):
        assert circular_orbit_radius(kernel, (1e-3, 10.0)) is None

    def test_gaussian_function_positive(self):
        r = np.linspace(1e-3, 10, 1000)
        assert np.all(1 - (1 + 2 * r**2) * np.exp(-2 * r**2) > 0)

    def test_bad_interval(self):
        with pytest.raises(ValueError):
            circular_orbit_radius(G, (2.0, 1.0))

    def test_orbit_is_circular(self):
        k = SteepKernel()
        r = circular_orbit_radius(k, (0.1, 5.0))
        assert r == pytest.approx(STEEP_ROOT, rel=1e-12)
        q = np.array([[r, 0.0], [-r, 0.0]])
        p = np.array([[0.0, 1.0], [0.0, -1.0]])
        thdot = 4 * (1 - k.gamma(2 * r)) * r / (2 * r) ** 2
        period = 2 * np.pi / thdot
        path = integrate(q, p, k, period, 4000, backend="python")
        rho = np.linalg.norm(path.q_samples[:, 0] - path.q_samples[:, 1], axis=1)
        assert np.abs(rho - 2 * r).max() < 1e-6


class TestTable:
    def test_header_and_row(self):
        fh = io.StringIO()
        write_coefficient_table(fh, G, np.linspace(0, 4, 401)[1:])
        lines = fh.getvalue().splitlines()
        assert lines[0].split(",") == TABLE_HEADER
        row = [float(v) for v in next(l for l in lines[1:] if l.startswith("2,")).split(",")]
        assert row[1] == pytest.approx(0.3035, abs=5e-5)

    def test_gamma_columns(self):
        table = coefficient_table(G, [1.0], include_gamma=True)
        np.testing.assert_allclose(table[0, -3:], G.derivs(1.0), atol=1e-15)

"""Geodesics and sectional curvature on manifolds of landmarks."""

from ._backend import BACKEND
from .curvature_engine import (CometricModel, CurvatureReport, EuclideanModel, FiniteDifferenceModel,
                               HyperbolicModel, LandmarkModel, SphereModel, classical_numerator,
                               denominator, dual_curvature_tensor, fd_cometric_partials, mario_numerator)
from .geodesics import GeodesicPath, advect, ham_rhs, hamiltonian, integrate
from .kernels import KernelError, KernelSpec, gamma_derivs, grad_K, hess_K
from .landmark_curvature import (compression, curvature_terms, landmark_derivative, mixed_force,
                                 one_momentum_curvature, strain)
from .manifold import (DegenerateConfigurationError, cometric_d1, cometric_d2, cometric_pair, flat, gram,
                       horizontal_field, path_energy, sharp)
from .two_point import (Regime, TwoPointState, circular_orbit_radius, classify, conserved, curvature_L2R1,
                        from_mean_diff, k_coefficients, radial_poly_F, solve_two_point, t_decomposition,
                        to_mean_diff, two_point_curvature)

__version__ = "0.1.0"

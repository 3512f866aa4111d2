"""
Closed forms of the reduced energy: reference values at rho = 1/2 and the golden ratio radius,
derivatives against finite differences, and the fibration in (lambda, mu).
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from reduction_tools import reduced_energy as re_
from reduction_tools.errors import DomainError
from reduction_tools.reduced_energy import GOLDEN_RHO, ReducedConfig, ReducedPoint
from tests.base.finite_differences import central_difference, numerical_gradient, numerical_jacobian


class TestReferenceValues:

    def test_half_radius_three_dimensions(self):
        assert re_.alpha(0.5, 3) == pytest.approx(17 / 15, rel=1e-14)
        assert re_.beta(0.5, 3) == pytest.approx(1.0)
        assert re_.alpha_prime(0.5, 3) == pytest.approx(float(Fraction(706, 225)), rel=1e-14)
        assert re_.beta_prime(0.5, 3) == pytest.approx(-4.0)
        assert re_.capital_lambda(0.5, 3) == pytest.approx(0.67615, abs=1e-5)
        assert re_.chi(0.5, 3) == pytest.approx(-2.2714, abs=1e-4)

    def test_half_radius_four_dimensions(self):
        assert re_.alpha(0.5, 4) == pytest.approx(319 / 225, rel=1e-14)
        assert re_.chi(0.5, 4) == pytest.approx(-5.569, abs=1e-3)

    def test_golden_ratio_radius(self):
        assert re_.alpha(GOLDEN_RHO, 3) == pytest.approx(1.532624, abs=1e-6)
        assert re_.capital_lambda(GOLDEN_RHO, 3) == pytest.approx(0.966959, abs=1e-6)
        assert re_.chi(GOLDEN_RHO, 3) == pytest.approx(-1.165, abs=1e-3)

    @pytest.mark.parametrize("rho, expected", [(0.34, 0.2614), (0.35, -0.1599), (0.65, -0.527), (0.70, 0.9275)])
    def test_chi_around_its_zeros(self, rho, expected):
        assert re_.chi(rho, 3) == pytest.approx(expected, abs=2e-3)

    def test_bubble_energy_constant(self):
        assert re_.bubble_energy_constant(3) == pytest.approx(math.pi / 16)
        assert re_.bubble_energy_constant(4) == pytest.approx(1 / 6)


class TestDerivatives:

    @pytest.mark.parametrize("N", [3, 5, 8])
    @pytest.mark.parametrize("rho", [0.45, 0.6, 0.85])
    def test_first_derivatives(self, N, rho):
        assert re_.alpha_prime(rho, N) == pytest.approx(central_difference(lambda t: re_.alpha(t, N), rho), rel=1e-6, abs=1e-6)
        assert re_.beta_prime(rho, N) == pytest.approx(central_difference(lambda t: re_.beta(t, N), rho), rel=1e-6, abs=1e-6)
        assert re_.lambda_prime(rho, N) == pytest.approx(
            central_difference(lambda t: re_.capital_lambda(t, N), rho), rel=1e-6, abs=1e-6)
        assert re_.chi_prime(rho, N) == pytest.approx(central_difference(lambda t: re_.chi(t, N), rho), rel=1e-5, abs=1e-6)

    @pytest.mark.parametrize("N", [3, 6])
    @pytest.mark.parametrize("rho", [0.5, 0.75])
    def test_second_derivatives(self, N, rho):
        assert re_.alpha_second(rho, N) == pytest.approx(
            central_difference(lambda t: re_.alpha_prime(t, N), rho), rel=1e-6, abs=1e-6)
        assert re_.beta_second(rho, N) == pytest.approx(
            central_difference(lambda t: re_.beta_prime(t, N), rho), rel=1e-6, abs=1e-6)

    @pytest.mark.parametrize("N", [3, 7])
    def test_m_prime(self, N):
        def m(t):
            return -re_.capital_lambda(t, N) + 2 * (1 - t * t) * (1 + t * t) ** (-N / 2)
        assert re_.m_prime(0.55, N) == pytest.approx(central_difference(m, 0.55), rel=1e-6)

    def test_array_input(self):
        rho = np.array([0.4, 0.5, 0.6])
        assert np.asarray(re_.chi(rho, 3)) == pytest.approx([re_.chi(float(r), 3) for r in rho])


class TestLambda:

    @pytest.mark.parametrize("N", [3, 4, 9])
    def test_lambda_solves_its_quadratic(self, N):
        rho = 0.7
        big, a, b = re_.capital_lambda(rho, N), re_.alpha(rho, N), re_.beta(rho, N)
        assert big > 0
        assert big ** 2 + b * big - a == pytest.approx(0.0, abs=1e-12 * max(1.0, a))

    def test_lambda_needs_alpha_positive(self):
        with pytest.raises(DomainError):
            re_.capital_lambda(0.1, 3)

    def test_rho_outside_unit_interval(self):
        with pytest.raises(DomainError):
            re_.alpha(1.0, 3)
        with pytest.raises(DomainError):
            re_.beta(0.0, 3)

    @pytest.mark.parametrize("N", [3, 5, 10])
    def test_sign_function_has_the_sign_of_alpha(self, N):
        rho = np.linspace(0.05, 0.95, 37)
        assert np.array_equal(np.sign(re_.alpha_sign_function(rho, N)), np.sign(re_.alpha(rho, N)))

    def test_sign_function_is_finite_in_high_dimension(self):
        assert np.isfinite(re_.alpha_sign_function(0.01, 60))


class TestFibration:

    @pytest.fixture
    def cfg(self):
        return ReducedConfig(dimension=3, c_n=0.7)

    def test_fibered_point_kills_the_fiber_gradient(self, cfg):
        point = re_.fibered_point(0.6, cfg)
        grad = re_.grad_f(point.as_reduced(), cfg)
        assert grad[:2] == pytest.approx([0.0, 0.0], abs=1e-12)
        assert grad[2] == pytest.approx(2 * point.mu ** 2 * re_.chi(0.6, 3), rel=1e-12)
        assert point.lam == pytest.approx(point.big_lambda * point.mu)

    def test_little_f_is_f_on_the_curve(self, cfg):
        point = re_.fibered_point(0.6, cfg)
        assert re_.little_f(0.6, cfg) == pytest.approx(re_.big_f(point.as_reduced(), cfg), rel=1e-12)

    @pytest.mark.parametrize("rho", [0.3, 0.55, 0.8])
    def test_derivative_of_little_f(self, cfg, rho):
        mu = re_.fibered_point(rho, cfg).mu
        numeric = central_difference(lambda t: re_.little_f(t, cfg), rho)
        assert numeric == pytest.approx(2 * mu ** 2 * re_.chi(rho, 3), rel=1e-6, abs=1e-8)

    def test_gradient_matches_finite_differences(self, cfg):
        p = ReducedPoint(lam=0.4, mu=0.3, rho=0.55)
        numeric = numerical_gradient(lambda v: re_.big_f(ReducedPoint(*v), cfg), p.as_array())
        assert re_.grad_f(p, cfg) == pytest.approx(numeric, rel=1e-6)

    def test_hessian_matches_finite_differences(self, cfg):
        p = ReducedPoint(lam=0.4, mu=0.3, rho=0.55)
        numeric = numerical_jacobian(lambda v: re_.grad_f(ReducedPoint(*v), cfg), p.as_array())
        assert re_.hess_f(p, cfg) == pytest.approx(numeric, rel=1e-5, abs=1e-7)

    def test_fiber_block_is_positive_definite(self, cfg):
        block = re_.hessian_lambda_mu(0.45, cfg)
        assert np.trace(block) > 0
        assert np.linalg.det(block) > 0

    def test_scales_follow_c_n(self):
        small = re_.fibered_point(0.6, ReducedConfig(dimension=4, c_n=1.0))
        large = re_.fibered_point(0.6, ReducedConfig(dimension=4, c_n=4.0))
        assert large.mu == pytest.approx(2 * small.mu)
        assert large.big_lambda == pytest.approx(small.big_lambda)

    def test_invalid_configuration(self):
        with pytest.raises(DomainError):
            ReducedConfig(dimension=3, c_n=0.0)
        with pytest.raises(DomainError):
            ReducedConfig(dimension=2)
        with pytest.raises(DomainError):
            ReducedPoint(lam=-1.0, mu=0.3, rho=0.5)

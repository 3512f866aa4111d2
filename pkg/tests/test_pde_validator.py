"""
Axisymmetric finite differences and the Newton solver.

The desk-scale runs in the default selection use fields whose discrete behaviour is known
exactly; continuation along bubble-seeded eps ladders is in test_pde_ladder.py.
"""

import math

import numpy as np
import pytest

from reduction_tools.errors import DomainError, ExtractionError, NonConvergenceError, SignStructureLostError
from reduction_tools.fields import Field2D, graded_axis, half_disk_grid, half_disk_mask
from reduction_tools.pde_validator import (DEFAULT_TOL, EXTENDED, AxiGrid, Branch, _parabolic_vertex, ansatz_guess,
                                           assemble_residual, boundary_normal_derivative, continue_in_epsilon,
                                           critical_exponent, discrete_energy, extract_diagnostics,
                                           homotopy_solve, manufactured_order, newton_solve, residual_floor,
                                           resolving_grid)
from reduction_tools.reduced_energy import ReducedConfig, bubble_energy_constant, fibered_point


def sampled(fn, n_s: int, n_r: int) -> Field2D:
    s_grid, r_grid, mask = half_disk_grid(n_s, n_r)
    s, r = np.meshgrid(s_grid, r_grid, indexing="ij")
    return Field2D(s_grid, r_grid, np.where(mask, fn(s, r), 0.0), mask)


def paraboloid(s, r):
    return 1.0 - s * s - r * r


def sampled_on(fn, s_grid: np.ndarray, r_grid: np.ndarray) -> Field2D:
    mask = half_disk_mask(s_grid, r_grid)
    s, r = np.meshgrid(s_grid, r_grid, indexing="ij")
    return Field2D(s_grid, r_grid, np.where(mask, fn(s, r), 0.0), mask)


def stretched_grid(n_s: int, n_r: int):
    """s refined toward +-1, r refined toward the axis."""
    return np.sin(0.5 * np.pi * np.linspace(-1.0, 1.0, n_s)), np.linspace(0.0, 1.0, n_r) ** 1.5


def bubble_grid(n_s: int, n_r: int):
    grid = resolving_grid(Branch.RHO1, 0.3, 3, (n_s, n_r))
    return np.array(grid.s_grid), np.array(grid.r_grid)


class TestGrid:

    def test_even_s_size_is_rejected(self):
        with pytest.raises(DomainError):
            AxiGrid.build(32, 17, 3)

    def test_unknowns_cover_the_quarter_disk(self):
        grid = AxiGrid.build(33, 17, 3)
        s = grid.s_grid[grid.nodes[:, 0]]
        r = grid.r_grid[grid.nodes[:, 1]]
        assert np.all(s >= 0)
        assert np.all(s * s + r * r < 1)
        assert grid.laplacian.shape == (grid.size, grid.size)
        assert np.any(grid.near_boundary)

    def test_grid_is_cached(self):
        assert AxiGrid.build(33, 17, 4) is AxiGrid.build(33, 17, 4)

    def test_field_round_trip_mirrors_in_s(self):
        grid = AxiGrid.build(33, 17, 3)
        field = grid.to_field(grid.to_vector(sampled(lambda s, r: s * s + r, 33, 17)))
        assert field.evenness_error() == 0.0

    def test_critical_exponent(self):
        assert critical_exponent(3) == 5.0
        assert critical_exponent(6) == 2.0

    @pytest.mark.parametrize("s_grid, r_grid", [
        (np.linspace(-1.0, 1.0, 32), np.linspace(0.0, 1.0, 17)),
        (np.linspace(-1.0, 1.0, 33) + 1e-3 * np.eye(33)[5], np.linspace(0.0, 1.0, 17)),
        (np.linspace(-1.0, 1.0, 33), np.linspace(0.0, 0.9, 17)),
        (np.linspace(-1.0, 1.0, 33)[::-1], np.linspace(0.0, 1.0, 17)),
    ], ids=["even", "asymmetric", "short", "decreasing"])
    def test_bad_coordinates_are_rejected(self, s_grid, r_grid):
        with pytest.raises(DomainError):
            AxiGrid.from_coordinates(s_grid, r_grid, 3)

    def test_graded_coordinates(self):
        s_grid, r_grid = stretched_grid(65, 33)
        grid = AxiGrid.from_coordinates(s_grid, r_grid, 3)
        assert grid.s_grid[grid.center_index] == 0.0
        assert np.all(grid.s_grid[grid.nodes[:, 0]] >= 0)
        field = grid.to_field(grid.to_vector(sampled_on(lambda s, r: s * s + r, s_grid, r_grid)))
        assert field.evenness_error() == 0.0


class TestGradedAxis:

    def test_nodes_follow_the_width_function(self):
        nodes = graded_axis(200, (0.0, 0.5), (1e-3, 2e-3))
        widths = np.diff(nodes)
        assert nodes[0] == 0.0 and nodes[-1] == 1.0
        assert len(nodes) == 201
        assert np.all(widths > 0)
        near_half = widths[np.argmin(np.abs(nodes[:-1] - 0.5))]
        assert 1.5 < near_half / widths[0] < 2.5
        assert widths[0] < np.max(widths) / 10

    def test_short_budget_widens_every_cell(self):
        widths = np.diff(graded_axis(10, (0.0,), (1e-3,)))
        assert np.all(widths > 1e-3)

    @pytest.mark.parametrize("centers, widths", [((0.0, 0.5), (1e-3,)), ((0.0,), (0.0,)), ((0.0,), (-1e-3,))])
    def test_invalid_widths(self, centers, widths):
        with pytest.raises(DomainError):
            graded_axis(20, centers, widths)

    def test_resolving_grid_matches_the_bubble_scales(self, critical_rhos_n3):
        grid = resolving_grid(Branch.RHO1, 0.05, 3, (129, 65))
        point = fibered_point(critical_rhos_n3[0], ReducedConfig(dimension=3, c_n=bubble_energy_constant(3)))
        cell = point.lam ** 2 * 0.05 / 3
        assert (grid.n_s, grid.n_r) == (129, 65)
        assert grid.s_grid[grid.center_index] == 0.0
        assert np.max(np.abs(grid.s_grid + grid.s_grid[::-1])) == 0.0
        assert 0.3 * cell < np.min(np.diff(grid.s_grid)) < 2.0 * cell
        assert 0.3 * cell < np.min(np.diff(grid.r_grid)) < 2.0 * cell
        assert np.argmin(np.diff(grid.s_grid)) in (grid.center_index - 1, grid.center_index)

    def test_resolving_grid_rejects_even_sizes(self):
        with pytest.raises(DomainError):
            resolving_grid(Branch.RHO2, 0.1, 3, (128, 65))


class TestDiscreteOperator:

    @pytest.mark.parametrize("N", [3, 4, 7])
    @pytest.mark.parametrize("shape", [(33, 17), (65, 33)])
    def test_paraboloid_is_solved_exactly(self, N, shape):
        # -Delta(1 - |x|^2) = 2N and the stencils are exact on quadratics
        v = sampled(paraboloid, *shape)
        residual = assemble_residual(v, 0.1, N)
        p = critical_exponent(N)
        expected = 2 * N - np.abs(v.values) ** (p - 1 - 0.1) * v.values
        assert np.max(np.abs(residual.values - expected)[v.mask]) < 1e-8

    @pytest.mark.parametrize("N", [3, 5])
    @pytest.mark.parametrize("coordinates", [stretched_grid, bubble_grid], ids=["stretched", "bubble"])
    def test_paraboloid_is_solved_exactly_on_graded_grids(self, N, coordinates):
        s_grid, r_grid = coordinates(65, 33)
        v = sampled_on(paraboloid, s_grid, r_grid)
        residual = assemble_residual(v, 0.1, N)
        p = critical_exponent(N)
        expected = 2 * N - np.abs(v.values) ** (p - 1 - 0.1) * v.values
        scale = np.max(np.abs(AxiGrid.from_coordinates(s_grid, r_grid, N).laplacian.diagonal()))
        assert np.max(np.abs(residual.values - expected)[v.mask]) < 1e-13 * scale

    def test_extended_values_use_the_extended_operator(self):
        v = sampled(paraboloid, 33, 17)
        extended = Field2D(v.s_grid, v.r_grid, v.values.astype(EXTENDED), v.mask)
        residual = assemble_residual(extended, 0.1, 3)
        assert residual.values.dtype == EXTENDED
        assert np.max(np.abs(residual.values - assemble_residual(v, 0.1, 3).values)[v.mask]) < 1e-8

    @pytest.mark.parametrize("N", [3, 5])
    def test_second_order_convergence(self, N):
        assert manufactured_order(N) >= 1.8

    def test_epsilon_range(self):
        v = sampled(paraboloid, 33, 17)
        with pytest.raises(DomainError):
            assemble_residual(v, critical_exponent(3) - 1.0, 3)
        with pytest.raises(DomainError):
            assemble_residual(v, -0.1, 3)

    def test_field_on_another_lattice_is_rejected(self):
        s_grid, r_grid, mask = half_disk_grid(33, 17)
        field = Field2D(s_grid * 0.5, r_grid, np.zeros(mask.shape), mask)
        with pytest.raises(DomainError):
            assemble_residual(field, 0.1, 3)


class TestNewton:

    def test_zero_is_the_trivial_solution(self):
        result = newton_solve(sampled(lambda s, r: 0 * s, 33, 17), 0.1, 3)
        assert result.newton_iterations == 0
        assert result.is_trivial
        assert result.final_residual == 0.0
        assert result.discrete_energy == 0.0

    def test_small_positive_guess_collapses_to_zero(self):
        result = newton_solve(sampled(lambda s, r: 1e-3 * paraboloid(s, r), 33, 17), 0.1, 3)
        assert result.is_trivial
        assert result.residual_history[-1] < result.residual_history[0]

    def test_iteration_limit(self):
        guess = sampled(lambda s, r: 0.5 * paraboloid(s, r), 33, 17)
        with pytest.raises(NonConvergenceError) as info:
            newton_solve(guess, 0.1, 3, tol=1e-300, max_iter=1)
        assert len(info.value.residual_history) == 2

    def test_convergence_is_judged_on_the_absolute_residual(self):
        guess = sampled(lambda s, r: 1e-3 * paraboloid(s, r), 33, 17)
        result = newton_solve(guess, 0.1, 3, tol=1e-4)
        assert result.final_residual < 1e-4
        assert result.final_residual == result.residual_history[-1]
        assert all(norm >= 1e-4 for norm in result.residual_history[:-1])
        assert result.residual_history[0] == pytest.approx(6e-3, rel=1e-3)

    def test_default_tolerance_is_absolute(self):
        result = newton_solve(sampled(lambda s, r: 1e-3 * paraboloid(s, r), 33, 17), 0.1, 3)
        assert result.final_residual < DEFAULT_TOL
        assert result.residual_floor < DEFAULT_TOL

    def test_homotopy_reaches_the_tolerance(self):
        result = homotopy_solve(sampled(lambda s, r: 1e-3 * paraboloid(s, r), 33, 17), 0.1, 3)
        assert result.is_trivial
        assert result.final_residual < DEFAULT_TOL
        assert result.residual_history[0] == pytest.approx(6e-3, rel=1e-3)

    def test_homotopy_from_a_solution_does_nothing(self):
        result = homotopy_solve(sampled(lambda s, r: 0 * s, 33, 17), 0.1, 3)
        assert result.newton_iterations == 0
        assert result.residual_history == [0.0]

    @pytest.mark.skipif(np.finfo(EXTENDED).eps >= np.finfo(np.float64).eps,
                        reason="long double is plain double on this platform")
    def test_extended_iterates_lower_the_round_off_floor(self):
        grid = AxiGrid.build(33, 17, 3)
        v = grid.to_vector(sampled(lambda s, r: 0.5 * paraboloid(s, r), 33, 17))
        assert residual_floor(grid, v.astype(EXTENDED), 0.1) < 1e-2 * residual_floor(grid, v, 0.1)

    def test_ansatz_guess_on_a_graded_grid(self):
        grid = resolving_grid(Branch.RHO2, 0.1, 3, (65, 33))
        guess, predicted = ansatz_guess(Branch.RHO2, 0.1, 3, grid)
        assert np.array_equal(guess.s_grid, grid.s_grid)
        assert np.array_equal(guess.r_grid, grid.r_grid)
        s, values = guess.axis_profile()
        assert values[np.argmin(np.abs(s))] > 0
        assert values[np.argmin(np.abs(s - predicted.rho))] < 0
        assert guess.evenness_error() < 1e-9

    def test_invalid_parameters(self):
        guess = sampled(paraboloid, 33, 17)
        with pytest.raises(DomainError):
            newton_solve(guess, 0.1, 3, tol=0.0)
        with pytest.raises(DomainError):
            newton_solve(guess, 0.1, 3, max_iter=0)

    def test_bubble_seed_that_collapses_loses_its_sign_structure(self):
        guess, _ = ansatz_guess(Branch.RHO2, 0.1, 3, (33, 17))
        with pytest.raises(SignStructureLostError):
            newton_solve(guess.scaled(1e-3), 0.1, 3)

    def test_ansatz_guess_has_the_expected_signs(self):
        guess, predicted = ansatz_guess(Branch.RHO2, 0.1, 3, (33, 17))
        s, values = guess.axis_profile()
        assert values[np.argmin(np.abs(s))] > 0
        assert values[np.argmin(np.abs(s - predicted.rho))] < 0
        assert guess.evenness_error() < 1e-9


class TestDiagnostics:

    def test_normal_derivative_of_the_paraboloid(self):
        field = sampled(paraboloid, 129, 65)
        samples = boundary_normal_derivative(field, np.linspace(-1.0, 1.0, 9))
        assert len(samples) == 9
        for _, value in samples:
            assert value == pytest.approx(-2.0, abs=0.02)

    def test_dirichlet_energy_of_the_paraboloid(self):
        # 1/2 int_B |grad(a (1 - |x|^2))|^2 = 8 pi a^2 / 5 in three dimensions
        a = 1e-2
        field = sampled(lambda s, r: a * paraboloid(s, r), 129, 65)
        assert discrete_energy(field, 0.1, 3) == pytest.approx(8 * math.pi * a * a / 5, rel=0.05)

    def test_dirichlet_energy_on_a_stretched_grid(self):
        a = 1e-2
        field = sampled_on(lambda s, r: a * paraboloid(s, r), *stretched_grid(257, 129))
        assert discrete_energy(field, 0.1, 3) == pytest.approx(8 * math.pi * a * a / 5, rel=0.05)

    def test_parabolic_vertex_with_uneven_spacing(self):
        s = np.array([0.0, 0.1, 0.3, 0.35])
        values = (s - 0.12) ** 2
        assert _parabolic_vertex(s, values, 1) == pytest.approx(0.12, abs=1e-12)
        assert _parabolic_vertex(s, values, 0) == 0.0
        assert _parabolic_vertex(s, np.ones(4), 1) == 0.1

    def test_trivial_solution_has_no_diagnostics(self):
        result = newton_solve(sampled(lambda s, r: 0 * s, 33, 17), 0.1, 3)
        with pytest.raises(ExtractionError):
            extract_diagnostics(result, 3)


class TestContinuationArguments:

    def test_ladder_needs_two_steps(self):
        with pytest.raises(DomainError):
            continue_in_epsilon(0.3, 0.1, 1, Branch.RHO1, 3, AxiGrid.build(33, 17, 3))

    def test_ladder_must_decrease(self):
        with pytest.raises(DomainError):
            continue_in_epsilon(0.1, 0.3, 4, Branch.RHO1, 3, AxiGrid.build(33, 17, 3))

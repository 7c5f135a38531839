"""
Tests for kernel evaluation, diagonal averaging and the quadrature fast solver
"""

import numpy as np
import pytest

from config.settings import settings
from src.green.augmented_variable import AugmentedKind
from src.green.surrogate import (
    ExactGreenKernel,
    GreenSurrogate,
    diagonal_value,
    diagonal_values,
    disc_rule,
    evaluate_green,
    gauss_rule,
    midpoint_rule,
    reconstruct_solution,
)
from src.models.mlp_network import init_network
from src.problems.benchmark_problems import Domain, EllipticProblem, manufactured_case
from src.problems.meshing import mesh_unit_disc
from src.utils.errors import ConfigError, DimensionMismatchError


def _surrogate(rng, d, kind=None):
    net = init_network(2 * d + 1, 2, 12, seed=int(rng.integers(1 << 30)))
    params = [p + rng.uniform(-0.3, 0.3, size=p.shape) for p in net.parameters()]
    domain = Domain('interval' if d == 1 else 'disc')
    return GreenSurrogate(net=net.with_parameters(params), dimension=d,
                          kind=kind or AugmentedKind.default_for(d), domain=domain)


def _zero_forcing(problem):
    return EllipticProblem(name=problem.name, domain=problem.domain, c=problem.c, grad_c=problem.grad_c,
                           k2=problem.k2, f=lambda x: np.zeros(np.reshape(x, (-1, problem.dimension)).shape[0]),
                           exact_green=problem.exact_green)


class TestEvaluateGreen:

    @pytest.mark.parametrize("d", [1, 2])
    def test_bit_symmetric(self, rng, d):
        surrogate = _surrogate(rng, d)
        if d == 1:
            x, y = rng.uniform(0, 1, 200), rng.uniform(0, 1, 200)
        else:
            x, y = 0.6 * rng.uniform(-1, 1, (200, 2)), 0.6 * rng.uniform(-1, 1, (200, 2))
        np.testing.assert_array_equal(evaluate_green(surrogate, x, y), evaluate_green(surrogate, y, x))

    def test_single_pair_returns_float(self, rng):
        surrogate = _surrogate(rng, 2)
        value = evaluate_green(surrogate, [0.1, 0.2], [0.3, -0.1])
        assert isinstance(value, float)
        assert value == evaluate_green(surrogate, [0.3, -0.1], [0.1, 0.2])

    def test_zero_network_is_zero(self):
        net = init_network(3, 1, 4, seed=0).with_parameters([np.zeros((4, 3)), np.zeros(4),
                                                             np.zeros((1, 4)), np.zeros(1)])
        surrogate = GreenSurrogate(net=net, dimension=1, kind=AugmentedKind.abs(), domain=Domain('interval'))
        np.testing.assert_array_equal(evaluate_green(surrogate, np.linspace(0, 1, 11), np.full(11, 0.4)), 0.0)

    def test_exact_kernel_matches_closed_form(self):
        kernel = ExactGreenKernel(manufactured_case('poisson1d'))
        assert evaluate_green(kernel, 0.2, 0.6) == pytest.approx(0.08, abs=1e-15)
        assert evaluate_green(kernel, 0.3, 0.3) == pytest.approx(0.21, abs=1e-15)

    def test_input_dimension_checked(self):
        with pytest.raises(DimensionMismatchError):
            GreenSurrogate(net=init_network(5, 1, 4, seed=0), dimension=1, kind=AugmentedKind.abs(),
                           domain=Domain('interval'))

    def test_helmholtz_has_no_exact_kernel(self):
        with pytest.raises(ConfigError):
            ExactGreenKernel(manufactured_case('helmholtz1d'))

    def test_coincident_disc_points_use_averaging(self):
        kernel = ExactGreenKernel(manufactured_case('poisson2d'))
        value = evaluate_green(kernel, [0.0, 0.0], [0.0, 0.0], r_avg=0.01)
        assert value == pytest.approx(-np.log(0.01) / (2 * np.pi), rel=1e-12)

    def test_chunked_evaluation_matches(self, rng, monkeypatch):
        surrogate = _surrogate(rng, 1)
        x, y = rng.uniform(0, 1, 50), rng.uniform(0, 1, 50)
        whole = evaluate_green(surrogate, x, y)
        monkeypatch.setattr(settings, 'kernel_eval_chunk', 7)
        np.testing.assert_allclose(evaluate_green(surrogate, x, y), whole, rtol=1e-14, atol=1e-15)


class TestDiagonalValue:

    def test_disc_centre_exact_kernel(self):
        kernel = ExactGreenKernel(manufactured_case('poisson2d'))
        assert diagonal_value(kernel, [0.0, 0.0], r_avg=0.01) == pytest.approx(0.7329, abs=1e-4)

    def test_interval_direct_evaluation(self):
        kernel = ExactGreenKernel(manufactured_case('poisson1d'))
        assert diagonal_value(kernel, 0.5, r_avg=0.01) == 0.25

    def test_single_angle_is_one_evaluation(self, rng):
        surrogate = _surrogate(rng, 2)
        x = np.array([0.2, -0.1])
        expected = evaluate_green(surrogate, x, x + np.array([0.05, 0.0]))
        assert diagonal_value(surrogate, x, r_avg=0.05, k_avg=1) == expected

    def test_circle_leaving_the_disc_is_clipped(self):
        kernel = ExactGreenKernel(manufactured_case('poisson2d'))
        values, clipped = diagonal_values(kernel, np.array([[0.0, 0.0], [0.995, 0.0]]), r_avg=0.01)
        np.testing.assert_array_equal(clipped, [False, True])
        assert np.all(np.isfinite(values))


class TestReconstructSolution:

    def test_interval_exact_kernel_midpoint(self):
        problem = manufactured_case('poisson1d')
        h = 2.0 ** -10
        grid = np.arange(1, 1024) * h
        u = reconstruct_solution(ExactGreenKernel(problem), problem, grid, midpoint_rule(h))
        assert np.max(np.abs(u - problem.exact_u(grid[:, None]))) <= 1e-3

    def test_gauss_rule_is_more_accurate(self):
        problem = manufactured_case('poisson1d')
        h = 2.0 ** -8
        grid = np.arange(1, 256) * h
        kernel = ExactGreenKernel(problem)
        exact = problem.exact_u(grid[:, None])
        midpoint_error = np.max(np.abs(reconstruct_solution(kernel, problem, grid, midpoint_rule(h)) - exact))
        gauss_error = np.max(np.abs(reconstruct_solution(kernel, problem, grid, gauss_rule(h)) - exact))
        assert gauss_error < midpoint_error

    def test_zero_forcing(self, rng):
        problem = _zero_forcing(manufactured_case('poisson1d'))
        u = reconstruct_solution(_surrogate(rng, 1), problem, np.linspace(0.1, 0.9, 9), midpoint_rule(1 / 64))
        np.testing.assert_array_equal(u, 0.0)

    def test_disc_error_decreases_under_refinement(self, rng):
        problem = manufactured_case('poisson2d')
        kernel = ExactGreenKernel(problem)
        radius = 0.8 * np.sqrt(rng.uniform(size=15))
        theta = rng.uniform(0, 2 * np.pi, 15)
        grid = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
        errors = []
        for h in (0.2, 0.1, 0.05):
            u = reconstruct_solution(kernel, problem, grid, disc_rule(mesh_unit_disc(h)))
            errors.append(np.max(np.abs(u - problem.exact_u(grid))))
        assert errors[0] > errors[1] > errors[2]

    def test_disc_rule_integrates_the_polygon_area(self):
        mesh = mesh_unit_disc(0.1)
        assert disc_rule(mesh).weights.sum() == pytest.approx(mesh.areas().sum(), rel=1e-14)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimensionMismatchError):
            reconstruct_solution(_surrogate(rng, 1), manufactured_case('poisson2d'),
                                 np.zeros((2, 2)), midpoint_rule(0.5))

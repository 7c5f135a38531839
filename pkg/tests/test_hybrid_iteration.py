"""
Tests for the hybrid Jacobi/neural iteration and its amplification diagnostics
"""

import numpy as np
import pytest

from src.hybrid.hybrid_iteration import (
    HybridConfig,
    amplification_radius,
    hybrid_iterate,
    hybrid_step_matrix,
    jacobi_matrix,
)
from src.preconditioners.dense_neural import build_dense_neural
from src.green.surrogate import ExactGreenKernel
from src.problems.benchmark_problems import manufactured_case
from src.problems.discretization import assemble_poisson1d_fem
from src.solvers.spectrum import jacobi_mode_basis
from src.utils.errors import ConfigError, NumericalError


def _poisson(exponent):
    system = assemble_poisson1d_fem(2.0 ** -exponent)
    green = build_dense_neural(ExactGreenKernel(manufactured_case('poisson1d')), system.nodes).matrix
    return system, green


def _perturbed(green, rng, eps=0.05):
    """(I + eps S) G with a random S of unit spectral norm"""
    S = rng.standard_normal(green.shape)
    S /= np.linalg.norm(S, 2)
    return (np.eye(green.shape[0]) + eps * S) @ green


class TestHybridConfig:

    def test_defaults(self):
        config = HybridConfig()
        assert config.period == 2
        assert config.omega == 0.5
        assert config.neural is None

    def test_period_below_two_rejected(self):
        with pytest.raises(ConfigError):
            HybridConfig.create(period=1)

    def test_neural_steps_follow_the_period(self):
        config = HybridConfig(period=4, neural=np.eye(2))
        assert [k for k in range(1, 13) if config.is_neural_step(k)] == [4, 8, 12]


class TestHybridIterate:

    def test_exact_inverse_solves_at_the_first_neural_step(self):
        system, green = _poisson(6)
        U, trace = hybrid_iterate(system.matrix, system.rhs, HybridConfig(neural=green, tol=1e-10))
        assert trace.iterations == 2
        assert trace.neural_applications == 1
        np.testing.assert_allclose(U, system.reference_solution(), rtol=1e-9)

    def test_error_propagation_matches_the_period_matrix(self, rng):
        system, green = _poisson(4)
        neural = _perturbed(green, rng, eps=0.3)
        reference = system.reference_solution()
        for period in (2, 3):
            config = HybridConfig(period=period, neural=neural, tol=None, max_iterations=2 * period)
            U, _ = hybrid_iterate(system.matrix, system.rhs, config)
            step = hybrid_step_matrix(system.matrix, jacobi_matrix(system.matrix), neural, period)
            expected = np.linalg.matrix_power(step, 2) @ reference
            np.testing.assert_allclose(reference - U, expected, rtol=1e-10, atol=1e-10 * np.linalg.norm(reference))

    def test_jacobi_only_never_applies_the_neural_step(self):
        system, _ = _poisson(5)
        _, trace = hybrid_iterate(system.matrix, system.rhs, HybridConfig(max_iterations=50))
        assert trace.neural_applications == 0
        assert trace.solver == 'jacobi'
        assert trace.status == 'maxiter'
        assert trace.iterations == 50

    def test_shorter_period_converges_faster(self, rng):
        system, green = _poisson(6)
        neural = _perturbed(green, rng)
        reference = system.reference_solution()
        counts = []
        for period in (2, 4, 8):
            config = HybridConfig(period=period, neural=neural, tol=1e-9)
            _, trace = hybrid_iterate(system.matrix, system.rhs, config, reference=reference)
            assert trace.status == 'converged'
            counts.append(trace.iterations)
        assert counts[0] < counts[1] < counts[2]

    def test_jacobi_step_after_a_neural_step_damps_the_highest_mode(self, rng):
        system, green = _poisson(5)
        basis = jacobi_mode_basis(system.matrix)
        config = HybridConfig(neural=_perturbed(green, rng, eps=0.2), tol=None, max_iterations=12)
        _, trace = hybrid_iterate(system.matrix, system.rhs, config, reference=system.reference_solution(),
                                  mode_basis=basis)
        highest = trace.mode_matrix()[:, -1]
        bound = basis.factors()[-1] + 1e-8
        # trace entry i holds U^[i+1]; the neural step from k = 2, 4, ... is followed by Jacobi
        for k in range(2, 12, 2):
            assert highest[k + 1] <= bound * highest[k] + 1e-14

    def test_non_finite_iterate_reports_k(self):
        system, _ = _poisson(4)
        config = HybridConfig(neural=lambda r: np.full_like(r, np.nan), tol=None, max_iterations=5)
        with pytest.raises(NumericalError, match="k = 2"):
            hybrid_iterate(system.matrix, system.rhs, config)


class TestAmplificationRadius:

    def test_exact_inverse_gives_zero(self):
        system, green = _poisson(5)
        radius = amplification_radius(system.matrix, jacobi_matrix(system.matrix), green, 2)
        assert radius < 1e-8

    def test_zero_preconditioners_give_one(self):
        system, _ = _poisson(4)
        assert amplification_radius(system.matrix, None, None, 2) == pytest.approx(1.0, abs=1e-12)

    def test_perturbed_kernel_is_a_contraction(self, rng):
        system, green = _poisson(6)
        radius = amplification_radius(system.matrix, jacobi_matrix(system.matrix), _perturbed(green, rng), 2)
        assert radius < 1.0

    def test_accepts_a_dense_preconditioner_object(self):
        system, _ = _poisson(4)
        prec = build_dense_neural(ExactGreenKernel(manufactured_case('poisson1d')), system.nodes)
        assert amplification_radius(system.matrix, None, prec, 3) < 1e-8

    def test_period_checked(self):
        system, _ = _poisson(4)
        with pytest.raises(ConfigError):
            amplification_radius(system.matrix, None, None, 1)

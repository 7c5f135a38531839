"""
Tests for dense spectra, condition numbers, Lanczos estimates and the Jacobi mode basis
"""

import numpy as np
import pytest

from src.problems.discretization import assemble_poisson1d_fem
from src.solvers.iterative import bicg
from src.solvers.spectrum import (
    condition_number,
    eig_dense,
    jacobi_mode_basis,
    lanczos_condition_estimate,
    modewise_error,
)
from src.utils.errors import DimensionMismatchError


class TestEigDense:

    def test_one_dimensional_fem_spectrum(self):
        h = 2.0 ** -6
        system = assemble_poisson1d_fem(h)
        report = eig_dense(system.matrix)
        j = np.arange(1, system.size + 1)
        np.testing.assert_allclose(report.eigenvalues, (2 / h) * (1 - np.cos(j * np.pi * h)), rtol=0, atol=1e-10)
        assert report.count == system.size

    def test_identity(self):
        report = eig_dense(np.eye(5))
        np.testing.assert_array_equal(report.eigenvalues, np.ones(5))
        assert report.condition == 1.0

    def test_symmetric_eigenpairs(self, rng):
        M = rng.standard_normal((20, 20))
        M = M + M.T
        report = eig_dense(M, vectors=True)
        for value, vector in zip(report.eigenvalues, report.eigenvectors.T):
            assert np.linalg.norm(M @ vector - value * vector) <= 1e-10 * np.linalg.norm(M, 2)

    def test_nonsymmetric_real_spectrum_is_sorted(self, rng):
        S = rng.standard_normal((6, 6))
        M = S @ np.diag([5.0, 1.0, 3.0, 2.0, 6.0, 4.0]) @ np.linalg.inv(S)
        report = eig_dense(M)
        assert np.isrealobj(report.eigenvalues)
        np.testing.assert_allclose(report.eigenvalues, np.arange(1.0, 7.0), rtol=1e-8)
        assert report.condition == pytest.approx(6.0, rel=1e-8)

    def test_generalized_problem(self):
        K = np.diag([2.0, 6.0])
        M = np.diag([1.0, 2.0])
        np.testing.assert_allclose(eig_dense(K, generalized_rhs=M).eigenvalues, [2.0, 3.0])

    def test_rejects_rectangular(self):
        with pytest.raises(DimensionMismatchError):
            eig_dense(np.ones((2, 3)))

    @pytest.mark.slow
    def test_condition_number_of_the_finest_fem_matrix(self):
        system = assemble_poisson1d_fem(2.0 ** -12)
        assert condition_number(system.matrix) == pytest.approx(6.80e6, rel=0.02)


class TestConditionNumber:

    def test_diagonal(self):
        assert condition_number(np.diag([1.0, 10.0])) == pytest.approx(10.0)

    def test_indefinite_uses_moduli(self):
        assert condition_number(np.diag([-4.0, 2.0])) == pytest.approx(2.0)


class TestLanczosEstimate:

    def test_matches_dense_condition_number(self):
        system = assemble_poisson1d_fem(2.0 ** -5)
        _, trace = bicg(system.matrix, system.rhs, tol=1e-12, maxiter=200)
        lo, hi, kappa = lanczos_condition_estimate(trace)
        report = eig_dense(system.matrix)
        assert hi == pytest.approx(report.eigenvalues[-1], rel=1e-6)
        assert lo == pytest.approx(report.eigenvalues[0], rel=1e-6)
        assert kappa == pytest.approx(report.condition, rel=1e-5)

    def test_jacobi_preconditioned_operator(self):
        system = assemble_poisson1d_fem(2.0 ** -4)
        inv_diag = 1.0 / system.matrix.diagonal()
        _, trace = bicg(system.matrix, system.rhs, apply_prec=lambda r: inv_diag * r, tol=1e-12)
        _, _, kappa = lanczos_condition_estimate(trace)
        expected = condition_number(inv_diag[:, None] * system.dense())
        assert kappa == pytest.approx(expected, rel=1e-6)


class TestModeBasis:

    def test_basis_vector_isolates_its_mode(self):
        basis = jacobi_mode_basis(assemble_poisson1d_fem(2.0 ** -4).matrix)
        coefficients = basis.coefficients(basis.vectors[:, 0])
        assert coefficients[0] == pytest.approx(1.0, rel=1e-12)
        assert np.max(coefficients[1:]) < 1e-12

    def test_parseval_in_the_diagonal_inner_product(self, rng):
        basis = jacobi_mode_basis(assemble_poisson1d_fem(2.0 ** -5).matrix)
        error = rng.standard_normal(basis.size)
        M = modewise_error(error, basis)
        assert np.sum(M ** 2) == pytest.approx(error @ (basis.diagonal * error), rel=1e-12)

    def test_amplification_factors(self):
        h = 2.0 ** -4
        basis = jacobi_mode_basis(assemble_poisson1d_fem(h).matrix, omega=0.5)
        j = np.arange(1, basis.size + 1)
        np.testing.assert_allclose(basis.eigenvalues, 1 - np.cos(j * np.pi * h), atol=1e-12)
        np.testing.assert_allclose(basis.factors(), np.abs(1 - 0.5 * basis.eigenvalues))

    def test_history_shape_checked(self):
        basis = jacobi_mode_basis(np.diag([1.0, 2.0, 3.0]))
        with pytest.raises(DimensionMismatchError):
            modewise_error(np.ones((4, 2)), basis)

"""
Tests for the finite-element spaces of the kernel eigenproblem
"""

import numpy as np
import pytest

from src.problems.meshing import mesh_unit_disc
from src.spectral.fe_space import disc_space, interval_space


class TestIntervalSpace:

    def test_linear_mass_matrix(self):
        h = 0.125
        space = interval_space(h, 'linear')
        assert space.size == 7
        np.testing.assert_allclose(space.nodes[:, 0], np.arange(1, 8) * h)
        expected = h / 6.0 * (4.0 * np.eye(7) + np.eye(7, k=1) + np.eye(7, k=-1))
        np.testing.assert_allclose(space.mass_matrix().toarray(), expected, rtol=1e-13, atol=1e-16)

    def test_quadratic_dofs_sit_on_half_steps(self):
        space = interval_space(0.25, 'quadratic')
        assert space.size == 7
        np.testing.assert_allclose(space.nodes[:, 0], np.arange(1, 8) / 8)
        assert space.quadrature_size == 16

    @pytest.mark.parametrize("kind,missing", [('linear', 1.0), ('quadratic', 1.0 / 3.0)])
    def test_basis_integrates_to_the_interior_share(self, kind, missing):
        h = 2.0 ** -4
        space = interval_space(h, kind)
        total = space.load_vector(np.ones(space.quadrature_size)).sum()
        assert total == pytest.approx(1.0 - missing * h, rel=1e-13)

    def test_quadratic_space_reproduces_quadratics(self):
        space = interval_space(2.0 ** -3, 'quadratic')
        coeffs = space.interpolate(lambda x: x[:, 0] * (1.0 - x[:, 0]))
        x = space.points[:, 0]
        np.testing.assert_allclose(space.basis @ coeffs, x * (1.0 - x), rtol=1e-13, atol=1e-15)

    def test_mass_matrix_is_symmetric_positive_definite(self):
        M = interval_space(2.0 ** -5, 'quadratic').mass_matrix().toarray()
        np.testing.assert_allclose(M, M.T, rtol=0, atol=1e-17)
        assert np.min(np.linalg.eigvalsh(M)) > 0

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            interval_space(0.3)
        with pytest.raises(ValueError):
            interval_space(0.25, 'cubic')


class TestDiscSpace:

    def test_dofs_are_the_interior_vertices(self):
        mesh = mesh_unit_disc(0.25)
        space = disc_space(mesh)
        assert space.size == mesh.interior.size
        assert space.dimension == 2
        assert space.quadrature_size == 3 * mesh.triangles.shape[0]

    def test_weights_cover_the_mesh(self):
        mesh = mesh_unit_disc(0.2)
        space = disc_space(mesh)
        assert space.weights.sum() == pytest.approx(np.abs(mesh.areas()).sum(), rel=1e-13)
        assert space.weights.sum() == pytest.approx(np.pi, rel=0.05)

    def test_mass_matrix(self):
        space = disc_space(mesh_unit_disc(0.2))
        M = space.mass_matrix().toarray()
        np.testing.assert_allclose(M, M.T, rtol=0, atol=1e-17)
        assert np.min(np.linalg.eigvalsh(M)) > 0
        assert M.sum() < np.pi

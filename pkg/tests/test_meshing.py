"""
Tests for the structured unit-disc triangulation
"""

from collections import Counter

import numpy as np
import pytest

from src.problems.meshing import mesh_unit_disc


@pytest.mark.parametrize("h", [0.1, 0.05, 0.025])
def test_vertices_inside_closed_disc(h):
    mesh = mesh_unit_disc(h)
    assert np.all(np.linalg.norm(mesh.vertices, axis=1) <= 1.0 + 1e-12)


@pytest.mark.parametrize("h", [0.1, 0.05, 0.025, 0.0125])
def test_max_edge_bound(h):
    assert mesh_unit_disc(h).max_edge() <= 1.2 * h


def test_area_converges_to_pi():
    errors = []
    for h in (0.1, 0.05, 0.025):
        mesh = mesh_unit_disc(h)
        areas = mesh.areas()
        assert np.all(areas > 0)
        errors.append(np.pi - areas.sum())
        assert 0 < errors[-1] <= h ** 2
    assert errors[2] < errors[1] < errors[0]


def test_conformity():
    mesh = mesh_unit_disc(0.1)
    t = mesh.triangles
    pairs = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    pairs.sort(axis=1)
    counts = Counter(map(tuple, pairs))

    boundary = mesh.boundary
    for (a, b), count in counts.items():
        if boundary[a] and boundary[b]:
            assert count == 1
        else:
            assert count == 2


def test_boundary_ring_on_circle():
    mesh = mesh_unit_disc(0.1)
    radii = np.linalg.norm(mesh.vertices[mesh.boundary], axis=1)
    np.testing.assert_allclose(radii, 1.0, atol=1e-15)
    assert np.all(np.linalg.norm(mesh.vertices[mesh.interior], axis=1) < 1.0 - 1e-3)


def test_deterministic():
    a = mesh_unit_disc(0.05)
    b = mesh_unit_disc(0.05)
    assert np.array_equal(a.vertices, b.vertices)
    assert np.array_equal(a.triangles, b.triangles)


def test_rejects_non_positive_size():
    with pytest.raises(ValueError):
        mesh_unit_disc(0.0)


def test_rejects_oversized_mesh():
    with pytest.raises(ValueError):
        mesh_unit_disc(1e-5)

"""
Tests for CSV, coordinate-matrix and mesh artifacts
"""

import numpy as np
import pandas as pd
import scipy.sparse as sp

from src.loaders.artifact_writer import ArtifactWriter, read_coordinates, read_frame
from src.problems.meshing import mesh_unit_disc


class TestFrames:

    def test_floats_parse_back_unchanged(self, tmp_path, rng):
        frame = pd.DataFrame({'k': np.arange(5), 'residual': rng.standard_normal(5) * 1e-9,
                              'ratio': 1.0 / (1.0 + np.arange(5) * np.pi)})
        writer = ArtifactWriter(str(tmp_path / 'run'))
        path = writer.write_frame(frame, 'trace.csv')
        loaded = read_frame(path)
        assert list(loaded.columns) == ['k', 'residual', 'ratio']
        np.testing.assert_array_equal(loaded['residual'].to_numpy(), frame['residual'].to_numpy())
        np.testing.assert_array_equal(loaded['ratio'].to_numpy(), frame['ratio'].to_numpy())
        assert writer.written == [path]

    def test_header_without_index(self, tmp_path):
        writer = ArtifactWriter(str(tmp_path))
        path = writer.write_frame(pd.DataFrame({'a': [1], 'b': [2.5]}), 'small.csv')
        with open(path, encoding='utf-8') as handle:
            assert handle.readline().strip() == 'a,b'


class TestCoordinates:

    def test_one_based_sorted_lines(self, tmp_path):
        matrix = sp.csr_matrix(np.array([[0.0, 2.0], [0.5, 0.0]]))
        path = ArtifactWriter(str(tmp_path)).write_coordinates(matrix, 'A.txt')
        with open(path, encoding='utf-8') as handle:
            lines = [line.split() for line in handle.read().splitlines()]
        assert lines == [['1', '2', '2'], ['2', '1', '0.5']]

    def test_matrix_parses_back(self, tmp_path, rng):
        dense = rng.standard_normal((6, 6))
        dense[np.abs(dense) < 0.5] = 0.0
        path = ArtifactWriter(str(tmp_path)).write_coordinates(dense, 'dense.txt')
        np.testing.assert_array_equal(read_coordinates(path, (6, 6)).toarray(), dense)


class TestMesh:

    def test_vertex_and_triangle_lists(self, tmp_path):
        mesh = mesh_unit_disc(0.5)
        vertices, triangles = ArtifactWriter(str(tmp_path)).write_mesh(mesh, prefix='coarse_')
        assert vertices.endswith('coarse_vertices.txt')
        np.testing.assert_array_equal(np.loadtxt(vertices), mesh.vertices)
        loaded = np.loadtxt(triangles, dtype=np.int64)
        assert loaded.min() == 1
        np.testing.assert_array_equal(loaded - 1, mesh.triangles)

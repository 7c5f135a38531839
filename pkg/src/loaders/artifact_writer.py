"""
Artifact Writer
Writes experiment tables and traces as CSV, matrices in coordinate text format and meshes as
vertex/triangle lists
"""

import os
import sys
from typing import List

import numpy as np
import pandas as pd
import scipy.sparse as sp

# Add project root to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..'))
from config.settings import settings
from src.problems.meshing import DiscMesh
from src.utils.logging import setup_logging

logger = setup_logging("artifact_writer")


def _prepare(path: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


class ArtifactWriter:
    """
    Writes every artifact of one run below a directory and remembers the paths for the
    run manifest
    """

    def __init__(self, directory: str):
        self.directory = directory
        self.written: List[str] = []

    def path(self, name: str) -> str:
        return os.path.join(self.directory, name)

    def record(self, path: str) -> str:
        """Register a file written by another component"""
        if path not in self.written:
            self.written.append(path)
        return path

    def write_frame(self, frame: pd.DataFrame, name: str) -> str:
        """CSV with a header row, no index and settings.csv_float_format for floats"""
        path = self.path(name)
        _prepare(path)
        frame.to_csv(path, index=False, float_format=settings.csv_float_format)
        logger.info(f"📝 {name}: {len(frame)} rows")
        return self.record(path)

    def write_coordinates(self, matrix, name: str) -> str:
        """
        Nonzero entries as 'row col value' lines, 1-based indices, 17 significant digits

        Args:
            matrix: Dense or sparse matrix
            name: File name

        Returns:
            Path written
        """
        coo = sp.coo_matrix(matrix)
        coo.sum_duplicates()
        order = np.lexsort((coo.col, coo.row))
        table = np.column_stack([coo.row[order] + 1, coo.col[order] + 1, coo.data[order]])
        path = self.path(name)
        _prepare(path)
        np.savetxt(path, table, fmt=['%d', '%d', '%.17g'], delimiter=' ')
        logger.info(f"📝 {name}: {coo.shape[0]} x {coo.shape[1]} matrix, {coo.nnz} entries")
        return self.record(path)

    def write_mesh(self, mesh: DiscMesh, prefix: str = '') -> List[str]:
        """vertices.txt ('x y') and triangles.txt (1-based vertex indices)"""
        vertices = self.path(f"{prefix}vertices.txt")
        triangles = self.path(f"{prefix}triangles.txt")
        _prepare(vertices)
        np.savetxt(vertices, mesh.vertices, fmt='%.17g', delimiter=' ')
        np.savetxt(triangles, mesh.triangles + 1, fmt='%d', delimiter=' ')
        logger.info(f"📝 Mesh: {mesh.num_vertices} vertices, {mesh.triangles.shape[0]} triangles")
        return [self.record(vertices), self.record(triangles)]

    def write_text(self, text: str, name: str) -> str:
        path = self.path(name)
        _prepare(path)
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text if text.endswith('\n') else text + '\n')
        logger.info(f"📝 {name}")
        return self.record(path)


def read_frame(path: str) -> pd.DataFrame:
    return pd.read_csv(path, float_precision='round_trip')


def read_coordinates(path: str, shape) -> sp.csr_matrix:
    """Inverse of ArtifactWriter.write_coordinates"""
    table = np.loadtxt(path, ndmin=2)
    if table.size == 0:
        return sp.csr_matrix(shape)
    rows = table[:, 0].astype(np.int64) - 1
    cols = table[:, 1].astype(np.int64) - 1
    return sp.coo_matrix((table[:, 2], (rows, cols)), shape=shape).tocsr()

"""
Dense preconditioner B_ij = G(x_i, x_j) built from a Green's kernel on the interior nodes
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from config.experiments import ExperimentConfig
from config.settings import settings
from src.green.surrogate import default_diagonal_radius, diagonal_values
from src.problems.meshing import DiscMesh
from src.utils.errors import DimensionMismatchError, NonFiniteKernelError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DensePreconditioner:
    """Dense kernel matrix with the record of how its diagonal was formed"""

    matrix: np.ndarray
    source: str
    r_avg: Optional[float]
    k_avg: int
    weight: float = 1.0
    lumped: bool = False

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def apply(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if r.shape[0] != self.size:
            raise DimensionMismatchError(f"Vector of length {r.shape[0]} for a preconditioner of size {self.size}")
        return self.matrix @ r

    def describe(self) -> dict:
        return {'type': 'dense', 'source': self.source, 'size': self.size, 'r_avg': self.r_avg,
                'k_avg': self.k_avg, 'weight': self.weight, 'lumped': self.lumped}


def _row_blocks(n: int, block_pairs: int) -> List[Tuple[int, int]]:
    """Row ranges whose upper-triangle pair counts stay near block_pairs"""
    blocks = []
    start = 0
    while start < n:
        stop = start + 1
        pairs = n - start - 1
        while stop < n and pairs + (n - stop - 1) <= block_pairs:
            pairs += n - stop - 1
            stop += 1
        blocks.append((start, stop))
        start = stop
    return blocks


def _fill_block(kernel, nodes: np.ndarray, matrix: np.ndarray, start: int, stop: int) -> None:
    n = nodes.shape[0]
    counts = n - 1 - np.arange(start, stop)
    rows = np.repeat(np.arange(start, stop), counts)
    # column j > i for every row i of the block
    cols = rows + 1 + np.arange(rows.size) - np.repeat(np.cumsum(counts) - counts, counts)
    if rows.size == 0:
        return
    values = kernel.pair_values(nodes[rows], nodes[cols])
    bad = ~np.isfinite(values)
    if np.any(bad):
        first = int(np.flatnonzero(bad)[0])
        pair = (int(rows[first]), int(cols[first]))
        raise NonFiniteKernelError(f"Kernel value at node pair {pair} is {values[first]}", pair=pair)
    matrix[rows, cols] = values
    matrix[cols, rows] = values


def build_dense_neural(kernel, nodes: np.ndarray, r_avg: Optional[float] = None,
                       k_avg: int = ExperimentConfig.DIAGONAL_ANGLES, weight: float = 1.0,
                       lumped_mass: Optional[np.ndarray] = None,
                       threads: Optional[int] = None) -> DensePreconditioner:
    """
    Evaluate the kernel on all pairs of interior nodes

    Off-diagonal entries come from the upper triangle and are mirrored, so the matrix is
    exactly symmetric. Diagonal entries are direct evaluations (d = 1) or circle averages of
    radius r_avg (d = 2).

    Args:
        kernel: GreenSurrogate or ExactGreenKernel
        nodes: Interior nodes [n] or [n, d]
        r_avg: Diagonal averaging radius (d = 2; default the exclusion radius). Fine grids use
            ExperimentConfig.DENSE_DIAGONAL_RADIUS, Schwarz coarse levels H / 2
        k_avg: Number of averaging angles (d = 2)
        weight: Scalar multiplying every entry (h for finite-difference systems)
        lumped_mass: Optional nodal masses m_j; scales column j by m_j for diagnostics
        threads: Worker threads over row blocks

    Returns:
        DensePreconditioner
    """
    d = kernel.dimension
    nodes = np.asarray(nodes, dtype=np.float64).reshape(-1, d)
    n = nodes.shape[0]
    if d == 2 and r_avg is None:
        r_avg = default_diagonal_radius(d)
    threads = threads or settings.num_threads

    matrix = np.zeros((n, n))
    blocks = _row_blocks(n, settings.kernel_eval_chunk)
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda block: _fill_block(kernel, nodes, matrix, *block), blocks))
    else:
        for block in blocks:
            _fill_block(kernel, nodes, matrix, *block)

    diagonal, clipped = diagonal_values(kernel, nodes, r_avg if r_avg is not None else 0.0, k_avg)
    bad = ~np.isfinite(diagonal)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NonFiniteKernelError(f"Diagonal kernel value at node {i} is {diagonal[i]}", pair=(i, i))
    matrix[np.arange(n), np.arange(n)] = diagonal

    if weight != 1.0:
        matrix *= weight
    lumped = lumped_mass is not None
    if lumped:
        lumped_mass = np.asarray(lumped_mass, dtype=np.float64)
        if lumped_mass.shape != (n,):
            raise DimensionMismatchError(f"Lumped mass has shape {lumped_mass.shape}, expected ({n},)")
        matrix *= lumped_mass[None, :]

    logger.info(f"Dense {kernel.source} preconditioner of size {n} built "
                f"({int(clipped.sum())} clipped diagonal circles)")
    return DensePreconditioner(matrix=matrix, source=kernel.source, r_avg=r_avg if d == 2 else None,
                               k_avg=k_avg, weight=weight, lumped=lumped)


def lumped_mass_disc(mesh: DiscMesh) -> np.ndarray:
    """Row sums of the linear-element mass matrix on interior vertices (area / 3 per triangle)"""
    areas = mesh.areas()
    mass = np.bincount(mesh.triangles.ravel(), weights=np.repeat(areas / 3.0, 3),
                       minlength=mesh.num_vertices)
    return mass[mesh.interior]

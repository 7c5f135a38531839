"""
Two-level overlapping additive Schwarz preconditioner with a kernel coarse solve

    z = R_0^T B_0 R_0 r + sum_l R_l^T A_l^{-1} R_l r

Local blocks A_l = R_l A R_l^T are factorized directly; B_0 is the kernel matrix on the coarse
nodes and R_0 the transpose of linear interpolation from the coarse to the fine nodes.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lu_factor, lu_solve

from config.settings import settings
from src.preconditioners.dense_neural import DensePreconditioner, build_dense_neural
from src.problems.discretization import barycentric_interpolation, hat_interpolation_1d
from src.problems.meshing import DiscMesh
from src.utils.errors import DimensionMismatchError, FactorizationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Subdomains:
    """Overlapping index sets over the n fine unknowns"""

    indices: List[np.ndarray]
    size: int
    H: float
    overlap: int

    @property
    def count(self) -> int:
        return len(self.indices)

    def restriction(self, block: int) -> sp.csr_matrix:
        """0/1 selection matrix R_l [n_l, n]"""
        idx = self.indices[block]
        return sp.csr_matrix((np.ones(idx.size), (np.arange(idx.size), idx)), shape=(idx.size, self.size))

    def coverage(self) -> np.ndarray:
        """Number of subdomains containing each fine index"""
        counts = np.zeros(self.size, dtype=int)
        for idx in self.indices:
            counts[idx] += 1
        return counts


def _subdomains_1d(n: int, h: float, H: float, overlap: int) -> List[np.ndarray]:
    ratio = int(round(H / h))
    if ratio < 1 or abs(ratio * h - H) > 1e-12 * max(H, 1.0):
        raise ValueError(f"Coarse cell width {H} must be a multiple of the mesh size {h}")
    cells = int(round(1.0 / H))
    sets = []
    for k in range(cells):
        # fine node i sits at x = i h for i = 1..n; cell k owns kH <= x < (k + 1)H
        lo = max(k * ratio - overlap, 1)
        hi = min((k + 1) * ratio + overlap, n + 1)
        if hi > lo:
            sets.append(np.arange(lo, hi) - 1)
    return sets


def _grow(pattern: sp.csr_matrix, core: np.ndarray, layers: int) -> np.ndarray:
    mask = np.zeros(pattern.shape[0], dtype=bool)
    mask[core] = True
    for _ in range(layers):
        mask = mask | (pattern @ mask.astype(np.float64) > 0)
    return np.flatnonzero(mask)


def _subdomains_2d(nodes: np.ndarray, matrix, H: float, overlap: int) -> List[np.ndarray]:
    if matrix is None:
        raise ValueError("Two-dimensional subdomains need the system matrix for graph growth")
    pattern = sp.csr_matrix((matrix != 0).astype(np.float64))
    cells_per_side = int(np.ceil(2.0 / H))
    cell = np.clip(np.floor((nodes + 1.0) / H).astype(int), 0, cells_per_side - 1)
    labels = cell[:, 0] * cells_per_side + cell[:, 1]
    return [_grow(pattern, np.flatnonzero(labels == label), overlap) for label in np.unique(labels)]


def build_subdomains(nodes: np.ndarray, H: float, overlap: int, h: Optional[float] = None,
                     matrix=None) -> Subdomains:
    """
    One overlapping subdomain per coarse cell

    In 1D the cell [kH, (k+1)H) is extended by ``overlap`` fine nodes on each side. In 2D the
    nodes of each square cell of width H are grown by ``overlap`` layers of matrix-graph
    neighbours.

    Args:
        nodes: Interior fine nodes [n] (1D, uniform with spacing h) or [n, 2]
        H: Coarse cell width
        overlap: Overlap in fine-mesh units (1D) or graph layers (2D)
        h: Fine mesh size (1D; default from the nodes)
        matrix: System matrix (2D)

    Returns:
        Subdomains
    """
    if overlap < 0:
        raise ValueError(f"Overlap must be non-negative, got {overlap}")
    nodes = np.asarray(nodes, dtype=np.float64)
    if nodes.ndim == 1 or nodes.shape[1] == 1:
        nodes = nodes.reshape(-1)
        h = 1.0 / (nodes.size + 1) if h is None else h
        sets = _subdomains_1d(nodes.size, h, H, overlap)
    else:
        sets = _subdomains_2d(nodes, matrix, H, overlap)

    subdomains = Subdomains(indices=sets, size=nodes.shape[0], H=H, overlap=overlap)
    if np.any(subdomains.coverage() == 0):
        raise ValueError("Subdomains do not cover every fine node")
    return subdomains


def coarse_restriction(fine_nodes: np.ndarray, coarse_nodes: Optional[np.ndarray] = None,
                       coarse_mesh: Optional[DiscMesh] = None) -> sp.csr_matrix:
    """R_0 = P^T with P linear interpolation from interior coarse nodes to the fine nodes"""
    fine_nodes = np.asarray(fine_nodes, dtype=np.float64)
    if coarse_mesh is not None:
        return barycentric_interpolation(coarse_mesh, fine_nodes).T.tocsr()
    if coarse_nodes is None:
        raise ValueError("Coarse restriction needs coarse nodes or a coarse mesh")
    return hat_interpolation_1d(np.asarray(coarse_nodes).reshape(-1), fine_nodes.reshape(-1)).T.tocsr()


@dataclass(eq=False)
class SchwarzPreconditioner:
    """Factorized local blocks plus an optional kernel coarse level"""

    subdomains: Subdomains
    factors: List[Tuple[np.ndarray, np.ndarray]] = field(repr=False)
    coarse_restriction: Optional[sp.csr_matrix] = field(default=None, repr=False)
    coarse: Optional[DensePreconditioner] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.subdomains.size

    def apply(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if r.shape[0] != self.size:
            raise DimensionMismatchError(f"Vector of length {r.shape[0]} for a preconditioner of size {self.size}")
        z = np.zeros(self.size)
        if self.coarse is not None:
            z += self.coarse_restriction.T @ self.coarse.apply(self.coarse_restriction @ r)
        for idx, factor in zip(self.subdomains.indices, self.factors):
            z[idx] += lu_solve(factor, r[idx])
        return z

    def describe(self) -> dict:
        return {
            'type': 'schwarz',
            'H': self.subdomains.H,
            'overlap': self.subdomains.overlap,
            'subdomains': self.subdomains.count,
            'coarse_size': 0 if self.coarse is None else self.coarse.size,
            'coarse_source': None if self.coarse is None else self.coarse.source,
        }


def _factorize(block: int, local: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    lu, piv = lu_factor(local, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if not np.all(np.isfinite(lu)) or np.min(pivots) <= np.finfo(np.float64).eps * np.max(pivots):
        raise FactorizationError(f"Local block {block} of size {local.shape[0]} is singular", block=block)
    return lu, piv


def build_schwarz(A, subdomains: Subdomains, kernel=None, coarse_nodes: Optional[np.ndarray] = None,
                  coarse_mesh: Optional[DiscMesh] = None, fine_nodes: Optional[np.ndarray] = None,
                  r_avg: Optional[float] = None, threads: Optional[int] = None) -> SchwarzPreconditioner:
    """
    Factorize the local blocks and build the kernel coarse level

    Args:
        A: System matrix
        subdomains: Overlapping decomposition
        kernel: Green's kernel for the coarse matrix (None: one-level preconditioner)
        coarse_nodes: Interior coarse nodes (1D)
        coarse_mesh: Coarse disc mesh (2D)
        fine_nodes: Interior fine nodes
        r_avg: Diagonal averaging radius of the coarse matrix (2D; default H / 2)
        threads: Worker threads for the local factorizations

    Returns:
        SchwarzPreconditioner
    """
    A = sp.csr_matrix(A)
    if A.shape != (subdomains.size, subdomains.size):
        raise DimensionMismatchError(f"Matrix shape {A.shape} does not match {subdomains.size} fine nodes")
    threads = threads or settings.num_threads

    def factorize(block: int):
        idx = subdomains.indices[block]
        return _factorize(block, A[idx][:, idx].toarray())

    blocks = range(subdomains.count)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            factors = list(pool.map(factorize, blocks))
    else:
        factors = [factorize(block) for block in blocks]

    restriction = coarse = None
    if kernel is not None:
        if fine_nodes is None:
            raise ValueError("A coarse level needs the fine nodes")
        restriction = coarse_restriction(fine_nodes, coarse_nodes, coarse_mesh)
        nodes = coarse_mesh.vertices[coarse_mesh.interior] if coarse_mesh is not None else coarse_nodes
        if kernel.dimension == 2 and r_avg is None:
            r_avg = subdomains.H / 2.0
        coarse = build_dense_neural(kernel, nodes, r_avg=r_avg, threads=threads)

    logger.info(f"Schwarz preconditioner: {subdomains.count} subdomains (H = {subdomains.H}, "
                f"overlap = {subdomains.overlap}), coarse size {0 if coarse is None else coarse.size}")
    return SchwarzPreconditioner(subdomains=subdomains, factors=factors, coarse_restriction=restriction,
                                 coarse=coarse)

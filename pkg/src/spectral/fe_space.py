"""
Finite-element spaces for the Galerkin kernel eigenproblem

Linear and quadratic Lagrange elements on (0, 1) and linear elements on a disc mesh, all with
homogeneous Dirichlet conditions. A space is stored as flat quadrature tables: every quadrature
point, its weight and the sparse matrix of basis values psi_a(x_q).
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from src.problems.discretization import BARY3_COORDS, BARY3_WEIGHTS
from src.problems.meshing import DiscMesh

logger = logging.getLogger(__name__)

SPACE_KINDS = ('linear', 'quadratic')

# 4-point Gauss-Legendre rule mapped to [0, 1]
_GAUSS4_NODES, _GAUSS4_WEIGHTS = np.polynomial.legendre.leggauss(4)
GAUSS4_POINTS = 0.5 + 0.5 * _GAUSS4_NODES
GAUSS4_WEIGHTS = 0.5 * _GAUSS4_WEIGHTS


@dataclass(frozen=True, eq=False)
class FeSpace:
    """
    Nodal finite-element space with its quadrature tables

    nodes are the free degrees of freedom [n, d]; points [Q, d] and weights [Q] list every
    quadrature point of every element; basis [Q, n] holds psi_a(x_q); element_of[q] is the
    element owning quadrature point q.
    """

    kind: str
    dimension: int
    nodes: np.ndarray
    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    basis: sp.csr_matrix = field(repr=False)
    element_of: np.ndarray = field(repr=False)
    h: float = 0.0
    mesh: DiscMesh = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def quadrature_size(self) -> int:
        return self.weights.size

    def mass_matrix(self) -> sp.csr_matrix:
        """M_ab = int psi_a psi_b, exact for the rules used"""
        return (self.basis.T @ sp.diags(self.weights) @ self.basis).tocsr()

    def load_vector(self, values: np.ndarray) -> np.ndarray:
        """int f psi_a from f sampled at the quadrature points"""
        return self.basis.T @ (self.weights * np.asarray(values, dtype=np.float64))

    def interpolate(self, func) -> np.ndarray:
        """Nodal interpolant coefficients of a function evaluated on points [n, d]"""
        return np.asarray(func(self.nodes), dtype=np.float64).reshape(-1)


def _lagrange_1d(kind: str, t: np.ndarray) -> np.ndarray:
    """Reference basis values [len(t), n_local] on [0, 1], local nodes ordered left to right"""
    if kind == 'linear':
        return np.column_stack([1.0 - t, t])
    return np.column_stack([(1.0 - t) * (1.0 - 2.0 * t), 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0)])


def interval_space(h: float, kind: str = 'linear') -> FeSpace:
    """
    Lagrange space on (0, 1) with uniform elements of width h

    Args:
        h: Element width (1/h must be an integer)
        kind: 'linear' or 'quadratic'

    Returns:
        FeSpace with 4 Gauss points per element
    """
    if kind not in SPACE_KINDS:
        raise ValueError(f"Unknown element kind '{kind}', expected one of {SPACE_KINDS}")
    cells = int(round(1.0 / h))
    if cells < 1 or abs(cells * h - 1.0) > 1e-12:
        raise ValueError(f"Element width must divide the unit interval: {h}")

    order = 1 if kind == 'linear' else 2
    grid = order * cells
    # global grid index g = order * e + local; free dofs are g = 1 .. grid - 1, stored at g - 1
    local = np.arange(order + 1)
    dof = (order * np.arange(cells))[:, None] + local[None, :] - 1
    dof[(dof < 0) | (dof >= grid - 1)] = -1

    q = GAUSS4_POINTS.size
    left = np.arange(cells) * h
    points = (left[:, None] + h * GAUSS4_POINTS[None, :]).reshape(-1, 1)
    weights = np.tile(h * GAUSS4_WEIGHTS, cells)
    values = _lagrange_1d(kind, GAUSS4_POINTS)

    rows = np.repeat(np.arange(cells * q).reshape(cells, q), order + 1, axis=1).reshape(cells, q, order + 1)
    cols = np.broadcast_to(dof[:, None, :], rows.shape)
    vals = np.broadcast_to(values[None, :, :], rows.shape)
    keep = cols >= 0
    basis = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(cells * q, grid - 1)).tocsr()

    nodes = (np.arange(1, grid) * (h / order)).reshape(-1, 1)
    logger.debug(f"{kind.capitalize()} interval space: {cells} elements, {grid - 1} dofs")
    return FeSpace(kind=kind, dimension=1, nodes=nodes, points=points, weights=weights, basis=basis,
                   element_of=np.repeat(np.arange(cells), q), h=h)


def disc_space(mesh: DiscMesh) -> FeSpace:
    """
    Linear space on the interior vertices of a disc mesh with the 3-point barycentric rule

    Args:
        mesh: DiscMesh

    Returns:
        FeSpace
    """
    triangles = mesh.triangles
    count = triangles.shape[0]
    corners = mesh.vertices[triangles]
    areas = np.abs(mesh.areas())
    points = np.einsum('qa,tad->tqd', BARY3_COORDS, corners).reshape(-1, 2)
    weights = (areas[:, None] * BARY3_WEIGHTS[None, :]).ravel()

    column_of = np.full(mesh.num_vertices, -1)
    column_of[mesh.interior] = np.arange(mesh.interior.size)
    q = BARY3_WEIGHTS.size
    rows = np.repeat(np.arange(count * q).reshape(count, q), 3, axis=1).reshape(count, q, 3)
    cols = np.broadcast_to(column_of[triangles][:, None, :], rows.shape)
    vals = np.broadcast_to(BARY3_COORDS[None, :, :], rows.shape)
    keep = cols >= 0
    basis = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])),
                          shape=(count * q, mesh.interior.size)).tocsr()

    logger.debug(f"Linear disc space: {count} triangles, {mesh.interior.size} dofs")
    return FeSpace(kind='linear', dimension=2, nodes=mesh.vertices[mesh.interior], points=points,
                   weights=weights, basis=basis, element_of=np.repeat(np.arange(count), q),
                   h=mesh.h_target, mesh=mesh)

"""
Discretizations of the benchmark problems into linear systems, and interlevel transfer matrices
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree
from scipy.sparse.linalg import spsolve

from src.problems.benchmark_problems import EllipticProblem, manufactured_case
from src.problems.meshing import DiscMesh

logger = logging.getLogger(__name__)

# 3-point Gauss rule on the reference interval (0, 1)
GAUSS3_POINTS = 0.5 + 0.5 * np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
GAUSS3_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 18.0

# 3-point interior barycentric rule on triangles (degree 2)
BARY3_COORDS = np.array([
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
])
BARY3_WEIGHTS = np.full(3, 1.0 / 3.0)


@dataclass(eq=False)
class DiscreteSystem:
    """
    Linear system A U = F on the interior nodes of a grid or mesh

    ``scheme`` is 'fem' (load vector holds integrals against basis functions) or 'fd'
    (load vector holds point values of f).
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    nodes: np.ndarray
    h: float
    scheme: str
    problem: str
    symmetric: bool = True
    definite: bool = True
    mesh: Optional[DiscMesh] = field(default=None, repr=False)
    _reference: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def dimension(self) -> int:
        return 1 if self.nodes.ndim == 1 else self.nodes.shape[1]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def reference_solution(self) -> np.ndarray:
        """Direct sparse solve, cached"""
        if self._reference is None:
            self._reference = spsolve(self.matrix.tocsc(), self.rhs)
        return self._reference

    def with_rhs(self, rhs: np.ndarray) -> "DiscreteSystem":
        return DiscreteSystem(matrix=self.matrix, rhs=np.asarray(rhs, dtype=np.float64), nodes=self.nodes,
                              h=self.h, scheme=self.scheme, problem=self.problem, symmetric=self.symmetric,
                              definite=self.definite, mesh=self.mesh)


def _interval_nodes(h: float) -> np.ndarray:
    cells = int(round(1.0 / h))
    if cells < 2 or abs(cells * h - 1.0) > 1e-12:
        raise ValueError(f"Mesh size must be 1/(n+1) with n >= 1, got {h}")
    return np.arange(1, cells) / cells


def assemble_poisson1d_fem(h: float, problem: Optional[EllipticProblem] = None) -> DiscreteSystem:
    """
    Linear finite elements for -u'' = f on (0, 1)

    Args:
        h: Mesh size 1/(n+1)
        problem: Source of the forcing (default: the 1D Poisson benchmark)

    Returns:
        DiscreteSystem with A = (1/h) tridiag(-1, 2, -1)
    """
    problem = problem or manufactured_case('poisson1d')
    nodes = _interval_nodes(h)
    n = nodes.size
    cells = n + 1

    main = np.full(n, 2.0 / h)
    off = np.full(n - 1, -1.0 / h)
    matrix = sp.diags([off, main, off], [-1, 0, 1], format='csr')

    # per-element Gauss quadrature of f against the two hats of the element
    left = np.arange(cells) / cells
    quad_x = left[:, None] + h * GAUSS3_POINTS[None, :]
    f_vals = problem.f(quad_x.reshape(-1, 1)).reshape(cells, 3)
    weighted = h * GAUSS3_WEIGHTS[None, :] * f_vals
    # element e spans nodes e-1 (rising hat falls) and e (hat rises); interior nodes are 0..n-1
    to_right_node = np.sum(weighted * GAUSS3_POINTS[None, :], axis=1)
    to_left_node = np.sum(weighted * (1.0 - GAUSS3_POINTS[None, :]), axis=1)
    rhs = to_right_node[:-1] + to_left_node[1:]

    return DiscreteSystem(matrix=matrix, rhs=rhs, nodes=nodes, h=h, scheme='fem', problem=problem.name)


def assemble_helmholtz1d_fd(h: float, problem: Optional[EllipticProblem] = None) -> DiscreteSystem:
    """
    Conservative central differences for -(c u')' - k2 u = f on (0, 1)

    Row i: (1/h^2)[-c_{i-1/2} u_{i-1} + (c_{i-1/2} + c_{i+1/2}) u_i - c_{i+1/2} u_{i+1}] - k2(x_i) u_i,
    with c evaluated at cell midpoints and F_i = f(x_i).
    """
    problem = problem or manufactured_case('helmholtz1d')
    nodes = _interval_nodes(h)
    n = nodes.size

    midpoints = (np.arange(n + 1) + 0.5) * h
    c_mid = problem.c(midpoints[:, None])
    k2 = problem.k2(nodes[:, None])

    main = (c_mid[:-1] + c_mid[1:]) / h ** 2 - k2
    off = -c_mid[1:-1] / h ** 2
    matrix = sp.diags([off, main, off], [-1, 0, 1], format='csr')
    rhs = problem.f(nodes[:, None])

    definite = not np.any(k2 > 0)
    return DiscreteSystem(matrix=matrix, rhs=rhs, nodes=nodes, h=h, scheme='fd', problem=problem.name,
                          definite=definite)


def assemble_system(problem: EllipticProblem, h: float) -> DiscreteSystem:
    """The discretization used for each benchmark problem on a 1D grid"""
    if problem.name == 'poisson1d':
        return assemble_poisson1d_fem(h, problem)
    if problem.name == 'helmholtz1d':
        return assemble_helmholtz1d_fd(h, problem)
    raise ValueError(f"No 1D discretization for problem {problem.name}")


# ========================
# 2D LINEAR ELEMENTS
# ========================

def _element_geometry(vertices: np.ndarray, triangles: np.ndarray):
    p = vertices[triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    # gradients of the three barycentric coordinates
    grads = np.empty((triangles.shape[0], 3, 2))
    grads[:, 1, 0] = e2[:, 1] / det
    grads[:, 1, 1] = -e2[:, 0] / det
    grads[:, 2, 0] = -e1[:, 1] / det
    grads[:, 2, 1] = e1[:, 0] / det
    grads[:, 0] = -grads[:, 1] - grads[:, 2]
    return 0.5 * det, grads


def assemble_stiffness(vertices: np.ndarray, triangles: np.ndarray) -> sp.csr_matrix:
    """Linear-element stiffness matrix on all vertices (no boundary conditions)"""
    area, grads = _element_geometry(vertices, triangles)
    local = area[:, None, None] * np.einsum('tad,tbd->tab', grads, grads)
    rows = np.repeat(triangles, 3, axis=1).ravel()
    cols = np.tile(triangles, (1, 3)).ravel()
    n = vertices.shape[0]
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_load(vertices: np.ndarray, triangles: np.ndarray, f) -> np.ndarray:
    """Load vector of f against the linear basis by the 3-point barycentric rule"""
    area, _ = _element_geometry(vertices, triangles)
    corners = vertices[triangles]
    quad_points = np.einsum('qa,tad->tqd', BARY3_COORDS, corners)
    f_vals = f(quad_points.reshape(-1, 2)).reshape(-1, 3)
    local = area[:, None] * np.einsum('q,tq,qa->ta', BARY3_WEIGHTS, f_vals, BARY3_COORDS)
    return np.bincount(triangles.ravel(), weights=local.ravel(), minlength=vertices.shape[0])


def assemble_poisson2d_fem(mesh: DiscMesh, problem: Optional[EllipticProblem] = None) -> DiscreteSystem:
    """
    Linear finite elements for -Laplace u = f on the unit disc, boundary rows eliminated
    """
    problem = problem or manufactured_case('poisson2d')
    interior = mesh.interior

    stiffness = assemble_stiffness(mesh.vertices, mesh.triangles)
    load = assemble_load(mesh.vertices, mesh.triangles, problem.f)
    matrix = stiffness[interior][:, interior].tocsr()

    return DiscreteSystem(matrix=matrix, rhs=load[interior], nodes=mesh.vertices[interior],
                          h=mesh.h_target, scheme='fem', problem=problem.name, mesh=mesh)


# ========================
# TRANSFER OPERATORS
# ========================

def hat_interpolation_1d(coarse_nodes: np.ndarray, fine_nodes: np.ndarray) -> sp.csr_matrix:
    """
    Piecewise-linear interpolation from interior coarse nodes to fine points on (0, 1)

    Boundary values are zero, so columns exist only for interior coarse nodes.

    Returns:
        Sparse matrix [n_fine, n_coarse]
    """
    coarse = np.concatenate([[0.0], np.asarray(coarse_nodes, dtype=np.float64), [1.0]])
    fine = np.asarray(fine_nodes, dtype=np.float64)
    cell = np.clip(np.searchsorted(coarse, fine, side='right') - 1, 0, coarse.size - 2)
    t = (fine - coarse[cell]) / (coarse[cell + 1] - coarse[cell])

    rows = np.concatenate([np.arange(fine.size), np.arange(fine.size)])
    cols = np.concatenate([cell - 1, cell])
    vals = np.concatenate([1.0 - t, t])
    keep = (cols >= 0) & (cols < coarse.size - 2) & (vals != 0.0)
    return sp.coo_matrix((vals[keep], (rows[keep], cols[keep])),
                         shape=(fine.size, coarse.size - 2)).tocsr()


def barycentric_interpolation(coarse: DiscMesh, points: np.ndarray, candidates: int = 12) -> sp.csr_matrix:
    """
    Linear interpolation from interior nodes of a coarse disc mesh to arbitrary points

    Points outside the coarse polygon use the closest candidate triangle with clipped,
    renormalised barycentric weights.

    Returns:
        Sparse matrix [n_points, n_coarse_interior]
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    corners = coarse.vertices[coarse.triangles]
    centroids = corners.mean(axis=1)
    k = min(candidates, coarse.triangles.shape[0])
    _, nearest = cKDTree(centroids).query(points, k=k)
    nearest = nearest.reshape(points.shape[0], k)

    # barycentric coordinates of every point in each candidate triangle
    a = corners[nearest, 0]
    e1 = corners[nearest, 1] - a
    e2 = corners[nearest, 2] - a
    d = points[:, None, :] - a
    det = e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0]
    l1 = (d[..., 0] * e2[..., 1] - d[..., 1] * e2[..., 0]) / det
    l2 = (e1[..., 0] * d[..., 1] - e1[..., 1] * d[..., 0]) / det
    bary = np.stack([1.0 - l1 - l2, l1, l2], axis=-1)

    best = np.argmax(bary.min(axis=-1), axis=1)
    rows = np.arange(points.shape[0])
    weights = np.clip(bary[rows, best], 0.0, None)
    weights /= weights.sum(axis=1, keepdims=True)
    tri = coarse.triangles[nearest[rows, best]]

    column_of = np.full(coarse.num_vertices, -1)
    column_of[coarse.interior] = np.arange(coarse.interior.size)
    cols = column_of[tri]
    keep = (cols >= 0) & (weights > 0.0)
    return sp.coo_matrix((weights[keep], (np.repeat(rows, 3).reshape(-1, 3)[keep], cols[keep])),
                         shape=(points.shape[0], coarse.interior.size)).tocsr()

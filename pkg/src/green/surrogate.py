"""
Symmetric Green's kernels: trained surrogates and exact analytic kernels

A GreenSurrogate evaluates the symmetrized network
    G(x, y) = 1/2 Ghat(x, y, phi(x, y)) + 1/2 Ghat(y, x, phi(y, x))
and an ExactGreenKernel wraps a problem's closed-form Green's function. Both are used through
evaluate_green, diagonal_value and reconstruct_solution.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config.experiments import ExperimentConfig
from config.settings import settings
from src.green.augmented_variable import AugmentedKind, network_inputs
from src.models.mlp_network import MlpNetwork, forward
from src.problems.benchmark_problems import Domain, EllipticProblem
from src.problems.discretization import BARY3_COORDS, BARY3_WEIGHTS, GAUSS3_POINTS, GAUSS3_WEIGHTS
from src.problems.meshing import DiscMesh
from src.utils.errors import ConfigError, DimensionMismatchError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GreenSurrogate:
    """Trained singularity-encoded network with its augmented variable and domain"""

    net: MlpNetwork
    dimension: int
    kind: AugmentedKind
    domain: Domain
    problem: str = ''

    source = 'surrogate'

    def __post_init__(self):
        if self.net.input_dim != 2 * self.dimension + 1:
            raise DimensionMismatchError(
                f"Network input_dim {self.net.input_dim} does not match 2d + 1 for d = {self.dimension}"
            )
        if self.domain.dimension != self.dimension:
            raise DimensionMismatchError(f"Domain {self.domain.kind} is not {self.dimension}-dimensional")
        self.kind.validate(self.dimension)

    def pair_values(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Symmetrized kernel for point pairs [N, d] (x = y only for d = 1)"""
        x = np.asarray(x, dtype=np.float64).reshape(-1, self.dimension)
        y = np.asarray(y, dtype=np.float64).reshape(-1, self.dimension)
        out = np.empty(x.shape[0])
        chunk = settings.kernel_eval_chunk
        for start in range(0, x.shape[0], chunk):
            xs, ys = x[start:start + chunk], y[start:start + chunk]
            inputs = network_inputs(self.kind, xs, ys)
            swapped = np.column_stack([ys, xs, inputs[:, -1]])
            # both passes see identical batch layouts, so swapping x and y swaps the two terms
            out[start:start + chunk] = 0.5 * forward(self.net, inputs) + 0.5 * forward(self.net, swapped)
        return out


@dataclass(frozen=True, eq=False)
class ExactGreenKernel:
    """Closed-form Green's function of a benchmark problem"""

    problem: EllipticProblem

    source = 'exact'

    def __post_init__(self):
        if self.problem.exact_green is None:
            raise ConfigError(f"Problem {self.problem.name} has no exact Green's function", key='problem')

    @property
    def dimension(self) -> int:
        return self.problem.dimension

    @property
    def domain(self) -> Domain:
        return self.problem.domain

    def pair_values(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1, self.dimension)
        y = np.asarray(y, dtype=np.float64).reshape(-1, self.dimension)
        return np.asarray(self.problem.exact_green(x, y), dtype=np.float64).reshape(-1)


def default_diagonal_radius(dimension: int) -> float:
    return ExperimentConfig.EXCLUSION_RADIUS[dimension]


def diagonal_values(kernel, points: np.ndarray, r_avg: float,
                    k_avg: int = ExperimentConfig.DIAGONAL_ANGLES) -> Tuple[np.ndarray, np.ndarray]:
    """
    Diagonal values G(x, x) for a batch of points

    d = 1 evaluates the continuous kernel directly. d = 2 averages the kernel over k_avg
    equally spaced points of the circle of radius r_avg around x (a scalar or
    one radius per point); circle points outside the domain are dropped and the point is flagged.

    Returns:
        (values [N], clipped [N] bool)
    """
    d = kernel.dimension
    points = np.asarray(points, dtype=np.float64).reshape(-1, d)
    if d == 1:
        return kernel.pair_values(points, points), np.zeros(points.shape[0], dtype=bool)

    n = points.shape[0]
    radius = np.broadcast_to(np.asarray(r_avg, dtype=np.float64), (n,)).copy()
    if not np.all(radius > 0) or k_avg < 1:
        raise ValueError(f"Diagonal averaging needs r_avg > 0 and k_avg >= 1, got {r_avg}, {k_avg}")

    theta = 2.0 * np.pi * np.arange(k_avg) / k_avg
    offsets = np.column_stack([np.cos(theta), np.sin(theta)])

    # circles wholly outside the closed domain shrink to half the boundary distance
    distance = kernel.domain.boundary_distance(points)
    circle = points[:, None, :] + radius[:, None, None] * offsets[None, :, :]
    inside = kernel.domain.contains(circle.reshape(-1, d)).reshape(n, k_avg)
    empty = ~inside.any(axis=1)
    if np.any(empty):
        radius[empty] = 0.5 * np.maximum(distance[empty], 0.0)
        circle = points[:, None, :] + radius[:, None, None] * offsets[None, :, :]
        inside = kernel.domain.contains(circle.reshape(-1, d)).reshape(n, k_avg)
    clipped = ~inside.all(axis=1)

    if np.any(radius == 0.0):
        raise ValueError("Diagonal averaging is undefined on the boundary of the domain")

    rows, cols = np.nonzero(inside)
    values = kernel.pair_values(points[rows], circle[rows, cols])
    totals = np.bincount(rows, weights=values, minlength=n)
    result = totals / inside.sum(axis=1)

    if np.any(clipped):
        logger.warning(f"Diagonal averaging circle left the domain at {int(clipped.sum())} point(s); "
                       f"angles clipped to the interior")
    return result, clipped


def diagonal_value(kernel, x, r_avg: float, k_avg: int = ExperimentConfig.DIAGONAL_ANGLES) -> float:
    """
    G(x, x) for one point, by direct evaluation (d = 1) or circle averaging (d = 2)

    Args:
        kernel: GreenSurrogate or ExactGreenKernel
        x: Point of the domain
        r_avg: Averaging radius (d = 2)
        k_avg: Number of equally spaced angles (d = 2)

    Returns:
        Diagonal value
    """
    values, _ = diagonal_values(kernel, np.atleast_1d(np.asarray(x, dtype=np.float64)), r_avg, k_avg)
    return float(values[0])


def evaluate_green(kernel, x, y, r_avg: Optional[float] = None):
    """
    Symmetric kernel value G(x, y); coincident pairs are routed to diagonal averaging

    Args:
        kernel: GreenSurrogate or ExactGreenKernel
        x: Point [d] or points [N, d] (a bare [N] array is read as N points when d = 1)
        y: Same shape as x
        r_avg: Averaging radius for coincident pairs when d = 2

    Returns:
        float for a single pair, array [N] otherwise
    """
    d = kernel.dimension
    x_arr = np.asarray(x, dtype=np.float64)
    y_arr = np.asarray(y, dtype=np.float64)
    single = x_arr.ndim == 0 or (x_arr.ndim == 1 and d > 1)
    x_arr = x_arr.reshape(-1, d)
    y_arr = y_arr.reshape(-1, d)
    if x_arr.shape != y_arr.shape:
        raise DimensionMismatchError(f"Point arrays differ in shape: {x_arr.shape} vs {y_arr.shape}")

    if d == 1:
        values = kernel.pair_values(x_arr, y_arr)
    else:
        values = np.empty(x_arr.shape[0])
        same = np.all(x_arr == y_arr, axis=1)
        if np.any(~same):
            values[~same] = kernel.pair_values(x_arr[~same], y_arr[~same])
        if np.any(same):
            radius = default_diagonal_radius(d) if r_avg is None else r_avg
            values[same] = diagonal_values(kernel, x_arr[same], radius)[0]
    return float(values[0]) if single else values


# ========================
# FAST SOLVER
# ========================

@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Quadrature points [Q, d] and weights [Q] over the domain"""

    points: np.ndarray
    weights: np.ndarray
    name: str

    @property
    def size(self) -> int:
        return self.weights.size


def midpoint_rule(h: float) -> QuadratureRule:
    """Composite midpoint rule on [0, 1] with cells of width h"""
    cells = int(round(1.0 / h))
    if cells < 1 or abs(cells * h - 1.0) > 1e-12:
        raise ValueError(f"Cell width must divide the unit interval: {h}")
    points = (np.arange(cells) + 0.5) * h
    return QuadratureRule(points=points[:, None], weights=np.full(cells, h), name='midpoint')


def gauss_rule(h: float) -> QuadratureRule:
    """Composite 3-point Gauss rule on [0, 1] with cells of width h"""
    cells = int(round(1.0 / h))
    if cells < 1 or abs(cells * h - 1.0) > 1e-12:
        raise ValueError(f"Cell width must divide the unit interval: {h}")
    left = np.arange(cells) * h
    points = (left[:, None] + h * GAUSS3_POINTS[None, :]).ravel()
    weights = np.tile(h * GAUSS3_WEIGHTS, cells)
    return QuadratureRule(points=points[:, None], weights=weights, name='gauss3')


def disc_rule(mesh: DiscMesh) -> QuadratureRule:
    """3-point barycentric rule on every triangle of a disc mesh"""
    corners = mesh.vertices[mesh.triangles]
    points = np.einsum('qa,tad->tqd', BARY3_COORDS, corners).reshape(-1, 2)
    weights = (mesh.areas()[:, None] * BARY3_WEIGHTS[None, :]).ravel()
    return QuadratureRule(points=points, weights=weights, name='barycentric3')


def reconstruct_solution(kernel, problem: EllipticProblem, grid: np.ndarray, quadrature: QuadratureRule,
                         r_excl: Optional[float] = None) -> np.ndarray:
    """
    Fast solve u(x) = sum_q w_q f(y_q) G(x, y_q) at the grid points

    Args:
        kernel: GreenSurrogate or ExactGreenKernel
        problem: Source of the forcing f
        grid: Evaluation points [n] (d = 1) or [n, d]
        quadrature: Quadrature rule over the domain
        r_excl: Quadrature nodes closer than this to an evaluation point use the diagonal value (d = 2)

    Returns:
        Values of the reconstructed solution at the grid points
    """
    d = kernel.dimension
    if problem.dimension != d:
        raise DimensionMismatchError(f"Problem is {problem.dimension}-dimensional, kernel is {d}-dimensional")
    grid = np.asarray(grid, dtype=np.float64).reshape(-1, d)
    r_excl = default_diagonal_radius(d) if r_excl is None else r_excl

    weighted_f = quadrature.weights * problem.f(quadrature.points)
    u = np.zeros(grid.shape[0])
    if not np.any(weighted_f):
        return u

    rows_per_chunk = max(1, settings.kernel_eval_chunk // quadrature.size)
    for start in range(0, grid.shape[0], rows_per_chunk):
        block = grid[start:start + rows_per_chunk]
        x = np.repeat(block, quadrature.size, axis=0)
        y = np.tile(quadrature.points, (block.shape[0], 1))
        # the 1D kernel is continuous across the diagonal and is evaluated directly
        near = np.zeros(x.shape[0], dtype=bool) if d == 1 else np.linalg.norm(x - y, axis=1) < r_excl

        values = np.empty(x.shape[0])
        if np.any(~near):
            values[~near] = kernel.pair_values(x[~near], y[~near])
        if np.any(near):
            values[near] = diagonal_values(kernel, x[near], r_excl)[0]
        u[start:start + block.shape[0]] = values.reshape(block.shape[0], -1) @ weighted_f

    logger.debug(f"Fast solve on {grid.shape[0]} points with {quadrature.size} {quadrature.name} nodes")
    return u

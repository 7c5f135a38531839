"""
Geometric multigrid V-cycles with classical or hybrid (neural + Jacobi) smoothing
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from config.experiments import ExperimentConfig
from src.problems.benchmark_problems import EllipticProblem
from src.problems.discretization import (
    DiscreteSystem,
    assemble_system,
    barycentric_interpolation,
    hat_interpolation_1d,
)
from src.solvers.iterative import IterationTrace, TraceRecorder, as_operator, check_system
from src.utils.errors import ConfigError, FactorizationError, NumericalError

logger = logging.getLogger(__name__)

SMOOTHERS = ('jacobi', 'hybrid')


@dataclass(eq=False)
class MgLevel:
    """One grid of the hierarchy with its smoother"""

    system: DiscreteSystem
    smoother: str = 'jacobi'
    neural: Optional[object] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.system.size

    @property
    def uses_neural(self) -> bool:
        return self.smoother == 'hybrid' and self.neural is not None


@dataclass(eq=False)
class MgHierarchy:
    """
    Levels ordered fine to coarse; prolongations[i] maps level i + 1 to level i and the
    restriction is restriction_scales[i] * prolongations[i]^T
    """

    levels: List[MgLevel]
    prolongations: List[sp.csr_matrix] = field(repr=False)
    restriction_scales: List[float]
    omega: float = ExperimentConfig.JACOBI_OMEGA
    coarse_factor: object = field(default=None, repr=False)

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def finest(self) -> MgLevel:
        return self.levels[0]

    def restrict(self, level: int, r: np.ndarray) -> np.ndarray:
        return self.restriction_scales[level] * (self.prolongations[level].T @ r)

    def prolong(self, level: int, e: np.ndarray) -> np.ndarray:
        return self.prolongations[level] @ e

    def default_smoothing(self) -> int:
        if self.finest.uses_neural:
            return ExperimentConfig.HYBRID_SMOOTHING_STEPS
        return ExperimentConfig.CLASSICAL_SMOOTHING_STEPS


def _prolongation(fine: DiscreteSystem, coarse: DiscreteSystem) -> sp.csr_matrix:
    if coarse is fine:
        return sp.identity(fine.size, format='csr')
    if fine.dimension == 1:
        return hat_interpolation_1d(coarse.nodes, fine.nodes)
    if coarse.mesh is None:
        raise ValueError("Two-dimensional coarse levels need their mesh for interpolation")
    return barycentric_interpolation(coarse.mesh, fine.nodes)


def _restriction_scale(fine: DiscreteSystem, coarse: DiscreteSystem) -> float:
    # finite-element residuals are load vectors; finite-difference residuals are point values
    if fine.scheme == 'fem' or coarse is fine:
        return 1.0
    return (fine.h / coarse.h) ** fine.dimension


def build_hierarchy(systems: Sequence[DiscreteSystem], smoother: str = 'jacobi', neural=None,
                    omega: float = ExperimentConfig.JACOBI_OMEGA) -> MgHierarchy:
    """
    Assemble a V-cycle hierarchy from re-assembled systems

    Only the finest level uses the neural preconditioner; coarser levels smooth with Jacobi.

    Args:
        systems: Discrete systems ordered fine to coarse
        smoother: 'jacobi' or 'hybrid'
        neural: Neural preconditioner on the finest level (hybrid smoothing)
        omega: Jacobi relaxation

    Returns:
        MgHierarchy
    """
    if smoother not in SMOOTHERS:
        raise ConfigError(f"Unknown smoother '{smoother}', expected one of {SMOOTHERS}", key='smoother')
    if smoother == 'hybrid' and neural is None:
        raise ConfigError("Hybrid smoothing needs a neural preconditioner", key='smoother')
    if not systems:
        raise ValueError("A hierarchy needs at least one level")

    levels = [MgLevel(system=systems[0], smoother=smoother, neural=neural)]
    levels += [MgLevel(system=system) for system in systems[1:]]
    prolongations = [_prolongation(f, c) for f, c in zip(systems[:-1], systems[1:])]
    scales = [_restriction_scale(f, c) for f, c in zip(systems[:-1], systems[1:])]
    for level, P in enumerate(prolongations):
        if P.shape != (systems[level].size, systems[level + 1].size):
            raise ValueError(f"Prolongation {level} has shape {P.shape}")

    coarsest = systems[-1]
    try:
        factor = splu(sp.csc_matrix(coarsest.matrix))
    except RuntimeError as e:
        raise FactorizationError(f"Coarsest level of size {coarsest.size} is singular: {e}",
                                 block=len(systems) - 1) from e

    logger.info(f"Multigrid hierarchy with {len(systems)} levels: "
                f"{' -> '.join(str(system.size) for system in systems)} ({smoother} smoothing)")
    return MgHierarchy(levels=levels, prolongations=prolongations, restriction_scales=scales, omega=omega,
                       coarse_factor=factor)


def interval_hierarchy(problem: EllipticProblem, fine_exponent: int, coarse_exponent: int,
                       two_grid: bool = False, smoother: str = 'jacobi', neural=None,
                       omega: float = ExperimentConfig.JACOBI_OMEGA) -> MgHierarchy:
    """
    Hierarchy on h = 2^-fine_exponent down to 2^-coarse_exponent, halving h per level or
    jumping straight to the coarse grid when two_grid is set
    """
    if coarse_exponent >= fine_exponent:
        raise ConfigError(f"Coarse exponent {coarse_exponent} must be below fine exponent {fine_exponent}",
                          key='coarse_exponent')
    exponents = [fine_exponent, coarse_exponent] if two_grid else list(range(fine_exponent, coarse_exponent - 1, -1))
    systems = [assemble_system(problem, 2.0 ** -e) for e in exponents]
    return build_hierarchy(systems, smoother=smoother, neural=neural, omega=omega)


def _smooth(hierarchy: MgHierarchy, level: int, F: np.ndarray, U: np.ndarray, steps: int,
            stats: Dict[str, int]) -> np.ndarray:
    lvl = hierarchy.levels[level]
    A = lvl.system.matrix
    diag = A.diagonal()
    neural = as_operator(lvl.neural) if lvl.uses_neural else None
    for j in range(1, steps + 1):
        r = F - A @ U
        # a sweep runs N, J, N, ...: one neural step, then hybrid_iterate's period-2 order
        if neural is not None and j % 2 == 1:
            U = U + neural(r)
            stats['neural'] += 1
        else:
            U = U + hierarchy.omega * r / diag
    return U


def _vcycle(hierarchy: MgHierarchy, level: int, F: np.ndarray, U: np.ndarray, nu_pre: int, nu_post: int,
            stats: Dict[str, int]) -> np.ndarray:
    if level == hierarchy.depth - 1:
        return hierarchy.coarse_factor.solve(F)

    U = _smooth(hierarchy, level, F, U, nu_pre, stats)
    r = F - hierarchy.levels[level].system.matrix @ U
    coarse_rhs = hierarchy.restrict(level, r)
    correction = _vcycle(hierarchy, level + 1, coarse_rhs, np.zeros(coarse_rhs.size), nu_pre, nu_post, stats)
    U = U + hierarchy.prolong(level, correction)
    return _smooth(hierarchy, level, F, U, nu_post, stats)


def vcycle(hierarchy: MgHierarchy, F: np.ndarray, U0: Optional[np.ndarray] = None,
           nu_pre: Optional[int] = None, nu_post: Optional[int] = None) -> np.ndarray:
    """
    One V-cycle: pre-smoothing, residual restriction, recursive coarse correction (direct
    solve on the coarsest level), prolongation and post-smoothing

    Returns:
        Updated fine-level iterate
    """
    fine = hierarchy.finest.system
    F, U = check_system(fine.matrix, F, U0)
    nu_pre = hierarchy.default_smoothing() if nu_pre is None else nu_pre
    nu_post = hierarchy.default_smoothing() if nu_post is None else nu_post
    return _vcycle(hierarchy, 0, F, U, nu_pre, nu_post, {'neural': 0})


def run_multigrid(hierarchy: MgHierarchy, F: Optional[np.ndarray] = None,
                  tol: Optional[float] = ExperimentConfig.HYBRID_TOLERANCE,
                  max_cycles: int = ExperimentConfig.MG_MAX_CYCLES, U0: Optional[np.ndarray] = None,
                  reference: Optional[np.ndarray] = None, nu_pre: Optional[int] = None,
                  nu_post: Optional[int] = None) -> Tuple[np.ndarray, IterationTrace]:
    """
    Repeat V-cycles until ||F - A U||_2 / ||F||_2 <= tol

    Args:
        hierarchy: MgHierarchy
        F: Right-hand side (default the finest system's load vector)
        tol: Relative residual tolerance
        max_cycles: Cycle budget
        U0: Initial guess
        reference: Reference solution for error logging (default the direct solve)
        nu_pre: Pre-smoothing steps
        nu_post: Post-smoothing steps

    Returns:
        (solution, trace) with one entry per cycle
    """
    fine = hierarchy.finest.system
    default_rhs = F is None
    F, U = check_system(fine.matrix, fine.rhs if default_rhs else F, U0)
    if reference is None and default_rhs:
        reference = fine.reference_solution()
    nu_pre = hierarchy.default_smoothing() if nu_pre is None else nu_pre
    nu_post = hierarchy.default_smoothing() if nu_post is None else nu_post

    smoother = hierarchy.finest.smoother
    trace = IterationTrace(solver=f"multigrid-{smoother}")
    record = TraceRecorder(trace, fine.matrix, F, reference)
    stats = {'neural': 0}
    residual, error = record(U)
    if record.done(residual, error, tol, None):
        trace.status = 'converged'
        return U, trace

    for cycle in range(1, max_cycles + 1):
        U = _vcycle(hierarchy, 0, F, U, nu_pre, nu_post, stats)
        if not np.all(np.isfinite(U)):
            raise NumericalError(f"Multigrid iterate became non-finite in cycle {cycle}")
        residual, error = record(U)
        trace.neural_applications = stats['neural']
        if record.done(residual, error, tol, None):
            trace.status = 'converged'
            logger.info(f"Multigrid ({smoother}) converged in {cycle} cycles")
            return U, trace

    trace.status = 'maxiter'
    logger.info(f"Multigrid ({smoother}) stopped after {max_cycles} cycles at residual {residual:.3e}")
    return U, trace


def vcycle_diagram(hierarchy: MgHierarchy, nu_pre: Optional[int] = None, nu_post: Optional[int] = None) -> str:
    """Text picture of one V-cycle: smoothing on the way down and up, direct solve at the bottom"""
    nu_pre = hierarchy.default_smoothing() if nu_pre is None else nu_pre
    nu_post = hierarchy.default_smoothing() if nu_post is None else nu_post
    depth = hierarchy.depth
    lines = []
    for index, level in enumerate(hierarchy.levels):
        label = f"L{index} n={level.size:<6d}"
        if index == depth - 1:
            lines.append(f"{label} {' ' * (2 * index)}[direct solve]")
            continue
        kind = 'N+J' if level.uses_neural else 'J'
        width = 2 * (depth - 1 - index)
        lines.append(f"{label} {' ' * (2 * index)}{kind}x{nu_pre} \\{' ' * (2 * width)}/ {kind}x{nu_post}")
    return '\n'.join(lines)

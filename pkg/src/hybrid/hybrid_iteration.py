"""
Hybrid iteration alternating damped Jacobi with a neural preconditioner

    U^[k+1] = U^[k] + Bn (F - A U^[k])   if k % K == 0
    U^[k+1] = U^[k] + B  (F - A U^[k])   otherwise

with k counted from 1 (U^[1] = U0) and B = omega D^{-1}.
"""

import logging
from typing import Any, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt

from config.experiments import ExperimentConfig
from src.solvers.iterative import IterationTrace, TraceRecorder, as_operator, check_system
from src.solvers.spectrum import as_dense
from src.utils.errors import ConfigError, NumericalError

logger = logging.getLogger(__name__)


class HybridConfig(BaseModel):
    """Switching period, relaxation and stopping rule of a hybrid run"""

    model_config = ConfigDict(arbitrary_types_allowed=True, extra='forbid')

    period: int = Field(default=2, ge=2)
    omega: PositiveFloat = ExperimentConfig.JACOBI_OMEGA
    neural: Any = None
    max_iterations: PositiveInt = ExperimentConfig.HYBRID_MAX_ITERATIONS
    tol: Optional[float] = ExperimentConfig.HYBRID_TOLERANCE

    @classmethod
    def create(cls, **kwargs) -> "HybridConfig":
        """Build a config, turning validation failures into ConfigError"""
        try:
            return cls(**kwargs)
        except ValueError as e:
            raise ConfigError(f"Invalid hybrid configuration: {e}", key='period') from e

    def is_neural_step(self, k: int) -> bool:
        return self.neural is not None and k % self.period == 0


def hybrid_iterate(A, F, config: HybridConfig, U0=None, reference=None,
                   mode_basis=None) -> Tuple[np.ndarray, IterationTrace]:
    """
    Run the hybrid iteration until the relative residual reaches config.tol

    Without a neural preconditioner every step is damped Jacobi.

    Args:
        A: Square matrix
        F: Right-hand side
        config: HybridConfig
        U0: Initial guess U^[1] (default zero)
        reference: Reference solution for error logging
        mode_basis: JacobiModeBasis for mode-wise error logging

    Returns:
        (solution, trace); trace.neural_applications counts neural steps
    """
    F, U = check_system(A, F, U0)
    diag = np.asarray(A.diagonal(), dtype=np.float64)
    if np.any(diag == 0.0):
        raise ValueError("The classical smoother needs a nonzero diagonal")
    neural = as_operator(config.neural) if config.neural is not None else None

    trace = IterationTrace(solver='hybrid' if neural is not None else 'jacobi')
    record = TraceRecorder(trace, A, F, reference, mode_basis)
    residual, error = record(U)
    if record.done(residual, error, config.tol, None):
        trace.status = 'converged'
        return U, trace

    for k in range(1, config.max_iterations + 1):
        r = F - A @ U
        if config.is_neural_step(k):
            U = U + neural(r)
            trace.neural_applications += 1
        else:
            U = U + config.omega * r / diag
        if not np.all(np.isfinite(U)):
            raise NumericalError(f"Hybrid iterate became non-finite at k = {k}")
        residual, error = record(U)
        if record.done(residual, error, config.tol, None):
            trace.status = 'converged'
            return U, trace

    trace.status = 'maxiter'
    return U, trace


def hybrid_step_matrix(A, classical: np.ndarray, neural: Optional[np.ndarray], period: int) -> np.ndarray:
    """Error propagation over one period, (I - Bn A)(I - B A)^{K-1}"""
    A = as_dense(A)
    n = A.shape[0]
    identity = np.eye(n)
    jacobi = identity - np.asarray(classical) @ A
    neural_step = identity if neural is None else identity - np.asarray(neural) @ A
    return neural_step @ np.linalg.matrix_power(jacobi, period - 1)


def amplification_radius(A, B, neural, period: int) -> float:
    """
    Spectral radius of (I - B A)^{K-1} (I - Bn A)

    Args:
        A: System matrix (dense path)
        B: Classical preconditioner matrix (None for zero)
        neural: Neural preconditioner matrix or DensePreconditioner (None for zero)
        period: Switching period K

    Returns:
        Spectral radius; below 1 certifies convergence of the hybrid iteration
    """
    if period < 2:
        raise ConfigError(f"Switching period must be at least 2, got {period}", key='period')
    A = as_dense(A)
    n = A.shape[0]
    classical = np.zeros((n, n)) if B is None else as_dense(B)
    neural = getattr(neural, 'matrix', neural)
    step = hybrid_step_matrix(A, classical, None if neural is None else as_dense(neural), period)
    return float(np.max(np.abs(np.linalg.eigvals(step))))


def jacobi_matrix(A, omega: float = ExperimentConfig.JACOBI_OMEGA) -> np.ndarray:
    """Dense B = omega D^{-1}"""
    return np.diag(omega / np.asarray(A.diagonal(), dtype=np.float64))

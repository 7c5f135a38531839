"""
Stationary and Krylov solvers with per-iteration error and residual traces

Every solver returns (solution, IterationTrace). The logged residual is recomputed from
scratch as ||F - A U^[k]||_2 at every iteration; the error ||U_ref - U^[k]||_2 is logged when a
reference solution is supplied.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.linalg import solve_triangular
from scipy.sparse.linalg import spsolve

from config.settings import settings
from src.utils.errors import DimensionMismatchError, SolverBreakdownError

logger = logging.getLogger(__name__)

Operator = Callable[[np.ndarray], np.ndarray]


@dataclass
class IterationTrace:
    """
    Per-iteration history of one solve; entry k holds the state after k iterations (k = 0 is
    the initial guess)
    """

    solver: str
    errors: List[float] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)
    modes: List[np.ndarray] = field(default_factory=list)
    status: str = 'running'
    alphas: List[float] = field(default_factory=list)
    betas: List[float] = field(default_factory=list)
    neural_applications: int = 0

    @property
    def iterations(self) -> int:
        return max(len(self.residuals) - 1, 0)

    @property
    def final_error(self) -> float:
        return self.errors[-1] if self.errors else float('nan')

    @property
    def final_residual(self) -> float:
        return self.residuals[-1] if self.residuals else float('nan')

    @property
    def converged(self) -> bool:
        return self.status in ('converged', 'exact')

    def check(self) -> "IterationTrace":
        """Raise if the recurrence broke down"""
        if self.status == 'breakdown':
            raise SolverBreakdownError(f"{self.solver} broke down after {self.iterations} iterations")
        return self

    def mode_matrix(self) -> Optional[np.ndarray]:
        return np.vstack(self.modes) if self.modes else None

    def to_frame(self, max_modes: Optional[int] = None) -> pd.DataFrame:
        """
        Trace as a table: k, err_l2, res_l2, then mode columns m_j (at most max_modes,
        evenly strided over the spectrum)
        """
        max_modes = settings.max_logged_modes if max_modes is None else max_modes
        k = np.arange(len(self.residuals))
        errors = self.errors if len(self.errors) == len(k) else [np.nan] * len(k)
        frame = pd.DataFrame({'k': k, 'err_l2': errors, 'res_l2': self.residuals})

        modes = self.mode_matrix()
        if modes is not None and max_modes > 0:
            n = modes.shape[1]
            picked = np.unique(np.round(np.linspace(0, n - 1, min(n, max_modes))).astype(int))
            mode_frame = pd.DataFrame(modes[:, picked], columns=[f"m_{j + 1}" for j in picked])
            frame = pd.concat([frame, mode_frame], axis=1)
        return frame


def as_operator(prec) -> Operator:
    """Callable applying a preconditioner; None means the identity"""
    if prec is None:
        return lambda r: r
    if hasattr(prec, 'apply'):
        return prec.apply
    if callable(prec):
        return prec
    return lambda r: prec @ r


def check_system(A, F: np.ndarray, U0: Optional[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    F = np.asarray(F, dtype=np.float64)
    n = F.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatchError(f"Matrix shape {A.shape} does not match right-hand side of length {n}")
    U = np.zeros(n) if U0 is None else np.array(U0, dtype=np.float64)
    if U.shape != (n,):
        raise DimensionMismatchError(f"Initial guess has shape {U.shape}, expected ({n},)")
    return F, U


class TraceRecorder:
    """Appends error, residual and optional mode-wise error of each iterate"""

    def __init__(self, trace: IterationTrace, A, F, reference=None, mode_basis=None):
        self.trace = trace
        self.A = A
        self.F = F
        self.f_norm = float(np.linalg.norm(F))
        self.reference = None if reference is None else np.asarray(reference, dtype=np.float64)
        self.mode_basis = mode_basis

    def __call__(self, U: np.ndarray) -> Tuple[float, float]:
        residual = float(np.linalg.norm(self.F - self.A @ U))
        self.trace.residuals.append(residual)
        error = np.nan
        if self.reference is not None:
            diff = self.reference - U
            error = float(np.linalg.norm(diff))
            self.trace.errors.append(error)
            if self.mode_basis is not None:
                self.trace.modes.append(self.mode_basis.coefficients(diff))
        return residual, error

    def done(self, residual: float, error: float, tol: Optional[float], target_error: Optional[float]) -> bool:
        if tol is not None and residual <= tol * self.f_norm:
            return True
        if target_error is not None and self.reference is not None and error <= target_error:
            return True
        return False


def damped_jacobi(A, F, U0=None, omega: float = 0.5, maxiter: int = 100, tol: Optional[float] = None,
                  reference=None, mode_basis=None) -> Tuple[np.ndarray, IterationTrace]:
    """
    Damped Jacobi iteration U <- U + omega D^{-1} (F - A U)

    Args:
        A: Square matrix (dense or sparse)
        F: Right-hand side
        U0: Initial guess (default zero)
        omega: Relaxation parameter
        maxiter: Iteration budget
        tol: Optional relative residual tolerance
        reference: Reference solution for error logging
        mode_basis: JacobiModeBasis for mode-wise error logging (needs reference)

    Returns:
        (solution, trace)
    """
    F, U = check_system(A, F, U0)
    diag = np.asarray(A.diagonal(), dtype=np.float64)
    if np.any(diag == 0.0):
        raise ValueError("Damped Jacobi needs a nonzero diagonal")

    trace = IterationTrace(solver='jacobi')
    record = TraceRecorder(trace, A, F, reference, mode_basis)
    residual, error = record(U)
    if record.done(residual, error, tol, None):
        trace.status = 'converged'
        return U, trace

    for _ in range(maxiter):
        U = U + omega * (F - A @ U) / diag
        residual, error = record(U)
        if not np.isfinite(residual):
            trace.status = 'diverged'
            logger.warning(f"Jacobi iterate became non-finite after {trace.iterations} iterations")
            return U, trace
        if record.done(residual, error, tol, None):
            trace.status = 'converged'
            return U, trace

    trace.status = 'maxiter'
    return U, trace


def bicg(A, F, apply_prec=None, tol: Optional[float] = 1e-10, maxiter: Optional[int] = None, U0=None,
         reference=None, target_error: Optional[float] = None,
         apply_prec_transpose=None) -> Tuple[np.ndarray, IterationTrace]:
    """
    Preconditioned biconjugate gradients

    Stops when ||F - A U||_2 / ||F||_2 <= tol or, given a reference solution, when the error
    drops to target_error. The alpha/beta coefficients are kept on the trace for Lanczos
    estimates of the preconditioned spectrum.

    Args:
        A: Square matrix
        F: Right-hand side
        apply_prec: Preconditioner (callable, object with apply, matrix, or None)
        tol: Relative residual tolerance (None disables the residual test)
        maxiter: Iteration budget (default 2n)
        U0: Initial guess
        reference: Reference solution for error logging
        target_error: Error level that stops the iteration
        apply_prec_transpose: Transposed preconditioner (default: the preconditioner itself)

    Returns:
        (solution, trace); trace.status is 'converged', 'maxiter' or 'breakdown'
    """
    F, U = check_system(A, F, U0)
    n = F.size
    maxiter = 2 * n if maxiter is None else maxiter
    prec = as_operator(apply_prec)
    prec_t = prec if apply_prec_transpose is None else as_operator(apply_prec_transpose)
    eps = np.finfo(np.float64).eps

    trace = IterationTrace(solver='bicg')
    record = TraceRecorder(trace, A, F, reference)
    residual, error = record(U)
    if record.done(residual, error, tol, target_error) or residual == 0.0:
        trace.status = 'converged'
        return U, trace

    r = F - A @ U
    r_tilde = r.copy()
    p = p_tilde = None
    rho_prev = None

    for _ in range(maxiter):
        z = prec(r)
        z_tilde = prec_t(r_tilde)
        rho = float(np.dot(z, r_tilde))
        if abs(rho) <= eps * np.linalg.norm(z) * np.linalg.norm(r_tilde):
            trace.status = 'breakdown'
            logger.warning(f"⚠️ BiCG breakdown (rho = {rho:.3e}) after {trace.iterations} iterations")
            return U, trace

        if p is None:
            p, p_tilde = z, z_tilde
        else:
            beta = rho / rho_prev
            trace.betas.append(beta)
            p = z + beta * p
            p_tilde = z_tilde + beta * p_tilde

        q = A @ p
        q_tilde = A.T @ p_tilde
        curvature = float(np.dot(p_tilde, q))
        if curvature == 0.0:
            trace.status = 'breakdown'
            logger.warning(f"⚠️ BiCG breakdown (p~ . Ap = 0) after {trace.iterations} iterations")
            return U, trace

        alpha = rho / curvature
        trace.alphas.append(alpha)
        U = U + alpha * p
        r = r - alpha * q
        r_tilde = r_tilde - alpha * q_tilde
        rho_prev = rho

        residual, error = record(U)
        if record.done(residual, error, tol, target_error):
            trace.status = 'converged'
            return U, trace

    trace.status = 'maxiter'
    return U, trace


def gmres(A, F, apply_prec=None, tol: Optional[float] = 1e-10, maxiter: Optional[int] = None, U0=None,
          reference=None, target_error: Optional[float] = None) -> Tuple[np.ndarray, IterationTrace]:
    """
    Full (non-restarted) GMRES with right preconditioning and Givens-rotation least squares

    Minimises ||F - A U||_2 over U0 + B K_k(A B, r0), so the logged true residual is
    non-increasing.

    Args:
        A: Square matrix
        F: Right-hand side
        apply_prec: Right preconditioner B (callable, object with apply, matrix, or None)
        tol: Relative residual tolerance (None disables the residual test)
        maxiter: Iteration budget (default n)
        U0: Initial guess
        reference: Reference solution for error logging
        target_error: Error level that stops the iteration

    Returns:
        (solution, trace); trace.status is 'converged', 'exact' (Arnoldi breakdown) or 'maxiter'
    """
    F, U0 = check_system(A, F, U0)
    n = F.size
    maxiter = n if maxiter is None else min(maxiter, n)
    prec = as_operator(apply_prec)

    trace = IterationTrace(solver='gmres')
    record = TraceRecorder(trace, A, F, reference)
    residual, error = record(U0)
    r0 = F - A @ U0
    beta = float(np.linalg.norm(r0))
    if beta == 0.0 or record.done(residual, error, tol, target_error):
        trace.status = 'converged'
        return U0, trace

    V = np.zeros((n, maxiter + 1))
    Z = np.zeros((n, maxiter))
    H = np.zeros((maxiter + 1, maxiter))
    cs = np.zeros(maxiter)
    sn = np.zeros(maxiter)
    g = np.zeros(maxiter + 1)
    g[0] = beta
    V[:, 0] = r0 / beta
    U = U0

    for k in range(maxiter):
        Z[:, k] = prec(V[:, k])
        w = A @ Z[:, k]
        # modified Gram-Schmidt
        for i in range(k + 1):
            H[i, k] = np.dot(w, V[:, i])
            w = w - H[i, k] * V[:, i]
        H[k + 1, k] = np.linalg.norm(w)
        lucky = H[k + 1, k] <= np.finfo(np.float64).eps * beta
        if not lucky:
            V[:, k + 1] = w / H[k + 1, k]

        for i in range(k):
            h_i, h_next = H[i, k], H[i + 1, k]
            H[i, k] = cs[i] * h_i + sn[i] * h_next
            H[i + 1, k] = -sn[i] * h_i + cs[i] * h_next
        denom = np.hypot(H[k, k], H[k + 1, k])
        cs[k], sn[k] = H[k, k] / denom, H[k + 1, k] / denom
        H[k, k] = denom
        H[k + 1, k] = 0.0
        g[k + 1] = -sn[k] * g[k]
        g[k] = cs[k] * g[k]

        y = _upper_solve(H[:k + 1, :k + 1], g[:k + 1])
        U = U0 + Z[:, :k + 1] @ y
        residual, error = record(U)

        if lucky:
            trace.status = 'exact'
            logger.debug(f"GMRES Arnoldi breakdown at step {k + 1}: exact solution reached")
            return U, trace
        if record.done(residual, error, tol, target_error):
            trace.status = 'converged'
            return U, trace

    trace.status = 'maxiter'
    return U, trace


def _upper_solve(R: np.ndarray, b: np.ndarray) -> np.ndarray:
    return solve_triangular(R, b, lower=False)


def direct_reference(A, F) -> np.ndarray:
    """Direct solve used as the reference solution of a trace"""
    if sp.issparse(A):
        return spsolve(A.tocsc(), F)
    return np.linalg.solve(A, F)


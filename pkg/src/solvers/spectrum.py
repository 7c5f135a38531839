"""
Dense spectra, condition numbers and the Jacobi mode basis used for mode-wise error traces
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from config.experiments import ExperimentConfig
from src.utils.errors import DimensionMismatchError, NumericalError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Eigenvalues in ascending order with optional eigenvectors (columns)"""

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None
    method: str = 'dense'

    @property
    def count(self) -> int:
        return self.eigenvalues.size

    @property
    def condition(self) -> float:
        moduli = np.abs(self.eigenvalues)
        smallest = float(np.min(moduli))
        if smallest == 0.0:
            return float('inf')
        return float(np.max(moduli) / smallest)


def as_dense(M) -> np.ndarray:
    M = M.toarray() if sp.issparse(M) else np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatchError(f"Expected a square matrix, got shape {M.shape}")
    return M


def eig_dense(M, generalized_rhs=None, symmetric: Optional[bool] = None,
              vectors: bool = False) -> SpectrumReport:
    """
    Full spectrum of a dense matrix

    Symmetric input goes through scipy.linalg.eigh (with the symmetric-definite generalized
    problem M c = mu B c when generalized_rhs is given); general input through
    scipy.linalg.eig. Eigenvalues of a general matrix are returned real when their imaginary
    parts are at rounding level, sorted by real part.

    Args:
        M: Square matrix (dense or sparse)
        generalized_rhs: Symmetric positive definite B for M c = mu B c
        symmetric: Force the symmetric path (default: detect M == M^T)
        vectors: Also return eigenvectors

    Returns:
        SpectrumReport
    """
    M = as_dense(M)
    n = M.shape[0]
    if n > ExperimentConfig.DENSE_EIG_LIMIT:
        logger.warning(f"Dense eigensolve of size {n} exceeds the configured limit "
                       f"{ExperimentConfig.DENSE_EIG_LIMIT}")
    if symmetric is None:
        symmetric = np.array_equal(M, M.T)

    if symmetric:
        B = None if generalized_rhs is None else as_dense(generalized_rhs)
        if B is not None and B.shape != M.shape:
            raise DimensionMismatchError(f"Generalized right-hand side has shape {B.shape}, expected {M.shape}")
        if vectors:
            values, vecs = la.eigh(M, B)
            return SpectrumReport(eigenvalues=values, eigenvectors=vecs, method='eigh')
        return SpectrumReport(eigenvalues=la.eigh(M, B, eigvals_only=True), method='eigh')

    if generalized_rhs is not None:
        raise ValueError("The generalized problem is only supported for symmetric input")
    if vectors:
        values, vecs = la.eig(M)
    else:
        values, vecs = la.eigvals(M), None
    if np.all(np.abs(values.imag) <= 1e-10 * np.max(np.abs(values))):
        values = values.real
    order = np.lexsort((np.imag(values), np.real(values)))
    values = values[order]
    if vecs is not None:
        vecs = vecs[:, order]
        if np.isrealobj(values):
            vecs = vecs.real
    return SpectrumReport(eigenvalues=values, eigenvectors=vecs, method='eig')


def condition_number(M) -> float:
    """|lambda|_max / |lambda|_min of a dense matrix"""
    return eig_dense(M).condition


def preconditioned_condition(B: np.ndarray, A) -> float:
    """Condition number of the preconditioned operator B A"""
    A = as_dense(A)
    return condition_number(np.asarray(B) @ A)


def lanczos_condition_estimate(trace) -> Tuple[float, float, float]:
    """
    Ritz estimates of the extreme eigenvalues of the preconditioned operator from the BiCG
    coefficients of a trace (symmetric operator and preconditioner)

    Returns:
        (lambda_min, lambda_max, kappa)
    """
    alphas = np.asarray(trace.alphas, dtype=np.float64)
    betas = np.asarray(trace.betas, dtype=np.float64)
    m = alphas.size
    if m == 0:
        raise NumericalError("No BiCG coefficients recorded for a Lanczos estimate")
    betas = betas[:m - 1]

    diagonal = 1.0 / alphas
    diagonal[1:] += betas / alphas[:-1]
    off = np.sqrt(np.abs(betas)) / alphas[:-1]
    ritz = la.eigvalsh_tridiagonal(diagonal, off) if m > 1 else diagonal
    lo, hi = float(np.min(ritz)), float(np.max(ritz))
    return lo, hi, hi / lo


@dataclass(frozen=True, eq=False)
class JacobiModeBasis:
    """
    Eigenvectors xi_j of the damped Jacobi amplification matrix I - omega D^{-1} A,
    D-orthonormal, ordered by ascending lambda_j(D^{-1} A)
    """

    vectors: np.ndarray
    eigenvalues: np.ndarray
    diagonal: np.ndarray
    omega: float

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    def factors(self) -> np.ndarray:
        """Per-iteration amplification |1 - omega lambda_j|"""
        return np.abs(1.0 - self.omega * self.eigenvalues)

    def coefficients(self, error: np.ndarray) -> np.ndarray:
        """|<E, xi_j>_D| for one error vector [n] or a history [K, n]"""
        error = np.asarray(error, dtype=np.float64)
        return np.abs((error * self.diagonal) @ self.vectors)


def jacobi_mode_basis(A, omega: float = ExperimentConfig.JACOBI_OMEGA) -> JacobiModeBasis:
    """
    Mode basis from the symmetric similarity transform D^{-1/2} A D^{-1/2}

    Args:
        A: Symmetric matrix with positive diagonal
        omega: Relaxation parameter

    Returns:
        JacobiModeBasis
    """
    dense = as_dense(A)
    diagonal = np.diag(dense).astype(np.float64)
    if np.any(diagonal <= 0.0):
        raise NumericalError("The Jacobi mode basis needs a positive diagonal")
    scale = 1.0 / np.sqrt(diagonal)
    values, vecs = la.eigh(scale[:, None] * dense * scale[None, :])
    return JacobiModeBasis(vectors=scale[:, None] * vecs, eigenvalues=values, diagonal=diagonal, omega=omega)


def modewise_error(error_history: np.ndarray, basis: JacobiModeBasis) -> np.ndarray:
    """
    Mode-wise error magnitudes M[k, j] = |<E^[k], xi_j>_D|

    Args:
        error_history: Errors [K, n]
        basis: JacobiModeBasis of the system

    Returns:
        Array [K, n]
    """
    history = np.atleast_2d(np.asarray(error_history, dtype=np.float64))
    if history.shape[1] != basis.size:
        raise DimensionMismatchError(f"Error vectors have length {history.shape[1]}, basis has {basis.size}")
    return basis.coefficients(history)

"""
Galerkin eigenanalysis of Green's kernels

The integral operator (T v)(x) = int G(x, y) v(y) dy is discretized on a finite-element space
V_h as the generalized symmetric eigenproblem K c = mu M c with

    K_ab = int int G(x, y) psi_b(y) psi_a(x) dy dx,    M_ab = int psi_a psi_b.

Comparing the spectrum of a trained surrogate with the exact one gives the per-mode relative
errors (delta_mu, delta_phi) used to study spectral bias.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
import scipy.linalg as la
import scipy.sparse as sp
from scipy.special import jn_zeros

from config.experiments import ExperimentConfig
from config.settings import settings
from src.green.surrogate import diagonal_values
from src.spectral.fe_space import FeSpace
from src.utils.errors import DimensionMismatchError, NonFiniteKernelError, NumericalError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class KernelEigReport:
    """
    Leading eigenpairs in descending order of value

    eigenvectors are nodal coefficient vectors (columns), orthonormal in the mass inner
    product; spectrum keeps every eigenvalue of the discrete problem when it is known.
    """

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = field(default=None, repr=False)
    spectrum: Optional[np.ndarray] = field(default=None, repr=False)
    mass: Optional[object] = field(default=None, repr=False)
    label: str = 'galerkin'

    @property
    def count(self) -> int:
        return self.eigenvalues.size

    @property
    def negative_count(self) -> int:
        values = self.eigenvalues if self.spectrum is None else self.spectrum
        return int(np.sum(values < 0.0))


@dataclass(frozen=True)
class TruncationCheck:
    """Squared L2 distance between a kernel and its N-term expansion, against the eigenvalue tail"""

    order: int
    residual: float
    tail: float

    @property
    def relative_gap(self) -> float:
        scale = max(abs(self.tail), np.finfo(float).tiny)
        return abs(self.residual - self.tail) / scale


def _diagonal_radii(weights: np.ndarray) -> np.ndarray:
    # circle radius whose log-average matches the average of log|x - y| over a disc of area w
    return np.sqrt(weights / np.pi) * np.exp(-0.5)


def _fill_rows(kernel, space: FeSpace, diagonal: Optional[np.ndarray], r_excl: float, target: np.ndarray,
               start: int, stop: int) -> None:
    X = space.points
    Q = X.shape[0]
    x = np.repeat(X[start:stop], Q, axis=0)
    y = np.tile(X, (stop - start, 1))

    if diagonal is None:
        values = kernel.pair_values(x, y)
    else:
        near = np.linalg.norm(x - y, axis=1) < r_excl
        values = np.empty(x.shape[0])
        if np.any(~near):
            values[~near] = kernel.pair_values(x[~near], y[~near])
        if np.any(near):
            values[near] = diagonal[np.repeat(np.arange(start, stop), Q)[near]]

    bad = ~np.isfinite(values)
    if np.any(bad):
        first = int(np.flatnonzero(bad)[0])
        pair = (start + first // Q, first % Q)
        raise NonFiniteKernelError(f"Kernel value at quadrature pair {pair} is {values[first]}", pair=pair)

    weighted = values.reshape(stop - start, Q) * space.weights[None, :]
    target[start:stop] = (space.basis.T @ weighted.T).T


def assemble_kernel_matrices(kernel, space: FeSpace, r_excl: Optional[float] = None,
                             threads: Optional[int] = None) -> Tuple[np.ndarray, sp.csr_matrix]:
    """
    Galerkin kernel matrix K and mass matrix M by tensorized quadrature over element pairs

    In 1D the kernel is continuous across the diagonal and is evaluated directly. In 2D a
    quadrature pair closer than r_excl takes the circle-averaged diagonal value at its first
    point, with averaging radius sqrt(w / pi) e^{-1/2} for the point's quadrature weight w.

    Args:
        kernel: GreenSurrogate or ExactGreenKernel
        space: FeSpace of matching dimension
        r_excl: Exclusion radius for the diagonal (2D; default from the experiment config)
        threads: Worker threads over quadrature row blocks

    Returns:
        (K dense [n, n], M sparse [n, n])
    """
    if kernel.dimension != space.dimension:
        raise DimensionMismatchError(f"Kernel is {kernel.dimension}-dimensional, space is {space.dimension}-dimensional")
    Q = space.quadrature_size
    threads = threads or settings.num_threads

    diagonal = None
    if space.dimension == 2:
        r_excl = ExperimentConfig.EXCLUSION_RADIUS[2] if r_excl is None else r_excl
        diagonal, clipped = diagonal_values(kernel, space.points, _diagonal_radii(space.weights))
        if np.any(clipped):
            logger.debug(f"{int(clipped.sum())} diagonal circles clipped at the boundary")

    # T = (G W) Phi, one block of quadrature rows at a time
    T = np.empty((Q, space.size))
    rows_per_block = max(1, settings.kernel_eval_chunk // Q)
    blocks = [(start, min(start + rows_per_block, Q)) for start in range(0, Q, rows_per_block)]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda block: _fill_rows(kernel, space, diagonal, r_excl, T, *block), blocks))
    else:
        for block in blocks:
            _fill_rows(kernel, space, diagonal, r_excl, T, *block)

    K = space.basis.T @ (space.weights[:, None] * T)
    M = space.mass_matrix()
    logger.info(f"Kernel matrices of size {space.size} assembled from {Q} quadrature points "
                f"({space.kind} elements, d = {space.dimension})")
    return np.asarray(K), M


def solve_kernel_eigs(K, M, count: Optional[int] = None, label: str = 'galerkin') -> KernelEigReport:
    """
    Generalized symmetric eigensolve K c = mu M c

    Args:
        K: Kernel matrix [n, n]
        M: Mass matrix [n, n] (dense or sparse, symmetric positive definite)
        count: Number of leading pairs to keep (default all)
        label: Name carried into reports

    Returns:
        KernelEigReport with eigenvalues in descending order
    """
    K = np.asarray(K, dtype=np.float64)
    M_dense = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=np.float64)
    if K.shape != M_dense.shape or K.shape[0] != K.shape[1]:
        raise DimensionMismatchError(f"Kernel matrix {K.shape} and mass matrix {M_dense.shape} do not match")
    n = K.shape[0]
    count = n if count is None else min(count, n)

    try:
        values, vectors = la.eigh(K, M_dense)
    except la.LinAlgError as e:
        raise NumericalError(f"Generalized kernel eigenproblem failed: {e}") from e

    values = values[::-1]
    vectors = vectors[:, ::-1]
    negative = int(np.sum(values < 0.0))
    if negative:
        logger.info(f"{label}: {negative} negative eigenvalue(s) out of {n}")
    return KernelEigReport(eigenvalues=values[:count].copy(), eigenvectors=vectors[:, :count].copy(),
                           spectrum=values.copy(), mass=M, label=label)


def reference_report_interval(space: FeSpace, count: int) -> KernelEigReport:
    """
    Analytic eigenpairs of the 1D Poisson Green's operator, mu_j = 1/(j pi)^2 and
    phi_j = sin(j pi x), interpolated on the space and normalized in the mass inner product
    """
    if space.dimension != 1:
        raise DimensionMismatchError("The interval reference needs a one-dimensional space")
    count = min(count, space.size)
    j = np.arange(1, count + 1)
    x = space.nodes[:, 0]
    M = space.mass_matrix()
    vectors = np.sin(np.pi * x[:, None] * j[None, :])
    norms = np.sqrt(np.einsum('ij,ij->j', vectors, M @ vectors))
    return KernelEigReport(eigenvalues=1.0 / (j * np.pi) ** 2, eigenvectors=vectors / norms[None, :],
                           mass=M, label='analytic')


def disc_bessel_eigenvalues(count: int) -> np.ndarray:
    """
    Eigenvalues 1 / j_{m,n}^2 of the Green's operator of -Laplace on the unit disc, descending,
    with j_{m,n} the zeros of J_m (multiplicity 2 for m >= 1)
    """
    # Weyl: about z^2 / 4 eigenvalues of -Laplace lie below z^2 on the unit disc
    cap = 2.5 * np.sqrt(count) + 10.0
    while True:
        zeros: List[float] = []
        for m in range(int(cap) + 1):
            roots = jn_zeros(m, int(cap / np.pi) + 2)
            roots = roots[roots < cap]
            zeros.extend(np.repeat(roots, 1 if m == 0 else 2))
        if len(zeros) >= count:
            break
        cap *= 1.5
    return 1.0 / np.sort(np.asarray(zeros))[:count] ** 2


def reference_report_disc(count: int) -> KernelEigReport:
    return KernelEigReport(eigenvalues=disc_bessel_eigenvalues(count), label='bessel')


def _mass_norm(M, v: np.ndarray) -> float:
    return float(np.sqrt(max(np.dot(v, M @ v), 0.0)))


def _clusters(values: np.ndarray, rtol: float) -> List[np.ndarray]:
    """Runs of consecutive eigenvalues equal to rtol (degenerate modes)"""
    groups, start = [], 0
    for j in range(1, values.size + 1):
        if j == values.size or abs(values[j] - values[j - 1]) > rtol * abs(values[j - 1]):
            groups.append(np.arange(start, j))
            start = j
    return groups


def spectral_bias_profile(approx: KernelEigReport, exact: KernelEigReport,
                          cluster_rtol: float = 1e-8) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-mode relative errors of an approximate spectrum against a reference

    delta_mu_j = |mu_approx_j - mu_j| / |mu_j|. delta_phi_j is the relative mass-norm error of
    the eigenvector after choosing the sign that minimizes it; for a degenerate reference
    eigenvalue every mode of the cluster reports the sine of the largest principal angle
    between the two eigenspaces. delta_phi is NaN when either report has no eigenvectors.

    Args:
        approx: KernelEigReport under test
        exact: Reference KernelEigReport
        cluster_rtol: Relative gap below which reference eigenvalues count as equal

    Returns:
        (delta_mu [n], delta_phi [n]) for the first n = min of the two counts
    """
    n = min(approx.count, exact.count)
    mu, mu_approx = exact.eigenvalues[:n], approx.eigenvalues[:n]
    delta_mu = np.abs(mu_approx - mu) / np.abs(mu)

    delta_phi = np.full(n, np.nan)
    M = exact.mass if exact.mass is not None else approx.mass
    if approx.eigenvectors is None or exact.eigenvectors is None or M is None:
        return delta_mu, delta_phi
    if approx.eigenvectors.shape[0] != exact.eigenvectors.shape[0]:
        raise DimensionMismatchError("Eigenvectors live on spaces of different size")

    factor = None
    for group in _clusters(mu, cluster_rtol):
        if group.size == 1:
            j = int(group[0])
            phi, phi_approx = exact.eigenvectors[:, j], approx.eigenvectors[:, j]
            norm = _mass_norm(M, phi)
            delta_phi[j] = min(_mass_norm(M, phi_approx - phi), _mass_norm(M, phi_approx + phi)) / norm
            continue
        if factor is None:
            dense = M.toarray() if sp.issparse(M) else np.asarray(M)
            factor = la.cholesky(dense, lower=True)
        angles = la.subspace_angles(factor.T @ approx.eigenvectors[:, group], factor.T @ exact.eigenvectors[:, group])
        delta_phi[group] = np.sin(np.max(angles))
    return delta_mu, delta_phi


def mercer_truncation_check(K, M, report: KernelEigReport, order: int) -> TruncationCheck:
    """
    ||G_h - G_N||^2 over the square for the Galerkin kernel and its N-term eigen-expansion

    The Galerkin kernel is G_h(x, y) = sum C_ab psi_a(x) psi_b(y) with C = M^{-1} K M^{-1};
    its truncation keeps the N leading eigenpairs, C_N = sum_{j<=N} mu_j c_j c_j^T. The
    squared distance is tr((C - C_N) M (C - C_N) M) and should equal sum_{j>N} mu_j^2.

    Args:
        K: Kernel matrix
        M: Mass matrix
        report: KernelEigReport with the full spectrum and at least N eigenvectors
        order: Truncation order N

    Returns:
        TruncationCheck
    """
    if report.spectrum is None:
        raise ValueError("The truncation check needs the full spectrum of the report")
    if order < 0 or order > report.eigenvectors.shape[1]:
        raise ValueError(f"Truncation order {order} outside 0..{report.eigenvectors.shape[1]}")

    K = np.asarray(K, dtype=np.float64)
    M_dense = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=np.float64)
    cho = la.cho_factor(M_dense)
    C = la.cho_solve(cho, la.cho_solve(cho, K).T).T
    leading = report.eigenvectors[:, :order]
    D = C - (leading * report.eigenvalues[:order][None, :]) @ leading.T
    DM = D @ M_dense
    residual = float(np.sum(DM * DM.T))
    tail = float(np.sum(report.spectrum[order:] ** 2))

    check = TruncationCheck(order=order, residual=residual, tail=tail)
    if tail > 0.0 and check.relative_gap > 1e-6:
        logger.warning(f"Mercer truncation at N = {order}: residual {residual:.6e} vs eigenvalue tail {tail:.6e}")
    return check


def profile_frame(approx: KernelEigReport, exact: KernelEigReport, delta_mu: np.ndarray,
                  delta_phi: Optional[np.ndarray] = None) -> pd.DataFrame:
    """Report table with columns j, mu_exact, mu_approx, delta_mu[, delta_phi]"""
    n = delta_mu.size
    frame = pd.DataFrame({
        'j': np.arange(1, n + 1),
        'mu_exact': exact.eigenvalues[:n],
        'mu_approx': approx.eigenvalues[:n],
        'delta_mu': delta_mu,
    })
    if delta_phi is not None and not np.all(np.isnan(delta_phi)):
        frame['delta_phi'] = delta_phi
    return frame

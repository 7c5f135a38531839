"""
Collocation losses of the singularity-encoded Green's function

Each term evaluates jets through a JetRecorder and, when given a weight, seeds the adjoints
of the weighted term so that JetRecorder.backward() yields its parameter gradient.

    interior   mean_m mean_n ( div_x(c grad_x G) + k2 G )^2 at regular points
    singular   d = 1: mean_m (2 c(y) dG/dz (y, y, 0) + 1)^2
               d = 2: mean over sources and radii of (1 + flux of c grad_x G through the circle)^2
    boundary   mean G^2 on the boundary
    symmetry   mean (G(x, y) - G(y, x))^2 over the regular pairs
"""

import logging
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np

from src.green.augmented_variable import augmented_batch
from src.green.collocation import CollocationBatch, TrainConfig
from src.models.mlp_network import JetRecorder, MlpNetwork, ParamGradient, loss_param_grad
from src.problems.benchmark_problems import EllipticProblem
from src.utils.errors import NonFiniteLossError

logger = logging.getLogger(__name__)


@dataclass
class LossBreakdown:
    """The four loss terms and their penalised sum"""

    reglr: float
    snglr: float
    bndry: float
    symtr: float
    total: float

    def __add__(self, other: "LossBreakdown") -> "LossBreakdown":
        return LossBreakdown(*(a + b for a, b in zip(asdict(self).values(), asdict(other).values())))

    def scaled(self, factor: float) -> "LossBreakdown":
        return LossBreakdown(*(factor * v for v in asdict(self).values()))

    def as_dict(self):
        return asdict(self)


def _x_directions(d: int) -> Tuple[int, ...]:
    """Jet directions: the x coordinates and z"""
    return tuple(range(d)) + (2 * d,)


def _check_finite(residual: np.ndarray, x: np.ndarray, y: np.ndarray, term: str) -> None:
    bad = ~np.isfinite(residual)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        point = tuple(np.concatenate([np.atleast_1d(x[i]), np.atleast_1d(y[i])]).tolist())
        raise NonFiniteLossError(f"Non-finite {term} residual at (x, y) = {point}", point=point)


def interior_residual(recorder: JetRecorder, batch: CollocationBatch, problem: EllipticProblem):
    """
    Residual div_x(c grad_x G) + k2 G of G(x, y) = Ghat(x, y, phi(x, y)) at the regular points

    Returns:
        (residual [M*N_R], jet, coefficient arrays used for seeding)
    """
    d = batch.dimension
    x = batch.regular.reshape(-1, d)
    y = np.repeat(batch.sources, batch.regular.shape[1], axis=0)
    gphi = batch.grad_phi.reshape(-1, d)
    gphi_sq = batch.grad_phi_sq.ravel()
    lphi = batch.lap_phi.ravel()

    inputs = np.column_stack([x, y, batch.phi.ravel()])
    jet = recorder(inputs, directions=_x_directions(d))

    c = problem.c(x)
    grad_c = problem.grad_c(x).reshape(-1, d)
    k2 = problem.k2(x)

    g_x = jet.grad[:, :d]
    g_z = jet.grad[:, d]
    lap_x = np.trace(jet.hess[:, :d, :d], axis1=1, axis2=2)
    h_xz = jet.hess[:, :d, d]
    h_zz = jet.hess[:, d, d]

    residual = (np.sum(grad_c * (g_x + gphi * g_z[:, None]), axis=1)
                + c * (lap_x + 2.0 * np.sum(gphi * h_xz, axis=1) + gphi_sq * h_zz + lphi * g_z)
                + k2 * jet.value)
    _check_finite(residual, x, y, 'interior')
    return residual, jet, (c, grad_c, k2, gphi, gphi_sq, lphi)


def reglr_term(recorder: JetRecorder, batch: CollocationBatch, problem: EllipticProblem,
               weight: Optional[float] = None) -> float:
    residual, jet, (c, grad_c, k2, gphi, gphi_sq, lphi) = interior_residual(recorder, batch, problem)
    loss = float(np.mean(residual * residual))

    if weight is not None:
        d = batch.dimension
        dr = weight * 2.0 * residual / residual.size
        grad_seed = np.zeros_like(jet.grad)
        grad_seed[:, :d] = dr[:, None] * grad_c
        grad_seed[:, d] = dr * (np.sum(grad_c * gphi, axis=1) + c * lphi)
        hess_seed = np.zeros_like(jet.hess)
        for i in range(d):
            hess_seed[:, i, i] = dr * c
            hess_seed[:, i, d] = dr * 2.0 * c * gphi[:, i]
        hess_seed[:, d, d] = dr * c * gphi_sq
        recorder.seed(jet, value=dr * k2, grad=grad_seed, hess=hess_seed)
    return loss


def snglr_term(recorder: JetRecorder, batch: CollocationBatch, problem: EllipticProblem,
               weight: Optional[float] = None) -> float:
    d = batch.dimension
    m = batch.num_sources

    if d == 1:
        y = batch.sources
        inputs = np.column_stack([y, y, np.zeros(m)])
        jet = recorder(inputs, directions=(2,), order=1)
        c = problem.c(y)
        jump = 2.0 * c * jet.grad[:, 0] + 1.0
        _check_finite(jump, y, y, 'singular')
        if weight is not None:
            recorder.seed(jet, grad=(weight * 2.0 * jump / m * 2.0 * c)[:, None])
        return float(np.mean(jump * jump))

    per_source = batch.singular.shape[1]
    x = batch.singular.reshape(-1, d)
    y = np.repeat(batch.sources, per_source, axis=0)
    phi, gphi, _, _ = augmented_batch(batch.kind, x, y)
    jet = recorder(np.column_stack([x, y, phi]), directions=_x_directions(d))

    diff = x - y
    normal = diff / np.linalg.norm(diff, axis=1, keepdims=True)
    c = problem.c(x)
    w = batch.singular_weights.ravel()
    flux = w * c * (np.sum(jet.grad[:, :d] * normal, axis=1) + jet.grad[:, d] * np.sum(gphi * normal, axis=1))

    num_radii = batch.radii.size
    circle = np.tile(batch.circle_of, m) + num_radii * np.repeat(np.arange(m), per_source)
    closure = 1.0 + np.bincount(circle, weights=flux, minlength=m * num_radii)
    _check_finite(closure, batch.sources.repeat(num_radii, axis=0), batch.sources.repeat(num_radii, axis=0),
                  'normalization')

    if weight is not None:
        ds = weight * 2.0 * closure / closure.size
        per_point = ds[circle] * w * c
        grad_seed = np.zeros_like(jet.grad)
        grad_seed[:, :d] = per_point[:, None] * normal
        grad_seed[:, d] = per_point * np.sum(gphi * normal, axis=1)
        recorder.seed(jet, grad=grad_seed)
    return float(np.mean(closure * closure))


def bndry_term(recorder: JetRecorder, batch: CollocationBatch, weight: Optional[float] = None) -> float:
    d = batch.dimension
    x = batch.boundary.reshape(-1, d)
    y = np.repeat(batch.sources, batch.boundary.shape[1], axis=0)
    phi = augmented_batch(batch.kind, x, y)[0]
    jet = recorder(np.column_stack([x, y, phi]), directions=())
    values = jet.value
    _check_finite(values, x, y, 'boundary')
    if weight is not None:
        recorder.seed(jet, value=weight * 2.0 * values / values.size)
    return float(np.mean(values * values))


def symtr_term(recorder: JetRecorder, batch: CollocationBatch, weight: Optional[float] = None) -> float:
    d = batch.dimension
    x = batch.regular.reshape(-1, d)
    y = np.repeat(batch.sources, batch.regular.shape[1], axis=0)
    phi = batch.phi.ravel()
    forward = recorder(np.column_stack([x, y, phi]), directions=())
    swapped = recorder(np.column_stack([y, x, phi]), directions=())
    gap = forward.value - swapped.value
    _check_finite(gap, x, y, 'symmetry')
    if weight is not None:
        dg = weight * 2.0 * gap / gap.size
        recorder.seed(forward, value=dg)
        recorder.seed(swapped, value=-dg)
    return float(np.mean(gap * gap))


def _evaluate_terms(recorder: JetRecorder, batch: CollocationBatch, problem: EllipticProblem,
                    config: TrainConfig, weight: Optional[float]) -> LossBreakdown:
    def scaled(beta):
        return None if weight is None else weight * beta

    reglr = reglr_term(recorder, batch, problem, scaled(1.0))
    snglr = snglr_term(recorder, batch, problem, scaled(config.beta_snglr))
    bndry = bndry_term(recorder, batch, scaled(config.beta_bndry))
    symtr = symtr_term(recorder, batch, scaled(config.beta_symtr))
    total = reglr + config.beta_snglr * snglr + config.beta_bndry * bndry + config.beta_symtr * symtr
    return LossBreakdown(reglr=reglr, snglr=snglr, bndry=bndry, symtr=symtr, total=total)


def loss_reglr(net: MlpNetwork, batch: CollocationBatch, problem: EllipticProblem) -> float:
    return reglr_term(JetRecorder(net), batch, problem)


def loss_snglr(net: MlpNetwork, batch: CollocationBatch, problem: EllipticProblem) -> float:
    return snglr_term(JetRecorder(net), batch, problem)


def loss_bndry(net: MlpNetwork, batch: CollocationBatch) -> float:
    return bndry_term(JetRecorder(net), batch)


def loss_symtr(net: MlpNetwork, batch: CollocationBatch) -> float:
    return symtr_term(JetRecorder(net), batch)


def total_loss(net: MlpNetwork, batch: CollocationBatch, problem: EllipticProblem,
               config: TrainConfig) -> LossBreakdown:
    """All four terms and their penalised sum, without gradients"""
    return _evaluate_terms(JetRecorder(net), batch, problem, config, weight=None)


def total_loss_and_grad(net: MlpNetwork, batch: CollocationBatch, problem: EllipticProblem,
                        config: TrainConfig, weight: float = 1.0) -> Tuple[LossBreakdown, ParamGradient]:
    """
    Loss breakdown and exact parameter gradient of ``weight`` times the penalised loss

    The weight lets a chunk of sources contribute its share of the full-batch mean.
    """
    captured = {}

    def evaluator(recorder: JetRecorder) -> float:
        captured['breakdown'] = _evaluate_terms(recorder, batch, problem, config, weight)
        return weight * captured['breakdown'].total

    _, grad = loss_param_grad(net, evaluator)
    return captured['breakdown'].scaled(weight), grad

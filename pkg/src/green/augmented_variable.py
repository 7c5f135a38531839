"""
Augmented variable z = phi(x, y) encoding the singularity of a Green's function

A kernel is learned as G(x, y) = Ghat(x, y, phi(x, y)) with Ghat smooth. The network input is
laid out as [x_1..x_d, y_1..y_d, z].
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AugmentedKind:
    """
    ABS: |x - y| (d = 1), LOG: ln|x - y| (d = 2), POWER(p): |x - y|^p (p < 0 or p = 2 - d)
    """

    name: str
    exponent: Optional[float] = None

    @classmethod
    def abs(cls) -> "AugmentedKind":
        return cls('abs')

    @classmethod
    def log(cls) -> "AugmentedKind":
        return cls('log')

    @classmethod
    def power(cls, exponent: float) -> "AugmentedKind":
        return cls('power', float(exponent))

    @classmethod
    def default_for(cls, dimension: int) -> "AugmentedKind":
        if dimension == 1:
            return cls.abs()
        if dimension == 2:
            return cls.log()
        return cls.power(2.0 - dimension)

    @classmethod
    def parse(cls, name: str, exponent: Optional[float] = None) -> "AugmentedKind":
        name = name.strip().lower()
        if name == 'power':
            if exponent is None:
                raise ConfigError("POWER kind needs an exponent", key='exponent')
            return cls.power(exponent)
        if name not in ('abs', 'log'):
            raise ConfigError(f"Unknown augmented-variable kind: {name}", key='kind')
        return cls(name)

    def validate(self, dimension: int) -> "AugmentedKind":
        if self.name == 'abs' and dimension != 1:
            raise ConfigError(f"ABS kind requires d = 1, got d = {dimension}", key='kind')
        if self.name == 'log' and dimension != 2:
            raise ConfigError(f"LOG kind requires d = 2, got d = {dimension}", key='kind')
        if self.name == 'power':
            p = self.exponent
            if p is None or not (p < 0 or p == 2 - dimension):
                raise ConfigError(f"POWER exponent must be negative or 2 - d, got {p}", key='exponent')
        return self

    def label(self) -> str:
        return self.name if self.name != 'power' else f"power({self.exponent:g})"


def augmented_batch(kind: AugmentedKind, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, ...]:
    """
    phi, grad_x phi, |grad_x phi|^2 and Laplace_x phi for point pairs

    Args:
        kind: Augmented-variable kind
        x: Points [N, d]
        y: Points [N, d]

    Returns:
        (phi [N], grad [N, d], grad_sq [N], lap [N])
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    diff = x - y
    dimension = diff.shape[1]
    r2 = np.sum(diff * diff, axis=1)
    if np.any(r2 == 0.0):
        raise ValueError("Augmented variable is singular at x = y")

    if kind.name == 'abs':
        phi = np.abs(diff[:, 0])
        grad = np.sign(diff)
        grad_sq = np.ones_like(phi)
        lap = np.zeros_like(phi)
    elif kind.name == 'log':
        phi = 0.5 * np.log(r2)
        grad = diff / r2[:, None]
        grad_sq = 1.0 / r2
        lap = np.zeros_like(phi)
    else:
        p = kind.exponent
        r = np.sqrt(r2)
        phi = r ** p
        grad = (p * r ** (p - 2.0))[:, None] * diff
        grad_sq = p * p * r ** (2.0 * p - 2.0)
        lap = p * (p + dimension - 2.0) * r ** (p - 2.0)
    return phi, grad, grad_sq, lap


def augmented_variable(kind: AugmentedKind, x, y):
    """Single-pair version of :func:`augmented_batch`; returns (phi, grad, grad_sq, lap)"""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    phi, grad, grad_sq, lap = augmented_batch(kind, x[None, :], y[None, :])
    return float(phi[0]), grad[0], float(grad_sq[0]), float(lap[0])


def network_inputs(kind: AugmentedKind, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Network input rows [x, y, phi(x, y)]; ABS inputs may sit on the diagonal"""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if kind.name == 'abs':
        phi = np.abs(x[:, 0] - y[:, 0])
    else:
        phi = augmented_batch(kind, x, y)[0]
    return np.column_stack([x, y, phi])

#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Benchmark elliptic problems
Unit-interval Poisson and Helmholtz problems, unit-disc Poisson problem, exact Green's functions
and manufactured solutions

Point arrays have shape [N, d]; coefficient callables return [N] (gradients [N, d]).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

PointFunction = Callable[[np.ndarray], np.ndarray]
KernelFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Domain:
    """Unit interval (0, 1) or unit disc centred at the origin"""

    kind: str

    def __post_init__(self):
        if self.kind not in ('interval', 'disc'):
            raise ConfigError(f"Unsupported domain: {self.kind}", key='domain')

    @property
    def dimension(self) -> int:
        return 1 if self.kind == 'interval' else 2

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Closed-domain membership of each point"""
        points = np.asarray(points, dtype=np.float64).reshape(-1, self.dimension)
        if self.kind == 'interval':
            return (points[:, 0] >= -tol) & (points[:, 0] <= 1.0 + tol)
        return np.sum(points * points, axis=1) <= (1.0 + tol) ** 2

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64).reshape(-1, self.dimension)
        if self.kind == 'interval':
            return np.minimum(points[:, 0], 1.0 - points[:, 0])
        return 1.0 - np.linalg.norm(points, axis=1)


@dataclass(frozen=True)
class EllipticProblem:
    """
    -div(c grad u) - k2 u = f in the domain, u = 0 on its boundary
    """

    name: str
    domain: Domain
    c: PointFunction
    grad_c: PointFunction
    k2: PointFunction
    f: PointFunction
    exact_u: Optional[PointFunction] = None
    exact_green: Optional[KernelFunction] = None

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @property
    def is_poisson(self) -> bool:
        return self.name.startswith('poisson')


def _points(x: np.ndarray, dimension: int) -> np.ndarray:
    return np.asarray(x, dtype=np.float64).reshape(-1, dimension)


def exact_green_poisson1d(x, y):
    """
    Green's function of -u'' on (0, 1) with homogeneous Dirichlet conditions

    x(1 - y) for x <= y, y(1 - x) otherwise; symmetric bit-exactly.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    value = np.minimum(x, y) * (1.0 - np.maximum(x, y))
    return float(value) if value.ndim == 0 else value


def exact_green_disc2d(x, y):
    """
    Green's function of -Laplace on the unit disc with homogeneous Dirichlet conditions

    Args:
        x: Point(s) [..., 2] with |x| <= 1
        y: Point(s) [..., 2] with |y| < 1

    Returns:
        -(1/4pi) ln[ |x - y|^2 / ((x1 y2 - x2 y1)^2 + (x1 y1 + x2 y2 - 1)^2) ]
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    x1, x2 = x[..., 0], x[..., 1]
    y1, y2 = y[..., 0], y[..., 1]

    dist2 = (x1 - y1) ** 2 + (x2 - y2) ** 2
    if np.any(dist2 == 0.0):
        raise ValueError("Disc Green's function is singular at x = y")

    image2 = (x1 * y2 - x2 * y1) ** 2 + (x1 * y1 + x2 * y2 - 1.0) ** 2
    value = -np.log(dist2 / image2) / (4.0 * np.pi)
    return float(value) if value.ndim == 0 else value


# ========================
# MANUFACTURED SOLUTIONS
# ========================

def _u_1d(x):
    return 10.0 * x - 10.0 * x ** 2 + 0.5 * np.sin(20.0 * np.pi * x ** 3)


def _du_1d(x):
    return 10.0 - 20.0 * x + 30.0 * np.pi * x ** 2 * np.cos(20.0 * np.pi * x ** 3)


def _d2u_1d(x):
    phase = 20.0 * np.pi * x ** 3
    return -20.0 + 60.0 * np.pi * x * np.cos(phase) - 1800.0 * np.pi ** 2 * x ** 4 * np.sin(phase)


def _poisson1d() -> EllipticProblem:
    return EllipticProblem(
        name='poisson1d',
        domain=Domain('interval'),
        c=lambda x: np.ones(_points(x, 1).shape[0]),
        grad_c=lambda x: np.zeros_like(_points(x, 1)),
        k2=lambda x: np.zeros(_points(x, 1).shape[0]),
        f=lambda x: -_d2u_1d(_points(x, 1)[:, 0]),
        exact_u=lambda x: _u_1d(_points(x, 1)[:, 0]),
        exact_green=lambda x, y: exact_green_poisson1d(_points(x, 1)[:, 0], _points(y, 1)[:, 0]),
    )


def _helmholtz_c(x):
    return (_points(x, 1)[:, 0] - 2.0) ** 2


def _helmholtz_k2(x):
    return (15.0 * np.sin(10.0 * _points(x, 1)[:, 0])) ** 2


def _helmholtz_f(x):
    t = _points(x, 1)[:, 0]
    c = (t - 2.0) ** 2
    dc = 2.0 * (t - 2.0)
    k2 = (15.0 * np.sin(10.0 * t)) ** 2
    return -c * _d2u_1d(t) - dc * _du_1d(t) - k2 * _u_1d(t)


def _helmholtz1d() -> EllipticProblem:
    return EllipticProblem(
        name='helmholtz1d',
        domain=Domain('interval'),
        c=_helmholtz_c,
        grad_c=lambda x: 2.0 * (_points(x, 1) - 2.0),
        k2=_helmholtz_k2,
        f=_helmholtz_f,
        exact_u=lambda x: _u_1d(_points(x, 1)[:, 0]),
    )


def _radius2(x):
    p = _points(x, 2)
    return p[:, 0] ** 2 + p[:, 1] ** 2


def _poisson2d() -> EllipticProblem:
    return EllipticProblem(
        name='poisson2d',
        domain=Domain('disc'),
        c=lambda x: np.ones(_points(x, 2).shape[0]),
        grad_c=lambda x: np.zeros_like(_points(x, 2)),
        k2=lambda x: np.zeros(_points(x, 2).shape[0]),
        # -Laplace of -exp(r^2 - 1) + 1
        f=lambda x: (4.0 * _radius2(x) + 4.0) * np.exp(_radius2(x) - 1.0),
        exact_u=lambda x: 1.0 - np.exp(_radius2(x) - 1.0),
        exact_green=lambda x, y: exact_green_disc2d(_points(x, 2), _points(y, 2)),
    )


_CASES = {
    'poisson1d': _poisson1d,
    'helmholtz1d': _helmholtz1d,
    'poisson2d': _poisson2d,
}


def manufactured_case(name: str) -> EllipticProblem:
    """
    Named benchmark problem with its manufactured solution

    Args:
        name: 'poisson1d', 'helmholtz1d' or 'poisson2d'

    Returns:
        EllipticProblem
    """
    if name not in _CASES:
        raise ConfigError(f"Unknown problem '{name}', expected one of {sorted(_CASES)}", key='problem')
    return _CASES[name]()


def available_problems():
    return sorted(_CASES)

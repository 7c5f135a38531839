"""
Training configuration and collocation sampling for singularity-encoded Green's functions
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat, PositiveInt, field_validator

from config.experiments import ExperimentConfig
from src.green.augmented_variable import AugmentedKind, augmented_batch
from src.problems.benchmark_problems import EllipticProblem
from src.utils.errors import ConfigError, SamplingError

logger = logging.getLogger(__name__)

MAX_REJECTION_ROUNDS = 100


class TrainConfig(BaseModel):
    """Hyperparameters of one training run"""

    model_config = ConfigDict(extra='forbid')

    problem: str
    depth: PositiveInt
    width: PositiveInt
    beta_snglr: NonNegativeFloat
    beta_bndry: NonNegativeFloat
    beta_symtr: NonNegativeFloat
    n_regular: PositiveInt
    n_singular: PositiveInt
    n_boundary: PositiveInt
    n_sources: PositiveInt
    learning_rate: PositiveFloat
    milestones: List[int] = Field(default_factory=list)
    max_epochs: int = Field(ge=0)
    seed: int = 0
    epsilons: List[PositiveFloat] = Field(default_factory=list)
    exclusion_radius: PositiveFloat
    kind: str = 'abs'
    exponent: Optional[float] = None
    weight_decay: NonNegativeFloat = 1e-2
    resample_every: PositiveInt = 1
    log_every: PositiveInt = 100

    @field_validator('milestones')
    @classmethod
    def milestones_increasing(cls, value: List[int]) -> List[int]:
        if any(b <= a for a, b in zip(value, value[1:])) or any(m < 0 for m in value):
            raise ValueError(f"milestones must be non-negative and strictly increasing: {value}")
        return value

    @field_validator('kind')
    @classmethod
    def known_kind(cls, value: str) -> str:
        value = value.strip().lower()
        if value not in ('abs', 'log', 'power'):
            raise ValueError(f"kind must be abs, log or power: {value}")
        return value

    def augmented_kind(self) -> AugmentedKind:
        return AugmentedKind.parse(self.kind, self.exponent)

    def check_problem(self, problem: EllipticProblem) -> None:
        """Consistency of the configuration with the problem dimension"""
        self.augmented_kind().validate(problem.dimension)
        if problem.dimension == 2:
            if not self.epsilons:
                raise ConfigError("Disc problems need at least one normalization radius", key='epsilons')
            if self.n_singular < len(self.epsilons):
                raise ConfigError("n_singular must be at least the number of radii", key='n_singular')

    @classmethod
    def from_defaults(cls, problem: str, **overrides) -> "TrainConfig":
        """Training row of a benchmark problem with optional overrides"""
        row = ExperimentConfig.get_train_defaults(problem)
        row.update(overrides)
        return cls(**row)


@dataclass(eq=False)
class CollocationBatch:
    """
    Collocation points grouped by source

    Arrays carry the source on the first axis: regular points [M, N_R, d], boundary points
    [M, N_B, d], singular points [M, N_S, d]. For d = 1 the singular points are the sources.
    """

    sources: np.ndarray
    regular: np.ndarray
    boundary: np.ndarray
    singular: np.ndarray
    singular_weights: np.ndarray
    circle_of: np.ndarray
    radii: np.ndarray
    phi: np.ndarray
    grad_phi: np.ndarray
    grad_phi_sq: np.ndarray
    lap_phi: np.ndarray
    kind: AugmentedKind

    @property
    def dimension(self) -> int:
        return self.sources.shape[1]

    @property
    def num_sources(self) -> int:
        return self.sources.shape[0]

    def select(self, index) -> "CollocationBatch":
        """Sub-batch of the given sources"""
        return CollocationBatch(
            sources=self.sources[index],
            regular=self.regular[index],
            boundary=self.boundary[index],
            singular=self.singular[index],
            singular_weights=self.singular_weights[index],
            circle_of=self.circle_of,
            radii=self.radii,
            phi=self.phi[index],
            grad_phi=self.grad_phi[index],
            grad_phi_sq=self.grad_phi_sq[index],
            lap_phi=self.lap_phi[index],
            kind=self.kind,
        )


def _uniform_in_domain(problem: EllipticProblem, rng: np.random.Generator, count: int) -> np.ndarray:
    if problem.domain.kind == 'interval':
        return rng.uniform(0.0, 1.0, size=(count, 1))
    radius = np.sqrt(rng.uniform(0.0, 1.0, size=count))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=count)
    return np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])


def _uniform_on_boundary(problem: EllipticProblem, rng: np.random.Generator, count: int) -> np.ndarray:
    if problem.domain.kind == 'interval':
        return (np.arange(count) % 2).astype(np.float64)[:, None]
    theta = rng.uniform(0.0, 2.0 * np.pi, size=count)
    return np.column_stack([np.cos(theta), np.sin(theta)])


def _regular_points(problem, rng, sources, per_source, exclusion_radius):
    """Uniform points outside the exclusion tube of their own source, by rejection"""
    num_sources, dimension = sources.shape
    points = np.empty((num_sources, per_source, dimension))
    filled = np.zeros(num_sources, dtype=np.int64)

    for _ in range(MAX_REJECTION_ROUNDS):
        missing = per_source - filled
        if not np.any(missing):
            return points
        owners = np.repeat(np.arange(num_sources), missing)
        draws = _uniform_in_domain(problem, rng, owners.size)
        keep = np.linalg.norm(draws - sources[owners], axis=1) >= exclusion_radius
        accepted = owners[keep]
        # owners are sorted, so the rank inside each owner's run gives the next free slot
        rank = np.arange(accepted.size) - np.searchsorted(accepted, accepted, side='left')
        points[accepted, filled[accepted] + rank] = draws[keep]
        filled += np.bincount(accepted, minlength=num_sources)

    raise SamplingError(f"Rejection sampling did not fill {int(np.sum(per_source - filled))} regular points "
                        f"after {MAX_REJECTION_ROUNDS} rounds")


def circle_split(num_points: int, num_radii: int) -> np.ndarray:
    """Circle index of each singular point when num_points are spread evenly over the radii"""
    return np.concatenate([np.full(chunk.size, k) for k, chunk in
                           enumerate(np.array_split(np.arange(num_points), num_radii))])


def sample_collocation(problem: EllipticProblem, config: TrainConfig, rng: np.random.Generator) -> CollocationBatch:
    """
    Draw sources, regular, boundary and singular points

    Args:
        problem: Benchmark problem (interval or unit disc)
        config: Training configuration
        rng: Random generator

    Returns:
        CollocationBatch
    """
    config.check_problem(problem)
    kind = config.augmented_kind()
    d = problem.dimension
    m = config.n_sources

    sources = _uniform_in_domain(problem, rng, m)
    regular = _regular_points(problem, rng, sources, config.n_regular, config.exclusion_radius)
    boundary = np.stack([_uniform_on_boundary(problem, rng, config.n_boundary) for _ in range(m)])

    if d == 1:
        singular = sources[:, None, :].copy()
        radii = np.zeros(1)
        circle_of = np.zeros(1, dtype=np.int64)
        weights = np.ones((m, 1))
    else:
        radii = np.asarray(config.epsilons, dtype=np.float64)
        circle_of = circle_split(config.n_singular, radii.size)
        counts = np.bincount(circle_of, minlength=radii.size)
        position = np.concatenate([np.arange(c) for c in counts])
        # equispaced angles, randomly rotated per source and circle
        rotation = rng.uniform(0.0, 2.0 * np.pi, size=(m, radii.size))
        theta = rotation[:, circle_of] + 2.0 * np.pi * position[None, :] / counts[circle_of][None, :]
        r = radii[circle_of][None, :, None]
        singular = sources[:, None, :] + r * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        weights = np.broadcast_to(2.0 * np.pi * radii[circle_of] / counts[circle_of], (m, circle_of.size)).copy()

    y = np.repeat(sources, config.n_regular, axis=0)
    phi, grad, grad_sq, lap = augmented_batch(kind, regular.reshape(-1, d), y)

    return CollocationBatch(
        sources=sources,
        regular=regular,
        boundary=boundary,
        singular=singular,
        singular_weights=weights,
        circle_of=circle_of,
        radii=radii,
        phi=phi.reshape(m, -1),
        grad_phi=grad.reshape(m, -1, d),
        grad_phi_sq=grad_sq.reshape(m, -1),
        lap_phi=lap.reshape(m, -1),
        kind=kind,
    )

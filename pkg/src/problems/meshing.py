"""
Structured triangulation of the unit disc

Concentric rings k = 1..K of radius k/K carry 6k equispaced nodes; neighbouring rings are
stitched by walking both rings and always closing the shorter diagonal, and the centre node
closes ring 1 with a fan.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

MAX_EDGE_FACTOR = 1.2
MAX_VERTICES = 2_000_000


@dataclass(frozen=True, eq=False)
class DiscMesh:
    """Conforming triangulation of the unit disc"""

    vertices: np.ndarray
    triangles: np.ndarray
    rings: int
    h_target: float
    boundary: np.ndarray = field(repr=False)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted vertex pairs"""
        t = self.triangles
        pairs = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        pairs.sort(axis=1)
        return np.unique(pairs, axis=0)

    def max_edge(self) -> float:
        e = self.edges()
        return float(np.max(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)))


def _ring_start(k: int) -> int:
    """Index of the first node of ring k (ring 0 is the centre)"""
    return 0 if k == 0 else 1 + 3 * k * (k - 1)


def _build(rings: int):
    vertices = [np.zeros((1, 2))]
    for k in range(1, rings + 1):
        theta = 2.0 * np.pi * np.arange(6 * k) / (6 * k)
        radius = k / rings
        vertices.append(np.column_stack([radius * np.cos(theta), radius * np.sin(theta)]))
    vertices = np.concatenate(vertices)

    triangles = []
    # fan around the centre
    for j in range(6):
        triangles.append((0, _ring_start(1) + j, _ring_start(1) + (j + 1) % 6))

    for k in range(2, rings + 1):
        m, n = 6 * (k - 1), 6 * k
        inner, outer = _ring_start(k - 1), _ring_start(k)
        i = j = 0
        while i < m or j < n:
            # shorter of the two candidate diagonals, angles compared exactly in units of 1/(m n)
            outer_gap = abs((j + 1) * m - i * n)
            inner_gap = abs((i + 1) * n - j * m)
            take_outer = j < n and (i == m or outer_gap <= inner_gap)
            if take_outer:
                triangles.append((inner + i % m, outer + j % n, outer + (j + 1) % n))
                j += 1
            else:
                triangles.append((inner + i % m, outer + j % n, inner + (i + 1) % m))
                i += 1

    boundary = np.zeros(vertices.shape[0], dtype=bool)
    boundary[_ring_start(rings):] = True
    return vertices, np.asarray(triangles, dtype=np.int64), boundary


def mesh_unit_disc(h_target: float) -> DiscMesh:
    """
    Quasi-uniform triangulation of the unit disc with max edge <= 1.2 h_target

    Args:
        h_target: Target mesh size

    Returns:
        DiscMesh (deterministic for a given h_target)
    """
    if not h_target > 0:
        raise ValueError(f"Mesh size must be positive: {h_target}")

    rings = math.ceil(1.0 / h_target)
    while True:
        if 1 + 3 * rings * (rings + 1) > MAX_VERTICES:
            raise ValueError(f"Mesh size {h_target} needs more than {MAX_VERTICES} vertices")

        vertices, triangles, boundary = _build(rings)
        mesh = DiscMesh(vertices=vertices, triangles=triangles, rings=rings,
                        h_target=h_target, boundary=boundary)
        if mesh.max_edge() <= MAX_EDGE_FACTOR * h_target:
            break
        rings += 1

    logger.debug(f"Disc mesh h={h_target}: {rings} rings, {mesh.num_vertices} vertices, "
                 f"{triangles.shape[0]} triangles")
    return mesh

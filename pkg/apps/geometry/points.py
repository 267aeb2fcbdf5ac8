import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

logger = logging.getLogger(__name__)


class BoundaryMode(str, Enum):
    PLAIN = 'plain'
    TORUS = 'torus'


@dataclass(frozen=True)
class Window:
    """
    Rectangular observation window.

    Under ``torus`` mode opposite edges are identified, so distances are
    taken over the wrapped images and the process has no edge effects.
    """
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    boundary_mode: BoundaryMode = BoundaryMode.PLAIN

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError(f"x_max ({self.x_max}) must be greater than x_min ({self.x_min})")
        if not self.y_max > self.y_min:
            raise ValueError(f"y_max ({self.y_max}) must be greater than y_min ({self.y_min})")
        # Accept plain strings coming from configuration
        object.__setattr__(self, 'boundary_mode', BoundaryMode(self.boundary_mode))

    @classmethod
    def square(cls, half_side, boundary_mode=BoundaryMode.PLAIN):
        return cls(-half_side, half_side, -half_side, half_side, boundary_mode)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def is_torus(self) -> bool:
        return self.boundary_mode is BoundaryMode.TORUS

    def area(self) -> float:
        return self.width * self.height

    def contains(self, points) -> np.ndarray:
        """Boolean mask of the points lying in the closed window."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return (
            (points[:, 0] >= self.x_min) & (points[:, 0] <= self.x_max)
            & (points[:, 1] >= self.y_min) & (points[:, 1] <= self.y_max)
        )

    def displacement(self, a, b) -> np.ndarray:
        """
        Absolute per-axis differences between a and b.

        Both arguments broadcast against each other. On the torus every axis
        takes the shorter of the direct and the wrapped difference, which is
        the same as minimizing over the nine translated images of b.
        """
        delta = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
        if self.is_torus:
            sides = np.array([self.width, self.height])
            delta = np.minimum(delta, sides - delta)
        return delta

    def distance(self, a, b):
        """Euclidean (or wrapped) distance; scalar for two points, array otherwise."""
        delta = self.displacement(a, b)
        result = np.hypot(delta[..., 0], delta[..., 1])
        if np.ndim(result) == 0:
            return float(result)
        return result


@dataclass(frozen=True, eq=False)
class PointSet:
    """
    Immutable set of points in a window; point i is ``coordinates[i]``.
    """
    coordinates: np.ndarray
    window: Window = field(repr=False)

    def __post_init__(self):
        coordinates = np.array(self.coordinates, dtype=float).reshape(-1, 2)
        if not self.window.contains(coordinates).all():
            raise ValueError("All points must lie within the window")
        coordinates.setflags(write=False)
        object.__setattr__(self, 'coordinates', coordinates)

    @classmethod
    def empty(cls, window):
        return cls(np.empty((0, 2)), window)

    def __len__(self):
        return self.coordinates.shape[0]

    def __getitem__(self, index):
        return self.coordinates[index]

    @property
    def indices(self) -> range:
        return range(len(self))

    def distances_from(self, point) -> np.ndarray:
        """Distances from ``point`` to every member, in index order."""
        if len(self) == 0:
            return np.empty(0)
        return np.atleast_1d(self.window.distance(self.coordinates, point))


def distance(a, b, window: Window) -> float:
    return window.distance(a, b)


def sample_ppp(intensity: float, window: Window, rng: np.random.Generator) -> PointSet:
    """
    Sample a homogeneous Poisson point process on the window.

    Args:
        intensity (float): Mean number of points per unit area
        window (Window): Observation window
        rng (Generator): Random stream owned by the caller

    Returns:
        PointSet: Poisson(intensity * area) points, iid uniform on the window
    """
    if intensity < 0:
        raise ValueError(f"intensity must be non-negative, got {intensity}")

    count = int(rng.poisson(intensity * window.area()))
    x = rng.uniform(window.x_min, window.x_max, size=count)
    y = rng.uniform(window.y_min, window.y_max, size=count)
    logger.debug(f"Sampled {count} points at intensity {intensity}")
    return PointSet(np.column_stack([x, y]), window)


def pair_distances(points: PointSet) -> np.ndarray:
    """Distances of all unordered pairs i < j."""
    n = len(points)
    if n < 2:
        return np.empty(0)
    first, second = np.triu_indices(n, k=1)
    return np.atleast_1d(points.window.distance(points.coordinates[first], points.coordinates[second]))


def pair_correlation(points: PointSet, edges) -> np.ndarray:
    """
    Ring-count estimate of the pair correlation function g(r).

    Args:
        points (PointSet): Pattern to analyze
        edges (array-like): Increasing ring boundaries r_0 < r_1 < ... < r_k

    Returns:
        ndarray: k values, g on each ring [r_{i}, r_{i+1}); no edge correction
        is applied, so plain windows underestimate g near the window scale
    """
    edges = np.asarray(edges, dtype=float)
    n = len(points)
    if n < 2:
        return np.zeros(len(edges) - 1)

    counts, _ = np.histogram(pair_distances(points), bins=edges)
    density = n / points.window.area()
    ring_areas = np.pi * np.diff(edges ** 2)
    # Each unordered pair is seen from both ends
    return 2.0 * counts / (n * density * ring_areas)

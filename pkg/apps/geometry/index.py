import math
from collections import defaultdict

import numpy as np

from .points import PointSet

# Finest grid resolution per axis, relative to the window side
MAX_CELLS_PER_AXIS = 64


class NeighborIndex:
    """
    Uniform grid over the window for fixed-radius neighbor queries.

    Cells tile the window exactly (``side / cells``) and are never smaller
    than the radius the index was built for. Queries with a larger radius
    are still exact, they just visit more cells.
    """

    def __init__(self, points: PointSet, radius: float):
        if radius < 0:
            raise ValueError(f"radius must be non-negative, got {radius}")
        self.points = points
        self.window = points.window
        self.nx = self._cell_count(self.window.width, radius)
        self.ny = self._cell_count(self.window.height, radius)
        self.cell_x = self.window.width / self.nx
        self.cell_y = self.window.height / self.ny

        buckets = defaultdict(list)
        for index, point in enumerate(points.coordinates):
            buckets[self._cell_of(point)].append(index)
        self._buckets = {cell: np.array(members, dtype=int) for cell, members in buckets.items()}

    @staticmethod
    def _cell_count(side, radius):
        size = max(radius, side / MAX_CELLS_PER_AXIS)
        return max(1, int(side // size))

    def _cell_of(self, point):
        ix = math.floor((point[0] - self.window.x_min) / self.cell_x)
        iy = math.floor((point[1] - self.window.y_min) / self.cell_y)
        # Points on the upper edges belong to the last cell
        return min(max(ix, 0), self.nx - 1), min(max(iy, 0), self.ny - 1)

    def _axis_range(self, center_cell, reach, count):
        if self.window.is_torus:
            if 2 * reach + 1 >= count:
                return range(count)
            return sorted({(center_cell + offset) % count for offset in range(-reach, reach + 1)})
        return range(max(center_cell - reach, 0), min(center_cell + reach, count - 1) + 1)

    def _candidates(self, center, radius):
        ix, iy = self._cell_of(center)
        reach_x = math.ceil(radius / self.cell_x)
        reach_y = math.ceil(radius / self.cell_y)
        found = [
            self._buckets[(cx, cy)]
            for cx in self._axis_range(ix, reach_x, self.nx)
            for cy in self._axis_range(iy, reach_y, self.ny)
            if (cx, cy) in self._buckets
        ]
        if not found:
            return np.empty(0, dtype=int)
        return np.concatenate(found)

    def ball_query(self, center, radius, exclude=None) -> list:
        """
        Indices of the points within ``radius`` of ``center``.

        Args:
            center: 2-D point inside the window
            radius (float): Closed ball radius
            exclude (int, optional): Member index to leave out, used when
                the center is itself one of the indexed points

        Returns:
            list: Sorted point indices
        """
        if radius < 0:
            raise ValueError(f"radius must be non-negative, got {radius}")
        candidates = self._candidates(center, radius)
        if candidates.size == 0:
            return []
        within = self.window.distance(self.points.coordinates[candidates], center)
        hits = candidates[np.atleast_1d(within) <= radius]
        if exclude is not None:
            hits = hits[hits != exclude]
        return sorted(int(i) for i in hits)

    def neighbors(self, index, radius) -> list:
        """Neighborhood N(x) of member point ``index``: other points within radius."""
        return self.ball_query(self.points[index], radius, exclude=index)

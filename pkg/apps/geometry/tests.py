import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from .index import NeighborIndex
from .points import (
    BoundaryMode, PointSet, Window, distance, pair_correlation, sample_ppp
)


@pytest.fixture
def window():
    return Window.square(5.0)


@pytest.fixture
def torus():
    return Window.square(5.0, BoundaryMode.TORUS)


def brute_force(points, center, radius, exclude=None):
    within = np.flatnonzero(points.distances_from(center) <= radius)
    return [int(i) for i in within if i != exclude]


class TestWindow:

    def test_rejects_degenerate_bounds(self):
        with pytest.raises(ValueError):
            Window(1.0, 1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            Window(0.0, 1.0, 2.0, -2.0)

    def test_area(self, window):
        assert window.area() == 100.0

    def test_accepts_mode_name(self):
        assert Window(0, 1, 0, 1, 'torus').is_torus


class TestDistance:

    def test_identity(self, window):
        assert distance((1.5, -2.0), (1.5, -2.0), window) == 0.0

    def test_pythagorean(self, window):
        assert distance((0.0, 0.0), (3.0, 4.0), window) == pytest.approx(5.0)

    def test_torus_wraparound(self, torus):
        assert distance((-4.5, 0.0), (4.5, 0.0), torus) == pytest.approx(1.0)

    def test_plain_does_not_wrap(self, window):
        assert distance((-4.5, 0.0), (4.5, 0.0), window) == pytest.approx(9.0)

    def test_torus_matches_nine_images(self, torus):
        rng = np.random.default_rng(7)
        shifts = [(dx, dy) for dx in (-10, 0, 10) for dy in (-10, 0, 10)]
        for _ in range(50):
            a, b = rng.uniform(-5, 5, size=(2, 2))
            expected = min(math.hypot(a[0] - b[0] - dx, a[1] - b[1] - dy) for dx, dy in shifts)
            assert distance(a, b, torus) == pytest.approx(expected)


class TestSamplePPP:

    def test_zero_intensity_is_empty(self, window):
        assert len(sample_ppp(0.0, window, np.random.default_rng(0))) == 0

    def test_rejects_negative_intensity(self, window):
        with pytest.raises(ValueError):
            sample_ppp(-1.0, window, np.random.default_rng(0))

    def test_points_inside_window(self, window):
        points = sample_ppp(3.0, window, np.random.default_rng(1))
        assert window.contains(points.coordinates).all()
        assert list(points.indices) == list(range(len(points)))

    def test_count_mean_and_variance(self, window):
        rng = np.random.default_rng(2)
        counts = np.array([len(sample_ppp(3.0, window, rng)) for _ in range(2000)])
        assert counts.mean() == pytest.approx(300, rel=0.01)
        assert counts.var(ddof=1) == pytest.approx(300, rel=0.1)

    @pytest.mark.slow
    def test_count_variance_full(self, window):
        rng = np.random.default_rng(3)
        counts = np.array([len(sample_ppp(3.0, window, rng)) for _ in range(10_000)])
        assert counts.var(ddof=1) == pytest.approx(300, rel=0.05)

    def test_x_coordinates_uniform(self, window):
        rng = np.random.default_rng(4)
        xs = np.concatenate([sample_ppp(3.0, window, rng).coordinates[:, 0] for _ in range(20)])
        result = stats.kstest(xs, stats.uniform(loc=-5.0, scale=10.0).cdf)
        assert result.pvalue > 0.01

    def test_deterministic_for_seed(self, window):
        first = sample_ppp(3.0, window, np.random.default_rng(11))
        second = sample_ppp(3.0, window, np.random.default_rng(11))
        np.testing.assert_array_equal(first.coordinates, second.coordinates)

    def test_point_set_is_read_only(self, window):
        points = sample_ppp(1.0, window, np.random.default_rng(5))
        with pytest.raises(ValueError):
            points.coordinates[0, 0] = 0.0

    def test_rejects_points_outside(self, window):
        with pytest.raises(ValueError):
            PointSet([[6.0, 0.0]], window)


class TestNeighborIndex:

    def test_zero_radius_is_empty(self, window):
        points = sample_ppp(3.0, window, np.random.default_rng(0))
        index = NeighborIndex(points, 0.0)
        assert index.neighbors(0, 0.0) == []

    def test_collinear_points(self, window):
        points = PointSet([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], window)
        index = NeighborIndex(points, 1.5)
        assert index.neighbors(0, 1.5) == [1]
        assert index.neighbors(1, 1.5) == [0, 2]

    def test_query_around_non_member(self, window):
        points = PointSet([[0.0, 0.0], [1.0, 0.0], [4.0, 4.0]], window)
        index = NeighborIndex(points, 1.0)
        assert index.ball_query((0.5, 0.0), 0.6) == [0, 1]

    def test_radius_larger_than_cells(self, window):
        points = sample_ppp(3.0, window, np.random.default_rng(6))
        index = NeighborIndex(points, 0.2)
        assert index.ball_query((0.0, 0.0), 3.0) == brute_force(points, (0.0, 0.0), 3.0)

    def test_torus_query_crosses_edges(self, torus):
        points = PointSet([[-4.9, -4.9], [4.9, 4.9], [0.0, 0.0]], torus)
        index = NeighborIndex(points, 0.5)
        assert index.neighbors(0, 0.5) == [1]

    @settings(max_examples=100, deadline=None)
    @given(
        seed=st.integers(min_value=0, max_value=2 ** 32 - 1),
        intensity=st.floats(min_value=0.0, max_value=5.0),
        radius=st.floats(min_value=0.0, max_value=4.0),
        mode=st.sampled_from(list(BoundaryMode)),
    )
    def test_matches_brute_force(self, seed, intensity, radius, mode):
        window = Window.square(5.0, mode)
        points = sample_ppp(intensity, window, np.random.default_rng(seed))
        index = NeighborIndex(points, radius)
        for i in points.indices:
            assert index.neighbors(i, radius) == brute_force(points, points[i], radius, exclude=i)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1), radius=st.floats(0.1, 2.0))
    def test_neighborhood_is_symmetric(self, seed, radius):
        window = Window.square(5.0)
        points = sample_ppp(2.0, window, np.random.default_rng(seed))
        index = NeighborIndex(points, radius)
        for i in points.indices:
            for j in index.neighbors(i, radius):
                assert i in index.neighbors(j, radius)


class TestPairCorrelation:

    def test_poisson_pattern_is_near_one(self, torus):
        rng = np.random.default_rng(8)
        edges = np.linspace(0.25, 2.0, 8)
        estimates = np.mean(
            [pair_correlation(sample_ppp(3.0, torus, rng), edges) for _ in range(50)], axis=0
        )
        np.testing.assert_allclose(estimates, 1.0, atol=0.1)

    def test_too_few_points(self, window):
        points = PointSet([[0.0, 0.0]], window)
        np.testing.assert_array_equal(pair_correlation(points, [0.0, 1.0, 2.0]), [0.0, 0.0])

import math

import numpy as np
import pytest
from scipy.integrate import quad

from apps.content.catalog import CacheConfig, Catalog, RequestAssignment
from apps.content.realization import SpatialRealization
from apps.geometry.points import PointSet, Window
from apps.scheduling.policies import Policy, RetainedSet

from .analytics import (
    PATH_LOSS_FLOOR, comm_range, coverage_probability, exclusion_radius_from_map,
    exclusion_radius_from_threshold, linearized_coverage, matern_retention_probability,
    mean_interference, path_loss, rho
)
from .fading import monte_carlo_coverage, realized_sinr
from .params import ChannelParams, RangePair, RangeRegime

NOISELESS = ChannelParams(alpha=4.0, fading_rate=1.0, noise_power=0.0, threshold=1.0)


def snapshot(transmitters, receiver):
    window = Window.square(5.0)
    return SpatialRealization(
        transmitters=PointSet(transmitters, window),
        receivers=PointSet([receiver], window),
        catalog=Catalog(2),
        caches=tuple(CacheConfig(frozenset({1})) for _ in transmitters),
        requests=RequestAssignment([1]),
    )


def all_retained(count):
    return RetainedSet(np.ones(count, dtype=bool), Policy.RANDOM)


class TestChannelParams:

    def test_defaults(self):
        params = ChannelParams()
        assert (params.alpha, params.fading_rate, params.noise_power) == (4.0, 1.0, 10.0)
        assert (params.threshold, params.bandwidth) == (0.01, 1.0)

    @pytest.mark.parametrize('field, value', [
        ('alpha', 2.0), ('fading_rate', 0.0), ('noise_power', -1.0),
        ('threshold', 0.0), ('bandwidth', -1.0),
    ])
    def test_rejects_invalid(self, field, value):
        with pytest.raises(ValueError, match=field):
            ChannelParams(**{field: value})

    def test_range_pair(self):
        assert RangePair(1.0).exclusion_radius is None
        with pytest.raises(ValueError):
            RangePair(0.0, 1.0)
        with pytest.raises(ValueError):
            RangePair(1.0, -0.5)


class TestPathLoss:

    def test_unit_distance(self):
        assert path_loss(1.0, 3.5) == 1.0

    def test_power_law(self):
        assert path_loss(2.0, 4.0) == pytest.approx(0.0625)

    def test_clamped_near_zero(self):
        assert path_loss(1e-9, 4.0) == path_loss(PATH_LOSS_FLOOR, 4.0)
        assert path_loss(0.0, 4.0) == path_loss(PATH_LOSS_FLOOR, 4.0)

    def test_vectorized(self):
        np.testing.assert_allclose(path_loss(np.array([1.0, 2.0]), 2.5), [1.0, 2.0 ** -2.5])


class TestRho:

    def test_unit_threshold(self):
        assert rho(1.0, 4.0) == pytest.approx(math.pi / 4, abs=1e-9)

    def test_default_threshold(self):
        assert rho(0.01, 4.0) == pytest.approx(0.00996687, abs=1e-6)

    @pytest.mark.parametrize('threshold', np.logspace(-4, 1, 11))
    def test_matches_closed_form(self, threshold):
        root = math.sqrt(threshold)
        assert rho(threshold, 4.0) == pytest.approx(root * math.atan(root), abs=1e-8)

    def test_vanishes_with_threshold(self):
        assert rho(1e-10, 4.0) < 1e-9
        assert rho(1e-4, 3.0) > rho(1e-6, 3.0)

    def test_rejects_invalid(self):
        with pytest.raises(ValueError):
            rho(0.0, 4.0)
        with pytest.raises(ValueError):
            rho(1.0, 2.0)


class TestCoverage:

    def test_no_noise_no_interference(self):
        assert coverage_probability(1.3, 0.0, NOISELESS) == 1.0

    def test_interference_only(self):
        assert coverage_probability(1.0, 1 / math.pi, NOISELESS) == pytest.approx(math.exp(-math.pi / 4))

    def test_noise_only(self):
        assert coverage_probability(1.0, 0.0, ChannelParams()) == pytest.approx(math.exp(-0.1))

    def test_monotone_decreasing(self):
        rng = np.random.default_rng(12)
        for _ in range(1000):
            r = rng.uniform(0.05, 3.0)
            intensity = rng.uniform(0.0, 5.0)
            threshold = 10 ** rng.uniform(-4, 1)
            noise = rng.uniform(0.0, 20.0)
            params = ChannelParams(threshold=threshold, noise_power=noise)
            base = coverage_probability(r, intensity, params)
            assert 0.0 <= base <= 1.0
            assert coverage_probability(r * 1.1, intensity, params) <= base
            assert coverage_probability(r, intensity + 0.1, params) <= base
            assert coverage_probability(r, intensity, ChannelParams(threshold=threshold * 1.1, noise_power=noise)) <= base
            assert coverage_probability(r, intensity, ChannelParams(threshold=threshold, noise_power=noise + 1)) <= base

    def test_linearized_examples(self):
        assert linearized_coverage(1e-6, 1.0, ChannelParams()) == pytest.approx(1.0)
        assert linearized_coverage(1.0, 1 / math.pi, NOISELESS) == pytest.approx(1 - math.pi / 4)
        assert linearized_coverage(10.0, 3.0, ChannelParams()) == 0.0


class TestMeanInterference:

    def test_no_interferers(self):
        assert mean_interference(0.0, 1.0, 4.0) == 0.0

    def test_unit_case(self):
        assert mean_interference(1.0, 1.0, 4.0) == pytest.approx(math.pi, abs=1e-9)

    @pytest.mark.parametrize('intensity', [0.3, 1.0, 3.0])
    @pytest.mark.parametrize('radius', [0.2, 0.5, 1.0, 2.0])
    @pytest.mark.parametrize('alpha', [3.0, 4.0, 6.0])
    def test_matches_quadrature(self, intensity, radius, alpha):
        integral, _ = quad(lambda r: r ** (1 - alpha), radius, np.inf, epsabs=1e-13, epsrel=1e-13)
        expected = 2 * math.pi * intensity * integral
        assert mean_interference(intensity, radius, alpha) == pytest.approx(expected, rel=1e-9, abs=1e-9)

    def test_rejects_zero_radius(self):
        with pytest.raises(ValueError):
            mean_interference(1.0, 0.0, 4.0)


class TestCommRange:

    def test_noise_limited_defaults(self):
        assert comm_range(ChannelParams(), RangeRegime.NOISE_LIMITED) == pytest.approx(1.77828, abs=1e-4)

    def test_noise_limited_unit(self):
        params = ChannelParams(threshold=0.1, noise_power=10.0)
        assert comm_range(params, 'noise_limited') == pytest.approx(1.0)

    def test_interference_limited(self):
        params = ChannelParams(threshold=1.0)
        assert comm_range(params, 'interference_limited', 1.0, 1.0) == pytest.approx(math.pi ** -0.25, abs=1e-4)

    def test_noise_limited_needs_noise(self):
        with pytest.raises(ValueError):
            comm_range(NOISELESS, RangeRegime.NOISE_LIMITED)

    def test_interference_limited_needs_radius(self):
        with pytest.raises(ValueError):
            comm_range(ChannelParams(), RangeRegime.INTERFERENCE_LIMITED, 1.0, 0.0)


class TestExclusionRadius:

    def test_full_access(self):
        assert exclusion_radius_from_map(1.0, 3.0) == 0.0

    def test_half_access(self):
        radius = exclusion_radius_from_map(0.5, 3.0)
        mean_neighbors = 3.0 * math.pi * radius ** 2
        assert -math.expm1(-mean_neighbors) / mean_neighbors == pytest.approx(0.5, rel=1e-9)
        assert mean_neighbors == pytest.approx(1.5936, abs=1e-4)
        assert radius == pytest.approx(0.4112, abs=1e-4)

    @pytest.mark.parametrize('access', [0.05, 0.2, 0.5, 0.8, 0.99])
    def test_inverts_retention(self, access):
        radius = exclusion_radius_from_map(access, 3.0)
        assert matern_retention_probability(radius, 3.0) == pytest.approx(access, rel=1e-8)

    @pytest.mark.parametrize('access', [0.0, -0.1, 1.5])
    def test_rejects_out_of_range(self, access):
        with pytest.raises(ValueError):
            exclusion_radius_from_map(access, 3.0)

    def test_retention_at_zero_radius(self):
        assert matern_retention_probability(0.0, 3.0) == 1.0

    def test_from_threshold(self):
        assert exclusion_radius_from_threshold(1.0, 1.0, 4.0) == pytest.approx(1.0)
        assert exclusion_radius_from_threshold(1 / 16, 1.0, 4.0) == pytest.approx(2.0)
        with pytest.raises(ValueError):
            exclusion_radius_from_threshold(0.0, 1.0, 4.0)


class TestRealizedSinr:

    def test_single_link_mean(self):
        realization = snapshot([[0.0, 0.0]], [1.2, 0.0])
        params = ChannelParams()
        rng = np.random.default_rng(20)
        samples = [realized_sinr(0, 0, all_retained(1), realization, params, rng) for _ in range(100_000)]
        assert np.mean(samples) == pytest.approx(1.2 ** -4 / 10.0, rel=0.015)

    def test_equidistant_pair_is_symmetric(self):
        realization = snapshot([[-1.0, 0.0], [1.0, 0.0]], [0.0, 0.0])
        rng = np.random.default_rng(21)
        wins = [realized_sinr(0, 0, all_retained(2), realization, NOISELESS, rng) > 1 for _ in range(20_000)]
        assert np.mean(wins) == pytest.approx(0.5, abs=0.02)

    def test_noise_only_coverage(self):
        realization = snapshot([[0.0, 0.0]], [1.0, 0.0])
        params = ChannelParams()
        rng = np.random.default_rng(22)
        covered = [realized_sinr(0, 0, all_retained(1), realization, params, rng) >= 0.01 for _ in range(20_000)]
        assert np.mean(covered) == pytest.approx(math.exp(-0.1), abs=0.01)

    def test_ignores_dropped_transmitters(self):
        realization = snapshot([[0.0, 0.0], [0.5, 0.0]], [1.0, 0.0])
        retained = RetainedSet(np.array([True, False]), Policy.MATERN)
        first = realized_sinr(0, 0, retained, realization, ChannelParams(), np.random.default_rng(3))
        alone = snapshot([[0.0, 0.0]], [1.0, 0.0])
        second = realized_sinr(0, 0, all_retained(1), alone, ChannelParams(), np.random.default_rng(3))
        assert first == second

    def test_noiseless_without_interferers(self):
        realization = snapshot([[0.0, 0.0]], [1.0, 0.0])
        noiseless = ChannelParams(noise_power=0.0)
        assert math.isinf(realized_sinr(0, 0, all_retained(1), realization, noiseless, np.random.default_rng(0)))

    def test_server_must_be_retained(self):
        realization = snapshot([[0.0, 0.0], [0.5, 0.0]], [1.0, 0.0])
        retained = RetainedSet(np.array([False, True]), Policy.MATERN)
        with pytest.raises(ValueError):
            realized_sinr(0, 0, retained, realization, ChannelParams(), np.random.default_rng(0))


class TestMonteCarloCoverage:

    @pytest.mark.parametrize('r, intensity, threshold, noise', [
        (0.5, 0.3, 0.01, 10.0),
        (1.0, 1 / math.pi, 1.0, 0.0),
    ])
    def test_matches_formula(self, r, intensity, threshold, noise):
        params = ChannelParams(threshold=threshold, noise_power=noise)
        empirical = monte_carlo_coverage(r, intensity, params, 40_000, np.random.default_rng(30))
        assert empirical == pytest.approx(coverage_probability(r, intensity, params), abs=0.01)

    @pytest.mark.slow
    @pytest.mark.parametrize('r, intensity, threshold, noise', [
        (0.5, 0.3, 0.01, 10.0),
        (1.0, 1 / math.pi, 1.0, 0.0),
    ])
    def test_matches_formula_full(self, r, intensity, threshold, noise):
        params = ChannelParams(threshold=threshold, noise_power=noise)
        empirical = monte_carlo_coverage(r, intensity, params, 100_000, np.random.default_rng(31),
                                         outer_radius=40.0)
        assert empirical == pytest.approx(coverage_probability(r, intensity, params), abs=0.01)

    def test_rejects_bad_radius(self):
        with pytest.raises(ValueError):
            monte_carlo_coverage(0.0, 1.0, ChannelParams(), 10, np.random.default_rng(0))

import math

import numpy as np
import pytest
from scipy import stats

from apps.bidding.bids import compute_bid_table
from apps.channel.params import ChannelParams
from apps.content.catalog import CacheConfig, Catalog, RequestAssignment
from apps.content.realization import SpatialRealization
from apps.core.config import ExperimentConfig
from apps.geometry.points import PointSet, Window, sample_ppp
from apps.scheduling.policies import MarkAssignment, Policy, RetainedSet, apply_policy

from .association import associate
from .experiment import cell_seeds, run_experiment, sweep
from .metrics import (
    MetricsReport, MetricsRow, aggregate, compare_policies, load_nonempty_probability,
    load_pmf, mean_cell_receivers, user_rate
)
from .realization import realization_streams, resolve_ranges, sample_realization
from .simulation import build_snapshot, simulate
from .tasks import simulate_realization

SMALL = ExperimentConfig(
    x_min=-2.5, x_max=2.5, y_min=-2.5, y_max=2.5,
    catalog_size=20, cache_size=4, realizations=5,
)


class FixedFades:
    """Stand-in stream whose exponential draws are all ``value``."""

    def __init__(self, value):
        self.value = value

    def exponential(self, scale=1.0, size=None):
        return np.full(size, self.value)


def build(transmitters, caches, receivers, requests, window=None):
    window = window or Window.square(5.0)
    return SpatialRealization(
        transmitters=PointSet(transmitters, window),
        receivers=PointSet(receivers, window),
        catalog=Catalog(3),
        caches=tuple(CacheConfig(frozenset(c)) for c in caches),
        requests=RequestAssignment(requests),
    )


def keep_all(count):
    return RetainedSet(np.ones(count, dtype=bool), Policy.RANDOM)


def row(policy, access, mean, stderr):
    return MetricsRow(policy, access, mean, stderr, 1.0, 1.0, access, 10, mean)


class TestStreams:

    def test_reproducible(self):
        first = realization_streams(5, 3)
        second = realization_streams(5, 3)
        for name in first:
            assert first[name].random() == second[name].random()

    def test_indices_and_stages_differ(self):
        streams = realization_streams(5, 0)
        other = realization_streams(5, 1)
        assert streams['marks'].random() != other['marks'].random()
        assert streams['transmitters'].random() != streams['receivers'].random()

    def test_sample_realization_is_consistent(self):
        realization = sample_realization(SMALL, realization_streams(1, 0))
        assert len(realization.caches) == len(realization.transmitters)
        assert len(realization.requests) == len(realization.receivers)
        assert all(len(cache) == 4 for cache in realization.caches)

    def test_caches_nest_in_cache_size(self):
        small = sample_realization(SMALL, realization_streams(2, 0))
        large = sample_realization(SMALL.replace(cache_size=8), realization_streams(2, 0))
        np.testing.assert_array_equal(small.transmitters.coordinates, large.transmitters.coordinates)
        assert all(a.files <= b.files for a, b in zip(small.caches, large.caches))


class TestResolveRanges:

    def test_noise_limited_random(self):
        ranges = resolve_ranges(ExperimentConfig(), Policy.RANDOM, 0.5)
        assert ranges.comm_radius == pytest.approx(1.77828, abs=1e-4)
        assert ranges.exclusion_radius is None

    def test_matern_matches_map(self):
        ranges = resolve_ranges(ExperimentConfig(), 'matern', 0.5)
        assert ranges.exclusion_radius == pytest.approx(0.4112, abs=1e-4)

    def test_contention_threshold(self):
        config = ExperimentConfig(contention_threshold=1 / 16)
        assert resolve_ranges(config, Policy.BIDDING_MATERN, 0.5).exclusion_radius == pytest.approx(2.0)

    def test_fixed_and_interference_limited(self):
        assert resolve_ranges(ExperimentConfig(range_mode='fixed', comm_radius=1.2), 'random', 0.3).comm_radius == 1.2
        ranges = resolve_ranges(ExperimentConfig(range_mode='interference_limited'), 'random', 0.5)
        assert ranges.exclusion_radius == pytest.approx(0.4112, abs=1e-4)
        assert ranges.comm_radius > 0


class TestAssociate:

    def test_no_transmitter_in_range(self):
        realization = build([[0.0, 0.0]], [{1}], [[4.0, 4.0]], [1])
        association = associate(realization, keep_all(1), 1.0)
        assert association.server(0) is None
        assert association.served_count == 0

    def test_single_eligible(self):
        realization = build([[0.0, 0.0]], [{1}], [[0.5, 0.0]], [1])
        association = associate(realization, keep_all(1), 1.0)
        assert association.server(0) == 0
        assert association.load(0) == 1

    def test_nearest_wins(self):
        realization = build([[2.0, 0.0], [1.0, 0.0]], [{1}, {1}], [[0.0, 0.0]], [1])
        assert associate(realization, keep_all(2), 2.5).server(0) == 1

    def test_requires_cache_hit_and_retention(self):
        realization = build([[1.0, 0.0], [0.5, 0.0], [0.2, 0.0]], [{1}, {2}, {1}], [[0.0, 0.0]], [1])
        retained = RetainedSet([True, True, False], Policy.MATERN)
        assert associate(realization, retained, 2.0).server(0) == 0

    def test_loads_sum_to_served(self):
        config = SMALL.replace(cache_size=10)
        realization = sample_realization(config, realization_streams(3, 0))
        retained = apply_policy('random', realization.transmitters, 0.5,
                                MarkAssignment.sample(len(realization.transmitters), np.random.default_rng(0)))
        association = associate(realization, retained, 1.7783)
        assert association.loads.sum() == association.served_count
        for u in realization.receivers.indices:
            server = association.server(u)
            if server is not None:
                assert server in retained
                assert realization.caches_request(server, u)
                assert realization.link_distance(server, u) <= 1.7783


class TestUserRate:

    def test_unserved(self):
        realization = build([[0.0, 0.0]], [{1}], [[4.0, 4.0]], [1])
        association = associate(realization, keep_all(1), 1.0)
        assert user_rate(0, association, keep_all(1), realization, ChannelParams(), FixedFades(1.0)) == 0.0

    def test_unit_sinr(self):
        realization = build([[0.0, 0.0]], [{1}], [[1.0, 0.0]], [1])
        association = associate(realization, keep_all(1), 1.5)
        # h * 1^-4 / 10 = 1
        rate = user_rate(0, association, keep_all(1), realization, ChannelParams(), FixedFades(10.0))
        assert rate == pytest.approx(1.0)

    def test_load_shares_bandwidth(self):
        realization = build([[0.0, 0.0]], [{1}], [[1.0, 0.0], [0.0, 1.0]], [1, 1])
        association = associate(realization, keep_all(1), 1.5)
        rate = user_rate(0, association, keep_all(1), realization, ChannelParams(bandwidth=2.0), FixedFades(10.0))
        assert rate == pytest.approx(1.0)

    def test_below_threshold(self):
        realization = build([[0.0, 0.0]], [{1}], [[1.0, 0.0]], [1])
        association = associate(realization, keep_all(1), 1.5)
        assert user_rate(0, association, keep_all(1), realization, ChannelParams(), FixedFades(0.05)) == 0.0


class TestLoadPmf:

    @pytest.mark.parametrize('mean', [0.1, 1.0, 10.0, 30.0])
    def test_normalized(self, mean):
        assert math.fsum(load_pmf(mean, k) for k in range(1, 201)) == pytest.approx(1.0, abs=1e-9)

    def test_unit_mean(self):
        assert load_pmf(1.0, 1) == pytest.approx(0.5820, abs=1e-4)

    def test_vanishing_mean(self):
        assert load_pmf(1e-12, 1) == pytest.approx(1.0)

    def test_rejects_empty_cell(self):
        with pytest.raises(ValueError):
            load_pmf(1.0, 0)
        with pytest.raises(ValueError):
            load_pmf(0.0, 1)

    def test_cell_helpers(self):
        assert mean_cell_receivers(3.0, 1.0) == pytest.approx(3 * math.pi)
        assert load_nonempty_probability(1.0) == pytest.approx(1 - math.exp(-1))

    def test_isolated_cell_load_is_truncated_poisson(self):
        window = Window.square(5.0, 'torus')
        rng = np.random.default_rng(50)
        radius = 1.7783
        transmitters = PointSet([[0.0, 0.0]], window)
        loads = []
        for _ in range(2000):
            receivers = sample_ppp(0.3, window, rng)
            realization = SpatialRealization(
                transmitters, receivers, Catalog(2), (CacheConfig(frozenset({1})),),
                RequestAssignment(np.ones(len(receivers), dtype=int)),
            )
            load = associate(realization, keep_all(1), radius).load(0)
            if load:
                loads.append(load)
        loads = np.array(loads)

        mean = mean_cell_receivers(0.3, radius)
        last = 7
        observed = [np.sum(loads == k) for k in range(1, last)] + [np.sum(loads >= last)]
        probabilities = [load_pmf(mean, k) for k in range(1, last)]
        probabilities.append(1.0 - sum(probabilities))
        assert stats.chisquare(observed, np.array(probabilities) * len(loads)).pvalue > 0.01


class TestAggregation:

    def test_aggregate(self):
        outcomes = [
            simulate(SMALL, 'random', 0.5, 7, index) for index in range(4)
        ]
        result = aggregate('random', 0.5, outcomes)
        rates = [outcome.mean_rate for outcome in outcomes]
        assert result.mean_rate == pytest.approx(np.mean(rates))
        assert result.stderr == pytest.approx(np.std(rates, ddof=1) / 2)
        assert result.n_realizations == 4

    def test_single_realization_has_zero_stderr(self):
        assert aggregate('random', 0.5, [simulate(SMALL, 'random', 0.5, 7, 0)]).stderr == 0.0

    def test_compare_policies(self):
        report = MetricsReport([
            row('matern', 0.5, 1.0, 0.03), row('bidding_matern', 0.5, 1.2, 0.04),
            row('bidding_matern', 0.6, 1.1, 0.04),
        ])
        comparisons = compare_policies(report, 'matern', Policy.BIDDING_MATERN)
        assert len(comparisons) == 1
        comparison = comparisons[0]
        assert comparison.gap == pytest.approx(0.2)
        assert comparison.pooled_stderr == pytest.approx(0.05)
        assert comparison.relative_gain == pytest.approx(0.2)
        assert comparison.is_significant()

    def test_report_lookup(self):
        report = MetricsReport([row('random', 0.1, 0.1, 0.0), row('matern', 0.1, 0.2, 0.0)])
        assert report.policies() == ['random', 'matern']
        assert report.row('matern', 0.1).mean_rate == 0.2
        assert report.row('matern', 0.3) is None


class TestSimulation:

    def test_rates_are_bounded(self):
        config = SMALL.replace(cache_size=10)
        outcome = simulate(config, 'bidding_matern', 0.5, 11, 0)
        ceiling = config.bandwidth * math.log2(1 + 1e-3 ** -config.path_loss_exponent / config.noise_power)
        assert 0.0 <= outcome.mean_rate <= ceiling
        assert 0.0 <= outcome.served_fraction <= 1.0

    def test_rejects_noiseless_channel(self):
        # A lone retained server would have unbounded SINR
        config = SMALL.replace(noise_power=0.0, range_mode='fixed', comm_radius=2.0, policies=('bid_ordering',))
        with pytest.raises(ValueError, match='noise_power'):
            simulate(config, 'bid_ordering', 0.005, 1, 0)

    def test_task_matches_direct_call(self):
        result = simulate_realization.apply(args=(SMALL.to_dict(), 'matern', 0.4, 9, 2)).get()
        assert result == simulate(SMALL, 'matern', 0.4, 9, 2).to_dict()

    def test_served_fraction_grows_with_cache_size(self):
        fractions = [
            simulate(SMALL.replace(cache_size=size), 'random', 0.6, 13, 0).served_fraction
            for size in (1, 2, 5, 10, 19)
        ]
        assert fractions == sorted(fractions)

    def test_invariant_to_file_relabeling(self):
        config = SMALL.replace(placement_skew=0.0, request_skew=0.0)
        streams = realization_streams(17, 0)
        realization = sample_realization(config, streams)
        labels = np.random.default_rng(0).permutation(config.catalog_size) + 1
        relabeled = SpatialRealization(
            realization.transmitters, realization.receivers, realization.catalog,
            tuple(CacheConfig(frozenset(int(labels[f - 1]) for f in cache)) for cache in realization.caches),
            RequestAssignment(labels[realization.requests.files - 1]),
        )
        marks = MarkAssignment.sample(len(realization.transmitters), streams['marks'])

        def rates(snapshot):
            bids = compute_bid_table(snapshot, 1.7783, 1.5, config.channel_params)
            retained = apply_policy('bidding_matern', snapshot.transmitters, 0.5, marks, bids, 0.4112)
            association = associate(snapshot, retained, 1.7783)
            fades = np.random.default_rng(1)
            return [user_rate(u, association, retained, snapshot, config.channel_params, fades)
                    for u in snapshot.receivers.indices]

        assert rates(relabeled) == rates(realization)

    def test_snapshot_matches_simulation(self):
        snapshot = build_snapshot(SMALL, 0.5, 21)
        outcome = simulate(SMALL, 'random', 0.5, 21, 0)
        assert snapshot.retained['random'].fraction == outcome.retained_fraction
        assert set(snapshot.retained) == set(SMALL.policies)
        assert len(snapshot.bids) == len(snapshot.realization.transmitters)


class TestExperiment:

    def test_deterministic(self):
        assert run_experiment(SMALL, 'bid_ordering', 0.5, 2, 3) == run_experiment(SMALL, 'bid_ordering', 0.5, 2, 3)

    def test_silent_network(self):
        assert run_experiment(SMALL, 'random', 0.0, 3, 1).mean_rate == 0.0

    @pytest.mark.parametrize('policy', ['random', 'bid_ordering'])
    def test_full_access_keeps_everyone(self, policy):
        assert run_experiment(SMALL, policy, 1.0, 3, 1).retained_fraction == 1.0

    def test_rejects_zero_realizations(self):
        with pytest.raises(ValueError):
            run_experiment(SMALL, 'random', 0.5, 0)

    def test_cell_seeds_are_distinct(self):
        seeds = cell_seeds(0, ['random', 'matern'], [0.1, 0.2])
        assert len(set(seeds.values())) == 4
        assert seeds == cell_seeds(0, ['random', 'matern'], [0.1, 0.2])

    def test_cell_seeds_reject_repeated_cells(self):
        with pytest.raises(ValueError):
            cell_seeds(0, ['random'], [0.2, 0.2])
        with pytest.raises(ValueError):
            sweep(SMALL.replace(realizations=1), policies=['random'], grid=[0.2, 0.2])

    def test_sweep_shape_and_determinism(self):
        config = SMALL.replace(realizations=2)
        report = sweep(config, ['random', 'matern'], [0.2, 0.5, 1.0])
        assert len(report) == 6
        assert [(r.policy, r.access_probability) for r in report][:3] == [
            ('random', 0.2), ('random', 0.5), ('random', 1.0)
        ]
        assert list(report) == list(sweep(config, ['random', 'matern'], [0.2, 0.5, 1.0]))

    def test_random_retention_tracks_access_probability(self):
        config = SMALL.replace(realizations=20)
        for result in sweep(config, ['random'], [0.2, 0.5, 0.8]):
            assert result.retained_fraction == pytest.approx(result.access_probability, abs=0.06)

    def test_served_fraction_matches_hit_probability(self):
        config = ExperimentConfig(
            boundary_mode='torus', tx_intensity=0.3, catalog_size=2, cache_size=1,
            placement_skew=1.0, request_skew=0.0, realizations=100,
        )
        result = run_experiment(config, 'random', 1.0, seed=4)
        cover = math.pi * 1.77828 ** 2
        expected = sum(0.5 * (1 - math.exp(-0.3 * q * cover)) for q in (2 / 3, 1 / 3))
        assert result.served_fraction == pytest.approx(expected, abs=0.03)

    def test_rate_vanishes_as_access_drops(self):
        config = ExperimentConfig(realizations=15)
        rates = [row.mean_rate for row in sweep(config, ['random'], [0.0, 0.02, 0.05, 0.1])]
        assert rates[0] == 0.0
        assert rates == sorted(rates)


def _ordering_report(**overrides):
    config = ExperimentConfig(realizations=300, **overrides)
    return sweep(config, ['random', 'matern', 'bidding_matern'], [0.2, 0.4, 0.5, 0.6, 0.8])


@pytest.mark.slow
class TestPolicyOrdering:

    def test_bidding_beats_baselines_skewed(self):
        report = _ordering_report()
        for baseline in ('random', 'matern'):
            for comparison in compare_policies(report, baseline, 'bidding_matern'):
                if comparison.access_probability in (0.2, 0.4, 0.6, 0.8):
                    assert comparison.is_significant(2.0), (baseline, comparison)

    def test_randomized_setting_gain(self):
        skewed = _ordering_report()
        randomized = _ordering_report(placement_skew=0.0, request_skew=0.1)
        for baseline in ('random', 'matern'):
            for comparison in compare_policies(randomized, baseline, 'bidding_matern'):
                if comparison.access_probability in (0.2, 0.4, 0.6, 0.8):
                    assert comparison.is_significant(2.0), (baseline, comparison)

        gain = {
            name: {c.access_probability: c for c in compare_policies(report, 'matern', 'bidding_matern')}[0.5]
            for name, report in (('skewed', skewed), ('randomized', randomized))
        }
        tolerance = gain['randomized'].pooled_stderr / randomized.row('matern', 0.5).mean_rate
        assert gain['randomized'].relative_gain >= gain['skewed'].relative_gain - tolerance

import math

import numpy as np
import pytest
from scipy import stats

from apps.channel.params import ChannelParams
from apps.content.catalog import (
    CacheConfig, Catalog, RequestAssignment, sample_caches, sample_requests, zipf_pmf
)
from apps.content.realization import SpatialRealization
from apps.geometry.points import PointSet, Window, sample_ppp

from .bids import (
    BidderSet, ScoringMode, accumulated_bid, bidder_count_pmf, bidder_intensity,
    bidder_set, compute_bid_table, local_request_pmf
)

PARAMS = ChannelParams()
RADIUS = 1.7783


def build(transmitters, caches, receivers, requests, size=5.0, catalog=10):
    window = Window.square(size)
    return SpatialRealization(
        transmitters=PointSet(transmitters, window),
        receivers=PointSet(receivers, window),
        catalog=Catalog(catalog),
        caches=tuple(CacheConfig(frozenset(c)) for c in caches),
        requests=RequestAssignment(requests),
    )


def random_instance(rng):
    window = Window.square(2.0)
    n_tx = int(rng.integers(0, 11))
    n_rx = int(rng.integers(0, 21))
    pmf = zipf_pmf(float(rng.uniform(0, 3)), 6)
    return SpatialRealization(
        transmitters=PointSet(rng.uniform(-2, 2, size=(n_tx, 2)), window),
        receivers=PointSet(rng.uniform(-2, 2, size=(n_rx, 2)), window),
        catalog=pmf.catalog,
        caches=sample_caches(pmf, 2, n_tx, rng),
        requests=sample_requests(pmf, range(n_rx), rng),
    )


def straight_line_bids(realization, radius, intensity, params, linearized=False):
    """Direct evaluation of the bid sums with plain loops."""
    rho = math.sqrt(params.threshold) * math.atan(math.sqrt(params.threshold))
    bids = []
    for x in range(len(realization.transmitters)):
        tx = realization.transmitters[x]
        members = []
        for u in range(len(realization.receivers)):
            rx = realization.receivers[u]
            r = math.hypot(tx[0] - rx[0], tx[1] - rx[1])
            if r <= radius and realization.requests[u] in realization.caches[x]:
                members.append((realization.requests[u], r))
        total = 0.0
        for request, r in members:
            share = sum(1 for m, _ in members if m == request) / len(members)
            exponent = (params.fading_rate * params.threshold * params.noise_power * r ** params.alpha
                        + math.pi * intensity * rho * r ** 2)
            score = max(1 - exponent, 0.0) if linearized else math.exp(-exponent)
            total += share * score
        bids.append(total)
    return bids


class TestBidderSet:

    def test_no_receivers_in_range(self):
        realization = build([[0.0, 0.0]], [{1}], [[3.0, 3.0]], [1])
        assert len(bidder_set(0, realization, RADIUS)) == 0

    def test_uncached_request_excluded(self):
        realization = build([[0.0, 0.0]], [{1, 2}], [[0.5, 0.0], [0.0, 0.5]], [1, 3])
        bidders = bidder_set(0, realization, RADIUS)
        assert bidders.receivers == (0,)
        assert bidders.requests == (1,)
        np.testing.assert_allclose(bidders.distances, [0.5])

    def test_matches_brute_force(self):
        rng = np.random.default_rng(40)
        for _ in range(100):
            realization = random_instance(rng)
            for x in realization.transmitters.indices:
                expected = tuple(
                    u for u in realization.receivers.indices
                    if realization.link_distance(x, u) <= RADIUS and realization.caches_request(x, u)
                )
                assert bidder_set(x, realization, RADIUS).receivers == expected

    def test_rejects_zero_radius(self):
        realization = build([[0.0, 0.0]], [{1}], [], [])
        with pytest.raises(ValueError):
            bidder_set(0, realization, 0.0)


class TestLocalRequestPmf:

    def test_empty(self):
        bidders = BidderSet(0, (), (), np.empty(0))
        assert len(local_request_pmf(bidders)) == 0

    def test_single_file(self):
        bidders = BidderSet(0, (0, 1, 2), (4, 4, 4), np.ones(3))
        assert local_request_pmf(bidders)(4) == 1.0

    def test_counting(self):
        bidders = BidderSet(0, (0, 1, 2), (1, 1, 2), np.ones(3))
        pmf = local_request_pmf(bidders)
        assert pmf(1) == pytest.approx(2 / 3)
        assert pmf(2) == pytest.approx(1 / 3)
        assert pmf(3) == 0.0
        assert pmf.total() == pytest.approx(1.0)


class TestAccumulatedBid:

    def test_empty(self):
        bidders = BidderSet(0, (), (), np.empty(0))
        assert accumulated_bid(bidders, local_request_pmf(bidders), 1.0, PARAMS) == 0.0

    def test_single_bidder(self):
        bidders = BidderSet(0, (0,), (1,), np.array([1.0]))
        bid = accumulated_bid(bidders, local_request_pmf(bidders), 0.0, PARAMS)
        assert bid == pytest.approx(math.exp(-0.1))

    def test_two_bidders_same_file(self):
        bidders = BidderSet(0, (0, 1), (3, 3), np.array([0.8, 0.8]))
        bid = accumulated_bid(bidders, local_request_pmf(bidders), 0.9, PARAMS)
        single = accumulated_bid(BidderSet(0, (0,), (3,), np.array([0.8])), local_request_pmf(bidders), 0.9, PARAMS)
        assert bid == pytest.approx(2 * single)

    def test_linearized_is_clamped(self):
        bidders = BidderSet(0, (0,), (1,), np.array([1.7]))
        bid = accumulated_bid(bidders, local_request_pmf(bidders), 3.0, PARAMS, ScoringMode.LINEARIZED)
        assert bid >= 0.0


class TestBidTable:

    def test_no_receivers(self):
        realization = build([[0.0, 0.0], [1.0, 1.0]], [{1}, {2}], [], [])
        np.testing.assert_array_equal(compute_bid_table(realization, RADIUS, 1.0, PARAMS).values, [0.0, 0.0])

    def test_deterministic(self):
        realization = random_instance(np.random.default_rng(41))
        first = compute_bid_table(realization, RADIUS, 1.5, PARAMS)
        second = compute_bid_table(realization, RADIUS, 1.5, PARAMS)
        np.testing.assert_array_equal(first.values, second.values)

    @pytest.mark.parametrize('mode', list(ScoringMode))
    def test_matches_straight_line_oracle(self, mode):
        rng = np.random.default_rng(42)
        for _ in range(100):
            realization = random_instance(rng)
            intensity = float(rng.uniform(0, 3))
            table = compute_bid_table(realization, RADIUS, intensity, PARAMS, mode)
            expected = straight_line_bids(realization, RADIUS, intensity, PARAMS, mode is ScoringMode.LINEARIZED)
            np.testing.assert_allclose(table.values, expected, rtol=1e-8, atol=1e-12)

    def test_bounds_and_zero_iff_no_bidders(self):
        rng = np.random.default_rng(43)
        for _ in range(50):
            realization = random_instance(rng)
            table = compute_bid_table(realization, RADIUS, 1.0, PARAMS)
            for x in realization.transmitters.indices:
                bidders = bidder_set(x, realization, RADIUS)
                assert 0.0 <= table[x] <= len(bidders)
                assert (table[x] == 0.0) == (len(bidders) == 0)

    def test_invariant_to_receiver_order(self):
        rng = np.random.default_rng(44)
        realization = random_instance(rng)
        order = rng.permutation(len(realization.receivers))
        shuffled = SpatialRealization(
            transmitters=realization.transmitters,
            receivers=PointSet(realization.receivers.coordinates[order], realization.window),
            catalog=realization.catalog,
            caches=realization.caches,
            requests=RequestAssignment(realization.requests.files[order]),
        )
        np.testing.assert_allclose(
            compute_bid_table(shuffled, RADIUS, 1.0, PARAMS).values,
            compute_bid_table(realization, RADIUS, 1.0, PARAMS).values,
            rtol=1e-12,
        )


class TestBidderCount:

    def test_intensity(self):
        pmf = zipf_pmf(0.0, 10)
        assert bidder_intensity(3.0, CacheConfig(frozenset({1, 2})), pmf) == pytest.approx(0.6)

    def test_pmf_normalized(self):
        total = sum(bidder_count_pmf(n, 2.0, RADIUS) for n in range(200))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_count_is_poisson(self):
        rng = np.random.default_rng(45)
        window = Window.square(5.0)
        pmf = zipf_pmf(1.0, 20)
        cache = CacheConfig(frozenset({1, 2, 3}))
        transmitters = PointSet([[0.0, 0.0]], window)
        counts = []
        for _ in range(2000):
            receivers = sample_ppp(3.0, window, rng)
            realization = SpatialRealization(
                transmitters, receivers, pmf.catalog, (cache,), sample_requests(pmf, receivers, rng)
            )
            counts.append(len(bidder_set(0, realization, RADIUS)))
        counts = np.array(counts)

        intensity = bidder_intensity(3.0, cache, pmf)
        mean = intensity * math.pi * RADIUS ** 2
        assert counts.mean() == pytest.approx(mean, rel=0.03)

        low, high = int(stats.poisson.ppf(0.02, mean)), int(stats.poisson.ppf(0.98, mean))
        observed = [np.sum(counts < low)] + [np.sum(counts == k) for k in range(low, high + 1)] + [np.sum(counts > high)]
        probabilities = (
            [stats.poisson.cdf(low - 1, mean)]
            + [bidder_count_pmf(k, intensity, RADIUS) for k in range(low, high + 1)]
            + [stats.poisson.sf(high, mean)]
        )
        expected = np.array(probabilities) * len(counts)
        assert stats.chisquare(observed, expected).pvalue > 0.01

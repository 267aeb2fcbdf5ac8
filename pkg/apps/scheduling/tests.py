import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from apps.bidding.bids import BidTable
from apps.channel.analytics import exclusion_radius_from_map
from apps.geometry.points import BoundaryMode, PointSet, Window, pair_correlation, sample_ppp

from .policies import (
    MarkAssignment, Policy, RetainedSet, apply_policy, thin_bid_ordering,
    thin_bidding_matern, thin_matern, thin_random
)


@pytest.fixture
def window():
    return Window.square(5.0)


def random_instance(seed, size=2.0, max_points=10):
    rng = np.random.default_rng(seed)
    window = Window.square(size)
    count = int(rng.integers(0, max_points + 1))
    points = PointSet(rng.uniform(-size, size, size=(count, 2)), window)
    # Few distinct bid levels so that ties actually occur
    bids = BidTable(rng.integers(0, 3, size=count) * 0.5)
    return points, bids, MarkAssignment.sample(count, rng), float(rng.uniform(0, 2))


def brute_force_matern(points, marks, radius):
    keep = []
    for x in points.indices:
        keep.append(all(
            marks[x] < marks[y] for y in points.indices
            if y != x and points.window.distance(points[x], points[y]) <= radius
        ))
    return keep


def brute_force_bidding(points, bids, marks, radius):
    keep = []
    for x in points.indices:
        keep.append(all(
            (bids[x], marks[x]) > (bids[y], marks[y]) for y in points.indices
            if y != x and points.window.distance(points[x], points[y]) <= radius
        ))
    return keep


def retained_pairs_within(points, retained, radius):
    kept = points.coordinates[retained.indices]
    close = 0
    for i in range(len(kept)):
        for j in range(i + 1, len(kept)):
            if points.window.distance(kept[i], kept[j]) <= radius:
                close += 1
    return close


class TestMarks:

    def test_sample_in_unit_interval(self):
        marks = MarkAssignment.sample(1000, np.random.default_rng(0))
        assert len(marks) == 1000
        assert marks.values.min() >= 0 and marks.values.max() < 1
        assert len(set(marks.values)) == 1000

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            MarkAssignment([0.5, 1.5])


class TestRetainedSet:

    def test_fraction(self):
        retained = RetainedSet([True, False, True, False], 'matern')
        assert retained.policy is Policy.MATERN
        assert retained.count == 2
        assert retained.fraction == 0.5
        assert 0 in retained and 1 not in retained

    def test_empty_fraction(self):
        assert RetainedSet([], Policy.RANDOM).fraction == 0.0


class TestThinRandom:

    def test_none(self, window):
        points = sample_ppp(3.0, window, np.random.default_rng(1))
        assert thin_random(points, 0.0, np.random.default_rng(2)).count == 0

    def test_all(self, window):
        points = sample_ppp(3.0, window, np.random.default_rng(1))
        assert thin_random(points, 1.0, np.random.default_rng(2)).count == len(points)

    def test_fraction_concentrates(self):
        window = Window.square(30.0)
        points = sample_ppp(3.0, window, np.random.default_rng(3))
        assert len(points) > 10_000
        assert thin_random(points, 0.3, np.random.default_rng(4)).fraction == pytest.approx(0.3, abs=0.01)

    def test_uses_given_marks(self, window):
        points = PointSet([[0.0, 0.0], [1.0, 1.0]], window)
        retained = thin_random(points, 0.5, marks=MarkAssignment([0.2, 0.7]))
        assert list(retained.flags) == [True, False]

    def test_rejects_bad_probability(self, window):
        with pytest.raises(ValueError):
            thin_random(PointSet.empty(window), 1.2, np.random.default_rng(0))


class TestThinMatern:

    def test_isolated_point_kept(self, window):
        points = PointSet([[0.0, 0.0], [4.0, 4.0]], window)
        assert list(thin_matern(points, MarkAssignment([0.9, 0.8]), 1.0).flags) == [True, True]

    def test_lowest_mark_wins(self, window):
        points = PointSet([[0.0, 0.0], [0.5, 0.0]], window)
        assert list(thin_matern(points, MarkAssignment([0.7, 0.3]), 1.0).flags) == [False, True]

    def test_zero_radius_keeps_everything(self, window):
        points = sample_ppp(3.0, window, np.random.default_rng(5))
        marks = MarkAssignment.sample(len(points), np.random.default_rng(6))
        assert thin_matern(points, marks, 0.0).count == len(points)

    @settings(max_examples=150, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_matches_brute_force(self, seed):
        points, _, marks, radius = random_instance(seed)
        assert list(thin_matern(points, marks, radius).flags) == brute_force_matern(points, marks, radius)

    def test_hard_core(self, window):
        rng = np.random.default_rng(7)
        radius = exclusion_radius_from_map(0.5, 3.0)
        for _ in range(50):
            points = sample_ppp(3.0, window, rng)
            retained = thin_matern(points, MarkAssignment.sample(len(points), rng), radius)
            assert retained_pairs_within(points, retained, radius) == 0

    def test_invariant_to_relabeling(self, window):
        rng = np.random.default_rng(8)
        points = sample_ppp(3.0, window, rng)
        marks = MarkAssignment.sample(len(points), rng)
        order = rng.permutation(len(points))
        shuffled = thin_matern(PointSet(points.coordinates[order], window), MarkAssignment(marks.values[order]), 0.4)
        np.testing.assert_array_equal(shuffled.flags, thin_matern(points, marks, 0.4).flags[order])

    @pytest.mark.parametrize('access', [0.2, 0.5, 0.8])
    def test_retention_matches_access_probability(self, access):
        torus = Window.square(5.0, BoundaryMode.TORUS)
        radius = exclusion_radius_from_map(access, 3.0)
        rng = np.random.default_rng(9)
        kept = total = 0
        for _ in range(300):
            points = sample_ppp(3.0, torus, rng)
            kept += thin_matern(points, MarkAssignment.sample(len(points), rng), radius).count
            total += len(points)
        assert kept / total == pytest.approx(access, rel=0.02)

    @pytest.mark.slow
    @pytest.mark.parametrize('access', [0.2, 0.5, 0.8])
    def test_retention_matches_access_probability_full(self, access):
        torus = Window.square(5.0, BoundaryMode.TORUS)
        radius = exclusion_radius_from_map(access, 3.0)
        rng = np.random.default_rng(10)
        kept = total = 0
        for _ in range(1000):
            points = sample_ppp(3.0, torus, rng)
            kept += thin_matern(points, MarkAssignment.sample(len(points), rng), radius).count
            total += len(points)
        assert kept / total == pytest.approx(access, rel=0.02)

    @pytest.mark.slow
    def test_pair_correlation_vanishes_inside_radius(self):
        torus = Window.square(5.0, BoundaryMode.TORUS)
        radius = exclusion_radius_from_map(0.5, 3.0)
        rng = np.random.default_rng(11)
        edges = np.linspace(0.0, radius * 0.999, 5)
        for _ in range(1000):
            points = sample_ppp(3.0, torus, rng)
            retained = thin_matern(points, MarkAssignment.sample(len(points), rng), radius)
            thinned = PointSet(points.coordinates[retained.indices], torus)
            assert not pair_correlation(thinned, edges).any()


class TestThinBiddingMatern:

    def test_highest_bid_wins(self, window):
        points = PointSet([[0.0, 0.0], [0.5, 0.0]], window)
        retained = thin_bidding_matern(points, BidTable([2.0, 1.0]), MarkAssignment([0.1, 0.9]), 1.0)
        assert list(retained.flags) == [True, False]

    def test_tie_goes_to_highest_mark(self, window):
        points = PointSet([[0.0, 0.0], [0.5, 0.0]], window)
        retained = thin_bidding_matern(points, BidTable([1.0, 1.0]), MarkAssignment([0.1, 0.9]), 1.0)
        assert list(retained.flags) == [False, True]

    def test_zero_bids_reduce_to_matern(self, window):
        rng = np.random.default_rng(12)
        for _ in range(20):
            points = sample_ppp(3.0, window, rng)
            marks = MarkAssignment.sample(len(points), rng)
            bidding = thin_bidding_matern(points, BidTable(np.zeros(len(points))), marks, 0.5)
            matern = thin_matern(points, MarkAssignment(1.0 - marks.values), 0.5)
            np.testing.assert_array_equal(bidding.flags, matern.flags)

    @settings(max_examples=150, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_matches_brute_force(self, seed):
        points, bids, marks, radius = random_instance(seed)
        expected = brute_force_bidding(points, bids, marks, radius)
        assert list(thin_bidding_matern(points, bids, marks, radius).flags) == expected

    def test_hard_core(self, window):
        rng = np.random.default_rng(13)
        radius = exclusion_radius_from_map(0.4, 3.0)
        for _ in range(50):
            points = sample_ppp(3.0, window, rng)
            bids = BidTable(rng.exponential(size=len(points)))
            retained = thin_bidding_matern(points, bids, MarkAssignment.sample(len(points), rng), radius)
            assert retained_pairs_within(points, retained, radius) == 0

    def _retained_counts(self, runs, seed, constant_bids):
        window = Window.square(3.0)
        radius = exclusion_radius_from_map(0.5, 3.0)
        rng = np.random.default_rng(seed)
        counts = []
        for _ in range(runs):
            points = sample_ppp(3.0, window, rng)
            marks = MarkAssignment.sample(len(points), rng)
            if constant_bids:
                bids = BidTable(np.full(len(points), 0.7))
                counts.append(thin_bidding_matern(points, bids, marks, radius).count)
            else:
                counts.append(thin_matern(points, marks, radius).count)
        return counts

    def test_constant_bids_match_matern_counts(self):
        bidding = self._retained_counts(300, 14, constant_bids=True)
        matern = self._retained_counts(300, 15, constant_bids=False)
        assert stats.ks_2samp(bidding, matern).pvalue > 0.01

    @pytest.mark.slow
    def test_constant_bids_match_matern_counts_full(self):
        bidding = self._retained_counts(1000, 16, constant_bids=True)
        matern = self._retained_counts(1000, 17, constant_bids=False)
        assert stats.ks_2samp(bidding, matern).pvalue > 0.01


class TestThinBidOrdering:

    def test_top_ranks(self, window):
        points = PointSet([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]], window)
        marks = MarkAssignment([0.5, 0.5, 0.5, 0.5])
        retained = thin_bid_ordering(points, BidTable([5.0, 3.0, 2.0, 1.0]), 0.5, marks)
        assert list(retained.flags) == [True, True, False, False]

    def test_full_access_keeps_all(self, window):
        points = sample_ppp(3.0, window, np.random.default_rng(18))
        marks = MarkAssignment.sample(len(points), np.random.default_rng(19))
        assert thin_bid_ordering(points, BidTable(np.zeros(len(points))), 1.0, marks).count == len(points)

    def test_too_few_points_keeps_none(self, window):
        points = PointSet([[0.0, 0.0], [1.0, 0.0]], window)
        retained = thin_bid_ordering(points, BidTable([1.0, 2.0]), 0.4, MarkAssignment([0.1, 0.2]))
        assert retained.count == 0

    def test_ties_broken_by_mark(self, window):
        points = PointSet([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], window)
        retained = thin_bid_ordering(points, BidTable([1.0, 1.0, 0.0]), 0.34, MarkAssignment([0.2, 0.6, 0.9]))
        assert list(retained.flags) == [False, True, False]

    @pytest.mark.parametrize('access', [0.0, 0.1, 0.29, 0.3, 0.55, 0.7, 1.0])
    def test_exact_cardinality(self, window, access):
        rng = np.random.default_rng(20)
        for count in (0, 1, 7, 100):
            points = PointSet(rng.uniform(-5, 5, size=(count, 2)), window)
            bids = BidTable(rng.exponential(size=count))
            retained = thin_bid_ordering(points, bids, access, MarkAssignment.sample(count, rng))
            assert retained.count == int(np.floor(round(access * count, 9)))


class TestApplyPolicy:

    def test_dispatch(self, window):
        rng = np.random.default_rng(21)
        points = sample_ppp(3.0, window, rng)
        marks = MarkAssignment.sample(len(points), rng)
        bids = BidTable(rng.exponential(size=len(points)))
        for policy in Policy:
            retained = apply_policy(policy.value, points, 0.5, marks, bids, 0.4)
            assert retained.policy is policy
            assert len(retained) == len(points)

    def test_missing_inputs(self, window):
        points = PointSet.empty(window)
        marks = MarkAssignment([])
        with pytest.raises(ValueError):
            apply_policy(Policy.BID_ORDERING, points, 0.5, marks)
        with pytest.raises(ValueError):
            apply_policy(Policy.MATERN, points, 0.5, marks)
        with pytest.raises(ValueError):
            apply_policy('csma', points, 0.5, marks)

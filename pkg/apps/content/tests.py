import numpy as np
import pytest
from scipy import stats

from apps.geometry.points import PointSet, Window, sample_ppp

from .catalog import (
    Catalog, inclusion_probabilities, sample_cache, sample_caches,
    sample_requests, zipf_pmf
)
from .realization import SpatialRealization


def zipf_head(exponent, size):
    normalizer = sum(1.0 / m ** exponent for m in range(1, size + 1))
    return 1.0 / normalizer


class TestZipfPmf:

    def test_uniform(self):
        pmf = zipf_pmf(0.0, 100)
        np.testing.assert_allclose(pmf.probabilities, 0.01)

    def test_two_files(self):
        pmf = zipf_pmf(1.0, 2)
        assert pmf(1) == pytest.approx(2 / 3)
        assert pmf(2) == pytest.approx(1 / 3)

    def test_heavy_skew(self):
        pmf = zipf_pmf(5.0, 100)
        assert pmf(1) == pytest.approx(zipf_head(5.0, 100), abs=1e-12)
        assert pmf(1) == pytest.approx(0.9636, abs=1e-3)

    @pytest.mark.parametrize('exponent', [0.0, 0.1, 1.0, 2.5, 5.0])
    @pytest.mark.parametrize('size', [1, 2, 10, 100, 10_000])
    def test_normalized_and_non_increasing(self, exponent, size):
        pmf = zipf_pmf(exponent, size)
        assert abs(pmf.probabilities.sum() - 1.0) < 1e-12
        assert np.all(np.diff(pmf.probabilities) <= 0)

    def test_rejects_negative_exponent(self):
        with pytest.raises(ValueError):
            zipf_pmf(-1.0, 10)

    def test_rejects_out_of_range_file(self):
        with pytest.raises(ValueError):
            zipf_pmf(1.0, 10)(11)

    def test_catalog(self):
        assert list(Catalog(3)) == [1, 2, 3]
        with pytest.raises(ValueError):
            Catalog(0)


class TestSampleCache:

    def test_rejects_full_catalog(self):
        with pytest.raises(ValueError, match='N_cache must be < M'):
            sample_cache(zipf_pmf(0.0, 10), 10, np.random.default_rng(0))

    def test_size_and_distinct(self):
        caches = sample_caches(zipf_pmf(2.5, 100), 10, 10_000, np.random.default_rng(1))
        assert all(len(cache) == 10 for cache in caches)
        assert all(1 <= f <= 100 for cache in caches for f in cache)

    def test_uniform_inclusion(self):
        caches = sample_caches(zipf_pmf(0.0, 100), 10, 10_000, np.random.default_rng(2))
        counts = np.zeros(101)
        for cache in caches:
            for f in cache:
                counts[f] += 1
        np.testing.assert_allclose(counts[1:] / len(caches), 0.1, atol=0.01)

    def test_single_weighted_draw(self):
        pmf = zipf_pmf(1.0, 2)
        caches = sample_caches(pmf, 1, 20_000, np.random.default_rng(3))
        share = sum(1 in cache for cache in caches) / len(caches)
        assert share == pytest.approx(2 / 3, abs=0.015)

    def test_skewed_head_almost_always_cached(self):
        caches = sample_caches(zipf_pmf(2.5, 100), 10, 10_000, np.random.default_rng(4))
        assert sum(1 in cache for cache in caches) / len(caches) > 0.99

    @pytest.mark.parametrize('exponent,size', [(0.0, 3), (1.0, 3), (2.5, 5), (1.0, 9)])
    def test_matches_exact_inclusion(self, exponent, size):
        pmf = zipf_pmf(exponent, 12)
        exact = inclusion_probabilities(pmf, size)
        assert exact.sum() == pytest.approx(size)
        caches = sample_caches(pmf, size, 20_000, np.random.default_rng(5))
        empirical = np.array([sum(f in cache for cache in caches) for f in range(1, 13)]) / len(caches)
        np.testing.assert_allclose(empirical, exact, atol=0.015)

    def test_caches_nest_with_size(self):
        pmf = zipf_pmf(1.0, 50)
        small = sample_caches(pmf, 5, 100, np.random.default_rng(6))
        large = sample_caches(pmf, 8, 100, np.random.default_rng(6))
        assert all(s.files <= l.files for s, l in zip(small, large))

    def test_exact_inclusion_needs_small_catalog(self):
        with pytest.raises(ValueError):
            inclusion_probabilities(zipf_pmf(1.0, 100), 10)


class TestSampleRequests:

    @pytest.fixture
    def receivers(self):
        window = Window.square(5.0)
        return PointSet(np.zeros((100_000, 2)), window)

    def test_no_receivers(self):
        window = Window.square(5.0)
        assert len(sample_requests(zipf_pmf(1.0, 10), PointSet.empty(window), np.random.default_rng(0))) == 0

    def test_uniform_frequencies(self, receivers):
        requests = sample_requests(zipf_pmf(0.0, 100), receivers, np.random.default_rng(1))
        frequencies = np.bincount(requests.files, minlength=101)[1:] / len(requests)
        np.testing.assert_allclose(frequencies, 0.01, atol=0.002)

    def test_skewed_head(self, receivers):
        requests = sample_requests(zipf_pmf(5.0, 100), receivers, np.random.default_rng(2))
        assert np.mean(requests.files == 1) == pytest.approx(zipf_head(5.0, 100), abs=0.005)

    def test_goodness_of_fit(self, receivers):
        pmf = zipf_pmf(1.0, 10)
        requests = sample_requests(pmf, receivers, np.random.default_rng(3))
        observed = np.bincount(requests.files, minlength=11)[1:]
        result = stats.chisquare(observed, pmf.probabilities * len(requests))
        assert result.pvalue > 0.01


class TestSpatialRealization:

    def test_rejects_mismatched_caches(self):
        window = Window.square(5.0)
        rng = np.random.default_rng(0)
        transmitters = sample_ppp(1.0, window, rng)
        with pytest.raises(ValueError):
            SpatialRealization(
                transmitters=transmitters,
                receivers=PointSet.empty(window),
                catalog=Catalog(10),
                caches=(),
                requests=sample_requests(zipf_pmf(0.0, 10), PointSet.empty(window), rng),
            )

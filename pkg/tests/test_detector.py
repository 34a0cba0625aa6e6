"""Detector pipeline tests: enumeration oracles and statistical bands.

Statistical assertions use 5-sigma acceptance bands on pinned seeds, so
they are deterministic in practice and loose enough to be robust.
"""

import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from scipy import stats

from mzparity import (
    DetectorSpec,
    InterferometerSpec,
    SourceSpec,
    apply_crosstalk,
    apply_dark,
    apply_saturation,
    detect,
    detected_mean,
    occupancy_pmf,
    poisson_pmf,
    rng_stream,
    sample_incident,
)


def stirling2(k: int, j: int) -> int:
    """Stirling numbers of the second kind, integer recurrence."""
    if k == 0:
        return 1 if j == 0 else 0
    if j == 0:
        return 0
    return j * stirling2(k - 1, j) + stirling2(k - 1, j - 1)


class TestRngStream:
    def test_reproducible(self):
        a = rng_stream(1234, 7).random(100)
        b = rng_stream(1234, 7).random(100)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = rng_stream(1234, 0).random(100)
        b = rng_stream(1234, 1).random(100)
        assert not np.array_equal(a, b)

    def test_seeds_differ(self):
        a = rng_stream(1, 0).random(100)
        b = rng_stream(2, 0).random(100)
        assert not np.array_equal(a, b)


class TestSampleIncident:
    def test_zero_mean(self):
        rng = rng_stream(0)
        assert sample_incident(0.0, rng) == 0
        assert np.all(sample_incident(0.0, rng, size=1000) == 0)

    def test_mean_within_band(self):
        counts = sample_incident(10.0, rng_stream(1), size=1_000_000)
        band = 5.0 * math.sqrt(10.0 / 1_000_000)
        assert abs(counts.mean() - 10.0) < band

    def test_fano_factor_near_one(self):
        counts = sample_incident(4150.0, rng_stream(2), size=100_000)
        assert counts.var() / counts.mean() == pytest.approx(1.0, abs=0.05)

    def test_rejects_negative_mean(self):
        with pytest.raises(ValueError):
            sample_incident(-0.5, rng_stream(0))


class TestApplyDark:
    def test_zero_dark_is_identity(self):
        spec = DetectorSpec(dark_mean=0.0)
        assert apply_dark(5, spec, rng_stream(0)) == 5
        arr = np.arange(10)
        assert apply_dark(arr, spec, rng_stream(0)) is arr

    def test_dark_rate_from_pulse_picking(self):
        # 400 Hz dark rate over a 4 us inter-pulse window
        spec = DetectorSpec(dark_mean=0.0016)
        counts = apply_dark(np.zeros(10_000_000, dtype=np.int64), spec, rng_stream(3))
        frac = np.count_nonzero(counts) / counts.size
        expected = 1.0 - math.exp(-0.0016)
        band = 5.0 * math.sqrt(expected / 10_000_000)
        assert abs(frac - expected) < band

    def test_adds_on_top_of_signal(self):
        spec = DetectorSpec(dark_mean=2.0)
        counts = apply_dark(np.full(200_000, 7), spec, rng_stream(4))
        assert counts.min() >= 7
        assert counts.mean() == pytest.approx(9.0, abs=0.05)


class TestOccupancyPmf:
    @pytest.mark.parametrize("m", [2, 3, 5, 6])
    @pytest.mark.parametrize("k", [0, 1, 2, 4, 6])
    def test_matches_enumeration(self, m, k):
        rows = occupancy_pmf(k, m)
        tally = np.zeros(min(k, m) + 1, dtype=np.int64)
        for placement in product(range(m), repeat=k):
            tally[len(set(placement))] += 1
        np.testing.assert_allclose(rows[k], tally / m**k, rtol=1e-12, atol=1e-15)

    @pytest.mark.parametrize("m", [3, 6])
    @pytest.mark.parametrize("k", [1, 4, 6])
    def test_matches_stirling_formula(self, m, k):
        # P(j) = m!/(m-j)! * S2(k, j) / m^k, exact in rational arithmetic
        rows = occupancy_pmf(k, m)
        for j in range(min(k, m) + 1):
            falling = math.factorial(m) // math.factorial(m - j)
            exact = Fraction(falling * stirling2(k, j), m**k)
            assert rows[k][j] == pytest.approx(float(exact), rel=1e-12, abs=1e-15)

    def test_rows_normalized(self):
        rows = occupancy_pmf(300, 100)
        np.testing.assert_allclose(rows.sum(axis=1), 1.0, rtol=1e-10)


class TestApplySaturation:
    def test_trivial_counts(self):
        spec = DetectorSpec(num_elements=100)
        assert apply_saturation(0, spec, rng_stream(0)) == 0
        assert apply_saturation(1, spec, rng_stream(0)) == 1

    def test_never_exceeds_elements_or_primaries(self):
        spec = DetectorSpec(num_elements=10, overflow_cutoff=10)
        prim = rng_stream(5).poisson(8.0, 50_000)
        fired = apply_saturation(prim, spec, rng_stream(6))
        assert np.all(fired <= np.minimum(prim, 10))
        assert np.all(fired[prim > 0] >= 1)

    def test_occupancy_mean(self):
        # 100 events on 100 elements fire on average 100(1 - 0.99^100) elements
        spec = DetectorSpec(num_elements=100, overflow_cutoff=100)
        fired = apply_saturation(np.full(1_000_000, 100), spec, rng_stream(7))
        expected = 100.0 * (1.0 - (0.99) ** 100)
        assert expected == pytest.approx(63.397, abs=5e-4)
        assert abs(fired.mean() - expected) < 0.031  # 5 sigma

    def test_sampler_matches_pmf(self):
        spec = DetectorSpec(num_elements=6, overflow_cutoff=6)
        fired = apply_saturation(np.full(200_000, 5), spec, rng_stream(8))
        pmf = occupancy_pmf(5, 6)[5]
        observed = np.bincount(fired, minlength=6)[1:6]
        expected = pmf[1:6] * 200_000
        expected *= observed.sum() / expected.sum()
        result = stats.chisquare(observed, expected)
        assert result.pvalue > 1e-3


class TestApplyCrosstalk:
    def test_zero_probability_is_identity(self):
        spec = DetectorSpec(crosstalk_prob=0.0)
        arr = np.arange(5)
        assert apply_crosstalk(arr, spec, rng_stream(0)) is arr

    def test_binomial_mean(self):
        spec = DetectorSpec(crosstalk_prob=0.1)
        fired = apply_crosstalk(np.full(1_000_000, 50), spec, rng_stream(9))
        added = fired.mean() - 50.0
        assert abs(added - 5.0) < 0.011  # 5 sigma on Binomial(50, 0.1)

    def test_clamped_at_element_count(self):
        spec = DetectorSpec(num_elements=100, crosstalk_prob=0.5)
        fired = apply_crosstalk(np.full(1000, 100), spec, rng_stream(10))
        assert np.all(fired == 100)

    def test_no_clamp_in_ideal_limit(self):
        spec = DetectorSpec(num_elements=100, crosstalk_prob=0.5, saturation=False)
        fired = apply_crosstalk(np.full(1000, 100), spec, rng_stream(10))
        assert fired.max() > 100


class TestDetect:
    def test_dark_detector_silent(self):
        src = SourceSpec(0.0)
        ifm = InterferometerSpec(0.0)
        spec = DetectorSpec(dark_mean=0.0)
        fired = detect(src, ifm, 1.2345, spec, rng_stream(11), size=10_000)
        assert np.all(fired == 0)

    def test_zero_fraction_near_peak_ideal(self):
        # huge element count approximates an ideal number-resolving detector
        src = SourceSpec(200.0)
        ifm = InterferometerSpec(0.0)
        spec = DetectorSpec(num_elements=10**6, overflow_cutoff=200, dark_mean=0.0)
        phi = math.pi - 0.05
        fired = detect(src, ifm, phi, spec, rng_stream(12), size=1_000_000)
        expected = math.exp(-detected_mean(src, ifm, phi))
        assert expected == pytest.approx(0.8825, abs=2e-4)
        band = 5.0 * math.sqrt(expected * (1.0 - expected) / 1_000_000)
        assert abs(np.count_nonzero(fired == 0) / fired.size - expected) < band

    def test_zero_fraction_at_dark_fringe_with_imperfections(self):
        src = SourceSpec(200.0)
        ifm = InterferometerSpec.from_visibility(0.99981, src)
        spec = DetectorSpec(dark_mean=0.0016)
        fired = detect(src, ifm, math.pi, spec, rng_stream(13), size=1_000_000)
        expected = math.exp(-(ifm.background_mean + spec.dark_mean))
        band = 5.0 * math.sqrt(expected * (1.0 - expected) / 1_000_000)
        assert abs(np.count_nonzero(fired == 0) / fired.size - expected) < band

    @pytest.mark.parametrize("mean", [0.1, 1.0, 10.0])
    def test_ideal_histogram_is_poissonian(self, mean):
        src = SourceSpec(mean)
        ifm = InterferometerSpec(0.0)
        spec = DetectorSpec(saturation=False)
        fired = detect(src, ifm, 0.0, spec, rng_stream(14), size=1_000_000)
        n_hi = int(mean + 20.0 * math.sqrt(mean) + 10.0)
        observed = np.bincount(fired, minlength=n_hi + 1)
        pmf = np.asarray(poisson_pmf(mean, np.arange(n_hi + 1)))
        expected = pmf * fired.size
        # lump sparse tail bins so every expected count is >= 5
        tail_sums = np.cumsum(expected[::-1])[::-1]
        small = np.nonzero(tail_sums < 5.0)[0]
        split = int(small[0]) - 1 if small.size else expected.size
        obs = np.append(observed[:split], observed[split:].sum())
        exp = np.append(expected[:split], expected[split:].sum())
        exp *= obs.sum() / exp.sum()
        assert stats.chisquare(obs, exp).pvalue > 1e-3

    def test_dark_counts_stochastically_increase_counts(self):
        src = SourceSpec(5.0)
        ifm = InterferometerSpec(0.0)
        lo = DetectorSpec(dark_mean=0.0)
        hi = DetectorSpec(dark_mean=1.5)
        fired_lo = detect(src, ifm, 1.0, lo, rng_stream(15), size=100_000)
        fired_hi = detect(src, ifm, 1.0, hi, rng_stream(15), size=100_000)
        grid = np.arange(0, fired_hi.max() + 1)
        cdf_lo = np.searchsorted(np.sort(fired_lo), grid, side="right") / fired_lo.size
        cdf_hi = np.searchsorted(np.sort(fired_hi), grid, side="right") / fired_hi.size
        assert np.all(cdf_hi <= cdf_lo + 1e-3)  # dominance up to sampling noise
        assert np.any(cdf_hi < cdf_lo - 0.05)

    def test_deterministic_for_fixed_stream(self):
        src = SourceSpec(30.0)
        ifm = InterferometerSpec(0.5)
        spec = DetectorSpec(dark_mean=0.01, crosstalk_prob=0.03)
        a = detect(src, ifm, 2.0, spec, rng_stream(77, 3), size=5000)
        b = detect(src, ifm, 2.0, spec, rng_stream(77, 3), size=5000)
        np.testing.assert_array_equal(a, b)


class TestDetectorSpecValidation:
    def test_rejects_bad_fields(self):
        with pytest.raises(ValueError):
            DetectorSpec(num_elements=0)
        with pytest.raises(ValueError):
            DetectorSpec(dark_mean=-0.1)
        with pytest.raises(ValueError):
            DetectorSpec(crosstalk_prob=1.0)
        with pytest.raises(ValueError):
            DetectorSpec(overflow_cutoff=0)
        with pytest.raises(ValueError):
            DetectorSpec(num_elements=10, overflow_cutoff=11)

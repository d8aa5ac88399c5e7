import math

import numpy as np
import pytest
from scipy import stats

from spade_ht import rng
from spade_ht.crosstalk import identity, symmetric
from spade_ht.errors import DomainError, EmptyBatch
from spade_ht.scene import Formulation, Hypothesis, SourceScene
from spade_ht.simulate import (FixedWindowConfig, Provenance, TrialBatch, combined_stderr,
                               estimate_di_error_rates, estimate_error_rates,
                               simulate_direct_imaging, simulate_fixed_n, simulate_fixed_window)
from spade_ht.testing import (TestSpec, analytic_threshold, calibrated_threshold,
                              spade_beta_theory)

H0, H1 = Hypothesis.H0, Hypothesis.H1
C = symmetric(0.01)


def within(sample, mean, k=4.0):
    se = np.std(sample, ddof=1) / math.sqrt(len(sample))
    return abs(np.mean(sample) - mean) <= k * se


def randomized_pit(counts, n, p, rng_):
    """Probability integral transform of discrete binomial draws; uniform under the model."""
    v = rng_.random(len(counts))
    return stats.binom.cdf(counts - 1, n, p) + v * stats.binom.pmf(counts, n, p)


class TestRng:
    def test_blocks_cover(self):
        assert rng.blocks(0) == []
        assert rng.blocks(10, 4) == [(0, 4), (4, 8), (8, 10)]

    def test_substreams_independent_of_order(self):
        a = rng.substream(5, (1, 2)).random(4)
        rng.substream(5, (9,)).random(100)
        assert np.array_equal(a, rng.substream(5, (1, 2)).random(4))
        assert not np.array_equal(a, rng.substream(5, (1, 3)).random(4))

    def test_workers_do_not_change_output(self):
        draw = lambda g, size: g.random(size)
        reps = 3 * rng.BLOCK_SIZE + 17
        serial = rng.run_blocks(1, (4,), reps, draw, workers=1)
        pooled = rng.run_blocks(1, (4,), reps, draw, workers=4)
        assert serial.shape == (reps,)
        assert np.array_equal(serial, pooled)


class TestTrialBatch:
    def test_validation(self):
        with pytest.raises(DomainError):
            TrialBatch([3], [2])
        with pytest.raises(DomainError):
            TrialBatch([-1])
        with pytest.raises(DomainError):
            TrialBatch([1], seed=2 ** 64)

    def test_equality(self):
        a = TrialBatch([1, 2], [3, 4], seed=1)
        assert a == TrialBatch(np.array([1, 2]), np.array([3, 4]), seed=1)
        assert a != TrialBatch([1, 2], [3, 5], seed=1)
        assert TrialBatch([1], provenance="ingested").provenance is Provenance.INGESTED


class TestFixedN:
    def test_zero_crosstalk_h0_is_silent(self):
        b = simulate_fixed_n(1000, SourceScene(0.042, 0.33), identity(), H0, 1000, 3)
        assert not b.counts_n1.any()

    def test_h0_mean(self):
        b = simulate_fixed_n(1000, SourceScene(0.042, 0.33), C, H0, 10 ** 5, 11)
        assert within(b.counts_n1, 10.0, k=3)

    def test_h1_mean(self, ref_scene):
        b = simulate_fixed_n(1000, ref_scene, C, H1, 10 ** 5, 12)
        expect = 1000 * (0.01 + 0.042 * 0.33 ** 2 / 4 * 0.98)
        assert expect == pytest.approx(11.1206, abs=1e-4)
        assert within(b.counts_n1, expect, k=3)

    def test_binomial_variance(self, ref_scene):
        b = simulate_fixed_n(1000, ref_scene, C, H1, 10 ** 5, 13)
        p = 0.01 + 0.042 * 0.33 ** 2 / 4 * 0.98
        var = 1000 * p * (1 - p)
        # standard error of a sample variance from the fourth central moment
        mu4 = var * (1 + 3 * (1000 - 2) * p * (1 - p))
        se = math.sqrt((mu4 - var ** 2) / len(b))
        assert abs(np.var(b.counts_n1, ddof=1) - var) <= 4 * se

    def test_exact_distribution(self, ref_scene):
        b = simulate_fixed_n(1000, ref_scene, C, H1, 20000, 14)
        u = randomized_pit(b.counts_n1, 1000, 0.0111206, np.random.default_rng(0))
        assert stats.kstest(u, "uniform").pvalue > 1e-3

    def test_deterministic(self, ref_scene):
        a = simulate_fixed_n(1000, ref_scene, C, H1, 20000, 99)
        b = simulate_fixed_n(1000, ref_scene, C, H1, 20000, 99, workers=3)
        assert a == b
        assert a != simulate_fixed_n(1000, ref_scene, C, H1, 20000, 100)

    def test_hypotheses_use_distinct_streams(self):
        s = SourceScene(0.0, 0.0)
        a = simulate_fixed_n(1000, s, C, H0, 100, 1)
        b = simulate_fixed_n(1000, s, C, H1, 100, 1)
        assert not np.array_equal(a.counts_n1, b.counts_n1)


class TestFixedWindow:
    def test_config(self):
        cfg = FixedWindowConfig(intensity_rate=2.0, delta_t=10.0, tau=0.25)
        assert (cfg.eta, cfg.n_windows, cfg.expected_photons) == (0.5, 40, 20.0)
        with pytest.raises(DomainError):
            FixedWindowConfig(intensity_rate=5.0, delta_t=1.0, tau=0.5)  # eta > 1
        with pytest.raises(DomainError):
            FixedWindowConfig(intensity_rate=1.0, delta_t=1.0, tau=0.3)  # not an integer

    def test_unit_eta_reduces_to_fixed_n(self, ref_scene):
        cfg = FixedWindowConfig.from_eta(1.0, 1000)
        w = simulate_fixed_window(cfg, ref_scene, C, H1, 10 ** 5, 5)
        n = simulate_fixed_n(1000, ref_scene, C, H1, 10 ** 5, 6)
        assert np.all(w.counts_total == 1000)
        edges = np.arange(-0.5, 40.5)
        hw, _ = np.histogram(w.counts_n1, edges)
        hn, _ = np.histogram(n.counts_n1, edges)
        keep = (hw + hn) > 0
        assert stats.chi2_contingency(np.vstack([hw[keep], hn[keep]]))[1] > 1e-3

    def test_total_dispersion(self):
        cfg = FixedWindowConfig.from_eta(1e-3, 1_010_000)
        b = simulate_fixed_window(cfg, SourceScene(0.0, 0.0), C, H0, 20000, 8)
        assert within(b.counts_total, 1010.0)
        assert np.std(b.counts_total) == pytest.approx(math.sqrt(1010), rel=0.10)

    def test_trinomial_variance_of_n1(self):
        eta, n = 0.01, 100_000
        cfg = FixedWindowConfig.from_eta(eta, n)
        b = simulate_fixed_window(cfg, SourceScene(0.0, 0.0), C, H0, 10 ** 5, 9)
        q = eta * 0.01
        var = n * q * (1 - q)
        se = var * math.sqrt(2 / (len(b) - 1))
        assert abs(np.var(b.counts_n1, ddof=1) - var) <= 3 * se
        # vacuum windows inflate N1 fluctuations relative to a fixed photon number
        assert var > np.mean(b.counts_total) * 0.01 * 0.99

    def test_conditional_on_total_is_fixed_n(self, ref_scene):
        cfg = FixedWindowConfig.from_eta(1e-3, 1_010_000)
        b = simulate_fixed_window(cfg, ref_scene, C, H1, 10 ** 5, 10)
        p = 0.01 + 0.042 * 0.33 ** 2 / 4 * 0.98
        u = randomized_pit(b.counts_n1, b.counts_total, p, np.random.default_rng(1))
        assert stats.kstest(u, "uniform").pvalue > 1e-3

    def test_deterministic_across_workers(self, ref_scene):
        cfg = FixedWindowConfig.from_eta(1e-3, 1_010_000)
        a = simulate_fixed_window(cfg, ref_scene, C, H1, 20000, 4)
        assert a == simulate_fixed_window(cfg, ref_scene, C, H1, 20000, 4, workers=4)

    def test_rejects_bad_cfg(self, ref_scene):
        with pytest.raises(DomainError):
            simulate_fixed_window({"eta": 0.1}, ref_scene, C, H1, 10, 0)


class TestDirectImaging:
    def test_h0_mean_is_one(self):
        v = simulate_direct_imaging(10 ** 4, SourceScene(0.042, 0.33), H0, 10 ** 4, 1)
        assert within(v, 1.0, k=3)

    def test_h1_mean_is_mixture_variance(self, ref_scene):
        v = simulate_direct_imaging(10 ** 4, ref_scene, H1, 10 ** 4, 2)
        expect = 1 + 0.042 * 0.958 * 0.33 ** 2
        assert expect == pytest.approx(1.0043817, abs=1e-7)
        assert within(v, expect, k=3)

    def test_methods_agree_in_distribution(self, ref_scene):
        a = simulate_direct_imaging(200, ref_scene, H1, 4000, 3, method="positions")
        b = simulate_direct_imaging(200, ref_scene, H1, 4000, 4, method="chisquare")
        assert stats.ks_2samp(a, b).pvalue > 1e-3

    def test_unknown_method(self, ref_scene):
        with pytest.raises(DomainError):
            simulate_direct_imaging(10, ref_scene, H1, 10, 0, method="fft")

    def test_error_rates_shape(self, ref_scene):
        r = estimate_di_error_rates(10 ** 4, ref_scene, 0.05, 2000, 5)
        assert 0 <= r.alpha_hat <= 1 and 0 <= r.beta_hat <= 1
        assert abs(r.alpha_hat - 0.05) <= 4 * math.sqrt(0.05 * 0.95 / 2000)


class TestErrorRates:
    def test_zero_counts(self):
        r = estimate_error_rates(TrialBatch([0] * 10), TrialBatch([1] * 10), TestSpec(0.05, 0))
        assert (r.alpha_hat, r.beta_hat, r.alpha_stderr) == (0.0, 0.0, 0.0)

    def test_empty(self):
        with pytest.raises(EmptyBatch):
            estimate_error_rates(TrialBatch([]), TrialBatch([1]), TestSpec(0.05, 0))

    def test_calibration_reuse_bounds_alpha(self, ref_scene):
        cal = simulate_fixed_n(1000, SourceScene(0.0, 0.0), C, H0, 1000, 21)
        spec = TestSpec.calibrated(cal, 0.05)
        assert estimate_error_rates(cal, cal, spec).alpha_hat <= 0.05

    def test_fresh_h0_alpha_near_quantile(self):
        null = SourceScene(0.0, 0.0)
        cal = simulate_fixed_n(1000, null, C, H0, 10 ** 4, 22, stream=(0,))
        fresh = simulate_fixed_n(1000, null, C, H0, 10 ** 4, 22, stream=(1,))
        spec = TestSpec.calibrated(cal, 0.05)
        achieved = float(stats.binom.sf(spec.n_star, 1000, 0.01))
        r = estimate_error_rates(fresh, fresh, spec)
        assert r.alpha_hat <= achieved + 4 * math.sqrt(achieved * (1 - achieved) / len(fresh))

    def test_beta_matches_exact_binomial(self, ref_scene):
        spec = TestSpec.analytic(1000, C, 0.05)
        h0 = simulate_fixed_n(1000, ref_scene, C, H0, 10 ** 4, 30)
        h1 = simulate_fixed_n(1000, ref_scene, C, H1, 10 ** 4, 31)
        r = estimate_error_rates(h0, h1, spec)
        exact = float(stats.binom.cdf(spec.n_star, 1000, 0.0111206))
        assert abs(r.beta_hat - exact) <= 3 * math.sqrt(exact * (1 - exact) / 10 ** 4)

    @pytest.mark.xfail(strict=True, reason=(
        "the Gaussian beta misses the exact binomial by ~0.05 at N=1000 "
        "(skewed counts near mean 11), far outside 3 standard errors at 1e4 reps"))
    def test_beta_matches_gaussian_theory(self, ref_scene):
        spec = TestSpec.analytic(1000, C, 0.05)
        h0 = simulate_fixed_n(1000, ref_scene, C, H0, 10 ** 4, 30)
        h1 = simulate_fixed_n(1000, ref_scene, C, H1, 10 ** 4, 31)
        r = estimate_error_rates(h0, h1, spec)
        theory = spade_beta_theory(1000, ref_scene, C, 0.05)
        assert abs(r.beta_hat - theory) <= 3 * combined_stderr(
            r.beta_stderr, math.sqrt(theory * (1 - theory) / 10 ** 4))

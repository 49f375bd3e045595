import math

import numpy as np
import pytest
from scipy.stats import norm

from mimosounder import metrics as mt
from mimosounder import propagation as pr
from mimosounder.receiver import ChannelEstimate


def _random_csi(rng, n_ant=64, n_sub=50):
    h = rng.standard_normal((n_ant, n_sub)) + 1j * rng.standard_normal((n_ant, n_sub))
    return pr.CsiMatrix(h, 1.25e9)


class TestCorrelationCoefficient:
    def test_self_correlation_one(self):
        h = _random_csi(np.random.default_rng(0))
        assert abs(mt.correlation_coefficient(h, h) - 1.0) < 1e-12

    def test_scale_and_phase_invariance(self):
        h = _random_csi(np.random.default_rng(1))
        g = 0.02 * np.exp(1j * 2.2)
        scaled = pr.CsiMatrix(h.h * g, h.carrier_hz)
        assert abs(mt.correlation_coefficient(h, scaled) - 1.0) < 1e-9

    def test_orthogonal_columns_zero(self):
        a = np.zeros((4, 3), dtype=complex)
        b = np.zeros((4, 3), dtype=complex)
        a[0, :] = 1.0
        b[1, :] = 1.0
        assert mt.correlation_coefficient(a, b) == 0.0

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        a, b = _random_csi(rng), _random_csi(rng)
        assert math.isclose(mt.correlation_coefficient(a, b),
                            mt.correlation_coefficient(b, a), rel_tol=1e-12)

    def test_common_unitary_invariance(self):
        rng = np.random.default_rng(3)
        a, b = _random_csi(rng, 8, 20), _random_csi(rng, 8, 20)
        q, _ = np.linalg.qr(rng.standard_normal((8, 8))
                            + 1j * rng.standard_normal((8, 8)))
        ra = pr.CsiMatrix(q @ a.h, a.carrier_hz)
        rb = pr.CsiMatrix(q @ b.h, b.carrier_hz)
        assert math.isclose(mt.correlation_coefficient(a, b),
                            mt.correlation_coefficient(ra, rb), rel_tol=1e-9)

    def test_iid_expectation(self):
        # Monte-Carlo oracle: E|<u,v>|/(|u||v|) ~ sqrt(pi)/2/sqrt(n) for
        # 64-dim iid complex Gaussians (~0.1108).
        rng = np.random.default_rng(4)
        vals = [mt.correlation_coefficient(_random_csi(rng, 64, 40),
                                           _random_csi(rng, 64, 40))
                for _ in range(20)]
        assert abs(np.mean(vals) - math.sqrt(math.pi) / 2 / 8.0) < 0.01

    def test_zero_norm_column_excluded_with_warning(self):
        a = np.ones((4, 3), dtype=complex)
        b = np.ones((4, 3), dtype=complex)
        a[:, 1] = 0.0
        with pytest.warns(RuntimeWarning, match="zero-norm"):
            val = mt.correlation_coefficient(a, b)
        assert abs(val - 1.0) < 1e-12


def _estimates(csis, times, snrs=None):
    out = []
    for i, (h, t) in enumerate(zip(csis, times)):
        snr = snrs[i] if snrs is not None else np.full(h.n_antennas, 25.0)
        out.append(ChannelEstimate(h, snr, t))
    return out


class TestStabilitySeries:
    def test_noiseless_static_is_unity(self):
        h = _random_csi(np.random.default_rng(5))
        recs = _estimates([h, h, h], [0.0, 10.0, 20.0])
        series = mt.stability_series(recs)
        assert np.allclose(series.delta_h, 1.0, atol=1e-12)
        assert np.array_equal(series.delta_t_s, [10.0, 20.0])

    def test_static_with_noise_stays_high(self):
        rng = np.random.default_rng(6)
        base = _random_csi(rng)
        noisy = []
        for _ in range(5):
            n = (rng.standard_normal(base.h.shape)
                 + 1j * rng.standard_normal(base.h.shape))
            sigma = math.sqrt(np.mean(np.abs(base.h) ** 2) / 10 ** 2.5 / 2)
            noisy.append(pr.CsiMatrix(base.h + sigma * n, base.carrier_hz))
        series = mt.stability_series(_estimates(noisy, np.arange(5.0)))
        assert np.all(series.delta_h > 0.8)

    def test_independent_channels_fall_low(self):
        rng = np.random.default_rng(7)
        recs = _estimates([_random_csi(rng) for _ in range(4)],
                          np.arange(4.0))
        series = mt.stability_series(recs)
        assert np.all(series.delta_h < 0.5)

    def test_needs_two_records(self):
        h = _random_csi(np.random.default_rng(8))
        with pytest.raises(ValueError):
            mt.stability_series(_estimates([h], [0.0]))


class TestSnrCdf:
    def test_degenerate_step(self):
        h = _random_csi(np.random.default_rng(9), 4, 5)
        recs = _estimates([h], [0.0], snrs=[np.full(4, 25.0)])
        values, fractions = mt.snr_cdf(recs)
        assert np.all(values == 25.0)
        assert fractions[-1] == 1.0

    def test_cdf_axioms(self):
        rng = np.random.default_rng(10)
        recs = _estimates([_random_csi(rng, 8, 5) for _ in range(3)],
                          np.arange(3.0),
                          snrs=[10 + 20 * rng.random(8) for _ in range(3)])
        values, fractions = mt.snr_cdf(recs)
        assert np.all(np.diff(values) >= 0)
        assert np.all(np.diff(fractions) > 0)
        assert fractions[-1] == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mt.snr_cdf([])


class TestMrcCombine:
    def test_scalar_case_zero_forcing(self):
        out = mt.mrc_combine(np.array([0.5 - 0.5j]), np.array([1.0 + 0.0j]))
        assert abs(out - 1.0 / (0.5 - 0.5j)) < 1e-12

    def test_zero_estimate_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            mt.mrc_combine(np.zeros(4), np.ones(4))

    def test_equal_branch_array_gain(self):
        # MRC array-gain identity: N equal-SNR branches give 10 log10(N) dB.
        rng = np.random.default_rng(11)
        trials = 200_000
        snrs = {}
        for n in (1, 8):
            h = np.ones((trials, n), dtype=complex)
            noise = (rng.standard_normal((trials, n))
                     + 1j * rng.standard_normal((trials, n))) / math.sqrt(2)
            y = h + noise  # unit symbol
            combined = mt._mrc_combine_batch(h, y)
            snrs[n] = 1.0 / np.var(combined - 1.0)
        gain = 10 * math.log10(snrs[8] / snrs[1])
        assert abs(gain - 10 * math.log10(8)) < 0.3

    def test_random_channel_snr_sums(self):
        # Monte-Carlo oracle: post-combining SNR equals the sum of branch
        # SNRs for perfect CSI on AWGN branches, within 0.3 dB.
        rng = np.random.default_rng(12)
        trials = 100_000
        h = np.tile(np.array([[0.8 + 0.3j, 0.2 - 1.1j]]), (trials, 1))
        noise = (rng.standard_normal((trials, 2))
                 + 1j * rng.standard_normal((trials, 2))) / math.sqrt(2)
        combined = mt._mrc_combine_batch(h, h + noise)
        measured = 1.0 / np.var(combined - 1.0)
        expected = np.sum(np.abs(h[0]) ** 2)
        assert abs(10 * math.log10(measured / expected)) < 0.3


class TestBerSweep:
    def test_single_antenna_matches_q_function(self):
        # Closed-form QPSK oracle: BER = Q(sqrt(2 Eb/N0)) = Q(amplitude).
        axis = np.array([4.0, 6.0, 8.0])
        curves = mt.ber_sweep([1], axis, "awgn", trials=400_000, seed=1)
        for g_db, ber in zip(axis, curves[0].ber):
            amp = 10 ** (g_db / 20)
            expected = norm.sf(amp)
            assert abs(ber - expected) <= 4 * math.sqrt(expected / 800_000) + 1e-6

    def test_three_db_per_doubling(self):
        gains = []
        for n in (2, 4):
            center = 10 * math.log10(9.5494 / n)  # Q(amp sqrt(n)) = 1e-3
            axis = np.arange(center - 2.0, center + 2.1, 0.5)
            curve = mt.ber_sweep([n], axis, "awgn", trials=150_000, seed=5)[0]
            gains.append(mt.ber_crossing_gain_db(curve))
        assert abs((gains[0] - gains[1]) - 3.0) <= 0.3

    def test_unequal_branches_can_exceed_three_db(self):
        # SNR-sum oracle: adding a much stronger second branch buys more
        # than 3 dB at the crossing.
        def source(rng, trials):
            return np.tile(np.array([[0.6, 1.6]]), (trials, 1)).astype(complex)

        # weak branch alone crosses 1e-3 at amp^2 = 9.5494/0.36 -> 14.2 dB;
        # both branches at 9.5494/2.92 -> 5.1 dB
        c1 = mt.ber_sweep([1], np.arange(12.0, 17.1, 0.5), source,
                          trials=150_000, seed=6)[0]
        c2 = mt.ber_sweep([2], np.arange(3.0, 8.1, 0.5), source,
                          trials=150_000, seed=6)[0]
        gain = mt.ber_crossing_gain_db(c1) - mt.ber_crossing_gain_db(c2)
        expected = 10 * math.log10((0.6 ** 2 + 1.6 ** 2) / 0.6 ** 2)
        assert gain > 3.0
        assert abs(gain - expected) < 0.5

    def test_monotone_after_smoothing(self):
        axis = np.arange(-2.0, 8.1, 1.0)
        curve = mt.ber_sweep([2], axis, "awgn", trials=100_000, seed=7)[0]
        assert np.all(np.diff(curve.ber) <= 1e-3)

    def test_low_trial_warning(self):
        with pytest.warns(RuntimeWarning, match="trials"):
            mt.ber_sweep([1], [6.0], "awgn", trials=1000, seed=8)


class TestPositionErrorStats:
    def test_perfect_predictor(self):
        rng = np.random.default_rng(13)
        p = rng.random((50, 3))
        stats = mt.position_error_stats(p, p)
        assert stats.mean_distance_error_m == 0.0
        assert stats.histogram_counts[0] == 50
        assert stats.histogram_counts[1:].sum() == 0

    def test_rigid_shift(self):
        rng = np.random.default_rng(14)
        p = rng.random((64, 3))
        q = p + np.array([1.0, 0.0, 0.0])
        stats = mt.position_error_stats(p, q)
        assert abs(stats.mean_distance_error_m - 1.0) < 1e-12

    def test_translation_equivariance(self):
        rng = np.random.default_rng(15)
        t = rng.random((40, 3))
        p = t + 0.1 * rng.standard_normal((40, 3))
        shift = np.array([3.0, -2.0, 5.0])
        a = mt.position_error_stats(t, p)
        b = mt.position_error_stats(t + shift, p + shift)
        assert math.isclose(a.mean_distance_error_m, b.mean_distance_error_m,
                            rel_tol=1e-12)

    def test_gaussian_errors_match_chi3_mean(self):
        # Sampling oracle: iid per-axis Gaussian errors give a 3-D chi
        # distribution with mean sigma * sqrt(8/pi).
        rng = np.random.default_rng(16)
        sigma = 0.4
        t = rng.random((200_000, 3))
        p = t + sigma * rng.standard_normal(t.shape)
        stats = mt.position_error_stats(t, p)
        expected = sigma * math.sqrt(8.0 / math.pi)
        assert abs(stats.mean_distance_error_m - expected) < 0.01
        assert stats.histogram_counts.sum() == t.shape[0]

    def test_count_mismatch_rejected(self):
        with pytest.raises(ValueError, match="mismatch"):
            mt.position_error_stats(np.zeros((3, 3)), np.zeros((4, 3)))

    def test_cdf_properties(self):
        rng = np.random.default_rng(17)
        t = rng.random((100, 3))
        p = t + 0.05 * rng.standard_normal((100, 3))
        stats = mt.position_error_stats(t, p)
        assert np.all(np.diff(stats.cdf_errors_m) >= 0)
        assert stats.cdf_fractions[-1] == 1.0

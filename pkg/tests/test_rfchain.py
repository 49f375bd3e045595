import math

import numpy as np
import pytest

from mimosounder import rfchain as rf
from mimosounder import waveform as wf
from mimosounder._core import clip_quantize


def _tone(freq_hz, fs, n, amp=1.0):
    t = np.arange(n) / fs
    return wf.ComplexWaveform(fs, 0.0, amp * np.exp(2j * np.pi * freq_hz * t))


class TestMix:
    def test_zero_shift_identity(self):
        w = _tone(1e6, 20e6, 4096)
        out = rf.mix(w, 0.0)
        assert np.array_equal(out.samples, w.samples)

    def test_shift_then_unshift(self):
        w = _tone(1e6, 20e6, 4096)
        back = rf.mix(rf.mix(w, 3e6), -3e6)
        rms = np.sqrt(np.mean(np.abs(back.samples - w.samples) ** 2))
        assert rms < 1e-12

    def test_tone_lands_at_shift(self):
        # FFT-peak oracle: a DC tone shifted by 1 MHz peaks at the 1 MHz bin
        fs, n = 20e6, 8192
        w = _tone(0.0, fs, n)
        out = rf.mix(w, 1e6)
        spec = np.abs(np.fft.fft(out.samples))
        peak = np.fft.fftfreq(n, 1 / fs)[np.argmax(spec)]
        assert abs(peak - 1e6) < fs / n

    def test_power_preserved(self):
        rng = np.random.default_rng(0)
        w = wf.ComplexWaveform(20e6, 0.0, rng.standard_normal(5000)
                               + 1j * rng.standard_normal(5000))
        out = rf.mix(w, 2.5e6)
        assert abs(out.power() - w.power()) <= 1e-9 * w.power()

    def test_aliasing_rejected(self):
        w = _tone(0.0, 20e6, 1024)
        with pytest.raises(ValueError, match="aliasing"):
            rf.mix(w, 9.5e6, bandwidth_hz=2e6)


class TestFilterDesign:
    def test_allpass_is_unit_impulse(self):
        spec = rf.FilterSpec(0.0, 10e6, 60, 1e6)
        taps = rf.design_subband_filter(spec, 20e6)
        assert np.array_equal(taps.taps, [1.0])
        assert taps.group_delay == 0

    def test_meets_spec_and_reports_achieved(self):
        spec = rf.FilterSpec(16e6, 36e6, 50, 2e6)
        flt = rf.design_subband_filter(spec, 300e6)
        assert flt.achieved_stopband_db >= 49.5
        assert flt.taps.size % 2 == 1
        assert np.allclose(flt.taps, flt.taps[::-1])  # linear phase

    def test_infeasible_budget_reports_achievable(self):
        spec = rf.FilterSpec(16e6, 36e6, 90, 0.2e6)
        with pytest.raises(ValueError, match="achieve"):
            rf.design_subband_filter(spec, 300e6, max_taps=501)

    def test_inband_noise_power_transfer(self):
        # Monte-Carlo oracle: in-band white noise comes out scaled by the
        # mean passband power gain, within 0.2 dB.
        fs = 300e6
        spec = rf.FilterSpec(40e6, 60e6, 60, 2e6)
        flt = rf.design_subband_filter(spec, fs)
        rng = np.random.default_rng(1)
        n = 1 << 19
        freqs = np.fft.rfftfreq(n, 1 / fs)
        band = (freqs >= 40e6) & (freqs <= 60e6)
        spectrum = np.zeros(freqs.size, dtype=complex)
        spectrum[band] = rng.standard_normal(band.sum()) \
            + 1j * rng.standard_normal(band.sum())
        x = np.fft.irfft(spectrum, n)
        y = np.convolve(x, flt.taps, mode="same")
        gain = np.mean(np.abs(
            flt.zero_phase_response(freqs[band], fs)) ** 2)
        measured = np.mean(y ** 2) / np.mean(x ** 2)
        assert abs(10 * math.log10(measured / gain)) < 0.2

    def test_ten_subband_plan_separation(self):
        taps, fs = rf.default_subband_plan()
        for i, fi in enumerate(taps):
            for j, fj in enumerate(taps):
                if i == j:
                    continue
                band = np.linspace(fj.spec.passband_lo_hz,
                                   fj.spec.passband_hi_hz, 128)
                worst = np.max(np.abs(fi.zero_phase_response(band, fs)))
                assert worst <= 10 ** (-20 / 20)


class TestCombine:
    def test_single_chain_tone_at_if(self, small_combiner, ofdm):
        cfg = rf.default_combiner(n_antennas=1, n_adc_channels=1,
                                  adc_sample_rate_hz=small_combiner.adc_sample_rate_hz)
        n = 4096
        tone = _tone(1e6, ofdm.sample_rate_hz, n, amp=0.01)
        out = rf.combine_chains([tone], cfg)
        assert len(out) == 1
        spec = np.abs(np.fft.rfft(out[0].samples.real))
        freqs = np.fft.rfftfreq(out[0].samples.size, 1 / cfg.adc_sample_rate_hz)
        peak = freqs[np.argmax(spec)]
        assert abs(peak - (cfg.chains[0].if_center_hz + 1e6)) < 2 * freqs[1]

    def test_count_mismatch_rejected(self, small_combiner, ofdm):
        tone = _tone(0.0, ofdm.sample_rate_hz, 256)
        with pytest.raises(ValueError, match="waveforms for"):
            rf.combine_chains([tone], small_combiner)

    def test_overlapping_passbands_rejected(self):
        with pytest.raises(ValueError, match="overlapping"):
            rf.default_combiner(n_antennas=2, n_adc_channels=1,
                                slot_spacing_hz=15e6,
                                adc_sample_rate_hz=300e6)

    def test_single_driven_chain_dominates_other_subbands(self, ofdm):
        # Only chain 1 driven: every other subband sits >= 30 dB down.
        cfg = rf.default_combiner(n_antennas=8, n_adc_channels=1)
        rng = np.random.default_rng(3)
        driven, _ = wf.build_frame(ofdm, rng.integers(0, 2, 96), pilot_seed=4)
        pad = np.zeros(100)
        driven = wf.ComplexWaveform(ofdm.sample_rate_hz, 0.0,
                                    np.concatenate([pad, driven.samples, pad]))
        quiet = wf.ComplexWaveform(ofdm.sample_rate_hz, 0.0,
                                   np.zeros(driven.samples.size) + 0j)
        waves = [quiet] * 8
        waves[1] = driven
        composite = rf.combine_chains(waves, cfg)[0]
        spec = np.abs(np.fft.rfft(composite.samples.real)) ** 2
        freqs = np.fft.rfftfreq(composite.samples.size,
                                1 / cfg.adc_sample_rate_hz)
        powers = []
        for c in cfg.chains:
            band = (freqs >= c.if_center_hz - 10e6) & (freqs <= c.if_center_hz + 10e6)
            powers.append(spec[band].sum())
        powers = np.array(powers)
        others = np.delete(powers, 1)
        assert np.all(10 * np.log10(others / powers[1]) <= -30)

    def test_disjoint_powers_add(self, ofdm):
        # Parseval/disjoint-support oracle: total composite power equals the
        # sum of per-chain filtered powers within 0.1 dB.
        cfg = rf.default_combiner(n_antennas=4, n_adc_channels=1)
        rng = np.random.default_rng(4)
        waves = []
        for a in range(4):
            x = 0.01 * (rng.standard_normal(4096) + 1j * rng.standard_normal(4096))
            waves.append(wf.ComplexWaveform(ofdm.sample_rate_hz, 0.0, x))
        combined = rf.combine_chains(waves, cfg)[0]
        total = np.mean(combined.samples.real ** 2)
        parts = 0.0
        for a in range(4):
            alone = [wf.ComplexWaveform(ofdm.sample_rate_hz, 0.0,
                                        np.zeros(4096) + 0j) for _ in range(4)]
            alone[a] = waves[a]
            parts += np.mean(rf.combine_chains(alone, cfg)[0].samples.real ** 2)
        assert abs(10 * math.log10(total / parts)) < 0.1


class TestQuantizer:
    def test_full_scale_sine_matches_identity(self):
        rng = np.random.default_rng(5)
        x = 0.05 * np.sin(2 * np.pi * rng.random(2_000_000))
        w = wf.ComplexWaveform(1e6, 0.0, x + 0j)
        q = rf.clip_and_quantize(w, 0.1, 7.8)
        err = q.samples.real - x
        sqnr = 10 * np.log10(np.mean(x ** 2) / np.mean(err ** 2))
        assert abs(sqnr - (6.02 * 7.8 + 1.76)) <= 0.2

    def test_underdrive_saturates_to_levels(self):
        x = 1e-7 * np.sin(np.linspace(0, 20, 4096))
        q = rf.clip_and_quantize(wf.ComplexWaveform(1e6, 0.0, x + 0j), 0.1, 6.0)
        assert np.unique(q.samples.real).size <= 2
        sqnr = 10 * np.log10(np.mean(x ** 2)
                             / np.mean((q.samples.real - x) ** 2))
        assert sqnr <= 0.0

    def test_ramp_error_bound(self):
        # Exhaustive ramp oracle: |error| <= delta/2 everywhere in range.
        levels = round(2 ** 7.8)
        x = np.linspace(-0.05, 0.05, 2_000_001)
        q = clip_quantize(np.ascontiguousarray(x), 0.1, levels)
        delta = 0.1 / levels
        assert np.max(np.abs(q - x)) <= delta / 2 + 1e-12

    def test_uniform_input_noise_power(self):
        # Monte Carlo: quantization error power ~= delta^2 / 12 within 5%.
        rng = np.random.default_rng(6)
        x = rng.uniform(-0.05, 0.05, 4_000_000)
        levels = 223
        q = clip_quantize(np.ascontiguousarray(x), 0.1, levels)
        delta = 0.1 / levels
        ratio = np.mean((q - x) ** 2) / (delta ** 2 / 12.0)
        assert abs(ratio - 1.0) < 0.05

    def test_rejects_complex_composite(self):
        w = wf.ComplexWaveform(1e6, 0.0, np.ones(64) * (1 + 1j))
        with pytest.raises(ValueError, match="real-valued"):
            rf.clip_and_quantize(w, 0.1, 8)


class TestWilkinson:
    def test_values(self):
        assert rf.wilkinson_loss_db(64) == 18.0
        assert rf.wilkinson_loss_db(1) == 0.0
        assert rf.wilkinson_loss_db(8) == 9.0

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError, match="power of two"):
            rf.wilkinson_loss_db(6)


class TestIsolation:
    def test_diagonal_zero_and_bound(self):
        taps, fs = rf.default_subband_plan()
        iso = rf.subband_isolation(taps, fs)
        assert np.allclose(np.diag(iso), 0.0)
        off = iso[~np.eye(len(taps), dtype=bool)]
        assert np.all(off <= -30.0)

    def test_degrades_with_relaxed_attenuation(self):
        worst = []
        for atten in (60.0, 40.0, 30.0):
            taps, fs = rf.default_subband_plan(stopband_atten_db=atten)
            iso = rf.subband_isolation(taps, fs)
            worst.append(iso[~np.eye(len(taps), dtype=bool)].max())
        assert worst[0] < worst[1] < worst[2]

    def test_brickwall_bands_hit_floor(self):
        n = 16384
        fs = 200e6
        freqs = np.fft.rfftfreq(n, 1 / fs)

        def brickwall(lo, hi):
            mask = ((freqs >= lo) & (freqs <= hi)).astype(float)
            full = np.concatenate([mask, mask[-2:0:-1]])
            taps = np.roll(np.fft.ifft(full).real, n // 2)
            return rf.FilterTaps(taps, n // 2, rf.FilterSpec(lo, hi, 60))

        iso = rf.subband_isolation([brickwall(20e6, 40e6),
                                    brickwall(60e6, 80e6)], fs, nfft=n)
        assert iso[0, 1] <= -120 and iso[1, 0] <= -120

    def test_needs_two_subbands(self):
        taps, fs = rf.default_subband_plan()
        with pytest.raises(ValueError, match="two subbands"):
            rf.subband_isolation(taps[:1], fs)


class TestSqnr:
    def test_single_chain_matches_closed_form(self, ofdm):
        # Closed-form oracle: one chain at moderate drive sees
        # P_sig / (delta^2/12 * band fraction), within 1 dB.
        cfg = rf.default_combiner(n_antennas=1, n_adc_channels=1)
        table = rf.sqnr_per_antenna(cfg, -52.0, [10.0], trials=4, seed=2)
        measured = table[10.0][0]
        p_sig = 10 ** (-52.0 / 10.0) * 1e-3 * 50.0
        delta = cfg.clip_range_vpp / round(2 ** 10.0)
        frac = ofdm.bandwidth_hz / (cfg.adc_sample_rate_hz / 2.0)
        expected = 10 * math.log10(p_sig / (delta ** 2 / 12.0 * frac))
        assert abs(measured - expected) <= 1.0

    def test_resolution_monotonicity(self):
        cfg = rf.default_combiner(n_antennas=4, n_adc_channels=1)
        table = rf.sqnr_per_antenna(cfg, -55.0, [6.0, 12.0], trials=2, seed=3)
        assert np.all(table[12.0] >= table[6.0])

    def test_zero_trials_rejected(self):
        cfg = rf.default_combiner(n_antennas=1, n_adc_channels=1)
        with pytest.raises(ValueError, match="trial"):
            rf.sqnr_sweep(cfg, [-50.0], [8.0], trials=0)

    def test_curve_unimodal_small_array(self):
        cfg = rf.default_combiner(n_antennas=4, n_adc_channels=1)
        powers = np.arange(-80.0, -19.0, 5.0)
        table = rf.sqnr_sweep(cfg, powers, [7.8], trials=2, seed=4)
        curve = np.mean(table[:, 0, :], axis=1)
        peak = int(np.argmax(curve))
        assert 0 < peak < curve.size - 1
        assert np.all(np.diff(curve[:peak + 1]) >= -0.5)
        assert np.all(np.diff(curve[peak:]) <= 0.5)

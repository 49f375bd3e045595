"""Offline DSP for the composite ADC captures: subband extraction,
down-conversion, decimation, LS channel estimation, and EVM-based SNR.

The chain's own frequency response (combiner bandpass times extraction
bandpass) is known exactly, so estimates can be equalized against it; this is
the software analogue of the calibration a real sounder performs offline.
The stored CSI itself is a raw per-subcarrier LS estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps
from scipy.ndimage import uniform_filter1d

from .propagation import CsiMatrix
from .rfchain import CombinerConfig
from .waveform import (ComplexWaveform, OfdmConfig, SymbolGrid, demap_qpsk,
                       map_qpsk, ofdm_demodulate)

SNR_CAP_DB = 150.0


@dataclass
class ChannelEstimate:
    """Raw LS channel estimate with per-antenna EVM-derived SNR."""

    csi: CsiMatrix
    snr_per_antenna_db: np.ndarray
    timestamp_s: float = 0.0

    def __post_init__(self):
        self.snr_per_antenna_db = np.asarray(self.snr_per_antenna_db, dtype=np.float64)
        if not np.all(np.isfinite(self.snr_per_antenna_db)):
            raise ValueError("SNR entries must be finite")
        if self.snr_per_antenna_db.size != self.csi.n_antennas:
            raise ValueError("SNR vector length must match antenna count")


def default_timing_shift(ofdm: OfdmConfig) -> int:
    """Baseband samples the FFT window is advanced into the cyclic prefix."""
    return ofdm.cp_len // 2


def split_subbands(adc_streams: list[ComplexWaveform], cfg: CombinerConfig,
                   ofdm: OfdmConfig,
                   timing_shift: int | None = None) -> list[ComplexWaveform]:
    """Recover each chain's complex baseband from the shared ADC composites.

    Per chain: bandpass with the matched extraction filter (group delay
    trimmed), mix the IF to baseband, scale by 2 (real-passband image split)
    and the inverse chain gain, then decimate to the OFDM rate by spectral
    truncation, which also discards the negative-IF image the real bandpass
    kept. Outputs are time aligned across antennas.

    timing_shift delays every chain by that many baseband samples (default
    cp_len // 2) so the zero-phase filter rings fall inside the cyclic prefix
    instead of leaking into the next symbol; chain_equalizer removes the
    matching per-subcarrier phase slope. Pass 0 for a plain zero-phase chain.
    """
    if len(adc_streams) != cfg.n_adc_channels:
        raise ValueError(
            f"{len(adc_streams)} streams for {cfg.n_adc_channels} ADC channels")
    fs = cfg.adc_sample_rate_hz
    for s in adc_streams:
        if s.sample_rate_hz != fs:
            raise ValueError("ADC stream sample rate does not match config")
    ratio = fs / ofdm.sample_rate_hz
    if abs(ratio - round(ratio)) > 1e-9:
        raise ValueError("ADC rate must be an integer multiple of the OFDM rate")
    ratio = round(ratio)
    shift = default_timing_shift(ofdm) if timing_shift is None else timing_shift
    out: list[ComplexWaveform] = []
    for chain in cfg.chains:
        stream = adc_streams[chain.adc_channel].samples
        flt = cfg.chain_filter(chain)
        y = sps.fftconvolve(stream, flt.taps)[flt.group_delay:
                                              flt.group_delay + stream.size]
        n = np.arange(y.size)
        y = y * np.exp(-2j * np.pi * chain.if_center_hz * n / fs)
        y *= 2.0 * 10.0 ** (-chain.gain_db / 20.0)
        baseband = sps.resample(y, y.size // ratio)
        if shift:
            baseband = np.concatenate([np.zeros(shift, dtype=baseband.dtype),
                                       baseband[:-shift]])
        out.append(ComplexWaveform(ofdm.sample_rate_hz, 0.0, baseband))
    return out


def chain_equalizer(cfg: CombinerConfig, ofdm: OfdmConfig,
                    timing_shift: int | None = None) -> np.ndarray:
    """Known chain response at every active subcarrier, [n_chains, n_active].

    The bandpass is traversed twice (combiner and extraction), so the
    magnitude is its zero-phase value squared; FFT interpolation and spectral
    decimation contribute unity; the receiver timing shift contributes a pure
    per-subcarrier phase slope.
    """
    shift = default_timing_shift(ofdm) if timing_shift is None else timing_shift
    slope = np.exp(-2j * np.pi * ofdm.active_offsets * shift / ofdm.n_subcarriers)
    out = np.empty((len(cfg.chains), ofdm.n_active), dtype=np.complex128)
    for i, chain in enumerate(cfg.chains):
        flt = cfg.chain_filter(chain)
        h = flt.zero_phase_response(chain.if_center_hz + ofdm.subcarrier_freqs_hz,
                                    cfg.adc_sample_rate_hz)
        out[i] = h * h * slope
    return out


def estimate_csi(grids: list[SymbolGrid], pilot_reference: SymbolGrid,
                 carrier_hz: float, timestamp_s: float = 0.0,
                 equalizer: np.ndarray | None = None,
                 evm_window: int | str | None = 9) -> ChannelEstimate:
    """Per-subcarrier least-squares CSI from the leading pilot symbol.

    h_hat[a, k] = received_pilot[a, k] / pilot[k], optionally divided by the
    known chain response. No smoothing is applied to the stored estimate.

    The per-antenna SNR is the EVM of the data symbols after equalization.
    Equalizing with the raw estimate would double the noise, so the EVM
    equalizer uses a frequency-averaged copy: evm_window=None uses the raw
    estimate, an integer gives a moving-average width, "full" averages the
    whole band (only sensible for frequency-flat channels).
    """
    pilot = pilot_reference.symbols[0]
    if np.any(np.abs(pilot) == 0):
        raise ValueError("pilot symbols must be non-zero on every active subcarrier")
    n_ant = len(grids)
    n_active = pilot.size
    h_hat = np.empty((n_ant, n_active), dtype=np.complex128)
    snr = np.empty(n_ant)
    for a, grid in enumerate(grids):
        rx = grid.symbols
        h_raw = rx[0] / pilot
        if equalizer is not None:
            h_raw = h_raw / equalizer[a]
        h_hat[a] = h_raw
        if rx.shape[0] > 1 and np.all(np.abs(h_raw) > 0):
            h_eq = _smooth_channel(h_raw, evm_window)
            data_rx = rx[1:]
            if equalizer is not None:
                data_rx = data_rx / equalizer[a][None, :]
            eq = data_rx / h_eq[None, :]
            snr[a] = evm_snr(eq.ravel())
        elif rx.shape[0] > 1:
            snr[a] = 0.0  # dead antenna, no measurable symbol quality
        else:
            snr[a] = SNR_CAP_DB
    return ChannelEstimate(CsiMatrix(h_hat, carrier_hz), snr, timestamp_s)


def _smooth_channel(h: np.ndarray, window: int | str | None) -> np.ndarray:
    if window is None:
        return h
    if window == "full":
        return np.full_like(h, np.mean(h))
    if int(window) <= 1:
        return h
    re = uniform_filter1d(h.real, int(window), mode="nearest")
    im = uniform_filter1d(h.imag, int(window), mode="nearest")
    return re + 1j * im


def evm_snr(equalized_symbols, min_symbols: int = 100) -> float:
    """SNR from the error vector against the nearest QPSK point, in dB.

    SNR = -20 log10(rms error / rms reference); capped at SNR_CAP_DB so a
    perfect loopback stays finite.
    """
    sym = np.asarray(equalized_symbols).ravel()
    if sym.size == 0:
        raise ValueError("no symbols to measure")
    if sym.size < min_symbols:
        raise ValueError(f"need at least {min_symbols} data symbols, got {sym.size}")
    reference = map_qpsk(demap_qpsk(sym))
    err = sym - reference
    rms_err = math.sqrt(float(np.mean(np.abs(err) ** 2)))
    rms_ref = math.sqrt(float(np.mean(np.abs(reference) ** 2)))
    if rms_err == 0:
        return SNR_CAP_DB
    return min(SNR_CAP_DB, -20.0 * math.log10(rms_err / rms_ref))


def decode_payload(grid: SymbolGrid, h_hat: np.ndarray,
                   equalizer_row: np.ndarray | None = None,
                   evm_window: int | str | None = 9) -> np.ndarray:
    """Equalize the data symbols of one antenna's grid and hard-demap to bits."""
    data = grid.symbols[1:]
    if equalizer_row is not None:
        data = data / equalizer_row[None, :]
    h_eq = _smooth_channel(h_hat, evm_window)
    return demap_qpsk((data / h_eq[None, :]).ravel())

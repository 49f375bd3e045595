"""Analog front end model: per-antenna IF mixing, subband bandpass filtering,
low-loss frequency-multiplexed combining onto shared real-sampling ADCs,
clipping and ENoB-limited quantization, plus the SQNR and subband isolation
analyses.

Default plan: chains are split into contiguous blocks across the ADC channels,
each chain gets an IF slot at if_base + slot * 22 MHz (20 MHz signal + 2 MHz
guard), and the ADC rate is derived from the top slot edge with a 2.8x
oversizing so quantization noise per 20 MHz subband stays dilute. The exact
board/subband/ADC mapping of the physical build is not pinned down anywhere,
so it is all configuration here.

Everything is a pure transformation; Monte-Carlo sweeps are deterministic
under a fixed seed via per-trial seeding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal as sps

from . import _core
from .waveform import ComplexWaveform, OfdmConfig, build_frame


@dataclass(frozen=True)
class FilterSpec:
    """Bandpass requirement: passband edges plus stopband behaviour."""

    passband_lo_hz: float
    passband_hi_hz: float
    stopband_atten_db: float = 60.0
    transition_hz: float = 2e6

    def __post_init__(self):
        if self.passband_lo_hz >= self.passband_hi_hz:
            raise ValueError("passband_lo_hz must be below passband_hi_hz")
        if self.transition_hz <= 0:
            raise ValueError("transition width must be positive")
        if self.stopband_atten_db < 20:
            raise ValueError("stopband attenuation must be >= 20 dB")


@dataclass
class FilterTaps:
    """Realized linear-phase FIR filter with its measured attenuation."""

    taps: np.ndarray
    group_delay: int
    spec: FilterSpec | None = None
    achieved_stopband_db: float = math.inf

    def zero_phase_response(self, freqs_hz, sample_rate_hz: float) -> np.ndarray:
        """Real-valued response after the integer group delay is removed."""
        freqs = np.atleast_1d(np.asarray(freqs_hz, dtype=np.float64))
        _, h = sps.freqz(self.taps, worN=freqs, fs=sample_rate_hz)
        rotated = h * np.exp(2j * np.pi * freqs * self.group_delay / sample_rate_hz)
        return rotated.real


def design_subband_filter(spec: FilterSpec, sample_rate_hz: float,
                          max_taps: int = 8191) -> FilterTaps:
    """Kaiser-window linear-phase bandpass meeting `spec`, response verified.

    Raises ValueError when the spec cannot be met within max_taps, reporting
    the attenuation the budget would achieve.
    """
    nyq = sample_rate_hz / 2.0
    if spec.passband_lo_hz <= 0 and spec.passband_hi_hz >= nyq:
        return FilterTaps(np.array([1.0]), 0, spec)

    width = spec.transition_hz / nyq
    numtaps, beta = sps.kaiserord(spec.stopband_atten_db, width)
    numtaps += (numtaps + 1) % 2  # force odd (type-I linear phase)
    for _ in range(3):
        if numtaps > max_taps:
            achievable = 2.285 * (max_taps - 1) * np.pi * width / 2 + 7.95
            raise ValueError(
                f"filter spec infeasible within {max_taps} taps: "
                f"would achieve about {achievable:.1f} dB of "
                f"{spec.stopband_atten_db:.1f} dB requested")
        cut_lo = max(spec.passband_lo_hz, 1e-9)
        cut_hi = min(spec.passband_hi_hz, nyq * (1 - 1e-9))
        taps = sps.firwin(numtaps, [cut_lo, cut_hi], fs=sample_rate_hz,
                          pass_zero=False, window=("kaiser", beta), scale=True)
        achieved = _measure_stopband_db(taps, spec, sample_rate_hz)
        if achieved >= spec.stopband_atten_db - 0.5:
            return FilterTaps(taps, (numtaps - 1) // 2, spec, achieved)
        numtaps = int(numtaps * 1.2) | 1
    raise ValueError(
        f"filter design did not converge: achieved {achieved:.1f} dB of "
        f"{spec.stopband_atten_db:.1f} dB requested")


def _measure_stopband_db(taps, spec, fs) -> float:
    nyq = fs / 2.0
    grid = np.linspace(0.0, nyq, 4096)
    lo_stop = grid[grid <= spec.passband_lo_hz - spec.transition_hz]
    hi_stop = grid[grid >= spec.passband_hi_hz + spec.transition_hz]
    stop = np.concatenate([lo_stop, hi_stop])
    if stop.size == 0:
        return math.inf
    _, h = sps.freqz(taps, worN=stop, fs=fs)
    worst = np.max(np.abs(h))
    return math.inf if worst == 0 else -20.0 * math.log10(worst)


@lru_cache(maxsize=256)
def _cached_filter(lo, hi, atten, transition, fs) -> FilterTaps:
    return design_subband_filter(FilterSpec(lo, hi, atten, transition), fs)


def mix(wave: ComplexWaveform, shift_hz: float,
        bandwidth_hz: float = 0.0) -> ComplexWaveform:
    """Multiply by a complex exponential at shift_hz; power preserving.

    Rejects shifts that would push the occupied band (center +- bandwidth/2)
    past Nyquist.
    """
    fs = wave.sample_rate_hz
    new_center = wave.center_offset_hz + shift_hz
    if abs(shift_hz) > fs / 2 or abs(new_center) + bandwidth_hz / 2 > fs / 2 * (1 + 1e-12):
        raise ValueError(
            f"aliasing: shift {shift_hz/1e6:.3f} MHz moves the band outside "
            f"+-{fs/2e6:.3f} MHz")
    if shift_hz == 0.0:
        return ComplexWaveform(fs, new_center, wave.samples.copy())
    n = np.arange(wave.samples.size)
    rotated = wave.samples * np.exp(2j * np.pi * shift_hz * n / fs)
    return ComplexWaveform(fs, new_center, rotated)


@dataclass(frozen=True)
class ChainConfig:
    """One antenna's front-end chain."""

    antenna_index: int
    if_center_hz: float
    subband_index: int
    board_index: int
    gain_db: float = 0.0
    adc_channel: int = 0


@dataclass
class CombinerConfig:
    """Frequency-multiplexing front end: chains, ADC grouping, quantizer."""

    chains: list[ChainConfig]
    adc_sample_rate_hz: float
    n_adc_channels: int = 4
    clip_range_vpp: float = 0.100
    enob: float = 7.8
    antennas_per_board: int = 10
    n_subbands: int = 10
    signal_bandwidth_hz: float = 20e6
    guard_hz: float = 2e6
    stopband_atten_db: float = 60.0

    def __post_init__(self):
        if not self.chains:
            raise ValueError("combiner needs at least one chain")
        nyq = self.adc_sample_rate_hz / 2.0
        half = self.signal_bandwidth_hz / 2.0
        n_boards = max(c.board_index for c in self.chains) + 1
        if self.antennas_per_board * n_boards < len(self.chains):
            raise ValueError("board capacity below chain count")
        for c in self.chains:
            if not (0 <= c.adc_channel < self.n_adc_channels):
                raise ValueError(f"chain {c.antenna_index}: bad ADC channel")
            if c.if_center_hz - half <= 0 or c.if_center_hz + half >= nyq:
                raise ValueError(
                    f"chain {c.antenna_index}: passband outside the ADC "
                    f"Nyquist band (0, {nyq/1e6:.1f}) MHz")
        # Adjacent chains may share a transition band but their -20 dB widths
        # must stay disjoint; a kaiser filter hits -20 dB roughly 20/A of the
        # way into its transition region.
        min_gap = 2.0 * self.guard_hz * (20.0 / self.stopband_atten_db)
        for adc in range(self.n_adc_channels):
            edges = sorted((c.if_center_hz - half, c.if_center_hz + half)
                           for c in self.chains_on(adc))
            for (_, hi), (lo, _) in zip(edges, edges[1:]):
                if lo - hi < min_gap:
                    raise ValueError(
                        f"overlapping passbands on ADC channel {adc}")

    def chains_on(self, adc_channel: int) -> list[ChainConfig]:
        return [c for c in self.chains if c.adc_channel == adc_channel]

    def chain_filter(self, chain: ChainConfig) -> FilterTaps:
        half = self.signal_bandwidth_hz / 2.0
        return _cached_filter(chain.if_center_hz - half, chain.if_center_hz + half,
                              self.stopband_atten_db, self.guard_hz,
                              self.adc_sample_rate_hz)

    @property
    def n_levels(self) -> int:
        return round(2.0 ** self.enob)


def auto_adc_rate(top_edge_hz: float, base_rate_hz: float = 20e6,
                  oversize: float = 2.8) -> float:
    """Smallest integer multiple of the OFDM rate comfortably above 2x the plan."""
    return base_rate_hz * math.ceil(oversize * top_edge_hz / base_rate_hz)


def default_combiner(n_antennas: int = 64, n_adc_channels: int = 4,
                     adc_sample_rate_hz: float | None = None,
                     if_base_hz: float = 26e6, slot_spacing_hz: float = 22e6,
                     signal_bandwidth_hz: float = 20e6,
                     antennas_per_board: int = 10, n_subbands: int = 10,
                     enob: float = 7.8, clip_range_vpp: float = 0.100,
                     stopband_atten_db: float = 60.0) -> CombinerConfig:
    """Build the default interleaved IF plan for n_antennas over the ADCs."""
    per_adc = -(-n_antennas // n_adc_channels)
    chains = []
    for i in range(n_antennas):
        slot = i % per_adc
        chains.append(ChainConfig(
            antenna_index=i,
            if_center_hz=if_base_hz + slot * slot_spacing_hz,
            subband_index=slot % n_subbands,
            board_index=i // antennas_per_board,
            adc_channel=i // per_adc,
        ))
    if adc_sample_rate_hz is None:
        top = if_base_hz + (per_adc - 1) * slot_spacing_hz \
            + signal_bandwidth_hz / 2 + 2e6
        adc_sample_rate_hz = auto_adc_rate(top, signal_bandwidth_hz)
    return CombinerConfig(
        chains=chains, adc_sample_rate_hz=adc_sample_rate_hz,
        n_adc_channels=n_adc_channels, enob=enob, clip_range_vpp=clip_range_vpp,
        antennas_per_board=antennas_per_board, n_subbands=n_subbands,
        signal_bandwidth_hz=signal_bandwidth_hz,
        stopband_atten_db=stopband_atten_db)


def default_subband_plan(n_subbands: int = 10, slot_spacing_hz: float = 22e6,
                         signal_bandwidth_hz: float = 20e6,
                         if_base_hz: float = 26e6,
                         stopband_atten_db: float = 60.0,
                         sample_rate_hz: float | None = None
                         ) -> tuple[list[FilterTaps], float]:
    """The 10-subband interleaved filter bank used for the isolation analysis."""
    top = if_base_hz + (n_subbands - 1) * slot_spacing_hz + signal_bandwidth_hz / 2 + 2e6
    fs = sample_rate_hz if sample_rate_hz is not None else auto_adc_rate(top)
    half = signal_bandwidth_hz / 2.0
    taps = [
        design_subband_filter(
            FilterSpec(if_base_hz + i * slot_spacing_hz - half,
                       if_base_hz + i * slot_spacing_hz + half,
                       stopband_atten_db), fs)
        for i in range(n_subbands)
    ]
    return taps, fs


def combine_chains(per_antenna: list[ComplexWaveform],
                   cfg: CombinerConfig) -> list[ComplexWaveform]:
    """Mix each chain to its IF, bandpass it, and sum per ADC channel.

    Inputs are complex baseband at a common rate that must divide the ADC
    rate; outputs are the real-valued composites (one waveform per ADC
    channel, imaginary part zero). Upsampling is FFT interpolation, so the
    in-band chain response is exactly the bandpass filter's and group delays
    are compensated to zero.
    """
    if len(per_antenna) != len(cfg.chains):
        raise ValueError(
            f"{len(per_antenna)} waveforms for {len(cfg.chains)} chains")
    fs_in = per_antenna[0].sample_rate_hz
    n_in = per_antenna[0].samples.size
    for w in per_antenna:
        if w.sample_rate_hz != fs_in or w.samples.size != n_in:
            raise ValueError("chain inputs must share sample rate and length")
    ratio = cfg.adc_sample_rate_hz / fs_in
    if abs(ratio - round(ratio)) > 1e-9:
        raise ValueError(
            f"ADC rate {cfg.adc_sample_rate_hz} is not an integer multiple "
            f"of the input rate {fs_in}")
    ratio = round(ratio)
    n_out = n_in * ratio
    t_idx = np.arange(n_out)
    acc = [np.zeros(n_out, dtype=np.complex128) for _ in range(cfg.n_adc_channels)]
    for chain, wave in zip(cfg.chains, per_antenna):
        up = sps.resample(wave.samples, n_out)
        up *= np.exp(2j * np.pi * chain.if_center_hz * t_idx / cfg.adc_sample_rate_hz)
        flt = cfg.chain_filter(chain)
        y = sps.fftconvolve(up, flt.taps)[flt.group_delay:flt.group_delay + n_out]
        acc[chain.adc_channel] += y * 10.0 ** (chain.gain_db / 20.0)
    return [ComplexWaveform(cfg.adc_sample_rate_hz, 0.0,
                            a.real.astype(np.complex128))
            for a in acc]


def clip_and_quantize(wave: ComplexWaveform, clip_range_vpp: float,
                      enob: float) -> ComplexWaveform:
    """Hard-limit the real composite to +-Vpp/2 and quantize to round(2^enob) levels."""
    if enob <= 0:
        raise ValueError("enob must be positive")
    x = wave.samples
    scale = np.max(np.abs(x.real)) or 1.0
    if np.max(np.abs(x.imag)) > 1e-9 * scale:
        raise ValueError("clip_and_quantize expects a real-valued composite")
    q = _core.clip_quantize(np.ascontiguousarray(x.real), clip_range_vpp,
                            round(2.0 ** enob))
    return ComplexWaveform(wave.sample_rate_hz, wave.center_offset_hz,
                           q.astype(np.complex128))


def wilkinson_loss_db(n_ant: int) -> float:
    """Combining loss of a binary Wilkinson tree: 3 log2(n) dB."""
    if n_ant < 1 or (n_ant & (n_ant - 1)):
        raise ValueError(f"n_ant must be a power of two, got {n_ant}")
    return 3.0 * (n_ant.bit_length() - 1)


def subband_isolation(taps_per_subband: list[FilterTaps], sample_rate_hz: float,
                      nfft: int | None = None, floor_db: float = -140.0) -> np.ndarray:
    """Expected leakage matrix: entry (i, j) is the power captured by filter j
    when subband i alone carries in-band white noise, in dB relative to (i, i).

    Computed analytically from the measured filter responses (the expectation
    of the Monte-Carlo experiment); values below floor_db are clamped.
    """
    if len(taps_per_subband) < 2:
        raise ValueError("need at least two subbands")
    if nfft is None:
        longest = max(f.taps.size for f in taps_per_subband)
        nfft = max(8192, 1 << (4 * longest - 1).bit_length())
    freqs = np.fft.rfftfreq(nfft, d=1.0 / sample_rate_hz)
    gains = np.stack([np.abs(np.fft.rfft(f.taps, nfft)) ** 2
                      for f in taps_per_subband])
    n = len(taps_per_subband)
    out = np.zeros((n, n))
    for i, f in enumerate(taps_per_subband):
        if f.spec is not None:
            band = (freqs >= f.spec.passband_lo_hz) & (freqs <= f.spec.passband_hi_hz)
        else:
            band = gains[i] >= 0.5 * np.max(gains[i])
        p_self = float(np.sum(gains[i][band]))
        for j in range(n):
            if j == i:
                continue
            leak = float(np.sum(gains[j][band]))
            ratio = leak / p_self if p_self > 0 else 0.0
            out[i, j] = 10.0 * math.log10(max(ratio, 10.0 ** (floor_db / 10.0)))
    return out


def _onesided_weights(n: int) -> np.ndarray:
    d = np.full(n // 2 + 1, 2.0)
    d[0] = 1.0
    if n % 2 == 0:
        d[-1] = 1.0
    return d


def sqnr_sweep(cfg: CombinerConfig, powers_dbm, enob_list, ofdm: OfdmConfig | None = None,
               trials: int = 100, seed: int = 0) -> np.ndarray:
    """Per-antenna SQNR over a per-antenna input power sweep, one row per ENoB.

    Every chain carries an independent OFDM frame; the clean composite is
    scaled to each drive level, clipped/quantized at each ENoB, and the
    error is split back into the subbands through each chain's extraction
    filter (spectral weighting, Parseval-exact). Returns shape
    [n_powers, n_enobs, n_chains] in dB.

    The 50 Ohm convention maps input power to the real IF signal: a chain at
    P dBm has mean square voltage P_watts * 50 on the composite.
    """
    if trials < 1:
        raise ValueError("trial count must be >= 1")
    ofdm = ofdm or OfdmConfig()
    powers = np.atleast_1d(np.asarray(powers_dbm, dtype=np.float64))
    enobs = list(enob_list)
    n_chains = len(cfg.chains)
    fs = cfg.adc_sample_rate_hz
    pad = 64

    sig_acc = np.zeros((powers.size, n_chains))
    err_acc = np.zeros((powers.size, len(enobs), n_chains))
    seeds = np.random.SeedSequence(seed).spawn(trials)
    weights = None
    for trial_seq in seeds:
        rng = np.random.default_rng(trial_seq)
        frames = []
        for _ in range(n_chains):
            payload = rng.integers(0, 2, size=ofdm.bits_per_data_symbol)
            wave, _ = build_frame(ofdm, payload, int(rng.integers(2 ** 31)))
            x = np.concatenate([np.zeros(pad), wave.samples, np.zeros(pad)])
            frames.append(ComplexWaveform(ofdm.sample_rate_hz, 0.0, x))
        composites = combine_chains(frames, cfg)
        n_samp = composites[0].samples.size
        if weights is None:
            weights = _chain_weights(cfg, n_samp)
        ones = _onesided_weights(n_samp)
        clean = [c.samples.real for c in composites]
        spectra = [np.fft.rfft(c) for c in clean]
        sig_unit = np.array([
            np.sum(ones * np.abs(spectra[c.adc_channel]) ** 2 * weights[i]) / n_samp ** 2
            for i, c in enumerate(cfg.chains)])
        mean_unit = float(np.mean(sig_unit))
        for pi, p_dbm in enumerate(powers):
            target = 10.0 ** (p_dbm / 10.0) * 1e-3 * 50.0  # V^2 on 50 Ohm
            alpha = math.sqrt(target / mean_unit)
            sig_acc[pi] += alpha ** 2 * sig_unit
            scaled = [alpha * c for c in clean]
            for ei, enob in enumerate(enobs):
                levels = round(2.0 ** enob)
                for adc, s in enumerate(scaled):
                    err = _core.clip_quantize(
                        np.ascontiguousarray(s), cfg.clip_range_vpp, levels) - s
                    espec = ones * np.abs(np.fft.rfft(err)) ** 2
                    for ci, c in enumerate(cfg.chains):
                        if c.adc_channel == adc:
                            err_acc[pi, ei, ci] += np.sum(espec * weights[ci]) / n_samp ** 2
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(sig_acc[:, None, :] / err_acc)


def _chain_weights(cfg: CombinerConfig, n_samples: int) -> list[np.ndarray]:
    """|H|^2 of each chain's extraction filter on the one-sided FFT grid."""
    out = []
    for chain in cfg.chains:
        taps = cfg.chain_filter(chain).taps
        out.append(np.abs(np.fft.rfft(taps, n_samples)) ** 2)
    return out


def sqnr_per_antenna(cfg: CombinerConfig, input_power_dbm: float, enob_list,
                     ofdm: OfdmConfig | None = None, trials: int = 100,
                     seed: int = 0) -> dict[float, np.ndarray]:
    """Per-antenna SQNR table at one drive level, keyed by ENoB."""
    table = sqnr_sweep(cfg, [input_power_dbm], enob_list, ofdm, trials, seed)
    return {enob: table[0, i, :] for i, enob in enumerate(enob_list)}

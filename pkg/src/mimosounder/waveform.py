"""OFDM sounding frames: QPSK mapping, frame build/demodulate, position payload.

Frame convention: one leading all-pilot OFDM symbol (seeded pseudorandom QPSK)
followed by data symbols. Transforms are unitary (1/sqrt(N) both ways) so the
average power per active subcarrier is exactly the constellation energy. Guard
subcarriers are split half-and-half onto the band edges; DC stays active.
All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BITS_PER_COORD = 32
_COORD_SCALE = 1000.0  # millimetre fixed point


@dataclass(frozen=True)
class OfdmConfig:
    """Air-interface parameterization of the sounding waveform."""

    n_subcarriers: int = 1024
    guard_fraction: float = 0.10
    cp_fraction: float = 1.0 / 8.0
    bandwidth_hz: float = 20e6
    carrier_hz: float = 1.25e9
    modulation: str = "QPSK"

    def __post_init__(self):
        if self.n_subcarriers < 8:
            raise ValueError("n_subcarriers must be >= 8")
        if not 0.0 <= self.guard_fraction < 0.5:
            raise ValueError("guard_fraction must lie in [0, 0.5)")
        if not 0.0 < self.cp_fraction < 1.0:
            raise ValueError("cp_fraction must lie in (0, 1)")
        if self.bandwidth_hz <= 0 or self.carrier_hz <= 0:
            raise ValueError("bandwidth_hz and carrier_hz must be positive")
        if self.modulation != "QPSK":
            raise ValueError(f"unsupported modulation {self.modulation!r}")

    @property
    def n_guard(self) -> int:
        return round(self.guard_fraction * self.n_subcarriers)

    @property
    def n_active(self) -> int:
        return self.n_subcarriers - self.n_guard

    @property
    def cp_len(self) -> int:
        return round(self.cp_fraction * self.n_subcarriers)

    @property
    def symbol_len(self) -> int:
        return self.n_subcarriers + self.cp_len

    @property
    def sample_rate_hz(self) -> float:
        return self.bandwidth_hz

    @property
    def subcarrier_spacing_hz(self) -> float:
        return self.bandwidth_hz / self.n_subcarriers

    @property
    def active_offsets(self) -> np.ndarray:
        """Signed subcarrier indices of the active band (0 = DC)."""
        lo = -(self.n_subcarriers // 2) + self.n_guard // 2
        return np.arange(lo, lo + self.n_active)

    @property
    def active_bins(self) -> np.ndarray:
        """FFT bin index of each active subcarrier."""
        return np.mod(self.active_offsets, self.n_subcarriers)

    @property
    def subcarrier_freqs_hz(self) -> np.ndarray:
        """Baseband frequency of each active subcarrier."""
        return self.active_offsets * self.subcarrier_spacing_hz

    @property
    def bits_per_data_symbol(self) -> int:
        return 2 * self.n_active


@dataclass
class ComplexWaveform:
    """Complex baseband/IF sample stream."""

    sample_rate_hz: float
    center_offset_hz: float
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.complex128)
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.samples.size == 0:
            raise ValueError("waveform must contain samples")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform samples must be finite")

    def power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))


@dataclass
class SymbolGrid:
    """Per-OFDM-symbol complex symbols on the active subcarriers."""

    symbols: np.ndarray  # [n_ofdm_symbols, n_active]
    pilot_mask: np.ndarray  # bool, same shape

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.complex128)
        self.pilot_mask = np.asarray(self.pilot_mask, dtype=bool)
        if self.symbols.shape != self.pilot_mask.shape:
            raise ValueError("symbols and pilot_mask shapes differ")

    @property
    def n_symbols(self) -> int:
        return self.symbols.shape[0]

    def pilot_rows(self) -> np.ndarray:
        return self.symbols[self.pilot_mask.all(axis=1)]

    def data_rows(self) -> np.ndarray:
        return self.symbols[~self.pilot_mask.any(axis=1)]


def map_qpsk(bits) -> np.ndarray:
    """Gray-mapped unit-energy QPSK: (b0, b1) -> ((1-2 b0) + 1j (1-2 b1)) / sqrt(2)."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size % 2:
        raise ValueError(f"bit count must be even, got {bits.size}")
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise ValueError("bits must be 0 or 1")
    pairs = bits.reshape(-1, 2)
    return ((1 - 2 * pairs[:, 0]) + 1j * (1 - 2 * pairs[:, 1])) / np.sqrt(2.0)


def demap_qpsk(symbols) -> np.ndarray:
    """Hard-decision inverse of map_qpsk."""
    symbols = np.asarray(symbols).ravel()
    bits = np.empty((symbols.size, 2), dtype=np.uint8)
    bits[:, 0] = symbols.real < 0
    bits[:, 1] = symbols.imag < 0
    return bits.ravel()


def pilot_symbols(cfg: OfdmConfig, pilot_seed: int) -> np.ndarray:
    rng = np.random.default_rng(pilot_seed)
    return map_qpsk(rng.integers(0, 2, size=2 * cfg.n_active))


def synthesize_grid(rows: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """Unitary IFFT + cyclic prefix for each grid row, concatenated in time."""
    rows = np.atleast_2d(rows)
    spectrum = np.zeros((rows.shape[0], cfg.n_subcarriers), dtype=np.complex128)
    spectrum[:, cfg.active_bins] = rows
    body = np.fft.ifft(spectrum, axis=1) * np.sqrt(cfg.n_subcarriers)
    with_cp = np.concatenate([body[:, cfg.n_subcarriers - cfg.cp_len:], body], axis=1)
    return with_cp.ravel()


def build_frame(cfg: OfdmConfig, payload_bits, pilot_seed: int,
                n_data_symbols: int | None = None) -> tuple[ComplexWaveform, SymbolGrid]:
    """Assemble a sounding frame: pilot symbol, then payload on QPSK data symbols.

    Args:
        payload_bits: bit sequence carried by the data symbols; padded with
            zero bits to fill the frame.
        n_data_symbols: fixed frame length in data symbols; default is the
            minimum that fits the payload.

    Raises:
        ValueError: payload does not fit the requested frame length.
    """
    payload = np.asarray(payload_bits, dtype=np.uint8).ravel()
    per_symbol = cfg.bits_per_data_symbol
    if n_data_symbols is None:
        n_data_symbols = max(1, -(-payload.size // per_symbol)) if payload.size else 0
    available = n_data_symbols * per_symbol
    if payload.size > available:
        raise ValueError(
            f"payload overflow: {payload.size} bits required, "
            f"{available} available in {n_data_symbols} data symbols")
    bits = np.zeros(available, dtype=np.uint8)
    bits[:payload.size] = payload

    grid_rows = pilot_symbols(cfg, pilot_seed)[None, :]
    if n_data_symbols:
        data = map_qpsk(bits).reshape(n_data_symbols, cfg.n_active)
        grid_rows = np.vstack([grid_rows, data])
    mask = np.zeros_like(grid_rows, dtype=bool)
    mask[0, :] = True
    grid = SymbolGrid(grid_rows, mask)
    wave = ComplexWaveform(cfg.sample_rate_hz, 0.0, synthesize_grid(grid_rows, cfg))
    return wave, grid


def ofdm_demodulate(wave: ComplexWaveform, cfg: OfdmConfig) -> SymbolGrid:
    """Strip cyclic prefixes and return per-subcarrier symbols (unitary FFT).

    The frame timing is assumed known (simulation provides it); the pilot mask
    follows the frame convention of one leading pilot symbol.
    """
    x = wave.samples
    if x.size % cfg.symbol_len:
        raise ValueError(
            f"waveform length {x.size} is not a whole number of "
            f"{cfg.symbol_len}-sample OFDM symbols")
    blocks = x.reshape(-1, cfg.symbol_len)[:, cfg.cp_len:]
    spectrum = np.fft.fft(blocks, axis=1) / np.sqrt(cfg.n_subcarriers)
    rows = spectrum[:, cfg.active_bins]
    mask = np.zeros_like(rows, dtype=bool)
    mask[0, :] = True
    return SymbolGrid(rows, mask)


def encode_position(position_m) -> np.ndarray:
    """Pack an (x, y, z) position into 96 bits, 1 mm fixed point, LSB first."""
    p = np.asarray(position_m, dtype=np.float64).ravel()
    if p.size != 3:
        raise ValueError("position must have 3 coordinates")
    bits = np.empty(3 * BITS_PER_COORD, dtype=np.uint8)
    for i, coord in enumerate(p):
        if not abs(coord) < 2 ** 15:
            raise ValueError(f"coordinate {coord} out of range (|c| < 2^15 m)")
        value = int(round(coord * _COORD_SCALE)) & 0xFFFFFFFF
        for b in range(BITS_PER_COORD):
            bits[i * BITS_PER_COORD + b] = (value >> b) & 1
    return bits


def decode_position(bits) -> np.ndarray:
    """Inverse of encode_position (identity to within 0.5 mm per axis)."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size < 3 * BITS_PER_COORD:
        raise ValueError("need 96 bits to decode a position")
    out = np.empty(3, dtype=np.float64)
    for i in range(3):
        word = 0
        for b in range(BITS_PER_COORD):
            word |= int(bits[i * BITS_PER_COORD + b]) << b
        if word >= 2 ** 31:
            word -= 2 ** 32
        out[i] = word / _COORD_SCALE
    return out

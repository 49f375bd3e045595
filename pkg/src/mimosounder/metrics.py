"""Verification mathematics: channel stability correlation, SNR CDF, maximum
ratio combining with BER sweeps, and positioning error statistics.

All functions are pure; Monte-Carlo sweeps draw per-point seeds from one
SeedSequence so results are reproducible and scheduling independent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .propagation import CsiMatrix
from .receiver import ChannelEstimate
from .waveform import demap_qpsk, map_qpsk


@dataclass
class CorrelationSeries:
    delta_t_s: np.ndarray
    delta_h: np.ndarray

    def __post_init__(self):
        self.delta_t_s = np.asarray(self.delta_t_s, dtype=np.float64)
        self.delta_h = np.asarray(self.delta_h, dtype=np.float64)
        if self.delta_t_s.shape != self.delta_h.shape:
            raise ValueError("delta_t and delta_h lengths differ")
        if np.any(self.delta_h < -1e-9) or np.any(self.delta_h > 1 + 1e-9):
            raise ValueError("delta_h out of [0, 1]")


@dataclass
class BerCurve:
    n_antennas: int
    snr_axis_db: np.ndarray
    ber: np.ndarray

    def __post_init__(self):
        self.snr_axis_db = np.asarray(self.snr_axis_db, dtype=np.float64)
        self.ber = np.asarray(self.ber, dtype=np.float64)
        if np.any(np.diff(self.snr_axis_db) <= 0):
            raise ValueError("SNR axis must be strictly increasing")
        if np.any(self.ber < 0) or np.any(self.ber > 0.5 + 1e-12):
            raise ValueError("BER values must lie in [0, 0.5]")


@dataclass
class PositionErrorStats:
    errors_m: np.ndarray
    mean_distance_error_m: float
    histogram_counts: np.ndarray
    histogram_edges_m: np.ndarray
    cdf_errors_m: np.ndarray
    cdf_fractions: np.ndarray


def correlation_coefficient(h_t: CsiMatrix | np.ndarray,
                            h_t2: CsiMatrix | np.ndarray) -> float:
    """Subcarrier-averaged normalized inner-product magnitude of two CSI sets.

    Per subcarrier k: |h_t(k)^H h_t2(k)| / (||h_t(k)|| ||h_t2(k)||), averaged
    over subcarriers. Scale and common per-subcarrier unitary invariant.
    Zero-norm subcarriers are excluded with a warning.
    """
    a = h_t.h if isinstance(h_t, CsiMatrix) else np.asarray(h_t)
    b = h_t2.h if isinstance(h_t2, CsiMatrix) else np.asarray(h_t2)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    inner = np.abs(np.sum(np.conj(a) * b, axis=0))
    na = np.linalg.norm(a, axis=0)
    nb = np.linalg.norm(b, axis=0)
    valid = (na > 0) & (nb > 0)
    if not np.all(valid):
        warnings.warn(f"excluded {int(np.sum(~valid))} zero-norm subcarriers",
                      RuntimeWarning)
    if not np.any(valid):
        raise ValueError("all subcarriers have zero norm")
    return float(np.mean(inner[valid] / (na[valid] * nb[valid])))


def stability_series(records: list[ChannelEstimate],
                     ref_index: int = 0) -> CorrelationSeries:
    """Correlation of every later record against the reference record."""
    if len(records) < 2:
        raise ValueError("need at least two records")
    ref = records[ref_index]
    laters = [r for i, r in enumerate(records) if i != ref_index
              and r.timestamp_s >= ref.timestamp_s]
    if not laters:
        raise ValueError("no records after the reference")
    dts = np.array([r.timestamp_s - ref.timestamp_s for r in laters])
    dh = np.array([correlation_coefficient(ref.csi, r.csi) for r in laters])
    return CorrelationSeries(dts, dh)


def snr_cdf(records: list[ChannelEstimate]) -> tuple[np.ndarray, np.ndarray]:
    """Empirical CDF over every antenna of every record: (snr_db, fraction)."""
    if not records:
        raise ValueError("need at least one record")
    values = np.sort(np.concatenate([r.snr_per_antenna_db for r in records]))
    fractions = np.arange(1, values.size + 1) / values.size
    return values, fractions


def mrc_combine(h_hat: np.ndarray, y: np.ndarray) -> complex:
    """Maximum ratio combining, normalized so the signal coefficient is one:
    h_hat^H y / ||h_hat||^2."""
    h_hat = np.asarray(h_hat).ravel()
    y = np.asarray(y).ravel()
    if h_hat.size != y.size:
        raise ValueError("dimension mismatch")
    denom = float(np.sum(np.abs(h_hat) ** 2))
    if denom == 0:
        raise ValueError("zero channel estimate")
    return complex(np.vdot(h_hat, y) / denom)


def _mrc_combine_batch(h: np.ndarray, y: np.ndarray) -> np.ndarray:
    denom = np.sum(np.abs(h) ** 2, axis=1)
    return np.sum(np.conj(h) * y, axis=1) / denom


def ber_sweep(n_antennas_list, gain_axis_db, channel_source="awgn",
              trials: int = 100_000, seed: int = 0,
              first_antenna: int = 0) -> list[BerCurve]:
    """Monte-Carlo QPSK BER after MRC versus transmit gain.

    channel_source: "awgn" for unit channels (equal branch SNR), or a callable
    (rng, trials) -> complex [trials, n_branches]. For unequal branch gains
    the branches used for an n-antenna curve are chosen in ascending mean-SNR
    order starting at `first_antenna`, mirroring how the measured curves were
    assembled.

    A warning is raised when `trials` cannot resolve a 1e-3 BER floor.
    """
    if trials < 10_000:
        warnings.warn(
            f"{trials} trials resolve BER only down to about {10.0 / trials:.1e}; "
            "1e-3 needs >= 10000", RuntimeWarning)
    gain_axis = np.atleast_1d(np.asarray(gain_axis_db, dtype=np.float64))
    root = np.random.SeedSequence(seed)
    curves = []
    for n_ant, seq in zip(n_antennas_list, root.spawn(len(n_antennas_list))):
        point_seeds = seq.spawn(gain_axis.size)
        ber = np.empty(gain_axis.size)
        for gi, (g_db, ps) in enumerate(zip(gain_axis, point_seeds)):
            rng = np.random.default_rng(ps)
            if channel_source == "awgn":
                h = np.ones((trials, n_ant), dtype=np.complex128)
            else:
                h_full = np.asarray(channel_source(rng, trials))
                order = np.argsort(np.mean(np.abs(h_full) ** 2, axis=0))
                pick = order[first_antenna:first_antenna + n_ant]
                if pick.size < n_ant:
                    raise ValueError("channel source provides too few branches")
                h = h_full[:, pick]
            amp = 10.0 ** (g_db / 20.0)
            bits = rng.integers(0, 2, size=2 * trials)
            s = map_qpsk(bits)
            noise = (rng.standard_normal((trials, n_ant))
                     + 1j * rng.standard_normal((trials, n_ant))) / math.sqrt(2.0)
            y = amp * h * s[:, None] + noise
            combined = _mrc_combine_batch(h, y)
            errors = np.sum(demap_qpsk(combined) != bits)
            ber[gi] = errors / (2.0 * trials)
        curves.append(BerCurve(n_ant, gain_axis.copy(), ber))
    return curves


def ber_crossing_gain_db(curve: BerCurve, level: float = 1e-3) -> float:
    """Gain where the curve crosses `level`, log-domain interpolation."""
    ber = np.clip(curve.ber, 1e-12, 0.5)
    below = np.where(ber <= level)[0]
    above = np.where(ber > level)[0]
    if below.size == 0 or above.size == 0:
        raise ValueError(
            f"curve for {curve.n_antennas} antennas never crosses {level}")
    i = below[0]
    if i == 0:
        return float(curve.snr_axis_db[0])
    j = i - 1
    x0, x1 = curve.snr_axis_db[j], curve.snr_axis_db[i]
    y0, y1 = math.log10(ber[j]), math.log10(ber[i])
    t = (math.log10(level) - y0) / (y1 - y0)
    return float(x0 + t * (x1 - x0))


def position_error_stats(true_positions, predicted_positions,
                         bin_width_m: float = 0.10) -> PositionErrorStats:
    """Euclidean error statistics between matched 3-D position sets."""
    t = np.asarray(true_positions, dtype=np.float64)
    p = np.asarray(predicted_positions, dtype=np.float64)
    if t.shape != p.shape:
        raise ValueError(f"count mismatch: {t.shape} vs {p.shape}")
    if t.ndim != 2 or t.shape[1] != 3:
        raise ValueError("positions must be [n, 3]")
    errors = np.linalg.norm(t - p, axis=1)
    top = max(float(np.max(errors)), bin_width_m)
    edges = np.arange(0.0, top + 2 * bin_width_m, bin_width_m)
    counts, edges = np.histogram(errors, bins=edges)
    order = np.sort(errors)
    fractions = np.arange(1, order.size + 1) / order.size
    return PositionErrorStats(
        errors_m=errors,
        mean_distance_error_m=float(np.mean(errors)),
        histogram_counts=counts,
        histogram_edges_m=edges,
        cdf_errors_m=order,
        cdf_fractions=fractions)

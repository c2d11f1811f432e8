"""Asymmetrically clipped optical OFDM modem.

Data rides on the odd subcarriers only, with Hermitian symmetry so the
IFFT is real. Clipping negative samples to zero then makes the
waveform nonnegative while leaving the odd subcarriers intact apart
from an exact factor of one half; all clipping distortion lands on the
even subcarriers. The receiver doubles the odd bins to undo that, so
a loopback through transmit and receive returns the sent symbols.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class OfdmConfig:
    n_subcarriers: int = 512
    cp_length: int = 16
    constellation_size: int = 32
    data_rate: float = 25e6

    def __post_init__(self):
        n = self.n_subcarriers
        if n < 8 or n & (n - 1):
            raise ValueError("n_subcarriers must be a power of two, at least 8")
        if self.cp_length < 0 or self.cp_length >= n:
            raise ValueError("cp_length must be in [0, n_subcarriers)")
        if self.constellation_size not in (4, 16, 32, 64):
            raise ValueError("constellation_size must be one of 4, 16, 32, 64")
        if self.data_rate <= 0:
            raise ValueError("data_rate must be > 0")

    @property
    def n_data(self) -> int:
        """Independent data subcarriers: the odd bins of the lower half."""
        return self.n_subcarriers // 4

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.constellation_size))

    @property
    def bits_per_frame(self) -> int:
        return self.n_data * self.bits_per_symbol

    @property
    def frame_samples(self) -> int:
        return self.n_subcarriers + self.cp_length

    @property
    def sample_period(self) -> float:
        """Seconds per time-domain sample at the configured bit rate."""
        return self.bits_per_frame / self.data_rate / self.frame_samples

    @property
    def frame_duration(self) -> float:
        return self.bits_per_frame / self.data_rate


@dataclass(frozen=True)
class OfdmFrame:
    """One transmitted frame with every chain stage kept for inspection.

    time_domain and clipped both carry the cyclic prefix; clipped is the
    unipolar waveform that actually drives the optical front end.
    """

    symbols: np.ndarray
    freq_domain: np.ndarray
    time_domain: np.ndarray
    clipped: np.ndarray


# --- constellations ----------------------------------------------------------


def _gray(k: np.ndarray) -> np.ndarray:
    return k ^ (k >> 1)


@lru_cache(maxsize=None)
def _alphabet(order: int) -> np.ndarray:
    """Unit-average-energy QAM alphabet indexed by bit label.

    Square orders use per-axis Gray coding. Order 32 is the 6x6 cross
    (corners removed) labelled along a serpentine walk, so adjacent
    points differ in one bit almost everywhere.
    """
    if order == 32:
        points = []
        for i in range(6):
            rows = range(6) if i % 2 == 0 else range(5, -1, -1)
            for j in rows:
                if (i, j) in ((0, 0), (0, 5), (5, 0), (5, 5)):
                    continue
                points.append(complex(2 * i - 5, 2 * j - 5))
        walk = np.array(points)
        out = np.empty(32, dtype=complex)
        k = np.arange(32)
        out[_gray(k)] = walk
        return out / math.sqrt(20.0)
    b = int(math.log2(order)) // 2
    axis = np.empty(1 << b, dtype=float)
    k = np.arange(1 << b)
    axis[_gray(k)] = 2 * k - ((1 << b) - 1)
    grid = axis[:, None] + 1j * axis[None, :]
    hi = np.arange(order) >> b
    lo = np.arange(order) & ((1 << b) - 1)
    return grid[hi, lo] / math.sqrt(2.0 * (order - 1) / 3.0)


def _bits_to_labels(bits: np.ndarray, width: int) -> np.ndarray:
    groups = bits.reshape(-1, width)
    return groups @ (1 << np.arange(width - 1, -1, -1))


def _labels_to_bits(labels: np.ndarray, width: int) -> np.ndarray:
    shifts = np.arange(width - 1, -1, -1)
    return ((labels[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def modulate(bits, config: OfdmConfig) -> np.ndarray:
    """Map one frame's worth of bits to QAM symbols."""
    b = np.asarray(bits)
    if b.size != config.bits_per_frame:
        raise ValueError(f"expected {config.bits_per_frame} bits, got {b.size}")
    if np.any((b != 0) & (b != 1)):
        raise ValueError("bits must be 0 or 1")
    labels = _bits_to_labels(b.astype(np.int64), config.bits_per_symbol)
    return _alphabet(config.constellation_size)[labels]


def demodulate(symbols, config: OfdmConfig) -> np.ndarray:
    """Hard-decision symbols back to bits (nearest constellation point)."""
    alpha = _alphabet(config.constellation_size)
    labels = np.argmin(np.abs(np.asarray(symbols)[:, None] - alpha[None, :]), axis=1)
    return _labels_to_bits(labels, config.bits_per_symbol)


# --- framing -----------------------------------------------------------------


def _odd_bins(n: int) -> np.ndarray:
    return np.arange(1, n // 2, 2)


def map_subcarriers(symbols, n: int) -> np.ndarray:
    """Place symbols on odd bins with Hermitian symmetry; all else zero."""
    s = np.asarray(symbols, dtype=complex)
    bins = _odd_bins(n)
    if s.size != bins.size:
        raise ValueError(f"expected {bins.size} symbols for n={n}, got {s.size}")
    spec = np.zeros(n, dtype=complex)
    spec[bins] = s
    spec[n - bins] = np.conj(s)
    return spec


def transmit(symbols, config: OfdmConfig) -> OfdmFrame:
    """Map, transform, prefix and clip one frame of QAM symbols."""
    s = np.asarray(symbols, dtype=complex)
    freq = map_subcarriers(s, config.n_subcarriers)
    base = np.fft.ifft(freq).real
    cp = config.cp_length
    time = np.concatenate([base[-cp:], base]) if cp else base
    return OfdmFrame(symbols=s, freq_domain=freq, time_domain=time,
                     clipped=np.maximum(time, 0.0))


def receive(rx_samples, config: OfdmConfig, eq=None) -> np.ndarray:
    """Recover the odd-subcarrier symbols from one received frame.

    Strips the prefix, transforms, and doubles the odd bins to undo the
    deterministic halving that clipping applies. With eq given, each
    data subcarrier is additionally divided by its channel gain; without
    it the raw pre-equalization symbols come back.
    """
    w = np.asarray(rx_samples, dtype=float)
    if w.size != config.frame_samples:
        raise ValueError(f"expected {config.frame_samples} samples, got {w.size}")
    spec = np.fft.fft(w[config.cp_length:])
    out = 2.0 * spec[_odd_bins(config.n_subcarriers)]
    if eq is None:
        return out
    g = np.asarray(eq, dtype=complex)
    if g.shape != out.shape:
        raise ValueError(f"expected {out.size} equalizer taps, got {g.size}")
    if np.any(g == 0):
        raise ValueError("unestimated subcarrier")
    return out / g


def estimate_channel(training, received, config: OfdmConfig):
    """Per-subcarrier gains and their mean magnitude from one training frame.

    received must be the pre-equalization output of receive, which has
    the clipping factor already compensated, so the returned gains
    estimate the optical channel and the mean is the DC-gain figure the
    positioning chain inverts.
    """
    tx = np.asarray(training, dtype=complex)
    rx = np.asarray(received, dtype=complex)
    if tx.shape != rx.shape:
        raise ValueError("training and received symbol counts differ")
    if tx.size != config.n_data:
        raise ValueError(f"expected {config.n_data} symbols, got {tx.size}")
    if np.any(tx == 0):
        raise ValueError("training symbols must be nonzero")
    gains = rx / tx
    return gains, float(np.mean(np.abs(gains)))

"""On-off keying baseline: two optical power levels, one sample per bit.

Serves as the reference modulation the OFDM link is compared against.
Gain estimation is the crude mean-power ratio, which lumps all
multipath energy into one number; intersymbol smearing folds straight
into the training mean instead of being equalized away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OokConfig:
    bit_rate: float = 25e6
    power_high: float = 5.0
    power_low: float = 3.0
    training_length: int = 1024

    def __post_init__(self):
        if self.bit_rate <= 0:
            raise ValueError("bit_rate must be > 0")
        if not self.power_high > self.power_low >= 0:
            raise ValueError("need power_high > power_low >= 0")
        if self.training_length < 2:
            raise ValueError("training_length must be >= 2")

    @property
    def sample_period(self) -> float:
        return 1.0 / self.bit_rate


def transmit_ook(bits, config: OokConfig) -> np.ndarray:
    """Optical power waveform for a bit sequence, one sample per bit."""
    b = np.asarray(bits)
    if b.size == 0:
        raise ValueError("empty bit sequence")
    if np.any((b != 0) & (b != 1)):
        raise ValueError("bits must be 0 or 1")
    return np.where(b == 1, config.power_high, config.power_low).astype(float)


def estimate_gain_ook(tx_waveform, rx_waveform) -> float:
    """Mean-ratio channel gain over a training burst.

    No equalization and no timing knowledge: just received mean power
    over transmitted mean power.
    """
    tx = np.asarray(tx_waveform, dtype=float)
    rx = np.asarray(rx_waveform, dtype=float)
    if tx.shape != rx.shape:
        raise ValueError("waveform lengths differ")
    denom = float(tx.mean())
    if denom <= 0:
        raise ValueError("training waveform has nonpositive mean")
    return float(rx.mean()) / denom

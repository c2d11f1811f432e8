"""Electro-optical front end: drive voltage in, radiated optical power out.

The LED is modelled as a memoryless polynomial over a bounded drive
range. Drives outside the range clamp to the endpoints, which is the
hard nonlinearity that distorts over-modulated waveforms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from numpy.polynomial import polynomial as npoly


@dataclass(frozen=True)
class LedModel:
    """Polynomial volts-to-watts curve, ascending coefficient order."""

    coefficients: tuple
    v_min: float
    v_max: float
    bias_voltage: float

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if not self.coefficients:
            raise ValueError("empty coefficient list")
        if not self.v_max > self.v_min:
            raise ValueError("v_max must exceed v_min")
        if not self.v_min <= self.bias_voltage <= self.v_max:
            raise ValueError("bias outside drive range")
        span = self.v_max - self.v_min
        step = max(1e-3, span / 200000.0)
        grid = np.arange(self.v_min, self.v_max + step / 2, step)
        p = npoly.polyval(grid, self.coefficients)
        if np.any(p < 0):
            raise ValueError("negative optical power inside drive range")
        if np.any(np.diff(p) < 0):
            raise ValueError("power curve not monotone over drive range")

    def power(self, volts):
        """Optical power for already-clamped drive samples."""
        return npoly.polyval(np.asarray(volts, dtype=float), self.coefficients)

    def small_signal_gain(self, volts: float | None = None) -> float:
        """Slope dP/dV (W per volt) at the given drive, default at bias."""
        v = self.bias_voltage if volts is None else volts
        return float(npoly.polyval(v, npoly.polyder(self.coefficients)))


def apply_led(model: LedModel, drive_volts) -> np.ndarray:
    """Clamp the drive into the model range and convert to optical power.

    Output is clamped at zero as well; a real LED cannot emit negative
    power no matter what the fitted polynomial does at the range edges.
    """
    v = np.asarray(drive_volts, dtype=float)
    p = model.power(np.clip(v, model.v_min, model.v_max))
    return np.maximum(p, 0.0)


def clamp_count(model: LedModel, drive_volts) -> int:
    """How many samples fall outside the model's drive range."""
    v = np.asarray(drive_volts, dtype=float)
    return int(np.count_nonzero((v < model.v_min) | (v > model.v_max)))


def reference_rms(signal) -> float:
    """RMS the waveform had before negative clipping.

    For a half-wave-rectified zero-mean signal that equals
    sqrt(2 * mean(s^2)); used as the per-frame drive scaling reference.
    """
    s = np.asarray(signal, dtype=float)
    r = math.sqrt(2.0 * float(np.mean(s * s))) if s.size else 0.0
    if r <= 0:
        raise ValueError("empty frame")
    return r


def drive_mapping(signal, model: LedModel, modulation_depth: float) -> np.ndarray:
    """Scale a unipolar modem waveform onto the LED drive around bias.

    drive = bias + depth * signal / reference_rms(signal); the reference
    is fixed per frame. The default depth keeps essentially all samples
    of a random frame inside a 1 V drive window.
    """
    s = np.asarray(signal, dtype=float)
    if s.size == 0:
        raise ValueError("empty frame")
    if modulation_depth < 0:
        raise ValueError("modulation_depth must be >= 0")
    if np.any(s < 0):
        raise ValueError("signal must be unipolar (>= 0)")
    if modulation_depth == 0.0 or not np.any(s):
        # nothing to scale: an idle or silent frame just holds the bias
        return np.full(s.size, model.bias_voltage)
    return model.bias_voltage + modulation_depth * (s / reference_rms(s))


def default_led_model() -> LedModel:
    """The packaged white-LED fit (3.0 to 4.0 V turn-on region)."""
    raw = json.loads(resources.files("vlcpos").joinpath("data/led_default.json").read_text())
    return LedModel(coefficients=tuple(raw["coefficients"]), v_min=raw["v_min"],
                    v_max=raw["v_max"], bias_voltage=raw["bias_voltage"])


def identity_led_model(v_max: float = 1e9) -> LedModel:
    """Pass-through model (1 W per volt, no curvature) for tests."""
    return LedModel(coefficients=(0.0, 1.0), v_min=0.0, v_max=v_max, bias_voltage=0.0)

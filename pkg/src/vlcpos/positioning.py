"""Received-signal-strength positioning: gains to distances to coordinates.

Each estimated channel gain is inverted through the line-of-sight link
model to a lamp-to-receiver distance, distances become horizontal
ranges using the known height difference, and the ranges feed a linear
least-squares fix against the lamp anchor coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import ReceiverSpec, TransmitterSpec


@dataclass(frozen=True)
class ChannelEstimate:
    """Estimated DC gain for one lamp, plus where that lamp says it is."""

    tx_id: int
    tx_coords: tuple
    p_bar: float

    def __post_init__(self):
        object.__setattr__(self, "tx_coords", tuple(float(v) for v in self.tx_coords))
        if len(self.tx_coords) != 2:
            raise ValueError("tx_coords must be (x, y)")
        if not self.p_bar > 0:
            raise ValueError("p_bar must be > 0")


@dataclass(frozen=True)
class PositionEstimate:
    x: float
    y: float
    residual_norm: float   # |A x - b|^2 of the linearized system
    used_tx: tuple


def estimate_distance(p_bar: float, tx: TransmitterSpec, rx: ReceiverSpec):
    """Invert the line-of-sight link model to a lamp distance.

    Assumes both surfaces are horizontal, so the emission and incidence
    cosines equal dz/d and the gain depends only on distance. Returns
    (distance, outside_fov): when the solved distance implies an
    incidence angle beyond the concentrator's field of view the estimate
    is unreliable but still returned, with the flag set.
    """
    if p_bar <= 0:
        raise ValueError("p_bar must be > 0")
    dz = tx.position[2] - rx.position[2]
    if dz <= 0:
        raise ValueError("transmitter not above receiver plane")
    m = tx.lambertian_order
    fov = math.radians(rx.fov_deg)
    g = rx.refractive_index ** 2 / math.sin(fov) ** 2
    num = (m + 1.0) * rx.area * rx.optical_filter_gain * g * dz ** (m + 1.0)
    d = (num / (2.0 * math.pi * p_bar)) ** (1.0 / (m + 3.0))
    return d, dz / d < math.cos(fov)


def horizontal_range(distance: float, dz: float):
    """Slant distance to horizontal range given the height gap.

    Returns (range_m, clamped). Gains overestimated past the physical
    limit yield distances shorter than dz; those clamp to range 0.
    """
    if distance < 0 or dz <= 0:
        raise ValueError("need distance >= 0 and dz > 0")
    r2 = distance * distance - dz * dz
    if r2 < 0:
        return 0.0, True
    return math.sqrt(r2), False


def laterate(anchors, ranges, ids=None) -> PositionEstimate:
    """Linear least-squares position fix from anchor points and ranges.

    Differencing the range circles against the first anchor removes the
    quadratic terms; the rest is an overdetermined linear system solved
    by a numerically stable least-squares routine.
    """
    pts = np.asarray(anchors, dtype=float)
    r = np.asarray(ranges, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] != r.size:
        raise ValueError("anchors must be (n, 2) with one range each")
    if pts.shape[0] < 3:
        raise ValueError("need at least 3 anchors")
    if np.any(r < 0):
        raise ValueError("ranges must be >= 0")
    used = tuple(ids) if ids is not None else tuple(range(pts.shape[0]))
    if len(used) != pts.shape[0]:
        raise ValueError("one id per anchor")

    x1, y1 = pts[0]
    a = 2.0 * (pts[1:] - pts[0])
    b = (r[0] ** 2 - r[1:] ** 2
         + pts[1:, 0] ** 2 + pts[1:, 1] ** 2 - x1 ** 2 - y1 ** 2)
    sol, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < 2:
        raise ValueError("degenerate anchor geometry")
    residual = float(np.sum((a @ sol - b) ** 2))
    return PositionEstimate(x=float(sol[0]), y=float(sol[1]),
                            residual_norm=residual, used_tx=used)

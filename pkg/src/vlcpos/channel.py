"""Optical channel between a ceiling LED and the photodiode.

The line-of-sight gain follows the generalized Lambertian link budget;
diffuse propagation is integrated deterministically by discretizing the
six room surfaces into square elements and cascading power through up
to three reflections. Each reflection is ideal-diffuse: an element
re-emits captured power as a first-order Lambertian source scaled by
its surface reflectivity.

Two element grids are used. The first bounce, which dominates the
diffuse energy, runs on the configured fine pitch. Bounces two and
three run on a coarser grid (default 5x the fine pitch) because the
receiver-independent element-to-element cascade scales with the square
of the element count; those terms are small, smooth corrections and
tolerate the coarser quadrature. Arrival times are accumulated on a
0.2 ns internal grid and re-binned to the requested tap width, anchored
at the first arrival.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .scene import ReceiverSpec, SceneConfig, TransmitterSpec, link_geometry

SPEED_OF_LIGHT = 299792458.0

# Internal accumulation grid for arrival times; fine enough that binning
# jitter is invisible at modem tap widths (tens of ns).
FINE_TIME_BIN = 0.2e-9
# Time quantization inside the element-to-element cascade.
CASCADE_TIME_BIN = 1.0e-9
# Coarse cascade pitch = this factor times the fine surface pitch.
CASCADE_PITCH_FACTOR = 5.0

# One sample period of the default modem (25 Mbps, 512 subcarriers,
# 32-QAM, CP 16): 640 bits per frame over 528 samples.
DEFAULT_BIN_WIDTH = 640.0 / (25e6 * 528.0)

_CACHE_FORMAT_VERSION = 1


def concentrator_gain(psi: float, fov: float, n: float) -> float:
    """Gain of a compound parabolic concentrator at incidence angle psi.

    Angles in radians. Constant n^2 / sin^2(fov) inside the field of
    view, zero outside.
    """
    if fov <= 0:
        raise ValueError("fov must be > 0")
    if not 0.0 <= psi <= math.pi / 2:
        raise ValueError("psi must lie in [0, pi/2]")
    if psi > fov:
        return 0.0
    return n * n / math.sin(fov) ** 2


def lambertian_order(half_power_angle_deg: float) -> float:
    """Lambertian mode number from the half-power semi-angle in degrees."""
    if not 0.0 < half_power_angle_deg < 90.0:
        raise ValueError("half-power angle must lie in (0, 90) degrees")
    return -math.log(2.0) / math.log(math.cos(math.radians(half_power_angle_deg)))


def los_dc_gain(tx: TransmitterSpec, rx: ReceiverSpec) -> float:
    """Line-of-sight DC power gain of one LED-to-photodiode link."""
    geom = link_geometry(tx, rx)
    if geom.cos_psi <= 0.0 or geom.cos_phi <= 0.0:
        return 0.0   # link points away from emitter or detector
    fov = math.radians(rx.fov_deg)
    psi = math.acos(min(geom.cos_psi, 1.0))
    g = concentrator_gain(psi, fov, rx.refractive_index)
    if g == 0.0:
        return 0.0
    m = tx.lambertian_order
    return ((m + 1.0) * rx.area * geom.cos_phi ** m * rx.optical_filter_gain
            * g * geom.cos_psi / (2.0 * math.pi * geom.distance ** 2))


@dataclass(frozen=True)
class ImpulseResponse:
    """Time-binned channel power gains; bin j covers [t0 + j*bw, t0 + (j+1)*bw)."""

    bin_width: float
    t0: float
    gains: np.ndarray
    los_gain: float

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        object.__setattr__(self, "gains", g)
        if self.bin_width <= 0:
            raise ValueError("bin_width must be > 0")
        if g.ndim != 1 or g.size == 0:
            raise ValueError("gains must be a nonempty 1-D vector")
        if np.any(g < 0):
            raise ValueError("negative bin gain")

    @property
    def total_gain(self) -> float:
        return float(self.gains.sum())


def channel_dc_gain(ir: ImpulseResponse) -> float:
    """Zero-frequency gain: the sum over all bins."""
    return ir.total_gain


def rebin(ir: ImpulseResponse, bin_width: float) -> ImpulseResponse:
    """Re-quantize an impulse response to a new tap width, keeping t0."""
    if bin_width <= 0:
        raise ValueError("bin_width must be > 0")
    idx = np.floor(np.arange(ir.gains.size) * ir.bin_width / bin_width).astype(np.int64)
    gains = np.bincount(idx, weights=ir.gains)
    last = np.nonzero(gains)[0]
    gains = gains[: last[-1] + 1] if last.size else gains[:1]
    return ImpulseResponse(bin_width=bin_width, t0=ir.t0, gains=gains, los_gain=ir.los_gain)


# --- surface discretization --------------------------------------------------


@dataclass(frozen=True)
class _Elements:
    centers: np.ndarray   # (N, 3)
    normals: np.ndarray   # (N, 3), pointing into the room
    rho: np.ndarray       # (N,)
    area: np.ndarray      # (N,)


def _face_grid(u_len, v_len, pitch):
    nu = max(1, round(u_len / pitch))
    nv = max(1, round(v_len / pitch))
    du, dv = u_len / nu, v_len / nv
    u = (np.arange(nu) + 0.5) * du
    v = (np.arange(nv) + 0.5) * dv
    uu, vv = np.meshgrid(u, v, indexing="ij")
    return uu.ravel(), vv.ravel(), du * dv


def _room_elements(room: SceneConfig, pitch: float) -> _Elements:
    L, W, H = room.room_length, room.room_width, room.room_height
    centers, normals, rho, area = [], [], [], []

    def add(cx, cy, cz, normal, r, a):
        n = len(cx)
        centers.append(np.column_stack([cx, cy, cz]))
        normals.append(np.tile(normal, (n, 1)))
        rho.append(np.full(n, r))
        area.append(np.full(n, a))

    # walls x=0 / x=L
    u, v, a = _face_grid(W, H, pitch)
    add(np.zeros_like(u), u, v, (1.0, 0.0, 0.0), room.rho_wall, a)
    add(np.full_like(u, L), u, v, (-1.0, 0.0, 0.0), room.rho_wall, a)
    # walls y=0 / y=W
    u, v, a = _face_grid(L, H, pitch)
    add(u, np.zeros_like(u), v, (0.0, 1.0, 0.0), room.rho_wall, a)
    add(u, np.full_like(u, W), v, (0.0, -1.0, 0.0), room.rho_wall, a)
    # ceiling z=H, floor z=0
    u, v, a = _face_grid(L, W, pitch)
    add(u, v, np.full_like(u, H), (0.0, 0.0, -1.0), room.rho_ceiling, a)
    add(u, v, np.zeros_like(u), (0.0, 0.0, 1.0), room.rho_floor, a)

    return _Elements(
        centers=np.ascontiguousarray(np.concatenate(centers)),
        normals=np.ascontiguousarray(np.concatenate(normals)),
        rho=np.concatenate(rho),
        area=np.concatenate(area),
    )


def _source_to_elements(pos, m, elems: _Elements):
    """Fraction of a down-facing Lambertian source's power captured and
    re-emitted by each element (before the reflectivity factor), plus delays."""
    v = elems.centers - np.asarray(pos)
    d2 = np.einsum("ij,ij->i", v, v)
    d = np.sqrt(d2)
    ok = d > 1e-9
    dsafe = np.where(ok, d, 1.0)
    cos_src = np.clip(-v[:, 2] / dsafe, 0.0, 1.0)
    cos_in = np.clip(-np.einsum("ij,ij->i", v, elems.normals) / dsafe, 0.0, 1.0)
    frac = (m + 1.0) / (2.0 * math.pi) * cos_src ** m * cos_in * elems.area / np.where(ok, d2, 1.0)
    frac = np.where(ok, np.minimum(frac, 1.0), 0.0)
    return frac, d / SPEED_OF_LIGHT


def _elements_to_receiver(elems: _Elements, rx: ReceiverSpec):
    """Final-hop transfer from re-emitting elements into the detector.

    FOV masking and the concentrator apply here and only here.
    """
    v = np.asarray(rx.position) - elems.centers
    d2 = np.einsum("ij,ij->i", v, v)
    d = np.sqrt(d2)
    ok = d > 1e-9
    dsafe = np.where(ok, d, 1.0)
    cos_out = np.clip(np.einsum("ij,ij->i", v, elems.normals) / dsafe, 0.0, 1.0)
    cos_psi = np.clip(-v[:, 2] / dsafe, 0.0, 1.0)
    fov = math.radians(rx.fov_deg)
    g = rx.refractive_index ** 2 / math.sin(fov) ** 2
    in_fov = cos_psi >= math.cos(fov)
    w = (cos_out * cos_psi * rx.area * rx.optical_filter_gain * g
         / (math.pi * np.where(ok, d2, 1.0)))
    w = np.where(ok & in_fov, w, 0.0)
    return w, d / SPEED_OF_LIGHT


def _pair_matrices(elems: _Elements):
    """Element-to-element diffuse transfer fractions and propagation delays."""
    c = elems.centers
    diff = c[None, :, :] - c[:, None, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, np.inf)
    d = np.sqrt(d2)
    cos_out = np.clip(np.einsum("ijk,ik->ij", diff, elems.normals) / d, 0.0, 1.0)
    cos_in = np.clip(-np.einsum("ijk,jk->ij", diff, elems.normals) / d, 0.0, 1.0)
    t = np.minimum(cos_out * cos_in * elems.area[None, :] / (math.pi * d2), 1.0)
    delay = np.where(np.isfinite(d), d / SPEED_OF_LIGHT, 0.0)
    return t, delay


@dataclass
class _Cascade:
    """Receiver-independent propagation state for one transmitter."""

    b1_gain: np.ndarray    # fine grid: power reflected after bounce 1
    b1_delay: np.ndarray
    hist2: np.ndarray | None  # coarse grid: (N, nbins) reflected power after bounce 2
    hist3: np.ndarray | None


class BounceIntegrator:
    """Deterministic multi-bounce impulse-response integrator for one room.

    Builds the surface grids once and caches, per transmitter, the
    receiver-independent power cascade, so sweeping many receiver
    positions only pays for the final hop.
    """

    def __init__(self, room: SceneConfig, max_bounces: int = 3,
                 cascade_pitch: float | None = None):
        if max_bounces not in (0, 1, 2, 3):
            raise ValueError("max_bounces must be in {0, 1, 2, 3}")
        self.room = room
        self.max_bounces = max_bounces
        self.cascade_pitch = cascade_pitch or CASCADE_PITCH_FACTOR * room.surface_element_size
        self._fine: _Elements | None = None
        self._coarse: _Elements | None = None
        self._pair_t: np.ndarray | None = None
        self._pair_delay: np.ndarray | None = None
        self._cascades: dict = {}
        diag = math.sqrt(room.room_length ** 2 + room.room_width ** 2 + room.room_height ** 2)
        self._max_hop_delay = diag / SPEED_OF_LIGHT

    @property
    def _reflective(self) -> bool:
        r = self.room
        return self.max_bounces >= 1 and (r.rho_wall > 0 or r.rho_ceiling > 0 or r.rho_floor > 0)

    def _fine_elements(self) -> _Elements:
        if self._fine is None:
            self._fine = _room_elements(self.room, self.room.surface_element_size)
        return self._fine

    def _coarse_elements(self) -> _Elements:
        if self._coarse is None:
            pitch = min(self.cascade_pitch,
                        min(self.room.room_length, self.room.room_width, self.room.room_height))
            self._coarse = _room_elements(self.room, pitch)
            self._pair_t, self._pair_delay = _pair_matrices(self._coarse)
        return self._coarse

    def prime(self, transmitters) -> None:
        """Precompute the cascades for a set of transmitters up front."""
        if self._reflective:
            for tx in transmitters:
                self._cascade_for(tx)

    def _cascade_for(self, tx: TransmitterSpec) -> _Cascade:
        key = (tx.position, tx.lambertian_order)
        hit = self._cascades.get(key)
        if hit is not None:
            return hit

        fine = self._fine_elements()
        frac, t1 = _source_to_elements(tx.position, tx.lambertian_order, fine)
        b1_gain = frac * fine.rho

        hist2 = hist3 = None
        if self.max_bounces >= 2:
            coarse = self._coarse_elements()
            n = coarse.rho.size
            a_frac, a_t = _source_to_elements(tx.position, tx.lambertian_order, coarse)
            a1 = a_frac * coarse.rho
            nbins = int(math.ceil(3.0 * self._max_hop_delay / CASCADE_TIME_BIN)) + 2

            hist2 = np.zeros((n, nbins))
            contrib = a1[:, None] * self._pair_t * coarse.rho[None, :]
            bins = ((a_t[:, None] + self._pair_delay) / CASCADE_TIME_BIN).astype(np.int64)
            np.add.at(hist2, (np.broadcast_to(np.arange(n)[None, :], (n, n)), bins), contrib)

            if self.max_bounces >= 3:
                hist3 = np.zeros((n, nbins))
                shift = (self._pair_delay / CASCADE_TIME_BIN).astype(np.int64)
                k = np.arange(nbins)
                targets = np.broadcast_to(np.arange(n)[:, None], (n, nbins))
                for i in range(n):
                    row = hist2[i]
                    nz = np.nonzero(row)[0]
                    if nz.size == 0:
                        continue
                    kk = k[nz[0]: nz[-1] + 1]
                    vals = (self._pair_t[i] * coarse.rho)[:, None] * row[kk][None, :]
                    idx = shift[i][:, None] + kk[None, :]
                    np.add.at(hist3, (targets[:, : kk.size], idx), vals)

        cascade = _Cascade(b1_gain=b1_gain, b1_delay=t1, hist2=hist2, hist3=hist3)
        self._cascades[key] = cascade
        return cascade

    def impulse_response(self, tx: TransmitterSpec, rx: ReceiverSpec,
                         bin_width: float = DEFAULT_BIN_WIDTH) -> ImpulseResponse:
        """Impulse response of one link, binned at bin_width from the first arrival."""
        if bin_width <= 0:
            raise ValueError("bin_width must be > 0")
        geom = link_geometry(tx, rx)
        g_los = los_dc_gain(tx, rx)

        n_fine = int(math.ceil(4.0 * self._max_hop_delay / FINE_TIME_BIN)) + 8
        acc = np.zeros(n_fine)
        acc[int(geom.distance / SPEED_OF_LIGHT / FINE_TIME_BIN)] += g_los

        if self._reflective:
            cas = self._cascade_for(tx)
            fine = self._fine_elements()
            w, t_rx = _elements_to_receiver(fine, rx)
            contrib = cas.b1_gain * w
            bins = ((cas.b1_delay + t_rx) / FINE_TIME_BIN).astype(np.int64)
            acc += np.bincount(bins, weights=contrib, minlength=n_fine)

            if self.max_bounces >= 2:
                coarse = self._coarse_elements()
                wc, tc = _elements_to_receiver(coarse, rx)
                nbins = cas.hist2.shape[1]
                t_centers = (np.arange(nbins) + 0.5) * CASCADE_TIME_BIN
                idx = ((tc[:, None] + t_centers[None, :]) / FINE_TIME_BIN).astype(np.int64)
                np.add.at(acc, idx, cas.hist2 * wc[:, None])
                if self.max_bounces >= 3:
                    np.add.at(acc, idx, cas.hist3 * wc[:, None])

        nz = np.nonzero(acc)[0]
        if nz.size == 0:
            return ImpulseResponse(bin_width=bin_width, t0=0.0,
                                   gains=np.zeros(1), los_gain=0.0)
        i0, i1 = nz[0], nz[-1]
        t0 = i0 * FINE_TIME_BIN
        j = np.floor((np.arange(i0, i1 + 1) - i0) * FINE_TIME_BIN / bin_width).astype(np.int64)
        gains = np.bincount(j, weights=acc[i0: i1 + 1])
        return ImpulseResponse(bin_width=bin_width, t0=t0, gains=gains, los_gain=g_los)


def impulse_response(tx: TransmitterSpec, rx: ReceiverSpec, scene: SceneConfig,
                     max_bounces: int = 3,
                     bin_width: float = DEFAULT_BIN_WIDTH) -> ImpulseResponse:
    """One-shot impulse response; reuses a per-(room, bounce-count) integrator."""
    return _shared_integrator(scene, max_bounces).impulse_response(tx, rx, bin_width)


_INTEGRATORS: dict = {}


def _shared_integrator(room: SceneConfig, max_bounces: int) -> BounceIntegrator:
    key = (room, max_bounces)
    integ = _INTEGRATORS.get(key)
    if integ is None:
        integ = _INTEGRATORS[key] = BounceIntegrator(room, max_bounces)
    return integ


# --- optional on-disk impulse-response cache ---------------------------------


def _cache_key(tx: TransmitterSpec, rx: ReceiverSpec, room: SceneConfig,
               max_bounces: int, bin_width: float) -> str:
    rx_mm = [round(v * 1000.0) for v in rx.position]
    payload = {
        "version": _CACHE_FORMAT_VERSION,
        "room": [room.room_length, room.room_width, room.room_height,
                 room.rho_wall, room.rho_ceiling, room.rho_floor,
                 room.surface_element_size],
        "tx": [tx.id, list(tx.position), tx.lambertian_order],
        "rx": [rx_mm, rx.area, rx.fov_deg, rx.refractive_index, rx.optical_filter_gain],
        "max_bounces": max_bounces,
        "bin_width": bin_width.hex(),
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def cached_impulse_response(tx: TransmitterSpec, rx: ReceiverSpec, room: SceneConfig,
                            max_bounces: int, bin_width: float, cache_dir: str,
                            integrator: BounceIntegrator | None = None) -> ImpulseResponse:
    """Disk-backed impulse response. Files are written atomically so
    concurrent readers never observe partial entries."""
    key = _cache_key(tx, rx, room, max_bounces, bin_width)
    path = os.path.join(cache_dir, f"ir_{key}.npz")
    if os.path.exists(path):
        with np.load(path) as data:
            if int(data["version"][0]) == _CACHE_FORMAT_VERSION:
                return ImpulseResponse(bin_width=float(data["bin_width"][0]),
                                       t0=float(data["t0"][0]),
                                       gains=data["gains"],
                                       los_gain=float(data["los_gain"][0]))
    if integrator is None:
        integrator = _shared_integrator(room, max_bounces)
    ir = integrator.impulse_response(tx, rx, bin_width)
    os.makedirs(cache_dir, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".npz.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, version=np.array([_CACHE_FORMAT_VERSION]),
                     bin_width=np.array([ir.bin_width]), t0=np.array([ir.t0]),
                     gains=ir.gains, los_gain=np.array([ir.los_gain]))
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return ir

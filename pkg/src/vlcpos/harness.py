"""Experiment harness: sweep a receiver grid, estimate positions, write artifacts.

For every grid point the receiver listens to the four lamps in their
time-division order. Each lamp's slot carries training frames used for
channel estimation and, when the slot is long enough, one data frame
whose payload announces the lamp id and its coordinates. Estimated
gains are inverted to ranges and laterated to a position fix.

All randomness is drawn from seed sequences keyed by the run seed, the
receiver coordinates (in integer microns) and the lamp id, never by
enumeration order, so results are identical for any worker count.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import FINE_TIME_BIN, BounceIntegrator, rebin
from .led import LedModel, apply_led, clamp_count, default_led_model, drive_mapping, reference_rms
from .ofdm import OfdmConfig, demodulate, estimate_channel, modulate, receive, transmit
from .ook import OokConfig, estimate_gain_ook, transmit_ook
from .positioning import ChannelEstimate, estimate_distance, horizontal_range, laterate
from .scene import ConfigError, Scene, _check_keys, default_scene, scene_from_dict, scene_to_dict

MODULATIONS = ("ofdm", "ook")

# Data-frame payload: 8-bit lamp id, then x and y in millimetres as 16-bit fields.
_PAYLOAD_BITS = 40

# Summary probes, pulled 5 cm off the walls so they stay inside the room.
PROBE_POINTS = {"corner": (0.05, 0.05), "edge": (3.0, 0.05), "center": (3.0, 3.0)}

HISTOGRAM_BIN_M = 0.05
HISTOGRAM_MAX_M = 3.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one reproducible run depends on."""

    scene: Scene = field(default_factory=default_scene)
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    ook: OokConfig = field(default_factory=OokConfig)
    grid_step: float = 0.1
    max_bounces: int = 3
    modulations: tuple = MODULATIONS
    rng_seed: int = 1
    led_nonlinearity: bool = False
    modulation_depth: float = 0.3
    electrical_noise_rms: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "modulations", tuple(self.modulations))
        room = self.scene.room
        if not 0 < self.grid_step <= min(room.room_length, room.room_width):
            raise ConfigError("grid_step must be positive and fit in the room")
        if self.max_bounces not in (0, 1, 2, 3):
            raise ConfigError("max_bounces must be in {0, 1, 2, 3}")
        # an empty modulation set is allowed and yields empty artifacts
        for m in self.modulations:
            if m not in MODULATIONS:
                raise ConfigError(f"unknown modulation {m!r}")
        if len(set(self.modulations)) != len(self.modulations):
            raise ConfigError("duplicate modulation")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise ConfigError("rng_seed must fit in u64")
        if self.modulation_depth <= 0:
            raise ConfigError("modulation_depth must be > 0")
        if self.electrical_noise_rms < 0:
            raise ConfigError("electrical_noise_rms must be >= 0")


@dataclass(frozen=True)
class PointResult:
    modulation: str
    x_true: float
    y_true: float
    x_est: float
    y_est: float
    error_m: float
    flags: tuple = ()


@dataclass
class ErrorMap:
    """Grid sweep output: per-point results plus the probe evaluations."""

    config: ExperimentConfig
    xs: tuple
    ys: tuple
    points: list
    probes: dict

    def errors(self, modulation: str) -> np.ndarray:
        """Error magnitudes as a (len(ys), len(xs)) array."""
        sel = [p.error_m for p in self.points if p.modulation == modulation]
        if len(sel) != len(self.xs) * len(self.ys):
            raise ValueError(f"no complete grid for modulation {modulation!r}")
        return np.asarray(sel).reshape(len(self.ys), len(self.xs))

    def summary(self) -> dict:
        room = self.config.scene.room
        mods = {}
        for m in self.config.modulations:
            err = self.errors(m)
            xs = np.asarray(self.xs)
            ys = np.asarray(self.ys)
            inner = (xs[None, :] > 2.0) & (xs[None, :] < 4.0) & \
                    (ys[:, None] > 2.0) & (ys[:, None] < 4.0)
            # a very coarse grid may have no samples strictly inside the
            # LED rectangle; report null rather than a NaN
            rect = err[inner]
            mods[m] = {
                "corner_err": self.probes["corner"][m].error_m,
                "edge_err": self.probes["edge"][m].error_m,
                "center_err": self.probes["center"][m].error_m,
                "rms_rect": float(np.sqrt(np.mean(rect ** 2))) if rect.size else None,
                "rms_whole": float(np.sqrt(np.mean(err ** 2))),
                "mean_err": float(err.mean()),
                "max_err": float(err.max()),
                "n_points": int(err.size),
            }
        return {
            "schema_version": 1,
            "grid_step": self.config.grid_step,
            "max_bounces": self.config.max_bounces,
            "rng_seed": self.config.rng_seed,
            "room": [room.room_length, room.room_width],
            "anchors": [[t.position[0], t.position[1]] for t in self.config.scene.transmitters],
            "probe_points": {k: list(v) for k, v in PROBE_POINTS.items()},
            "modulations": mods,
        }


# --- configuration files ------------------------------------------------------


_SCALAR_FIELDS = ("grid_step", "max_bounces", "modulations", "rng_seed",
                  "led_nonlinearity", "modulation_depth", "electrical_noise_rms")


def experiment_to_dict(config: ExperimentConfig) -> dict:
    d = {"scene": scene_to_dict(config.scene)}
    d["ofdm"] = {"n_subcarriers": config.ofdm.n_subcarriers, "cp_length": config.ofdm.cp_length,
                 "constellation_size": config.ofdm.constellation_size,
                 "data_rate": config.ofdm.data_rate}
    d["ook"] = {"bit_rate": config.ook.bit_rate, "power_high": config.ook.power_high,
                "power_low": config.ook.power_low, "training_length": config.ook.training_length}
    for name in _SCALAR_FIELDS:
        v = getattr(config, name)
        d[name] = list(v) if isinstance(v, tuple) else v
    return d


def experiment_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("experiment config must be an object")
    _check_keys(raw, {"scene", "ofdm", "ook", *_SCALAR_FIELDS}, "experiment")
    kwargs = {}
    if "scene" in raw:
        kwargs["scene"] = scene_from_dict(raw["scene"])
    for name, cls, keys in (
        ("ofdm", OfdmConfig, {"n_subcarriers", "cp_length", "constellation_size", "data_rate"}),
        ("ook", OokConfig, {"bit_rate", "power_high", "power_low", "training_length"}),
    ):
        if name in raw:
            sub = raw[name]
            if not isinstance(sub, dict):
                raise ConfigError(f"experiment.{name} must be an object")
            _check_keys(sub, keys, f"experiment.{name}")
            try:
                kwargs[name] = cls(**sub)
            except ValueError as e:
                raise ConfigError(f"experiment.{name}: {e}") from e
    for name in _SCALAR_FIELDS:
        if name in raw:
            kwargs[name] = raw[name]
    return ExperimentConfig(**kwargs)


def load_experiment(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: not valid JSON ({e})") from e
    return experiment_from_dict(raw)


# --- single-point pipeline ------------------------------------------------------


def _coord_key(v: float) -> int:
    return int(round(v * 1e6))


def _rng_for(config: ExperimentConfig, x: float, y: float, tx_id: int, stream: int):
    seq = np.random.SeedSequence((config.rng_seed, _coord_key(x), _coord_key(y), tx_id, stream))
    return np.random.default_rng(seq)


def _through_channel(waveform, taps, noise_rms, rng):
    rx = np.convolve(waveform, taps)[: waveform.size]
    if noise_rms > 0:
        rx = rx + rng.normal(0.0, noise_rms * math.sqrt(float(np.mean(rx * rx))), rx.size)
    return rx


def _payload_bits(tx_id: int, position) -> np.ndarray:
    x_mm, y_mm = (int(round(position[i] * 1000.0)) for i in (0, 1))
    if not (0 <= tx_id < 256 and 0 <= x_mm < 65536 and 0 <= y_mm < 65536):
        raise ConfigError("lamp id or coordinates do not fit the data-frame payload")
    word = (tx_id << 32) | (x_mm << 16) | y_mm
    return np.array([(word >> k) & 1 for k in range(_PAYLOAD_BITS - 1, -1, -1)], dtype=np.uint8)


def _parse_payload(bits) -> tuple:
    word = 0
    for b in bits[:_PAYLOAD_BITS]:
        word = (word << 1) | int(b)
    return word >> 32, ((word >> 16) & 0xFFFF) / 1000.0, (word & 0xFFFF) / 1000.0


def _eval_ofdm(config, irs, x, y, led: LedModel | None, frames):
    scene = config.scene
    cfg = config.ofdm
    n_train = max(1, scene.tdm.frames_per_slot - 1)
    want_data = scene.tdm.frames_per_slot >= 2 and cfg.bits_per_frame >= _PAYLOAD_BITS
    estimates, flags = [], set()
    for tx_id in scene.tdm.order:
        tx = scene.transmitter(tx_id)
        ir = irs[tx_id]
        taps = rebin(ir, cfg.sample_period).gains
        if ir.los_gain <= 0:
            flags.add(f"outside_fov:{tx_id}")
        rng = _rng_for(config, x, y, tx_id, 0)

        def send(bits):
            frame = transmit(modulate(bits, cfg), cfg)
            if led is None:
                wave, alpha = frame.clipped, 1.0
            else:
                drive = drive_mapping(frame.clipped, led, config.modulation_depth)
                wave = apply_led(led, drive)
                alpha = (config.modulation_depth / reference_rms(frame.clipped)
                         * led.small_signal_gain())
                if clamp_count(led, drive):
                    flags.add(f"led_clamped:{tx_id}")
            received = _through_channel(wave, taps, config.electrical_noise_rms, rng)
            if frames is not None:
                frames.append(("ofdm", tx_id, len(frames), wave, received))
            return frame, received, alpha

        g_sum = np.zeros(cfg.n_data, dtype=complex)
        pbar = 0.0
        for _ in range(n_train):
            frame, received, alpha = send(rng.integers(0, 2, cfg.bits_per_frame))
            g, pb = estimate_channel(frame.symbols, receive(received, cfg) / alpha, cfg)
            g_sum += g
            pbar += pb
        gains = g_sum / n_train
        pbar /= n_train
        if pbar <= 0:
            flags.add(f"no_signal:{tx_id}")
            continue

        anchor = (tx.position[0], tx.position[1])
        if want_data:
            filler = rng.integers(0, 2, cfg.bits_per_frame - _PAYLOAD_BITS)
            bits = np.concatenate([_payload_bits(tx.id, tx.position), filler])
            _, received, alpha = send(bits)
            try:
                rx_syms = receive(received, cfg, eq=gains * alpha)
            except ValueError:
                flags.add(f"undecodable:{tx_id}")
            else:
                got_id, ax, ay = _parse_payload(demodulate(rx_syms, cfg))
                if got_id == tx.id:
                    anchor = (ax, ay)
                else:
                    flags.add(f"id_mismatch:{tx_id}")
        estimates.append(ChannelEstimate(tx_id=tx.id, tx_coords=anchor, p_bar=pbar))
    return estimates, flags


def _eval_ook(config, irs, x, y, frames):
    scene = config.scene
    cfg = config.ook
    estimates, flags = [], set()
    for tx_id in scene.tdm.order:
        tx = scene.transmitter(tx_id)
        ir = irs[tx_id]
        taps = rebin(ir, cfg.sample_period).gains
        if ir.los_gain <= 0:
            flags.add(f"outside_fov:{tx_id}")
        rng = _rng_for(config, x, y, tx_id, 1)
        tx_wave = transmit_ook(rng.integers(0, 2, cfg.training_length), cfg)
        rx_wave = _through_channel(tx_wave, taps, config.electrical_noise_rms, rng)
        if frames is not None:
            frames.append(("ook", tx_id, len(frames), tx_wave, rx_wave))
        # skip the convolution warm-up so the ratio sees steady state only
        skip = taps.size - 1
        gain = estimate_gain_ook(tx_wave[skip:], rx_wave[skip:])
        if gain <= 0:
            flags.add(f"no_signal:{tx_id}")
            continue
        estimates.append(ChannelEstimate(tx_id=tx.id, p_bar=gain,
                                         tx_coords=(tx.position[0], tx.position[1])))
    return estimates, flags


def _fix_position(config, estimates, flags, rx, x, y, modulation) -> PointResult:
    scene = config.scene
    anchors, ranges, ids = [], [], []
    for est in estimates:
        tx = scene.transmitter(est.tx_id)
        d, outside = estimate_distance(est.p_bar, tx, rx)
        if outside:
            flags.add(f"range_outside_fov:{est.tx_id}")
        r, clamped = horizontal_range(d, tx.position[2] - rx.position[2])
        if clamped:
            flags.add(f"clamped_range:{est.tx_id}")
        anchors.append(est.tx_coords)
        ranges.append(r)
        ids.append(est.tx_id)
    try:
        pos = laterate(anchors, ranges, ids)
    except ValueError:
        flags.add("lateration_failed")
        nan = float("nan")
        return PointResult(modulation=modulation, x_true=x, y_true=y,
                           x_est=nan, y_est=nan, error_m=nan, flags=tuple(sorted(flags)))
    return PointResult(modulation=modulation, x_true=x, y_true=y,
                       x_est=pos.x, y_est=pos.y,
                       error_m=math.hypot(pos.x - x, pos.y - y),
                       flags=tuple(sorted(flags)))


def run_point(config: ExperimentConfig, x: float, y: float,
              integrator: BounceIntegrator | None = None,
              collect_frames: bool = False):
    """Evaluate every configured modulation at one receiver position.

    Returns a list of PointResult, or (results, frames) when
    collect_frames is set; frames are (modulation, lamp, index, tx, rx)
    waveform tuples.
    """
    if integrator is None:
        integrator = BounceIntegrator(config.scene.room, config.max_bounces)
    rx = config.scene.receiver.at(x, y)
    irs = {tx.id: integrator.impulse_response(tx, rx, bin_width=FINE_TIME_BIN)
           for tx in config.scene.transmitters}
    led = default_led_model() if config.led_nonlinearity else None
    frames = [] if collect_frames else None
    results = []
    for modulation in config.modulations:
        if modulation == "ofdm":
            est, flags = _eval_ofdm(config, irs, x, y, led, frames)
        else:
            est, flags = _eval_ook(config, irs, x, y, frames)
        results.append(_fix_position(config, est, flags, rx, x, y, modulation))
    return (results, frames) if collect_frames else results


# --- grid sweep -----------------------------------------------------------------


def _axis(length: float, step: float) -> tuple:
    n = int(math.floor(length / step + 1e-9))
    return tuple(round(i * step, 9) for i in range(n + 1))


_WORKER: tuple | None = None


def _init_worker(config: ExperimentConfig):
    global _WORKER
    integ = BounceIntegrator(config.scene.room, config.max_bounces)
    integ.prime(config.scene.transmitters)
    _WORKER = (config, integ)


def _eval_row(args):
    y, xs = args
    config, integ = _WORKER
    out = []
    for x in xs:
        out.extend(run_point(config, x, y, integrator=integ))
    return out


def run_grid(config: ExperimentConfig, workers: int = 1) -> ErrorMap:
    """Sweep the receiver over the whole floor and evaluate the probes."""
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    room = config.scene.room
    xs = _axis(room.room_length, config.grid_step)
    ys = _axis(room.room_width, config.grid_step)

    integ = BounceIntegrator(room, config.max_bounces)
    integ.prime(config.scene.transmitters)

    rows: list
    if workers == 1 or not config.modulations:
        rows = [_eval_row_inline(config, integ, y, xs) for y in ys]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(config,)) as pool:
            rows = list(pool.map(_eval_row, [(y, xs) for y in ys]))

    by_mod = {m: [] for m in config.modulations}
    for row in rows:
        for pr in row:
            by_mod[pr.modulation].append(pr)
    points = [pr for m in config.modulations for pr in by_mod[m]]

    probes = {}
    for name, (px, py) in PROBE_POINTS.items():
        probes[name] = {pr.modulation: pr for pr in run_point(config, px, py, integrator=integ)}
    return ErrorMap(config=config, xs=xs, ys=ys, points=points, probes=probes)


def _eval_row_inline(config, integ, y, xs):
    out = []
    for x in xs:
        out.extend(run_point(config, x, y, integrator=integ))
    return out


# --- artifacts --------------------------------------------------------------------


def emit_results(emap: ErrorMap, out_dir: str) -> dict:
    """Write results.csv, histogram.csv and summary.json; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "results": os.path.join(out_dir, "results.csv"),
        "histogram": os.path.join(out_dir, "histogram.csv"),
        "summary": os.path.join(out_dir, "summary.json"),
    }

    with open(paths["results"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write("modulation,x_true,y_true,x_est,y_est,error_m,flags\n")
        for p in emap.points:
            fh.write(f"{p.modulation},{p.x_true:.4f},{p.y_true:.4f},"
                     f"{p.x_est:.9e},{p.y_est:.9e},{p.error_m:.9e},"
                     f"{'|'.join(p.flags)}\n")

    edges = np.round(np.arange(0.0, HISTOGRAM_MAX_M + HISTOGRAM_BIN_M / 2, HISTOGRAM_BIN_M), 9)
    with open(paths["histogram"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write("modulation,bin_lo_m,bin_hi_m,count\n")
        for m in emap.config.modulations:
            err = emap.errors(m).ravel()
            counts, _ = np.histogram(err, bins=edges)
            for lo, hi, c in zip(edges[:-1], edges[1:], counts):
                fh.write(f"{m},{lo:.2f},{hi:.2f},{int(c)}\n")
            fh.write(f"{m},{HISTOGRAM_MAX_M:.2f},inf,{int(np.sum(err >= HISTOGRAM_MAX_M))}\n")

    with open(paths["summary"], "w", encoding="utf-8", newline="\n") as fh:
        json.dump(emap.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


def dump_probe_frames(config: ExperimentConfig, out_dir: str,
                      integrator: BounceIntegrator | None = None) -> list:
    """Save the probe-point modem waveforms for offline inspection."""
    os.makedirs(out_dir, exist_ok=True)
    if integrator is None:
        integrator = BounceIntegrator(config.scene.room, config.max_bounces)
    written = []
    for name, (px, py) in PROBE_POINTS.items():
        _, frames = run_point(config, px, py, integrator=integrator, collect_frames=True)
        arrays = {}
        for modulation, tx_id, idx, tx_wave, rx_wave in frames:
            arrays[f"{modulation}_tx{tx_id}_{idx}_sent"] = tx_wave
            arrays[f"{modulation}_tx{tx_id}_{idx}_received"] = rx_wave
        path = os.path.join(out_dir, f"frames_{name}.npz")
        np.savez(path, **arrays)
        written.append(path)
    return written

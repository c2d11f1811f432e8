"""Room geometry, transmitters, receiver and the TDM schedule.

Everything in here is immutable after construction and safe to share
across worker processes. The JSON config schema mirrors the dataclass
fields one-to-one; unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields


class ConfigError(ValueError):
    """Raised for invalid or malformed scene/experiment configuration."""


@dataclass(frozen=True)
class SceneConfig:
    """Room box, surface reflectivities and the reflector discretization pitch."""

    room_length: float = 6.0
    room_width: float = 6.0
    room_height: float = 3.5
    rho_wall: float = 0.66
    rho_ceiling: float = 0.35
    rho_floor: float = 0.60
    surface_element_size: float = 0.1

    def __post_init__(self):
        for name in ("room_length", "room_width", "room_height", "surface_element_size"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("rho_wall", "rho_ceiling", "rho_floor"):
            rho = getattr(self, name)
            if not 0.0 <= rho <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {rho}")
        if self.surface_element_size > min(self.room_length, self.room_width, self.room_height):
            raise ConfigError("surface_element_size exceeds a room dimension")


@dataclass(frozen=True)
class TransmitterSpec:
    """One ceiling LED. Orientation is fixed straight down (elevation -90)."""

    id: int
    position: tuple[float, float, float]
    lambertian_order: float = 1.0
    power_high: float = 5.0
    power_low: float = 3.0
    elevation_deg: float = -90.0
    azimuth_deg: float = 0.0
    wavelength_nm: float = 420.0  # metadata only, propagation is wavelength-blind

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        if len(self.position) != 3:
            raise ConfigError("transmitter position must be (x, y, z)")
        if self.lambertian_order < 1.0:
            raise ConfigError("lambertian_order must be >= 1")
        if not self.power_high > self.power_low > 0.0:
            raise ConfigError("require power_high > power_low > 0")
        if self.elevation_deg != -90.0 or self.azimuth_deg != 0.0:
            raise ConfigError("tilted transmitters are not supported (elevation -90, azimuth 0)")


@dataclass(frozen=True)
class ReceiverSpec:
    """Upward-facing photodiode with a compound parabolic concentrator."""

    position: tuple[float, float, float] = (3.0, 3.0, 1.2)
    area: float = 1e-4
    fov_deg: float = 70.0
    refractive_index: float = 1.5
    optical_filter_gain: float = 1.0
    elevation_deg: float = 90.0
    azimuth_deg: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        if len(self.position) != 3:
            raise ConfigError("receiver position must be (x, y, z)")
        if self.area <= 0:
            raise ConfigError("receiver area must be > 0")
        if not 0.0 < self.fov_deg <= 90.0:
            raise ConfigError("fov_deg must lie in (0, 90]")
        if self.refractive_index < 1.0:
            raise ConfigError("refractive_index must be >= 1")
        if self.optical_filter_gain <= 0:
            raise ConfigError("optical_filter_gain must be > 0")
        if self.elevation_deg != 90.0 or self.azimuth_deg != 0.0:
            raise ConfigError("tilted receivers are not supported (elevation +90, azimuth 0)")

    def at(self, x: float, y: float) -> "ReceiverSpec":
        """Same receiver moved to horizontal position (x, y)."""
        return ReceiverSpec(
            position=(x, y, self.position[2]),
            area=self.area,
            fov_deg=self.fov_deg,
            refractive_index=self.refractive_index,
            optical_filter_gain=self.optical_filter_gain,
        )


@dataclass(frozen=True)
class TdmSchedule:
    """Transmission order for the LEDs; one LED owns the medium per slot."""

    order: tuple[int, ...] = (1, 2, 3, 4)
    frames_per_slot: int = 2  # training frame + data frame

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(v) for v in self.order))
        if len(set(self.order)) != len(self.order):
            raise ConfigError("TDM order must list each transmitter exactly once")
        if self.frames_per_slot < 1:
            raise ConfigError("frames_per_slot must be >= 1")


@dataclass(frozen=True)
class Scene:
    """Complete static description of the optical setup."""

    room: SceneConfig = field(default_factory=SceneConfig)
    transmitters: tuple[TransmitterSpec, ...] = ()
    receiver: ReceiverSpec = field(default_factory=ReceiverSpec)
    tdm: TdmSchedule = field(default_factory=TdmSchedule)

    def __post_init__(self):
        object.__setattr__(self, "transmitters", tuple(self.transmitters))
        ids = [tx.id for tx in self.transmitters]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate transmitter ids")
        if set(self.tdm.order) != set(ids):
            raise ConfigError("TDM order must cover exactly the scene transmitters")
        for tx in self.transmitters:
            x, y, z = tx.position
            if not (0 <= x <= self.room.room_length and 0 <= y <= self.room.room_width
                    and 0 < z <= self.room.room_height):
                raise ConfigError(f"transmitter {tx.id} lies outside the room")
            if z <= self.receiver.position[2]:
                raise ConfigError(f"transmitter {tx.id} is not above the receiver plane")

    def transmitter(self, tx_id: int) -> TransmitterSpec:
        for tx in self.transmitters:
            if tx.id == tx_id:
                return tx
        raise KeyError(f"no transmitter with id {tx_id}")


@dataclass(frozen=True)
class LinkGeometry:
    distance: float
    cos_phi: float
    cos_psi: float


def link_geometry(tx: TransmitterSpec, rx: ReceiverSpec) -> LinkGeometry:
    """Distance and irradiance/incidence cosines for one down-facing LED to
    an up-facing receiver. With both axes vertical the two cosines coincide
    and equal (H - h) / d."""
    dx = tx.position[0] - rx.position[0]
    dy = tx.position[1] - rx.position[1]
    dz = tx.position[2] - rx.position[2]
    if dz <= 0:
        raise ConfigError("transmitter must be above the receiver")
    d = math.sqrt(dx * dx + dy * dy + dz * dz)
    if d == 0.0:
        raise ConfigError("coincident endpoints")
    c = min(dz / d, 1.0)
    return LinkGeometry(distance=d, cos_phi=c, cos_psi=c)


def default_scene() -> Scene:
    """Reference setup: 6 x 6 x 3.5 m room, four 5/3 W LEDs at 3.3 m on a
    2 m square, receiver at 1.2 m."""
    txs = tuple(
        TransmitterSpec(id=k + 1, position=(x, y, 3.3))
        for k, (x, y) in enumerate([(2.0, 2.0), (2.0, 4.0), (4.0, 2.0), (4.0, 4.0)])
    )
    return Scene(transmitters=txs)


# --- JSON serialization -----------------------------------------------------
#
# The tree round-trips bit-exactly: floats are emitted with repr (shortest
# form that parses back to the same double).

def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _from_fields(cls, obj: dict, where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    names = {f.name for f in fields(cls)}
    _check_keys(obj, names, where)
    try:
        return cls(**obj)
    except TypeError as exc:
        raise ConfigError(f"bad {where}: {exc}") from None


def scene_to_dict(scene: Scene) -> dict:
    def plain(dc):
        return {f.name: getattr(dc, f.name) for f in fields(dc)}

    out = {
        "room": plain(scene.room),
        "transmitters": [dict(plain(tx), position=list(tx.position)) for tx in scene.transmitters],
        "receiver": dict(plain(scene.receiver), position=list(scene.receiver.position)),
        "tdm": dict(plain(scene.tdm), order=list(scene.tdm.order)),
    }
    return out


def scene_from_dict(obj: dict) -> Scene:
    if not isinstance(obj, dict):
        raise ConfigError("scene must be an object")
    _check_keys(obj, {"room", "transmitters", "receiver", "tdm"}, "scene")
    room = _from_fields(SceneConfig, obj.get("room", {}), "scene.room")
    txs_raw = obj.get("transmitters", [])
    if not isinstance(txs_raw, list):
        raise ConfigError("scene.transmitters must be a list")
    for i, t in enumerate(txs_raw):
        if not isinstance(t, dict):
            raise ConfigError(f"scene.transmitters[{i}] must be an object")
    txs = tuple(
        _from_fields(TransmitterSpec, dict(t, position=tuple(t.get("position", ()))), f"scene.transmitters[{i}]")
        for i, t in enumerate(txs_raw)
    )
    rx_raw = obj.get("receiver", {})
    if not isinstance(rx_raw, dict):
        raise ConfigError("scene.receiver must be an object")
    rx = _from_fields(ReceiverSpec, dict(rx_raw, position=tuple(rx_raw.get("position", (3.0, 3.0, 1.2)))),
                      "scene.receiver")
    tdm_raw = obj.get("tdm", {})
    if not isinstance(tdm_raw, dict):
        raise ConfigError("scene.tdm must be an object")
    tdm = _from_fields(TdmSchedule, dict(tdm_raw, order=tuple(tdm_raw.get("order", (1, 2, 3, 4)))),
                       "scene.tdm")
    return Scene(room=room, transmitters=txs, receiver=rx, tdm=tdm)


def dumps_scene(scene: Scene) -> str:
    return json.dumps(scene_to_dict(scene), indent=2, sort_keys=True)


def loads_scene(text: str) -> Scene:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return scene_from_dict(obj)

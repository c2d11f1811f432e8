"""Desk-scale simulator of an indoor visible-light positioning system.

Ceiling LEDs transmit ACO-OFDM (or OOK) frames through a multipath
Lambertian room channel; the receiver estimates per-LED channel DC
gains, inverts them to distances and solves its own coordinates by
linear least-squares lateration.
"""

from .scene import (
    ConfigError,
    LinkGeometry,
    ReceiverSpec,
    Scene,
    SceneConfig,
    TdmSchedule,
    TransmitterSpec,
    default_scene,
    link_geometry,
)
from .channel import (
    BounceIntegrator,
    ImpulseResponse,
    channel_dc_gain,
    concentrator_gain,
    impulse_response,
    lambertian_order,
    los_dc_gain,
    rebin,
)
from .led import (
    LedModel,
    apply_led,
    clamp_count,
    default_led_model,
    drive_mapping,
    identity_led_model,
    reference_rms,
)
from .ofdm import (
    OfdmConfig,
    OfdmFrame,
    demodulate,
    estimate_channel,
    map_subcarriers,
    modulate,
    receive,
    transmit,
)
from .ook import OokConfig, estimate_gain_ook, transmit_ook
from .positioning import (
    ChannelEstimate,
    PositionEstimate,
    estimate_distance,
    horizontal_range,
    laterate,
)
from .harness import ExperimentConfig, ErrorMap, emit_results, run_grid, run_point

__version__ = "0.1.0"

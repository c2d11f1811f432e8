import dataclasses
import math

import numpy as np
import pytest

from vlcpos.channel import (
    DEFAULT_BIN_WIDTH,
    FINE_TIME_BIN,
    SPEED_OF_LIGHT,
    BounceIntegrator,
    ImpulseResponse,
    cached_impulse_response,
    channel_dc_gain,
    concentrator_gain,
    impulse_response,
    lambertian_order,
    los_dc_gain,
    rebin,
)
from vlcpos.scene import ReceiverSpec, SceneConfig, TransmitterSpec, default_scene


def deg(v):
    return math.radians(v)


# --- closed-form pieces -------------------------------------------------------


def test_concentrator_gain_examples():
    assert concentrator_gain(deg(80), deg(70), 1.5) == 0.0
    assert concentrator_gain(0.0, deg(90), 1.0) == pytest.approx(1.0, rel=1e-12)
    assert concentrator_gain(deg(30), deg(70), 1.5) == pytest.approx(2.5481, abs=1e-4)


def test_concentrator_gain_domain():
    with pytest.raises(ValueError):
        concentrator_gain(deg(10), 0.0, 1.5)
    with pytest.raises(ValueError):
        concentrator_gain(-0.1, deg(70), 1.5)
    with pytest.raises(ValueError):
        concentrator_gain(deg(91), deg(70), 1.5)


def test_lambertian_order_examples():
    assert lambertian_order(60.0) == pytest.approx(1.0, rel=1e-12)
    assert lambertian_order(45.0) == pytest.approx(math.log(2) / -math.log(math.cos(deg(45))),
                                                   rel=1e-12)
    angles = np.linspace(10, 80, 15)
    orders = [lambertian_order(a) for a in angles]
    assert np.all(np.diff(orders) < 0)
    with pytest.raises(ValueError):
        lambertian_order(90.0)


def test_los_dc_gain_beneath_lamp():
    tx = TransmitterSpec(id=1, position=(2.0, 2.0, 3.3))
    rx = ReceiverSpec(position=(2.0, 2.0, 1.2))
    g = 1.5 ** 2 / math.sin(deg(70)) ** 2
    expect = 2.0 * 1e-4 * g / (2.0 * math.pi * 2.1 ** 2)
    assert los_dc_gain(tx, rx) == pytest.approx(expect, rel=1e-12)
    assert los_dc_gain(tx, rx) == pytest.approx(1.839e-5, abs=2e-8)


def test_los_dc_gain_outside_fov_is_zero():
    tx = TransmitterSpec(id=1, position=(2.0, 2.0, 3.3))
    # incidence angle ~78 deg here, past the 70 deg field of view
    rx = ReceiverSpec(position=(2.0 + 10.0, 2.0, 1.2))
    assert los_dc_gain(tx, rx) == 0.0


def test_los_dc_gain_inverse_square():
    rx = ReceiverSpec(position=(2.0, 2.0, 1.2))
    near = TransmitterSpec(id=1, position=(2.0, 2.0, 1.2 + 2.1))
    far = TransmitterSpec(id=1, position=(2.0, 2.0, 1.2 + 4.2))
    assert los_dc_gain(near, rx) == pytest.approx(4.0 * los_dc_gain(far, rx), rel=1e-12)


# --- impulse responses ----------------------------------------------------------


def test_los_only_reduction(scene):
    tx = scene.transmitter(1)
    rx = scene.receiver.at(2.5, 2.1)
    ir = impulse_response(tx, rx, scene.room, max_bounces=0)
    assert ir.los_gain == pytest.approx(los_dc_gain(tx, rx), rel=1e-12)
    assert np.count_nonzero(ir.gains) == 1
    assert ir.total_gain == pytest.approx(ir.los_gain, rel=1e-12)
    # the single bin sits at the line-of-sight propagation delay
    d = math.dist(tx.position, rx.position)
    j = np.nonzero(ir.gains)[0][0]
    assert abs(ir.t0 + j * ir.bin_width - d / SPEED_OF_LIGHT) <= ir.bin_width


def test_absorbing_surfaces_reduce_to_los(scene):
    room = dataclasses.replace(scene.room, rho_wall=0.0, rho_ceiling=0.0, rho_floor=0.0)
    tx = scene.transmitter(2)
    ir = impulse_response(tx, scene.receiver.at(1.0, 3.0), room, max_bounces=3)
    assert ir.total_gain == pytest.approx(ir.los_gain, rel=1e-12)


def test_corner_collects_relatively_more_diffuse_power(scene, integrator):
    def diffuse_fraction(x, y):
        ir = integrator.impulse_response(scene.transmitter(1), scene.receiver.at(x, y),
                                         bin_width=DEFAULT_BIN_WIDTH)
        return (ir.total_gain - ir.los_gain) / ir.los_gain

    assert diffuse_fraction(0.1, 0.1) > diffuse_fraction(3.0, 3.0)


def test_gains_stay_nonnegative(scene, integrator):
    for x, y in [(0.05, 0.05), (3.0, 0.05), (3.0, 3.0), (5.9, 4.2)]:
        ir = integrator.impulse_response(scene.transmitter(3), scene.receiver.at(x, y),
                                         bin_width=DEFAULT_BIN_WIDTH)
        assert np.all(ir.gains >= 0.0)
        assert ir.los_gain <= ir.total_gain + 1e-18


def test_reflectivity_monotonicity(scene):
    tx = scene.transmitter(1)
    rx = scene.receiver.at(1.0, 1.0)
    totals = []
    for rho in (0.0, 0.3, 0.66, 0.9):
        room = dataclasses.replace(scene.room, rho_wall=rho)
        totals.append(impulse_response(tx, rx, room, max_bounces=3).total_gain)
    assert np.all(np.diff(totals) > 0)


def test_convergence_under_pitch_halving(scene):
    tx = scene.transmitter(1)
    rx = scene.receiver.at(3.0, 3.0)
    total = {}
    for pitch in (0.1, 0.05):
        room = dataclasses.replace(scene.room, surface_element_size=pitch)
        total[pitch] = BounceIntegrator(room, 3).impulse_response(
            tx, rx, bin_width=DEFAULT_BIN_WIDTH).total_gain
    assert abs(total[0.05] - total[0.1]) / total[0.1] < 0.02


def test_diagonal_swap_leaves_gain_multiset(scene, integrator):
    def totals(x, y):
        rx = scene.receiver.at(x, y)
        return sorted(integrator.impulse_response(t, rx, bin_width=DEFAULT_BIN_WIDTH).total_gain
                      for t in scene.transmitters)

    for x, y in [(1.0, 2.2), (0.7, 4.9)]:
        a, b = totals(x, y), totals(y, x)
        assert a == pytest.approx(b, rel=1e-9)


def test_rebin_preserves_total_gain(scene, integrator):
    ir = integrator.impulse_response(scene.transmitter(1), scene.receiver.at(0.3, 0.4),
                                     bin_width=FINE_TIME_BIN)
    coarse = rebin(ir, DEFAULT_BIN_WIDTH)
    assert coarse.total_gain == pytest.approx(ir.total_gain, rel=1e-12)
    assert coarse.los_gain == ir.los_gain
    assert coarse.gains.size < ir.gains.size


def test_channel_dc_gain_examples():
    ir = ImpulseResponse(bin_width=1e-9, t0=0.0, gains=np.array([1e-5, 2e-6]), los_gain=1e-5)
    assert channel_dc_gain(ir) == pytest.approx(1.2e-5, rel=1e-12)
    # DC gain is the zero-frequency point of the tap transfer function
    assert channel_dc_gain(ir) == pytest.approx(np.fft.fft(ir.gains)[0].real, rel=1e-12)


def test_impulse_response_validation():
    with pytest.raises(ValueError):
        ImpulseResponse(bin_width=0.0, t0=0.0, gains=np.array([1.0]), los_gain=0.0)
    with pytest.raises(ValueError):
        ImpulseResponse(bin_width=1e-9, t0=0.0, gains=np.array([-1.0]), los_gain=0.0)
    with pytest.raises(ValueError):
        ImpulseResponse(bin_width=1e-9, t0=0.0, gains=np.array([]), los_gain=0.0)


def test_pitch_larger_than_room_rejected():
    with pytest.raises(ValueError):
        SceneConfig(surface_element_size=10.0)


# --- on-disk cache ---------------------------------------------------------------


def test_cache_roundtrip(tmp_path, scene):
    tx = scene.transmitter(1)
    rx = scene.receiver.at(2.0, 2.0)
    args = (tx, rx, scene.room, 1, DEFAULT_BIN_WIDTH, str(tmp_path))
    first = cached_impulse_response(*args)
    files = list(tmp_path.glob("ir_*.npz"))
    assert len(files) == 1
    again = cached_impulse_response(*args)
    assert again.total_gain == first.total_gain
    assert again.t0 == first.t0
    np.testing.assert_array_equal(again.gains, first.gains)


def test_cache_key_sensitivity(tmp_path, scene):
    tx = scene.transmitter(1)
    cached_impulse_response(tx, scene.receiver.at(2.0, 2.0), scene.room, 1,
                            DEFAULT_BIN_WIDTH, str(tmp_path))
    cached_impulse_response(tx, scene.receiver.at(2.0, 2.5), scene.room, 1,
                            DEFAULT_BIN_WIDTH, str(tmp_path))
    cached_impulse_response(tx, scene.receiver.at(2.0, 2.0), scene.room, 1,
                            2 * DEFAULT_BIN_WIDTH, str(tmp_path))
    assert len(list(tmp_path.glob("ir_*.npz"))) == 3

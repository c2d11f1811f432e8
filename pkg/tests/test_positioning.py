import math

import numpy as np
import pytest

from vlcpos.channel import los_dc_gain
from vlcpos.positioning import (
    ChannelEstimate,
    estimate_distance,
    horizontal_range,
    laterate,
)
from vlcpos.scene import ReceiverSpec, TransmitterSpec

ANCHORS = [(2.0, 2.0), (2.0, 4.0), (4.0, 2.0), (4.0, 4.0)]


def ranges_from(truth, anchors=ANCHORS):
    return [math.dist(truth, a) for a in anchors]


def test_channel_estimate_validation():
    est = ChannelEstimate(tx_id=1, tx_coords=(2, 2), p_bar=1e-5)
    assert est.tx_coords == (2.0, 2.0)
    with pytest.raises(ValueError):
        ChannelEstimate(tx_id=1, tx_coords=(2, 2), p_bar=0.0)
    with pytest.raises(ValueError):
        ChannelEstimate(tx_id=1, tx_coords=(2, 2, 3.3), p_bar=1e-5)


def test_distance_inversion_round_trip():
    tx = TransmitterSpec(id=1, position=(2.0, 2.0, 3.3))
    rx = ReceiverSpec(position=(2.0, 2.0, 1.2))
    d, outside = estimate_distance(los_dc_gain(tx, rx), tx, rx)
    assert d == pytest.approx(2.1, rel=1e-12)
    assert not outside
    # round trip at an oblique placement too
    rx2 = ReceiverSpec(position=(3.4, 1.1, 1.2))
    d2, outside2 = estimate_distance(los_dc_gain(tx, rx2), tx, rx2)
    assert d2 == pytest.approx(math.dist(tx.position, rx2.position), rel=1e-12)
    assert not outside2


def test_distance_power_law():
    tx = TransmitterSpec(id=1, position=(2.0, 2.0, 3.3))
    rx = ReceiverSpec(position=(2.0, 2.0, 1.2))
    p = los_dc_gain(tx, rx)
    d1, _ = estimate_distance(p, tx, rx)
    d2, _ = estimate_distance(2.0 * p, tx, rx)
    assert d2 == pytest.approx(d1 / 2.0 ** 0.25, rel=1e-12)


def test_distance_domain_and_fov_flag():
    tx = TransmitterSpec(id=1, position=(2.0, 2.0, 3.3))
    rx = ReceiverSpec(position=(2.0, 2.0, 1.2))
    with pytest.raises(ValueError):
        estimate_distance(0.0, tx, rx)
    # a tiny gain solves to a distance whose implied angle exceeds the FOV
    _, outside = estimate_distance(1e-9, tx, rx)
    assert outside


def test_horizontal_range_examples():
    r, clamped = horizontal_range(2.1, 2.1)
    assert r == 0.0 and not clamped
    r, clamped = horizontal_range(math.sqrt(2.0) * 2.1, 2.1)
    assert r == pytest.approx(2.1, rel=1e-12) and not clamped
    r, clamped = horizontal_range(2.0, 2.1)
    assert r == 0.0 and clamped
    with pytest.raises(ValueError):
        horizontal_range(-1.0, 2.1)


def test_laterate_symmetric_square():
    est = laterate(ANCHORS, [math.sqrt(2.0)] * 4)
    assert (est.x, est.y) == pytest.approx((3.0, 3.0), abs=1e-12)
    assert est.used_tx == (0, 1, 2, 3)
    assert est.residual_norm == pytest.approx(0.0, abs=1e-18)


def test_laterate_exact_recovery():
    truth = (2.5, 3.7)
    est = laterate(ANCHORS, ranges_from(truth), ids=(1, 2, 3, 4))
    assert math.hypot(est.x - truth[0], est.y - truth[1]) < 1e-9
    assert est.used_tx == (1, 2, 3, 4)


def test_laterate_translation_equivariance():
    truth = (1.1, 0.7)
    base = laterate(ANCHORS, ranges_from(truth))
    for dx, dy in [(0.5, -0.25), (10.0, 3.0)]:
        moved = [(a[0] + dx, a[1] + dy) for a in ANCHORS]
        est = laterate(moved, ranges_from((truth[0] + dx, truth[1] + dy), moved))
        assert est.x == pytest.approx(base.x + dx, abs=1e-9)
        assert est.y == pytest.approx(base.y + dy, abs=1e-9)


def test_laterate_reference_anchor_invariance():
    truth = (4.2, 2.9)
    r = ranges_from(truth)
    base = laterate(ANCHORS, r)
    for shift in (1, 2, 3):
        rolled = ANCHORS[shift:] + ANCHORS[:shift]
        est = laterate(rolled, r[shift:] + r[:shift])
        assert math.hypot(est.x - base.x, est.y - base.y) < 1e-9


def test_laterate_matches_normal_equations():
    rng = np.random.default_rng(17)
    for _ in range(200):
        anchors = rng.uniform(0.0, 6.0, (4, 2))
        truth = rng.uniform(0.5, 5.5, 2)
        r = np.hypot(*(anchors - truth).T) * (1.0 + rng.uniform(-0.1, 0.1, 4))
        a = 2.0 * (anchors[1:] - anchors[0])
        if np.linalg.matrix_rank(a) < 2:
            continue
        b = (r[0] ** 2 - r[1:] ** 2
             + np.sum(anchors[1:] ** 2, axis=1) - np.sum(anchors[0] ** 2))
        m = a.T @ a
        inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) \
            / (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
        expect = inv @ (a.T @ b)
        est = laterate(anchors, r)
        assert math.hypot(est.x - expect[0], est.y - expect[1]) < 1e-9
        assert est.residual_norm == pytest.approx(float(np.sum((a @ expect - b) ** 2)),
                                                  rel=1e-6, abs=1e-18)


def test_laterate_perturbed_matches_grid_minimizer():
    truth = np.array([2.5, 3.7])
    anchors = np.asarray(ANCHORS)
    r = np.hypot(*(anchors - truth).T) * 1.05
    est = laterate(anchors, r)

    # brute-force the linearized objective on a 1 mm grid around truth
    a = 2.0 * (anchors[1:] - anchors[0])
    b = (r[0] ** 2 - r[1:] ** 2
         + np.sum(anchors[1:] ** 2, axis=1) - np.sum(anchors[0] ** 2))
    gx = np.arange(truth[0] - 0.3, truth[0] + 0.3, 1e-3)
    gy = np.arange(truth[1] - 0.3, truth[1] + 0.3, 1e-3)
    pts = np.stack(np.meshgrid(gx, gy, indexing="ij"), axis=-1).reshape(-1, 2)
    best = pts[np.argmin(np.sum((pts @ a.T - b) ** 2, axis=1))]
    assert math.hypot(est.x - best[0], est.y - best[1]) < 1.5e-3


def test_laterate_degenerate_and_invalid_inputs():
    with pytest.raises(ValueError, match="degenerate anchor geometry"):
        laterate([(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 4.0)], [1.0, 1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        laterate(ANCHORS[:2], [1.0, 1.0])
    with pytest.raises(ValueError):
        laterate(ANCHORS, [1.0, 1.0, 1.0, -1.0])
    with pytest.raises(ValueError):
        laterate(ANCHORS, [1.0, 1.0, 1.0, 1.0], ids=(1, 2))

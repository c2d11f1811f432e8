import dataclasses
import json

import numpy as np
import pytest

from vlcpos.cli import main
from vlcpos.harness import (
    ExperimentConfig,
    PROBE_POINTS,
    _parse_payload,
    _payload_bits,
    emit_results,
    experiment_from_dict,
    experiment_to_dict,
    load_experiment,
    run_grid,
    run_point,
)
from vlcpos.scene import ConfigError, default_scene


def los_config(**overrides):
    """Default experiment with absorbing walls: fast and analytically exact."""
    scene = default_scene()
    room = dataclasses.replace(scene.room, rho_wall=0.0, rho_ceiling=0.0, rho_floor=0.0)
    cfg = ExperimentConfig(scene=dataclasses.replace(scene, room=room))
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(grid_step=0.0)
    with pytest.raises(ConfigError):
        ExperimentConfig(max_bounces=4)
    with pytest.raises(ConfigError):
        ExperimentConfig(modulations=("fm",))
    with pytest.raises(ConfigError):
        ExperimentConfig(modulations=("ofdm", "ofdm"))
    ExperimentConfig(modulations=())  # an empty set is allowed


def test_config_dict_roundtrip():
    cfg = ExperimentConfig(grid_step=0.5, rng_seed=99, modulations=("ook",))
    assert experiment_from_dict(experiment_to_dict(cfg)) == cfg


def test_config_file_roundtrip(tmp_path):
    cfg = ExperimentConfig(max_bounces=2, led_nonlinearity=True)
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(experiment_to_dict(cfg)))
    assert load_experiment(str(path)) == cfg


def test_config_rejects_unknown_keys(tmp_path):
    raw = experiment_to_dict(ExperimentConfig())
    raw["grid_stepp"] = 0.1
    with pytest.raises(ConfigError, match="grid_stepp"):
        experiment_from_dict(raw)
    raw = experiment_to_dict(ExperimentConfig())
    raw["ofdm"]["qam"] = 32
    with pytest.raises(ConfigError, match="qam"):
        experiment_from_dict(raw)
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_experiment(str(path))


def test_payload_roundtrip():
    scene = default_scene()
    for tx in scene.transmitters:
        bits = _payload_bits(tx.id, tx.position)
        got_id, x, y = _parse_payload(bits)
        assert got_id == tx.id
        assert (x, y) == (tx.position[0], tx.position[1])


def test_point_los_recovers_truth_and_decodes_anchors():
    cfg = los_config(modulations=("ofdm",))
    results = run_point(cfg, 2.2, 4.4)
    assert len(results) == 1
    pr = results[0]
    assert pr.error_m < 1e-6
    assert pr.flags == ()


def test_center_point_ofdm_not_worse_than_ook(integrator):
    results = {r.modulation: r for r in
               run_point(ExperimentConfig(), 3.0, 3.0, integrator=integrator)}
    assert results["ofdm"].error_m <= results["ook"].error_m


def test_grid_shape_and_row_count(tmp_path):
    cfg = los_config(grid_step=2.0)
    emap = run_grid(cfg)
    assert emap.xs == (0.0, 2.0, 4.0, 6.0)
    assert emap.ys == (0.0, 2.0, 4.0, 6.0)
    assert len(emap.points) == 2 * 4 * 4
    paths = emit_results(emap, str(tmp_path))
    lines = open(paths["results"]).read().splitlines()
    assert lines[0] == "modulation,x_true,y_true,x_est,y_est,error_m,flags"
    assert len(lines) == 1 + 2 * 4 * 4


def test_histogram_counts_cover_every_point(tmp_path):
    emap = run_grid(los_config(grid_step=1.5))
    paths = emit_results(emap, str(tmp_path))
    rows = [ln.split(",") for ln in open(paths["histogram"]).read().splitlines()[1:]]
    for m in ("ofdm", "ook"):
        total = sum(int(r[3]) for r in rows if r[0] == m)
        assert total == len(emap.xs) * len(emap.ys)
    assert {r[2] for r in rows} >= {"inf"}  # overflow bin present


def test_summary_contents(tmp_path):
    emap = run_grid(los_config(grid_step=1.5))
    s = emap.summary()
    assert s["probe_points"] == {k: list(v) for k, v in PROBE_POINTS.items()}
    assert s["anchors"] == [[2.0, 2.0], [2.0, 4.0], [4.0, 2.0], [4.0, 4.0]]
    for m in ("ofdm", "ook"):
        row = s["modulations"][m]
        assert set(row) == {"corner_err", "edge_err", "center_err", "rms_rect",
                            "rms_whole", "mean_err", "max_err", "n_points"}
        assert row["n_points"] == 25


def test_empty_modulation_set_yields_empty_artifacts(tmp_path):
    emap = run_grid(los_config(grid_step=3.0, modulations=()))
    paths = emit_results(emap, str(tmp_path))
    assert open(paths["results"]).read().splitlines() == \
        ["modulation,x_true,y_true,x_est,y_est,error_m,flags"]
    assert open(paths["histogram"]).read().splitlines() == \
        ["modulation,bin_lo_m,bin_hi_m,count"]
    assert json.load(open(paths["summary"]))["modulations"] == {}


def test_rerun_is_byte_identical(tmp_path):
    cfg = los_config(grid_step=1.5)
    a = emit_results(run_grid(cfg), str(tmp_path / "a"))
    b = emit_results(run_grid(cfg), str(tmp_path / "b"))
    for k in a:
        assert open(a[k], "rb").read() == open(b[k], "rb").read()


def test_worker_count_does_not_change_bytes(tmp_path):
    cfg = los_config(grid_step=1.5)
    a = emit_results(run_grid(cfg, workers=1), str(tmp_path / "w1"))
    b = emit_results(run_grid(cfg, workers=2), str(tmp_path / "w2"))
    for k in a:
        assert open(a[k], "rb").read() == open(b[k], "rb").read()


def test_los_error_field_is_symmetric():
    emap = run_grid(los_config(grid_step=1.0, modulations=("ofdm",)))
    err = emap.errors("ofdm")
    np.testing.assert_allclose(err, err[:, ::-1], atol=1e-6)
    np.testing.assert_allclose(err, err[::-1, :], atol=1e-6)


def test_cli_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "--out", str(out), "--grid-step", "2.0", "--bounces", "0",
                 "--dump-frames"])
    assert code == 0
    for name in ("results.csv", "histogram.csv", "summary.json"):
        assert (out / name).exists()
    for probe in PROBE_POINTS:
        assert (out / "frames" / f"frames_{probe}.npz").exists()
    printed = capsys.readouterr().out
    assert "ofdm:" in printed and "ook:" in printed


def test_cli_modulation_filter(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--out", str(out), "--grid-step", "3.0", "--bounces", "0",
                 "--modulation", "ook"]) == 0
    body = open(out / "results.csv").read()
    assert "ofdm" not in body and "ook" in body


def test_cli_rejects_bad_config(tmp_path, capsys):
    bad = tmp_path / "exp.json"
    bad.write_text('{"grid_stepp": 0.1}')
    code = main(["run", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "error:" in capsys.readouterr().err

import json
import sys

import numpy as np
import pytest
import yaml

from trajbench import ConfigError, StageError, constant_velocity_dataset, load_config, run_experiment
from trajbench.cli import main as cli_main

from conftest import ADAPTER, arc_dataset, write_config


def linear_config(tmp_path, **overrides):
    dataset = constant_velocity_dataset(n_agents=4, n_frames=80, seed=2)
    return write_config(tmp_path, dataset, **overrides)


# ---------------------------------------------------------------------------
# config parsing


def test_unknown_keys_are_errors(tmp_path):
    path = linear_config(tmp_path)
    raw = yaml.safe_load(path.read_text())
    raw["scneario"] = {"stride": 2}  # typo'd section
    path.write_text(yaml.safe_dump(raw))
    with pytest.raises(ConfigError, match="unknown keys"):
        load_config(path)


def test_unknown_nested_keys_are_errors(tmp_path):
    path = linear_config(tmp_path)
    raw = yaml.safe_load(path.read_text())
    raw["preprocess"]["smooting_window"] = 3
    path.write_text(yaml.safe_dump(raw))
    with pytest.raises(ConfigError, match="unknown keys in preprocess"):
        load_config(path)


def test_missing_dataset_file_fails_at_load(tmp_path):
    path = linear_config(tmp_path)
    raw = yaml.safe_load(path.read_text())
    raw["dataset"]["path"] = str(tmp_path / "gone.txt")
    path.write_text(yaml.safe_dump(raw))
    with pytest.raises(ConfigError, match="not found"):
        load_config(path)


def test_config_version_checked(tmp_path):
    path = linear_config(tmp_path)
    raw = yaml.safe_load(path.read_text())
    raw["version"] = 2
    path.write_text(yaml.safe_dump(raw))
    with pytest.raises(ConfigError, match="version"):
        load_config(path)


def test_eth_preset(tmp_path):
    path = linear_config(tmp_path)
    raw = yaml.safe_load(path.read_text())
    raw["scenario"] = {"preset": "eth"}
    path.write_text(yaml.safe_dump(raw))
    config = load_config(path)
    assert config.spec.observation_frames == 6
    assert config.spec.prediction_frames == 10


# ---------------------------------------------------------------------------
# single runs


def test_cvm_zero_error_on_linear_data(tmp_path):
    config = load_config(linear_config(tmp_path))
    report = run_experiment(config)
    assert report.row("ade").mean <= 1e-9
    assert report.row("fde").mean <= 1e-9
    assert report.row("ade").count >= 50


def test_metadata_records_seconds_and_protocol_knobs(tmp_path):
    config = load_config(linear_config(tmp_path))
    report = run_experiment(config)
    meta = report.metadata
    assert meta["spec"]["observation_s"] == pytest.approx(3.2)
    assert meta["spec"]["prediction_s"] == pytest.approx(4.8)
    assert meta["spec"]["stride"] == 1
    assert meta["std_kind"] == "population"
    assert meta["seed"] == 0
    assert "config_hash" in meta and "params_hash" in meta


def test_identical_runs_write_identical_reports(tmp_path):
    path = linear_config(tmp_path, experiment={"kind": "noise_sweep", "sigmas": [0.0, 0.1]})
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    run_experiment(load_config(path), output_dir=out_a)
    run_experiment(load_config(path), output_dir=out_b)
    assert (out_a / "report.csv").read_bytes() == (out_b / "report.csv").read_bytes()
    assert (out_a / "report.meta").read_bytes() == (out_b / "report.meta").read_bytes()


def test_stage_errors_carry_stage_name(tmp_path):
    dataset = constant_velocity_dataset(n_agents=1, n_frames=10)
    path = write_config(tmp_path, dataset, preprocess={"target_hz": 5.0})  # above source rate
    with pytest.raises(StageError, match=r"\[preprocess\]"):
        run_experiment(load_config(path))


# ---------------------------------------------------------------------------
# sweeps


def test_horizon_sweep_zero_on_linear_and_keyed_in_seconds(tmp_path):
    path = linear_config(
        tmp_path, experiment={"kind": "horizon_sweep", "horizons_s": [1.6, 3.2, 4.8, 8.0]}
    )
    report = run_experiment(load_config(path))
    horizon_rows = [r for r in report.rows if r.metric == "ade"]
    assert [r.group_value for r in horizon_rows] == ["1.6", "3.2", "4.8", "8.0"]
    assert all(r.group_key == "horizon_s" for r in horizon_rows)
    assert all(r.mean <= 1e-9 for r in horizon_rows)
    counts = {r.count for r in horizon_rows}
    assert len(counts) == 1  # same anchors at every horizon


def test_horizon_sweep_increases_on_curved_data(tmp_path):
    path = write_config(
        tmp_path, arc_dataset(), experiment={"kind": "horizon_sweep", "horizons_s": [1.6, 3.2, 4.8, 8.0]}
    )
    report = run_experiment(load_config(path))
    means = [r.mean for r in report.rows if r.metric == "ade"]
    assert all(a < b for a, b in zip(means, means[1:]))


def test_horizon_must_be_whole_frames(tmp_path):
    path = linear_config(tmp_path, experiment={"kind": "horizon_sweep", "horizons_s": [1.0]})
    with pytest.raises(ConfigError, match="whole number of frames"):
        run_experiment(load_config(path))


def test_observation_sweep_constant_velocity_is_flat(tmp_path):
    path = linear_config(
        tmp_path, experiment={"kind": "observation_sweep", "observations_s": [0.8, 1.6, 3.2]}
    )
    report = run_experiment(load_config(path))
    means = [r.mean for r in report.rows if r.metric == "ade"]
    assert max(means) <= 1e-9  # velocity estimate exact regardless of window


def test_observation_sweep_rejects_sub_two_frame_windows(tmp_path):
    path = linear_config(tmp_path, experiment={"kind": "observation_sweep", "observations_s": [0.4]})
    with pytest.raises(ConfigError, match="2 frames"):
        run_experiment(load_config(path))


def test_observation_sweep_longer_window_helps_on_noise(tmp_path):
    path = linear_config(
        tmp_path,
        preprocess={"target_hz": 2.5, "noise_sigma": 0.1, "noise_seed": 9},
        experiment={"kind": "observation_sweep", "observations_s": [0.8, 3.2]},
    )
    report = run_experiment(load_config(path))
    short = report.row("ade", "0.8").mean
    long = report.row("ade", "3.2").mean
    assert long <= short + 0.05


def test_noise_sweep_zero_sigma_matches_clean_run(tmp_path):
    base = linear_config(tmp_path, filename="clean.yaml")
    sweep = linear_config(
        tmp_path, filename="sweep.yaml", experiment={"kind": "noise_sweep", "sigmas": [0.0, 0.1]}
    )
    clean = run_experiment(load_config(base))
    noisy = run_experiment(load_config(sweep))
    for metric in ("ade", "fde"):
        assert noisy.row(metric, "0.0").mean == clean.row(metric).mean  # bit-for-bit


def test_noise_sweep_monotone_and_flagged(tmp_path):
    dataset = constant_velocity_dataset(n_agents=4, n_frames=120, seed=5)
    path = write_config(
        tmp_path, dataset, experiment={"kind": "noise_sweep", "sigmas": [0.0, 0.05, 0.1, 0.2, 0.4]}
    )
    report = run_experiment(load_config(path))
    means = [r.mean for r in report.rows if r.metric == "ade"]
    assert all(a <= b for a, b in zip(means, means[1:]))
    assert any("unreliable" in note and "0.2" in note for note in report.metadata["notes"])


def test_negative_sigma_rejected(tmp_path):
    path = linear_config(tmp_path, experiment={"kind": "noise_sweep", "sigmas": [-0.1]})
    with pytest.raises(ConfigError):
        run_experiment(load_config(path))


# ---------------------------------------------------------------------------
# transfer


def test_transfer_identical_datasets_give_identical_cells(tmp_path):
    from trajbench import write_dataset

    dataset = constant_velocity_dataset(n_agents=3, n_frames=120, seed=4)
    path_a = tmp_path / "a.txt"
    path_b = tmp_path / "b.txt"
    write_dataset(dataset, path_a)
    write_dataset(dataset, path_b)
    config = {
        "version": 1,
        "seed": 0,
        "datasets": [
            {"path": str(path_a), "name": "alpha"},
            {"path": str(path_b), "name": "beta"},
        ],
        "preprocess": {"target_hz": 2.5},
        "scenario": {"observation_frames": 8, "prediction_frames": 12},
        "predictor": {"id": "social_force"},
        "experiment": {"kind": "transfer", "calibration_budget": 5},
        "metrics": ["ade"],
    }
    config_path = tmp_path / "transfer.yaml"
    config_path.write_text(yaml.safe_dump(config))
    out = tmp_path / "out"
    report = run_experiment(load_config(config_path), output_dir=out)
    cells = {r.group_value: r.mean for r in report.rows if r.metric == "ade"}
    assert set(cells) == {"alpha->alpha", "alpha->beta", "beta->alpha", "beta->beta"}
    assert cells["alpha->beta"] == pytest.approx(cells["beta->beta"], abs=1e-9)
    assert cells["beta->alpha"] == pytest.approx(cells["alpha->alpha"], abs=1e-9)
    assert (out / "calibration.alpha.trace").is_file()
    assert (out / "calibration.beta.trace").is_file()


def test_transfer_needs_two_datasets(tmp_path):
    path = linear_config(tmp_path, experiment={"kind": "transfer"})
    with pytest.raises(ConfigError, match="two datasets"):
        load_config(path)


# ---------------------------------------------------------------------------
# runtime and crowd breakdown


def test_runtime_profile_bins_by_agent_count(tmp_path):
    path = linear_config(tmp_path, experiment={"kind": "runtime"})
    report = run_experiment(load_config(path))
    metrics = {r.metric for r in report.rows}
    assert metrics == {"predict_ms_mean", "predict_ms_median", "predict_ms_max"}
    assert all(r.group_key == "n_agents" for r in report.rows)
    assert all(r.mean >= 0 for r in report.rows)


def test_crowd_breakdown_groups_by_agent_count(tmp_path):
    path = linear_config(tmp_path, experiment={"kind": "crowd_breakdown"})
    report = run_experiment(load_config(path))
    assert all(r.group_key == "n_agents" for r in report.rows)
    assert report.row("ade", "4").count >= 50


# ---------------------------------------------------------------------------
# external predictors through the harness


def test_run_with_external_predictor(tmp_path):
    adapter = f"{sys.executable} {ADAPTER}"
    path = linear_config(tmp_path, predictor={"id": f"external:{adapter}"})
    report = run_experiment(load_config(path))
    # linear extrapolation on linear data is exact
    assert report.row("ade").mean <= 1e-9


def test_external_failure_aborts_without_report(tmp_path):
    adapter = f"{sys.executable} {ADAPTER} crash"
    path = linear_config(tmp_path, predictor={"id": f"external:{adapter}"})
    out = tmp_path / "out"
    with pytest.raises(StageError, match=r"\[predict\]"):
        run_experiment(load_config(path), output_dir=out)
    assert not (out / "report.csv").exists()


# ---------------------------------------------------------------------------
# CLI


def test_cli_run_and_outputs(tmp_path, capsys):
    path = linear_config(tmp_path)
    out = tmp_path / "cli_out"
    assert cli_main(["run", str(path), "--output-dir", str(out)]) == 0
    captured = capsys.readouterr()
    assert "ade" in captured.out
    assert (out / "report.csv").is_file()
    assert (out / "report.meta").is_file()
    meta = json.loads((out / "report.meta").read_text())
    assert meta["metadata"]["predictor"] == "cvm"


def test_cli_predictor_override(tmp_path, capsys):
    path = linear_config(tmp_path)
    assert cli_main(["run", str(path), "--predictor", "social_force"]) == 0


def test_cli_synthetic_and_inspect(tmp_path, capsys):
    out = tmp_path / "opposing.txt"
    bundle = tmp_path / "bundle.json"
    code = cli_main(
        ["synthetic", "opposing", "--out", str(out), "--bundle", str(bundle), "--predictors", "cvm,social_force"]
    )
    assert code == 0
    assert out.is_file() and bundle.is_file()
    payload = json.loads(bundle.read_text())
    assert set(payload["predictions"]) == {"cvm", "social_force"}
    assert len(payload["agents"]) == 2

    assert cli_main(["inspect", str(out)]) == 0
    captured = capsys.readouterr()
    assert "agents:      2" in captured.out


def test_cli_calibrate(tmp_path, capsys):
    dataset = constant_velocity_dataset(n_agents=3, n_frames=120, seed=4)
    path = write_config(
        tmp_path, dataset, predictor={"id": "social_force"}, experiment={"kind": "single", "calibration_budget": 3}
    )
    out = tmp_path / "cal_out"
    assert cli_main(["calibrate", str(path), "--output-dir", str(out)]) == 0
    assert (out / "calibration.trace").is_file()
    params = json.loads((out / "calibrated_params.json").read_text())
    assert "repulsion_strength" in params


def test_cli_errors_are_stage_tagged(tmp_path, capsys):
    path = tmp_path / "missing.yaml"
    assert cli_main(["run", str(path)]) == 2
    captured = capsys.readouterr()
    assert "error [run]" in captured.err


def test_cli_protocol_check_pass_and_fail(tmp_path, capsys):
    good = f"{sys.executable} {ADAPTER}"
    assert cli_main(["protocol-check", good, "--scenarios", "5", "--expect-linear"]) == 0
    captured = capsys.readouterr()
    assert "PASSED" in captured.out

    garbage = f"{sys.executable} {ADAPTER} garbage"
    assert cli_main(["protocol-check", garbage, "--scenarios", "2"]) == 2
    captured = capsys.readouterr()
    assert "error" in captured.err

"""Acceptance suite: one test per gate criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict lines.
"""

import json
import os
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from trajbench import (
    AgentTrack,
    ConstantVelocityModel,
    Dataset,
    MixturePrediction,
    PredictiveSocialForceModel,
    SamplePrediction,
    ScenarioSpec,
    SocialForceModel,
    VelocityFilter,
    ade,
    constant_velocity_dataset,
    estimate_velocity,
    extract_scenarios,
    fde,
    generate_synthetic,
    inject_noise,
    load_config,
    load_dataset,
    nlp,
    run_experiment,
    synthetic_dataset,
    top_k_ade,
    top_k_fde,
)
from trajbench.calibration import CalibrationSearch
from trajbench.harness import perturb_observations
from trajbench.metrics import score_scenario
from trajbench.preprocess import PreprocessConfig, preprocess_dataset

from conftest import brute_force_ade, brute_force_fde, brute_force_top_k, write_config
from test_predictors import rigid_transform, single_agent_scenario


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"FAIL criterion: {name}")
        raise
    print(f"PASS criterion: {name}")


def test_cvm_exactness_on_constant_velocity_data(tmp_path):
    with criterion("CVM exactness: ADE/FDE = 0 (1e-9) at horizons {1.6, 3.2, 4.8, 8} s, >= 50 scenarios, < 5 s"):
        start = time.perf_counter()
        dataset = constant_velocity_dataset(n_agents=4, n_frames=80, seed=2)
        path = write_config(
            tmp_path,
            dataset,
            experiment={"kind": "horizon_sweep", "horizons_s": [1.6, 3.2, 4.8, 8.0]},
        )
        report = run_experiment(load_config(path))
        for metric in ("ade", "fde"):
            rows = [r for r in report.rows if r.metric == metric]
            assert len(rows) == 4
            for row in rows:
                assert row.count >= 50, f"{row.count} scenarios at horizon {row.group_value}"
                assert row.mean <= 1e-9, f"{metric} {row.mean} at horizon {row.group_value}"
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0, f"took {elapsed:.2f} s"


def test_metric_oracle_equivalence(rng):
    with criterion("Metric oracle equivalence: 1000 ADE/FDE/Top-k pairs (1e-12), 100 NLP mixtures (1e-9)"):
        for _ in range(1000):
            n = int(rng.integers(1, 20))
            k = int(rng.integers(1, 6))
            pred = rng.normal(scale=4.0, size=(n, 2))
            gt = rng.normal(scale=4.0, size=(n, 2))
            assert abs(ade(pred, gt) - brute_force_ade(pred, gt)) <= 1e-12
            assert abs(fde(pred, gt) - brute_force_fde(pred, gt)) <= 1e-12
            samples = rng.normal(scale=4.0, size=(k, n, 2))
            pack = SamplePrediction(samples)
            assert abs(top_k_ade(pack, gt) - brute_force_top_k(samples, gt, brute_force_ade)) <= 1e-12
            assert abs(top_k_fde(pack, gt) - brute_force_top_k(samples, gt, brute_force_fde)) <= 1e-12
        for _ in range(100):
            weights = rng.uniform(0.2, 1.0, size=3)
            weights /= weights.sum()
            horizon = int(rng.integers(1, 8))
            means = rng.normal(scale=2.0, size=(3, horizon, 2))
            covs = np.empty((3, horizon, 2, 2))
            for i in range(3):
                for t in range(horizon):
                    a = rng.uniform(0.3, 1.5, size=(2, 2))
                    covs[i, t] = a @ a.T + 0.2 * np.eye(2)
            mixture = MixturePrediction(weights, means, covs)
            gt = rng.normal(scale=2.0, size=(horizon, 2))
            expected = 0.0
            for t in range(horizon):
                density = sum(
                    weights[i] * multivariate_normal.pdf(gt[t], mean=means[i, t], cov=covs[i, t])
                    for i in range(3)
                )
                expected -= np.log(max(density, 1e-12))
            assert abs(nlp(mixture, gt) - expected / horizon) <= 1e-9


def test_nlp_analytic_check():
    with criterion("NLP analytic check: unit Gaussian at the mean gives log(2*pi) +- 1e-9"):
        horizon = 7
        mixture = MixturePrediction(
            np.array([1.0]), np.zeros((1, horizon, 2)), np.tile(np.eye(2), (1, horizon, 1, 1))
        )
        assert abs(nlp(mixture, np.zeros((horizon, 2))) - np.log(2 * np.pi)) <= 1e-9


def test_scenario_extraction_enumeration():
    with criterion("Scenario extraction: 3-agent fixture gives exactly anchors 7-10 with A as sole target"):
        def span_track(agent_id, first, last):
            frames = np.arange(first, last + 1, dtype=np.int64)
            times = frames * 0.4
            positions = np.stack([times, np.full(len(frames), float(agent_id))], axis=1)
            return AgentTrack(agent_id, agent_id, frames, times, positions)

        dataset = Dataset(
            (span_track(0, 0, 30), span_track(1, 0, 10), span_track(2, 15, 30)),
            frequency_hz=2.5,
            name="fixture",
        )
        scenarios = extract_scenarios(dataset, ScenarioSpec(8, 12, min_agents=2, stride=1))
        assert [s.anchor for s in scenarios] == [7, 8, 9, 10]
        for s in scenarios:
            assert [a.original_id for a in s.targets] == [0]


def test_velocity_filter_exactness_and_weights():
    with criterion("Velocity filter: constant velocity exact; weights match e^(-t^2/4.5) oracle (1e-12)"):
        observed = np.arange(8)[:, None] * 0.4 * np.array([1.25, -0.75])
        v = estimate_velocity(observed, 0.4)
        assert np.max(np.abs(v - [1.25, -0.75])) <= 1e-12
        w = VelocityFilter(sigma=1.5).weights(7)
        t = np.arange(1, 8, dtype=float)
        g = np.exp(-(t**2) / 4.5)
        assert np.max(np.abs(w - g / g.sum())) <= 1e-12


def test_force_model_reductions():
    with criterion("Force models: single-agent = CVM (1e-6); sub_dt halving < 5 cm; equivariance (1e-9)"):
        solo = single_agent_scenario(velocity=(1.1, 0.4))
        cvm_points = ConstantVelocityModel().predict(solo).for_agent(0).points
        for model in (SocialForceModel(), PredictiveSocialForceModel()):
            points = model.predict(solo).for_agent(0).points
            assert np.max(np.abs(points - cvm_points)) <= 1e-6

        for kind in ("chasing", "opposing", "crossing"):
            scenario = generate_synthetic(kind)
            for cls in (SocialForceModel, PredictiveSocialForceModel):
                coarse = cls(sub_dt=0.1).predict(scenario)
                fine = cls(sub_dt=0.05).predict(scenario)
                for agent_id in (0, 1):
                    delta = np.abs(coarse.for_agent(agent_id).points - fine.for_agent(agent_id).points)
                    assert delta.max() < 0.05

        scenario = generate_synthetic("opposing")
        moved, rot, shift = rigid_transform(scenario, theta=1.1, shift=(-4.0, 2.5))
        for model in (SocialForceModel(), PredictiveSocialForceModel()):
            base = model.predict(scenario)
            transformed = model.predict(moved)
            for agent_id in (0, 1):
                err = np.abs(transformed.for_agent(agent_id).points - (base.for_agent(agent_id).points @ rot.T + shift))
                assert err.max() <= 1e-9


def test_noise_robustness_monotonicity(tmp_path):
    with criterion("Noise robustness: CVM mean ADE non-decreasing over sigma; sigma=0 equals clean run bit-for-bit"):
        dataset = constant_velocity_dataset(n_agents=4, n_frames=220, seed=17)
        spec = ScenarioSpec(8, 12, min_agents=2, stride=1)
        assert len(extract_scenarios(dataset, spec)) >= 200

        clean_path = write_config(tmp_path, dataset, filename="clean.yaml")
        sweep_path = write_config(
            tmp_path,
            dataset,
            filename="sweep.yaml",
            experiment={"kind": "noise_sweep", "sigmas": [0.0, 0.05, 0.1, 0.2, 0.4]},
        )
        clean = run_experiment(load_config(clean_path))
        sweep = run_experiment(load_config(sweep_path))
        means = [r.mean for r in sweep.rows if r.metric == "ade"]
        assert len(means) == 5
        assert all(a <= b for a, b in zip(means, means[1:])), means
        assert sweep.row("ade", "0.0").mean == clean.row("ade").mean
        assert sweep.row("fde", "0.0").mean == clean.row("fde").mean


def test_calibration_contract():
    with criterion("Calibration: incumbent non-increasing; budget=50 <= defaults on noisy crossing; seeded traces identical; < 60 s"):
        start = time.perf_counter()
        base = synthetic_dataset("crossing")
        noisy_tracks = tuple(inject_noise(t, 0.1, seed=99) for t in base.tracks)
        noisy = Dataset(noisy_tracks, frequency_hz=base.frequency_hz, name="noisy-crossing")
        scenarios = extract_scenarios(noisy, ScenarioSpec(8, 12, min_agents=2))
        assert scenarios

        searches = [
            CalibrationSearch(SocialForceModel(), budget=50, seed=21, objective="fde").fit(scenarios)
            for _ in range(2)
        ]
        results = [s.result() for s in searches]
        a, b = results
        assert [(t.params, t.value) for t in a.trace] == [(t.params, t.value) for t in b.trace]

        incumbents = a.incumbent_values()
        assert all(x >= y for x, y in zip(incumbents, incumbents[1:]))
        default_value = a.trace[0].value
        assert a.best_value <= default_value
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0, f"took {elapsed:.2f} s"


def test_run_determinism(tmp_path):
    with criterion("Determinism: the same run config twice gives byte-identical report.csv"):
        dataset = constant_velocity_dataset(n_agents=4, n_frames=80, seed=2)
        path = write_config(
            tmp_path,
            dataset,
            predictor={"id": "social_force"},
            experiment={"kind": "noise_sweep", "sigmas": [0.0, 0.1]},
        )
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run_experiment(load_config(path), output_dir=out_a)
        run_experiment(load_config(path), output_dir=out_b)
        assert (out_a / "report.csv").read_bytes() == (out_b / "report.csv").read_bytes()


def test_runtime_profile_sanity():
    with criterion("Runtime: social force on a 20-agent scenario predicts 12 frames in < 10 ms"):
        dataset = constant_velocity_dataset(n_agents=20, n_frames=21, extent=6.0, seed=3)
        scenario = extract_scenarios(dataset, ScenarioSpec(8, 12, min_agents=20))[0]
        assert scenario.n_agents == 20
        model = SocialForceModel()
        for _ in range(3):
            model.predict(scenario)  # warm-up
        timings = []
        for _ in range(10):
            t0 = time.perf_counter()
            model.predict(scenario)
            timings.append(time.perf_counter() - t0)
        best_ms = min(timings) * 1e3
        assert best_ms < 10.0, f"{best_ms:.2f} ms"


ATC_PATH = os.environ.get("TRAJBENCH_ATC_PATH")


@pytest.mark.skipif(ATC_PATH is None, reason="set TRAJBENCH_ATC_PATH to a user-supplied ATC detection file")
def test_atc_cvm_ade_informational():
    """Dataset-dependent, informational: CVM ADE at 4.8 s vs the published 0.499 m."""
    fmt = os.environ.get("TRAJBENCH_ATC_FORMAT", "native")
    dataset = load_dataset(ATC_PATH, format=fmt)
    dataset = preprocess_dataset(dataset, PreprocessConfig(target_hz=2.5, smoothing_window=5))
    scenarios = extract_scenarios(dataset, ScenarioSpec(8, 12, min_agents=2, stride=1))
    model = ConstantVelocityModel()
    values = [score_scenario(model.predict(s), s, ["ade"])["ade"] for s in scenarios]
    mean_ade = float(np.mean(values))
    reference = 0.499
    deviation = (mean_ade - reference) / reference
    knobs = "stride=1, smoothing_window=5, gap_tolerance_factor=1.5"
    print(f"INFO criterion: ATC CVM ADE@4.8s = {mean_ade:.3f} m vs {reference} m ({deviation:+.1%}); knobs: {knobs}")
    if abs(deviation) > 0.20:
        pytest.xfail(f"deviation {deviation:+.1%} beyond +-20%; see logged protocol knobs: {knobs}")
    print("PASS criterion: ATC CVM ADE within +-20% of 0.499 m (informational)")

"""Experiment orchestration: config parsing, sweeps, transfer, runtime profiling.

Every run follows the same pipeline (load -> preprocess -> extract -> predict
-> score -> aggregate); sweeps re-use one extraction so the anchor set is
identical across sweep values and curves differ only by the swept variable.
Stage failures surface as :class:`~trajbench.errors.StageError` tagged with
the stage name. Reports are written atomically, so an aborted run never leaves
a corrupt ``report.csv`` behind.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from statistics import median
from typing import Sequence

import numpy as np
import yaml

from . import __version__
from .bridge import ExternalPredictorSession
from .calibration import CalibrationResult, calibrate, split_calibration
from .data import Dataset
from .errors import ConfigError, StageError, TrajbenchError
from .io import load_dataset
from .metrics import MetricReport, aggregate, score_scenario
from .predictors import make_predictor
from .preprocess import PreprocessConfig, detection_noise, preprocess_dataset
from .scenarios import Scenario, ScenarioAgent, ScenarioSpec, extract_scenarios

EXPERIMENT_KINDS = (
    "single",
    "horizon_sweep",
    "observation_sweep",
    "noise_sweep",
    "transfer",
    "runtime",
    "crowd_breakdown",
)

# Observation/prediction presets; ETH-style data is shorter, per the
# benchmark's standard setup.
SCENARIO_PRESETS = {
    "default": {"observation_frames": 8, "prediction_frames": 12},
    "eth": {"observation_frames": 6, "prediction_frames": 10},
}

UNRELIABLE_NOISE_SIGMA = 0.2  # observations become unreliable from here on


@dataclass(frozen=True)
class DatasetRef:
    path: str
    format: str = "native"
    frequency_hz: float | None = None
    name: str | None = None
    calibration_fraction: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    datasets: tuple[DatasetRef, ...]
    preprocess: PreprocessConfig
    spec: ScenarioSpec
    predictor_id: str
    predictor_params: dict = field(default_factory=dict)
    calibration_file: str | None = None
    metrics: tuple[str, ...] = ("ade", "fde")
    horizons_s: tuple[float, ...] = ()
    observations_s: tuple[float, ...] = ()
    sigmas: tuple[float, ...] = ()
    calibration_fraction: float = 0.3
    calibration_budget: int = 200
    objective_horizon_s: float = 4.8
    seed: int = 0
    name: str = ""
    output_dir: str | None = None
    raw: dict = field(default_factory=dict)

    @property
    def dataset(self) -> DatasetRef:
        return self.datasets[0]

    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# config parsing


def _require_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)} (allowed: {sorted(allowed)})")


def load_config(source, base_dir: Path | None = None) -> ExperimentConfig:
    """Parse and validate a YAML experiment configuration.

    ``source`` is a path or an already-parsed mapping. Unknown keys anywhere
    are errors, and all referenced files must exist at load time.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        base_dir = path.parent if base_dir is None else base_dir
    else:
        raw = source
        base_dir = Path.cwd() if base_dir is None else base_dir
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")

    _require_keys(
        raw,
        {
            "version",
            "name",
            "seed",
            "output_dir",
            "dataset",
            "datasets",
            "preprocess",
            "scenario",
            "predictor",
            "experiment",
            "metrics",
        },
        "config",
    )
    if raw.get("version") != 1:
        raise ConfigError(f"unsupported config version {raw.get('version')!r}; expected 1")

    datasets = _parse_datasets(raw, base_dir)
    preprocess = _parse_preprocess(raw.get("preprocess", {}))
    spec = _parse_scenario(raw.get("scenario", {}))
    predictor_id, predictor_params, calibration_file = _parse_predictor(raw.get("predictor", {}), base_dir)
    metrics = tuple(raw.get("metrics", ["ade", "fde"]))

    experiment = raw.get("experiment", {})
    _require_keys(
        experiment,
        {
            "kind",
            "horizons_s",
            "observations_s",
            "sigmas",
            "calibration_fraction",
            "calibration_budget",
            "objective_horizon_s",
        },
        "experiment",
    )
    kind = experiment.get("kind", "single")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {EXPERIMENT_KINDS}")

    config = ExperimentConfig(
        kind=kind,
        datasets=datasets,
        preprocess=preprocess,
        spec=spec,
        predictor_id=predictor_id,
        predictor_params=predictor_params,
        calibration_file=calibration_file,
        metrics=metrics,
        horizons_s=tuple(experiment.get("horizons_s", ())),
        observations_s=tuple(experiment.get("observations_s", ())),
        sigmas=tuple(experiment.get("sigmas", ())),
        calibration_fraction=float(experiment.get("calibration_fraction", 0.3)),
        calibration_budget=int(experiment.get("calibration_budget", 200)),
        objective_horizon_s=float(experiment.get("objective_horizon_s", 4.8)),
        seed=int(raw.get("seed", 0)),
        name=str(raw.get("name", "")),
        output_dir=raw.get("output_dir"),
        raw=raw,
    )
    _check_sweep_values(config)
    return config


def _parse_datasets(raw: dict, base_dir: Path) -> tuple[DatasetRef, ...]:
    if ("dataset" in raw) == ("datasets" in raw):
        raise ConfigError("config needs exactly one of 'dataset' or 'datasets'")
    entries = [raw["dataset"]] if "dataset" in raw else list(raw["datasets"])
    refs = []
    for entry in entries:
        if isinstance(entry, str):
            entry = {"path": entry}
        _require_keys(entry, {"path", "format", "frequency_hz", "name", "calibration_fraction"}, "dataset")
        if "path" not in entry:
            raise ConfigError("dataset entry without a path")
        path = Path(entry["path"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise ConfigError(f"dataset file not found: {path}")
        refs.append(
            DatasetRef(
                path=str(path),
                format=entry.get("format", "native"),
                frequency_hz=entry.get("frequency_hz"),
                name=entry.get("name"),
                calibration_fraction=entry.get("calibration_fraction"),
            )
        )
    return tuple(refs)


def _parse_preprocess(section: dict) -> PreprocessConfig:
    _require_keys(
        section,
        {"target_hz", "smoothing_window", "gap_tolerance_factor", "noise_sigma", "noise_seed"},
        "preprocess",
    )
    return PreprocessConfig(
        target_hz=float(section.get("target_hz", 2.5)),
        smoothing_window=int(section.get("smoothing_window", 5)),
        gap_tolerance_factor=float(section.get("gap_tolerance_factor", 1.5)),
        noise_sigma=float(section.get("noise_sigma", 0.0)),
        noise_seed=int(section.get("noise_seed", 0)),
    )


def _parse_scenario(section: dict) -> ScenarioSpec:
    _require_keys(
        section,
        {"preset", "observation_frames", "prediction_frames", "min_agents", "stride"},
        "scenario",
    )
    values = dict(SCENARIO_PRESETS["default"])
    preset = section.get("preset")
    if preset is not None:
        if preset not in SCENARIO_PRESETS:
            raise ConfigError(f"unknown scenario preset {preset!r}; expected one of {sorted(SCENARIO_PRESETS)}")
        values = dict(SCENARIO_PRESETS[preset])
    for key in ("observation_frames", "prediction_frames"):
        if key in section:
            values[key] = int(section[key])
    return ScenarioSpec(
        observation_frames=values["observation_frames"],
        prediction_frames=values["prediction_frames"],
        min_agents=int(section.get("min_agents", 2)),
        stride=int(section.get("stride", 1)),
    )


def _parse_predictor(section: dict, base_dir: Path) -> tuple[str, dict, str | None]:
    _require_keys(section, {"id", "params", "calibration"}, "predictor")
    predictor_id = section.get("id", "cvm")
    params = dict(section.get("params", {}))
    calibration_file = section.get("calibration")
    if calibration_file is not None:
        calibration_path = Path(calibration_file)
        if not calibration_path.is_absolute():
            calibration_path = base_dir / calibration_path
        if not calibration_path.is_file():
            raise ConfigError(f"calibration file not found: {calibration_path}")
        calibration_file = str(calibration_path)
    return predictor_id, params, calibration_file


def _check_sweep_values(config: ExperimentConfig) -> None:
    if config.kind == "horizon_sweep" and not config.horizons_s:
        raise ConfigError("horizon_sweep needs experiment.horizons_s")
    if config.kind == "observation_sweep" and not config.observations_s:
        raise ConfigError("observation_sweep needs experiment.observations_s")
    if config.kind == "noise_sweep":
        if not config.sigmas:
            raise ConfigError("noise_sweep needs experiment.sigmas")
        if any(s < 0 for s in config.sigmas):
            raise ConfigError("noise_sweep sigmas must be non-negative")
    if config.kind == "transfer" and len(config.datasets) < 2:
        raise ConfigError("transfer needs at least two datasets")


# ---------------------------------------------------------------------------
# pipeline pieces


def _stage(stage_name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except TrajbenchError as exc:
        raise StageError(stage_name, exc) from exc


def _frames_for(seconds: float, hz: float, what: str) -> int:
    frames = seconds * hz
    if abs(frames - round(frames)) > 1e-9:
        raise ConfigError(f"{what} {seconds} s is not a whole number of frames at {hz} Hz")
    return int(round(frames))


def _build_predictor(config: ExperimentConfig):
    """Instantiate the configured predictor; external ids return a session."""
    predictor_id = config.predictor_id
    if predictor_id.startswith("external:"):
        command = predictor_id[len("external:") :].strip()
        if not command:
            raise ConfigError("external predictor needs a command: 'external:<command>'")
        return ExternalPredictorSession(command)
    params = dict(config.predictor_params)
    if config.calibration_file is not None:
        result = CalibrationResult.from_json(Path(config.calibration_file).read_text(encoding="utf-8"))
        params.update(result.best_params)
    return make_predictor(predictor_id, params)


def _load_and_prepare(config: ExperimentConfig, ref: DatasetRef) -> Dataset:
    dataset = _stage(
        "load", load_dataset, ref.path, format=ref.format, frequency_hz=ref.frequency_hz, name=ref.name
    )
    return _stage("preprocess", preprocess_dataset, dataset, config.preprocess)


def _evaluate(predictor, scenarios: Sequence[Scenario], metrics: Sequence[str]) -> list[dict[str, float]]:
    return [
        _stage("score", score_scenario, _stage("predict", predictor.predict, s), s, metrics)
        for s in scenarios
    ]


def _base_metadata(config: ExperimentConfig, dataset: Dataset | None = None, notes: list | None = None) -> dict:
    spec = config.spec
    hz = config.preprocess.target_hz
    params = dict(config.predictor_params)
    metadata = {
        "library_version": __version__,
        "config_name": config.name,
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "experiment_kind": config.kind,
        "predictor": config.predictor_id,
        "params": params,
        "params_hash": hashlib.sha256(
            json.dumps(params, sort_keys=True, separators=(",", ":")).encode()
        ).hexdigest(),
        "metrics": list(config.metrics),
        "spec": {
            "observation_frames": spec.observation_frames,
            "prediction_frames": spec.prediction_frames,
            "observation_s": spec.observation_frames / hz,
            "prediction_s": spec.prediction_frames / hz,
            "min_agents": spec.min_agents,
            "stride": spec.stride,
        },
        "preprocess": {
            "target_hz": config.preprocess.target_hz,
            "smoothing_window": config.preprocess.smoothing_window,
            "gap_tolerance_factor": config.preprocess.gap_tolerance_factor,
            "noise_sigma": config.preprocess.noise_sigma,
            "noise_seed": config.preprocess.noise_seed,
        },
        "std_kind": "population",
    }
    if dataset is not None:
        metadata["dataset"] = dataset.name
        metadata["frequency_hz"] = dataset.frequency_hz
    if notes:
        metadata["notes"] = notes
    return metadata


# ---------------------------------------------------------------------------
# experiment kinds


def run_single(config: ExperimentConfig) -> MetricReport:
    dataset = _load_and_prepare(config, config.dataset)
    scenarios = _stage("extract", extract_scenarios, dataset, config.spec)
    predictor = _stage("predictor", _build_predictor, config)
    try:
        values = _evaluate(predictor, scenarios, config.metrics)
    finally:
        _close_if_session(predictor)
    metadata = _base_metadata(config, dataset)
    metadata["scenario_count"] = len(scenarios)
    return aggregate(values, metadata=metadata)


def run_crowd_breakdown(config: ExperimentConfig) -> MetricReport:
    dataset = _load_and_prepare(config, config.dataset)
    scenarios = _stage("extract", extract_scenarios, dataset, config.spec)
    predictor = _stage("predictor", _build_predictor, config)
    try:
        values = _evaluate(predictor, scenarios, config.metrics)
    finally:
        _close_if_session(predictor)
    metadata = _base_metadata(config, dataset)
    metadata["scenario_count"] = len(scenarios)
    return aggregate(values, group_key="n_agents", group_values=[s.n_agents for s in scenarios], metadata=metadata)


def run_horizon_sweep(config: ExperimentConfig, horizons_s: Sequence[float] | None = None) -> MetricReport:
    """One evaluation per prediction horizon over a constant anchor set.

    Scenarios are extracted once at the longest horizon, then truncated, so
    every sweep value scores exactly the same anchors.
    """
    horizons_s = list(horizons_s if horizons_s is not None else config.horizons_s)
    hz = config.preprocess.target_hz
    frames = [_frames_for(h, hz, "prediction horizon") for h in horizons_s]
    dataset = _load_and_prepare(config, config.dataset)
    base_spec = replace(config.spec, prediction_frames=max(frames))
    base = _stage("extract", extract_scenarios, dataset, base_spec)
    predictor = _stage("predictor", _build_predictor, config)

    values: list[dict[str, float]] = []
    groups: list[float] = []
    try:
        for h_s, t_p in zip(horizons_s, frames):
            scenarios = [s.with_horizon(t_p) for s in base]
            values.extend(_evaluate(predictor, scenarios, config.metrics))
            groups.extend([h_s] * len(scenarios))
    finally:
        _close_if_session(predictor)
    metadata = _base_metadata(config, dataset)
    metadata["scenario_count"] = len(base)
    metadata["horizons_s"] = [float(h) for h in horizons_s]
    return aggregate(values, group_key="horizon_s", group_values=groups, metadata=metadata)


def run_observation_sweep(config: ExperimentConfig, observations_s: Sequence[float] | None = None) -> MetricReport:
    """One evaluation per observation length; anchors fixed at the longest."""
    observations_s = list(observations_s if observations_s is not None else config.observations_s)
    hz = config.preprocess.target_hz
    frames = [_frames_for(o, hz, "observation length") for o in observations_s]
    if any(f < 2 for f in frames):
        raise ConfigError("observation lengths below 2 frames cannot support a velocity estimate")
    dataset = _load_and_prepare(config, config.dataset)
    base_spec = replace(config.spec, observation_frames=max(frames))
    base = _stage("extract", extract_scenarios, dataset, base_spec)
    predictor = _stage("predictor", _build_predictor, config)

    values: list[dict[str, float]] = []
    groups: list[float] = []
    try:
        for o_s, o_p in zip(observations_s, frames):
            scenarios = [s.with_observation(o_p) for s in base]
            values.extend(_evaluate(predictor, scenarios, config.metrics))
            groups.extend([o_s] * len(scenarios))
    finally:
        _close_if_session(predictor)
    metadata = _base_metadata(config, dataset)
    metadata["scenario_count"] = len(base)
    metadata["observations_s"] = [float(o) for o in observations_s]
    return aggregate(values, group_key="observation_s", group_values=groups, metadata=metadata)


def perturb_observations(scenario: Scenario, sigma: float, seed: int) -> Scenario:
    """Noise on observed windows only; ground-truth futures stay clean.

    Draws are keyed per (seed, agent original id, absolute frame), so the
    perturbation of one detection does not depend on which scenarios it
    appears in.
    """
    if sigma == 0.0:
        return scenario
    first = scenario.anchor - scenario.observation_frames + 1
    agents = []
    for agent in scenario.agents:
        noise = np.stack(
            [
                detection_noise(seed, agent.original_id, first + i, sigma)
                for i in range(scenario.observation_frames)
            ]
        )
        agents.append(
            ScenarioAgent(
                agent.agent_id, agent.original_id, agent.observed + noise, agent.future, agent.is_target
            )
        )
    return Scenario(
        scenario.anchor,
        scenario.dt,
        scenario.observation_frames,
        scenario.prediction_frames,
        tuple(agents),
        scenario.environment,
    )


def run_noise_sweep(config: ExperimentConfig, sigmas: Sequence[float] | None = None) -> MetricReport:
    """Robustness curve: increasing white observation noise, clean futures."""
    sigmas = list(sigmas if sigmas is not None else config.sigmas)
    if any(s < 0 for s in sigmas):
        raise ConfigError("noise sweep sigmas must be non-negative")
    dataset = _load_and_prepare(config, config.dataset)
    base = _stage("extract", extract_scenarios, dataset, config.spec)
    predictor = _stage("predictor", _build_predictor, config)

    values: list[dict[str, float]] = []
    groups: list[float] = []
    try:
        for index, sigma in enumerate(sigmas):
            seed = int(np.random.SeedSequence(config.seed, spawn_key=(index,)).generate_state(1)[0])
            scenarios = [perturb_observations(s, sigma, seed) for s in base]
            values.extend(_evaluate(predictor, scenarios, config.metrics))
            groups.extend([sigma] * len(scenarios))
    finally:
        _close_if_session(predictor)

    notes = []
    unreliable = [s for s in sigmas if s >= UNRELIABLE_NOISE_SIGMA]
    if unreliable:
        notes.append(
            f"observations become unreliable at sigma >= {UNRELIABLE_NOISE_SIGMA}; affected sweep values: {unreliable}"
        )
    metadata = _base_metadata(config, dataset, notes=notes)
    metadata["scenario_count"] = len(base)
    metadata["sigmas"] = [float(s) for s in sigmas]
    return aggregate(values, group_key="sigma", group_values=groups, metadata=metadata)


def run_transfer(config: ExperimentConfig) -> tuple[MetricReport, dict[str, CalibrationResult]]:
    """Calibrate per dataset, evaluate every (calibration, test) pair.

    Calibration uses each dataset's initial time fraction; evaluation always
    runs on holdout splits, so diagonal cells measure in-dataset generalization
    and off-diagonal cells measure transfer.
    """
    if config.predictor_id.startswith("external:"):
        raise ConfigError("transfer calibrates predictor parameters; external predictors are not calibratable")
    datasets = [_load_and_prepare(config, ref) for ref in config.datasets]
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        names = [f"{name}#{i}" for i, name in enumerate(names)]

    calibrations: dict[str, CalibrationResult] = {}
    holdout_scenarios: dict[str, list[Scenario]] = {}
    for ref, dataset, name in zip(config.datasets, datasets, names):
        fraction = ref.calibration_fraction if ref.calibration_fraction is not None else config.calibration_fraction
        cal, holdout = _stage("split", split_calibration, dataset, fraction)
        calibrations[name] = _stage(
            "calibrate",
            calibrate,
            config.predictor_id,
            cal,
            spec=config.spec,
            objective_horizon_s=config.objective_horizon_s,
            budget=config.calibration_budget,
            seed=config.seed,
        )
        holdout_scenarios[name] = _stage("extract", extract_scenarios, holdout, config.spec)

    values: list[dict[str, float]] = []
    groups: list[str] = []
    for cal_name in names:
        params = dict(config.predictor_params)
        params.update(calibrations[cal_name].best_params)
        predictor = make_predictor(config.predictor_id, params)
        for test_name in names:
            scenarios = holdout_scenarios[test_name]
            values.extend(_evaluate(predictor, scenarios, config.metrics))
            groups.extend([f"{cal_name}->{test_name}"] * len(scenarios))

    metadata = _base_metadata(config)
    metadata["datasets"] = names
    metadata["calibration_budget"] = config.calibration_budget
    metadata["objective_horizon_s"] = config.objective_horizon_s
    report = aggregate(values, group_key="calibrate->test", group_values=groups, metadata=metadata)
    return report, calibrations


def run_runtime_profile(config: ExperimentConfig) -> MetricReport:
    """Wall time of the bare predict call, binned by scenario agent count.

    Three warm-up calls per bin are discarded; timing uses a monotonic clock
    and is inherently not byte-reproducible across runs.
    """
    dataset = _load_and_prepare(config, config.dataset)
    scenarios = _stage("extract", extract_scenarios, dataset, config.spec)
    predictor = _stage("predictor", _build_predictor, config)

    bins: dict[int, list[Scenario]] = {}
    for s in scenarios:
        bins.setdefault(s.n_agents, []).append(s)

    values: list[dict[str, float]] = []
    groups: list[int] = []
    try:
        for n_agents in sorted(bins):
            group = bins[n_agents]
            for s in group[:3]:
                predictor.predict(s)  # warm-up, discarded
            timings = []
            for s in group:
                start = time.perf_counter()
                predictor.predict(s)
                timings.append((time.perf_counter() - start) * 1e3)
            values.append(
                {
                    "predict_ms_mean": float(np.mean(timings)),
                    "predict_ms_median": float(median(timings)),
                    "predict_ms_max": float(max(timings)),
                }
            )
            groups.append(n_agents)
    finally:
        _close_if_session(predictor)
    metadata = _base_metadata(config, dataset, notes=["wall-clock timings; not byte-reproducible"])
    metadata["scenario_count"] = len(scenarios)
    return aggregate(values, group_key="n_agents", group_values=groups, metadata=metadata)


def _close_if_session(predictor) -> None:
    if isinstance(predictor, ExternalPredictorSession):
        predictor.close()


# ---------------------------------------------------------------------------
# entry point


def run_experiment(config: ExperimentConfig, output_dir: str | Path | None = None) -> MetricReport:
    """Dispatch on the experiment kind and write report artifacts.

    Writes ``report.csv`` and ``report.meta`` (plus ``calibration.<name>.trace``
    for transfer runs) into the output directory when one is configured.
    """
    runners = {
        "single": run_single,
        "horizon_sweep": run_horizon_sweep,
        "observation_sweep": run_observation_sweep,
        "noise_sweep": run_noise_sweep,
        "runtime": run_runtime_profile,
        "crowd_breakdown": run_crowd_breakdown,
    }
    calibrations: dict[str, CalibrationResult] = {}
    if config.kind == "transfer":
        report, calibrations = run_transfer(config)
    else:
        report = runners[config.kind](config)

    out = output_dir if output_dir is not None else config.output_dir
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        report.to_csv(out / "report.csv")
        report.write_meta(out / "report.meta")
        for name, result in calibrations.items():
            result.write(out / f"calibration.{_safe_name(name)}.trace")
    return report


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name) or "dataset"

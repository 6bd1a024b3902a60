"""trajbench: a benchmarking toolkit for human trajectory prediction.

Ingests labeled detection streams, preprocesses them, extracts parametrized
testing scenarios, runs built-in physics-based predictors or external ones
over a wire protocol, and scores everything with geometric and probabilistic
metrics across accuracy, observation-length, noise-robustness, transfer and
runtime experiments.
"""

__version__ = "0.1.0"

from .data import AgentTrack, Dataset, Detection, EnvironmentModel, build_dataset
from .errors import (
    ConfigError,
    DataError,
    ParseError,
    ProtocolError,
    StageError,
    TrajbenchError,
)
from .io import load_dataset, load_environment, load_goals, write_dataset
from .metrics import MetricReport, ade, aggregate, fde, nlp, score_scenario, top_k_ade, top_k_fde
from .predictions import (
    GridPrediction,
    MixturePrediction,
    PointPrediction,
    Prediction,
    SamplePrediction,
)
from .predictors import (
    ConstantVelocityModel,
    PredictiveSocialForceModel,
    SocialForceModel,
    VelocityFilter,
    constant_velocity_dataset,
    estimate_velocity,
    generate_synthetic,
    make_predictor,
    project_goal,
    synthetic_dataset,
)
from .preprocess import (
    Downsampler,
    GapInterpolator,
    NoiseInjector,
    PreprocessConfig,
    Smoother,
    detect_gaps,
    downsample,
    inject_noise,
    interpolate_gaps,
    preprocess_dataset,
    smooth_track,
)
from .scenarios import Scenario, ScenarioAgent, ScenarioSpec, extract_scenarios, scenario_count_by_crowd
from .calibration import (
    CalibrationResult,
    CalibrationSearch,
    ParamRange,
    ParamSpace,
    calibrate,
    default_search_space,
    split_calibration,
)
from .bridge import ExternalPredictorSession, predict_external, spawn_external
from .harness import ExperimentConfig, load_config, run_experiment

__all__ = [
    "AgentTrack",
    "CalibrationResult",
    "CalibrationSearch",
    "ConfigError",
    "ConstantVelocityModel",
    "DataError",
    "Dataset",
    "Detection",
    "Downsampler",
    "EnvironmentModel",
    "ExperimentConfig",
    "ExternalPredictorSession",
    "GapInterpolator",
    "GridPrediction",
    "MetricReport",
    "MixturePrediction",
    "NoiseInjector",
    "ParamRange",
    "ParamSpace",
    "ParseError",
    "PointPrediction",
    "Prediction",
    "PredictiveSocialForceModel",
    "PreprocessConfig",
    "ProtocolError",
    "SamplePrediction",
    "Scenario",
    "ScenarioAgent",
    "ScenarioSpec",
    "Smoother",
    "SocialForceModel",
    "StageError",
    "TrajbenchError",
    "VelocityFilter",
    "ade",
    "aggregate",
    "build_dataset",
    "calibrate",
    "constant_velocity_dataset",
    "default_search_space",
    "detect_gaps",
    "downsample",
    "estimate_velocity",
    "extract_scenarios",
    "fde",
    "generate_synthetic",
    "inject_noise",
    "interpolate_gaps",
    "load_config",
    "load_dataset",
    "load_environment",
    "load_goals",
    "make_predictor",
    "nlp",
    "predict_external",
    "preprocess_dataset",
    "project_goal",
    "run_experiment",
    "scenario_count_by_crowd",
    "score_scenario",
    "smooth_track",
    "spawn_external",
    "split_calibration",
    "synthetic_dataset",
    "top_k_ade",
    "top_k_fde",
    "write_dataset",
]

"""Built-in prediction methods and the predictor contract."""

from __future__ import annotations

from ..errors import ConfigError
from .base import (
    GOAL_PROJECTION_STEPS,
    TrajectoryPredictor,
    VelocityFilter,
    estimate_velocity,
    project_goal,
)
from .cvm import ConstantVelocityModel
from .forces import PredictiveSocialForceModel, SocialForceModel
from .synthetic import (
    SYNTHETIC_KINDS,
    constant_velocity_dataset,
    generate_synthetic,
    synthetic_dataset,
)

BUILTIN_PREDICTORS: dict[str, type[TrajectoryPredictor]] = {
    ConstantVelocityModel.predictor_id: ConstantVelocityModel,
    SocialForceModel.predictor_id: SocialForceModel,
    PredictiveSocialForceModel.predictor_id: PredictiveSocialForceModel,
}


def make_predictor(predictor_id: str, params: dict | None = None) -> TrajectoryPredictor:
    """Instantiate a built-in predictor by id with optional parameter overrides."""
    try:
        cls = BUILTIN_PREDICTORS[predictor_id]
    except KeyError:
        raise ConfigError(
            f"unknown predictor {predictor_id!r}; built-ins: {sorted(BUILTIN_PREDICTORS)}"
        ) from None
    predictor = cls()
    if params:
        valid = predictor.get_params()
        unknown = set(params) - set(valid)
        if unknown:
            raise ConfigError(f"unknown parameters for {predictor_id}: {sorted(unknown)}")
        predictor.set_params(**params)
    return predictor


__all__ = [
    "BUILTIN_PREDICTORS",
    "ConstantVelocityModel",
    "GOAL_PROJECTION_STEPS",
    "PredictiveSocialForceModel",
    "SocialForceModel",
    "SYNTHETIC_KINDS",
    "TrajectoryPredictor",
    "VelocityFilter",
    "constant_velocity_dataset",
    "estimate_velocity",
    "generate_synthetic",
    "make_predictor",
    "project_goal",
    "synthetic_dataset",
]

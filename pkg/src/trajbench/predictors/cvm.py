"""Constant velocity baseline."""

from __future__ import annotations

import numpy as np

from ..predictions import PointPrediction, Prediction
from ..scenarios import Scenario
from .base import TrajectoryPredictor, VelocityFilter, estimate_velocity


class ConstantVelocityModel(TrajectoryPredictor):
    """Extrapolates each agent with its filtered current velocity.

    ``filter_sigma=None`` uses the single most recent finite difference
    instead of the Gaussian-weighted estimate.
    """

    predictor_id = "cvm"

    def __init__(self, filter_sigma: float | None = 1.5):
        self.filter_sigma = filter_sigma

    def predict(self, scenario: Scenario) -> Prediction:
        velocity_filter = VelocityFilter(self.filter_sigma)
        steps = np.arange(1, scenario.prediction_frames + 1, dtype=np.float64)
        per_agent = {}
        for agent in scenario.agents:
            v = estimate_velocity(agent.observed, scenario.dt, velocity_filter)
            points = agent.observed[-1] + steps[:, None] * scenario.dt * v
            per_agent[agent.agent_id] = PointPrediction(points)
        return Prediction(per_agent)

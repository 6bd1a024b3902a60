"""Predictor contract and shared motion-state estimation.

Predictors are sklearn-style estimators: hyperparameters live in ``__init__``
(so ``get_params``/``set_params``/``clone`` work), ``fit`` is a no-op for the
built-in physics models, and ``predict`` maps one scenario to a
:class:`~trajbench.predictions.Prediction`. Predictors are pure: identical
(scenario, params) give bit-identical outputs, and one instance may be invoked
concurrently on different scenarios.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ..errors import DataError
from ..predictions import Prediction
from ..scenarios import Scenario

GOAL_PROJECTION_STEPS = 40


@dataclass(frozen=True)
class VelocityFilter:
    """Gaussian weighting of backward finite differences, recent first.

    ``weights(n)`` returns w(t) for t = 1..n with w(t) proportional to
    exp(-t^2 / (2 sigma^2)) and normalized to sum to one, so a
    constant-velocity window is recovered exactly. ``sigma=None`` selects the
    single most recent difference.
    """

    sigma: float | None = 1.5

    def __post_init__(self):
        if self.sigma is not None and self.sigma <= 0:
            raise DataError(f"filter sigma must be positive or None, got {self.sigma}")

    def weights(self, n_diffs: int) -> np.ndarray:
        if n_diffs < 1:
            raise DataError("velocity filter needs at least one finite difference")
        if self.sigma is None:
            w = np.zeros(n_diffs)
            w[0] = 1.0
            return w
        t = np.arange(1, n_diffs + 1, dtype=np.float64)
        g = np.exp(-(t**2) / (2.0 * self.sigma**2))
        return g / g.sum()


def estimate_velocity(observed, dt: float, velocity_filter: VelocityFilter | None = None) -> np.ndarray:
    """Filtered current velocity from an observation window.

    The window's backward finite differences are weighted recent-first by the
    filter; with normalized weights a constant-velocity track yields exactly
    that velocity.
    """
    observed = np.asarray(observed, dtype=np.float64)
    if observed.ndim != 2 or observed.shape[0] < 2:
        raise DataError(f"velocity estimation needs >= 2 observations, got shape {observed.shape}")
    if velocity_filter is None:
        velocity_filter = VelocityFilter()
    diffs = (observed[1:] - observed[:-1]) / dt
    w = velocity_filter.weights(diffs.shape[0])
    return (w[::-1, None] * diffs).sum(axis=0)


def project_goal(position, velocity, dt: float, steps: int = GOAL_PROJECTION_STEPS) -> np.ndarray:
    """Goal point reached by propagating the current velocity ``steps`` frames."""
    return np.asarray(position, dtype=np.float64) + steps * dt * np.asarray(velocity, dtype=np.float64)


class TrajectoryPredictor(BaseEstimator):
    """Base class for predictors evaluated by the harness."""

    predictor_id: str = "base"

    def fit(self, X=None, y=None):
        return self

    def predict(self, scenario: Scenario) -> Prediction:
        raise NotImplementedError

    def predict_many(self, scenarios) -> list[Prediction]:
        return [self.predict(s) for s in scenarios]

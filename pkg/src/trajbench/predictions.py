"""Prediction representations returned by predictors.

Every predictor answers a scenario with one :class:`Prediction`, which maps
agent ids to a per-agent representation: a point sequence, a set of sampled
sequences, per-step probability grids, or a Gaussian mixture per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .validation import as_point, as_positions, check_covariances, check_positive, readonly

GRID_MASS_TOL = 1e-6
WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class PointPrediction:
    """A single deterministic trajectory of T positions."""

    points: np.ndarray  # (T, 2)

    def __post_init__(self):
        object.__setattr__(self, "points", as_positions(self.points, "points"))

    @property
    def horizon(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class SamplePrediction:
    """K sampled trajectories of T positions each."""

    samples: np.ndarray  # (K, T, 2)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] < 1:
            raise DataError(f"samples: expected shape (K >= 1, T, 2), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("samples: non-finite coordinates")
        object.__setattr__(self, "samples", readonly(arr))

    @property
    def k(self) -> int:
        return self.samples.shape[0]

    @property
    def horizon(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class GridPrediction:
    """Per-step probability mass over a grid: grids[t, iy, ix] sums to one."""

    origin: np.ndarray      # (2,) world coordinates of the grid corner
    resolution: float       # meters per cell
    grids: np.ndarray       # (T, H, W), each slice summing to 1 +- 1e-6

    def __post_init__(self):
        object.__setattr__(self, "origin", readonly(as_point(self.origin, "origin").copy()))
        check_positive(self.resolution, "resolution")
        arr = np.asarray(self.grids, dtype=np.float64)
        if arr.ndim != 3:
            raise DataError(f"grids: expected shape (T, H, W), got {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise DataError("grids: probabilities must be finite and non-negative")
        sums = arr.reshape(arr.shape[0], -1).sum(axis=1)
        if np.any(np.abs(sums - 1.0) > GRID_MASS_TOL):
            raise DataError(f"grids: each step must sum to 1 within {GRID_MASS_TOL}")
        object.__setattr__(self, "grids", readonly(arr))

    @property
    def horizon(self) -> int:
        return self.grids.shape[0]

    def density_at(self, t: int, point) -> float:
        """Probability density (cell mass / cell area) at a world point."""
        p = as_point(point)
        cell = np.floor((p - self.origin) / self.resolution).astype(int)
        h, w = self.grids.shape[1:]
        if not (0 <= cell[0] < w and 0 <= cell[1] < h):
            return 0.0
        return float(self.grids[t, cell[1], cell[0]] / (self.resolution**2))


@dataclass(frozen=True)
class MixturePrediction:
    """K motion modes, each a sequence of Gaussians, with mixture weights."""

    weights: np.ndarray      # (K,), non-negative, summing to 1 +- 1e-9
    means: np.ndarray        # (K, T, 2)
    covariances: np.ndarray  # (K, T, 2, 2) symmetric positive definite

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if w.size < 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DataError("weights: need K >= 1 finite non-negative values")
        if abs(float(w.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise DataError(f"weights must sum to 1 within {WEIGHT_SUM_TOL}, got {w.sum()!r}")
        means = np.asarray(self.means, dtype=np.float64)
        if means.ndim != 3 or means.shape[2] != 2 or means.shape[0] != w.size:
            raise DataError(f"means: expected shape (K, T, 2) with K={w.size}, got {means.shape}")
        if not np.all(np.isfinite(means)):
            raise DataError("means: non-finite coordinates")
        covs = check_covariances(self.covariances)
        if covs.shape != (*means.shape[:2], 2, 2):
            raise DataError(f"covariances: expected shape {(*means.shape[:2], 2, 2)}, got {covs.shape}")
        object.__setattr__(self, "weights", readonly(w))
        object.__setattr__(self, "means", readonly(means))
        object.__setattr__(self, "covariances", covs)

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def horizon(self) -> int:
        return self.means.shape[1]

    def density_at(self, t: int, point) -> float:
        """Mixture density sum_i pi_i N(point; mu_it, Sigma_it)."""
        p = as_point(point)
        total = 0.0
        for i in range(self.k):
            mu = self.means[i, t]
            cov = self.covariances[i, t]
            det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
            diff = p - mu
            # inverse of a 2x2 matrix, written out
            quad = (
                cov[1, 1] * diff[0] * diff[0]
                - (cov[0, 1] + cov[1, 0]) * diff[0] * diff[1]
                + cov[0, 0] * diff[1] * diff[1]
            ) / det
            total += self.weights[i] * np.exp(-0.5 * quad) / (2.0 * np.pi * np.sqrt(det))
        return float(total)


AgentPrediction = PointPrediction | SamplePrediction | GridPrediction | MixturePrediction


@dataclass(frozen=True)
class Prediction:
    """Per-agent predictions for one scenario, keyed by dense agent id."""

    per_agent: dict[int, AgentPrediction] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "per_agent", dict(self.per_agent))

    def for_agent(self, agent_id: int) -> AgentPrediction:
        try:
            return self.per_agent[agent_id]
        except KeyError:
            raise DataError(f"no prediction for agent {agent_id}") from None

    @property
    def agent_ids(self) -> list[int]:
        return sorted(self.per_agent)


def as_sample_set(prediction: AgentPrediction) -> SamplePrediction:
    """View a deterministic prediction as a K=1 sample set."""
    if isinstance(prediction, SamplePrediction):
        return prediction
    if isinstance(prediction, PointPrediction):
        return SamplePrediction(prediction.points[None, :, :])
    raise DataError(f"cannot view {type(prediction).__name__} as a sample set")

"""Force-based predictors: goal attraction plus exponential repulsion.

The social-force model accelerates every agent toward a goal projected from
its filtered velocity and repels it from other agents (anisotropically, less
from behind) and from occupied grid cells. The predictive variant adds an
evasive term triggered by extrapolated time-to-collision, so agents react to
conflicts before getting close.

Integration is semi-implicit Euler with substeps that divide the frame period
evenly; speeds are clamped at 1.3x the desired speed to keep dense scenes from
blowing up.
"""

from __future__ import annotations

import numpy as np

from ..data import EnvironmentModel
from ..errors import DataError
from ..predictions import PointPrediction, Prediction
from ..scenarios import Scenario
from .base import TrajectoryPredictor, VelocityFilter, estimate_velocity, project_goal

_EPS = 1e-12
_SPEED_CAP_FACTOR = 1.3
_SPEED_CAP_FLOOR = 0.1  # m/s; lets a resting agent still be displaced by repulsion


class SocialForceModel(TrajectoryPredictor):
    """Goal attraction with anisotropic exponential repulsion.

    Acceleration of agent i:

        (v_des * e_goal - v) / relaxation_time
        + sum_j repulsion_strength * exp((2 radius - d_ij) / repulsion_range)
                 * n_ij * (anisotropy + (1 - anisotropy) * (1 + cos phi_ij) / 2)
        + sum_obstacles obstacle_strength * exp((radius - d_iW) / obstacle_range) * n_iW

    where n points from the other entity toward agent i and phi is the angle
    between i's motion direction and the direction toward the other entity.
    """

    predictor_id = "social_force"

    def __init__(
        self,
        relaxation_time: float = 0.5,
        repulsion_strength: float = 2.0,
        repulsion_range: float = 0.3,
        anisotropy: float = 0.3,
        obstacle_strength: float = 5.0,
        obstacle_range: float = 0.3,
        radius: float = 0.35,
        sub_dt: float = 0.1,
        filter_sigma: float | None = 1.5,
    ):
        self.relaxation_time = relaxation_time
        self.repulsion_strength = repulsion_strength
        self.repulsion_range = repulsion_range
        self.anisotropy = anisotropy
        self.obstacle_strength = obstacle_strength
        self.obstacle_range = obstacle_range
        self.radius = radius
        self.sub_dt = sub_dt
        self.filter_sigma = filter_sigma

    # ------------------------------------------------------------------
    def _validate(self, dt: float) -> None:
        positive = {
            "relaxation_time": self.relaxation_time,
            "repulsion_range": self.repulsion_range,
            "obstacle_range": self.obstacle_range,
            "radius": self.radius,
            "sub_dt": self.sub_dt,
        }
        for name, value in positive.items():
            if not np.isfinite(value) or value <= 0:
                raise DataError(f"{name} must be positive, got {value!r}")
        for name, value in (
            ("repulsion_strength", self.repulsion_strength),
            ("obstacle_strength", self.obstacle_strength),
        ):
            if not np.isfinite(value) or value < 0:
                raise DataError(f"{name} must be non-negative, got {value!r}")
        if not (0.0 <= self.anisotropy <= 1.0):
            raise DataError(f"anisotropy must lie in [0, 1], got {self.anisotropy!r}")
        if self.sub_dt > dt * (1 + 1e-9):
            raise DataError(f"sub_dt {self.sub_dt} exceeds the frame period {dt}")

    def predict(self, scenario: Scenario) -> Prediction:
        self._validate(scenario.dt)
        waypoints = self._rollout(scenario)
        per_agent = {
            agent.agent_id: PointPrediction(waypoints[i])
            for i, agent in enumerate(scenario.agents)
        }
        return Prediction(per_agent)

    def _rollout(self, scenario: Scenario) -> np.ndarray:
        dt = scenario.dt
        velocity_filter = VelocityFilter(self.filter_sigma)
        p = np.array([a.observed[-1] for a in scenario.agents])
        v = np.array([estimate_velocity(a.observed, dt, velocity_filter) for a in scenario.agents])
        v_des = np.linalg.norm(v, axis=1)
        goals = project_goal(p, v, dt)

        obstacles = _obstacle_field(scenario.environment)
        n_sub = max(1, int(round(dt / self.sub_dt)))
        h = dt / n_sub
        speed_cap = _SPEED_CAP_FACTOR * np.maximum(v_des, _SPEED_CAP_FLOOR)

        out = np.empty((len(scenario.agents), scenario.prediction_frames, 2))
        for frame in range(scenario.prediction_frames):
            for _ in range(n_sub):
                a = self._acceleration(p, v, v_des, goals, obstacles)
                v = v + a * h
                speed = np.linalg.norm(v, axis=1)
                over = speed > speed_cap
                if np.any(over):
                    v[over] *= (speed_cap[over] / speed[over])[:, None]
                p = p + v * h
            out[:, frame] = p
        if not np.all(np.isfinite(out)):
            raise DataError("force rollout produced non-finite states")
        return out

    def _acceleration(self, p, v, v_des, goals, obstacles) -> np.ndarray:
        to_goal = goals - p
        dist = np.linalg.norm(to_goal, axis=1)
        e_goal = np.where(dist[:, None] > _EPS, to_goal / np.maximum(dist, _EPS)[:, None], 0.0)
        a = (v_des[:, None] * e_goal - v) / self.relaxation_time
        if p.shape[0] > 1:
            a = a + agent_repulsion(
                p,
                v,
                e_goal,
                radius=self.radius,
                strength=self.repulsion_strength,
                decay_range=self.repulsion_range,
                anisotropy=self.anisotropy,
            )
        if obstacles is not None:
            a = a + obstacle_repulsion(
                p,
                obstacles,
                radius=self.radius,
                strength=self.obstacle_strength,
                decay_range=self.obstacle_range,
            )
        return a


class PredictiveSocialForceModel(SocialForceModel):
    """Social force plus anticipatory collision avoidance.

    For each agent pair the model extrapolates current velocities, finds the
    earliest time within ``horizon`` at which the extrapolations come within
    contact distance, and applies an evasive push between the predicted
    positions, stronger for more imminent conflicts.
    """

    predictor_id = "predictive_social_force"

    def __init__(
        self,
        relaxation_time: float = 0.5,
        repulsion_strength: float = 2.0,
        repulsion_range: float = 0.3,
        anisotropy: float = 0.3,
        obstacle_strength: float = 5.0,
        obstacle_range: float = 0.3,
        radius: float = 0.35,
        sub_dt: float = 0.1,
        filter_sigma: float | None = 1.5,
        horizon: float = 4.0,
        evasion_strength: float = 2.0,
        personal_distance: float = 0.5,
    ):
        super().__init__(
            relaxation_time=relaxation_time,
            repulsion_strength=repulsion_strength,
            repulsion_range=repulsion_range,
            anisotropy=anisotropy,
            obstacle_strength=obstacle_strength,
            obstacle_range=obstacle_range,
            radius=radius,
            sub_dt=sub_dt,
            filter_sigma=filter_sigma,
        )
        self.horizon = horizon
        self.evasion_strength = evasion_strength
        self.personal_distance = personal_distance

    def _validate(self, dt: float) -> None:
        super()._validate(dt)
        for name, value in (("horizon", self.horizon), ("personal_distance", self.personal_distance)):
            if not np.isfinite(value) or value <= 0:
                raise DataError(f"{name} must be positive, got {value!r}")
        if not np.isfinite(self.evasion_strength) or self.evasion_strength < 0:
            raise DataError(f"evasion_strength must be non-negative, got {self.evasion_strength!r}")

    def _acceleration(self, p, v, v_des, goals, obstacles) -> np.ndarray:
        a = super()._acceleration(p, v, v_des, goals, obstacles)
        if p.shape[0] > 1:
            a = a + anticipatory_acceleration(
                p,
                v,
                radius=self.radius,
                horizon=self.horizon,
                strength=self.evasion_strength,
                personal_distance=self.personal_distance,
            )
        return a


# ---------------------------------------------------------------------------
# force terms (module-level so they can be unit-tested in isolation)


def agent_repulsion(p, v, e_goal, radius, strength, decay_range, anisotropy) -> np.ndarray:
    """Summed anisotropic exponential repulsion between all agent pairs."""
    d_vec = p[:, None, :] - p[None, :, :]          # vector from j to i
    d = np.linalg.norm(d_vec, axis=2)
    np.fill_diagonal(d, np.inf)
    n_hat = d_vec / np.maximum(d, _EPS)[:, :, None]

    speed = np.linalg.norm(v, axis=1)
    e_dir = np.where(speed[:, None] > _EPS, v / np.maximum(speed, _EPS)[:, None], e_goal)
    cos_phi = -(e_dir[:, None, :] * n_hat).sum(axis=2)
    weight = anisotropy + (1.0 - anisotropy) * (1.0 + cos_phi) / 2.0

    magnitude = strength * np.exp((2.0 * radius - d) / decay_range)
    return ((magnitude * weight)[:, :, None] * n_hat).sum(axis=1)


def obstacle_repulsion(p, obstacles, radius, strength, decay_range) -> np.ndarray:
    """Repulsion from the nearest occupied grid cell per agent."""
    dist, idx = obstacles.query(p)
    centers = obstacles.data[idx]
    n_hat = (p - centers) / np.maximum(dist, _EPS)[:, None]
    magnitude = strength * np.exp((radius - dist) / decay_range)
    return magnitude[:, None] * n_hat


def anticipatory_acceleration(p, v, radius, horizon, strength, personal_distance) -> np.ndarray:
    """Evasive acceleration from extrapolated time-to-collision per pair.

    The push for a conflicting pair has magnitude
    ``strength * (horizon - t_c) / (horizon * t_c)`` (later conflicts push
    less) and points from the other agent's predicted position at t_c toward
    the own one. To keep the magnitude bounded as t_c approaches zero it is
    saturated once the extrapolation enters the personal distance faster than
    the closing speed can resolve, by flooring t_c at
    ``personal_distance / closing_speed``.
    """
    n = p.shape[0]
    dp = p[:, None, :] - p[None, :, :]
    dv = v[:, None, :] - v[None, :, :]
    a_q = (dv**2).sum(axis=2)
    b_q = 2.0 * (dp * dv).sum(axis=2)
    c_q = (dp**2).sum(axis=2) - (2.0 * radius) ** 2

    disc = b_q**2 - 4.0 * a_q * c_q
    moving = a_q > _EPS
    has_root = (disc >= 0.0) & moving
    sqrt_disc = np.sqrt(np.where(has_root, disc, 0.0))
    denom = np.where(moving, 2.0 * a_q, 1.0)
    root_lo = (-b_q - sqrt_disc) / denom
    root_hi = (-b_q + sqrt_disc) / denom
    t_c = np.where(root_lo > _EPS, root_lo, root_hi)

    valid = has_root & (t_c > _EPS) & (t_c <= horizon)
    np.fill_diagonal(valid, False)
    if not np.any(valid):
        return np.zeros_like(p)

    closing = np.sqrt(np.maximum(a_q, _EPS))
    t_floor = personal_distance / np.maximum(closing, 0.1)
    t_eff = np.maximum(t_c, t_floor)
    magnitude = strength * (horizon - t_eff) / (horizon * t_eff)
    magnitude = np.where(valid, np.maximum(magnitude, 0.0), 0.0)

    direction = dp + dv * t_c[:, :, None]
    norm = np.linalg.norm(direction, axis=2)
    fallback = dp / np.maximum(np.linalg.norm(dp, axis=2), _EPS)[:, :, None]
    unit = np.where(norm[:, :, None] > _EPS, direction / np.maximum(norm, _EPS)[:, :, None], fallback)
    return (magnitude[:, :, None] * unit).sum(axis=1)


def _obstacle_field(environment: EnvironmentModel | None):
    if environment is None or environment.grid is None:
        return None
    centers = environment.occupied_cell_centers()
    if centers.shape[0] == 0:
        return None
    from scipy.spatial import cKDTree

    return cKDTree(centers)

"""Testing-scenario extraction from uniformly sampled datasets.

A scenario bundles, at one anchor frame, the observation windows of every
agent that was seen in all observation frames, plus ground-truth futures for
the agents that additionally stay visible through the whole prediction
horizon (the targets). Agents with a full observation window but an
incomplete future are kept as prediction context and excluded from metrics.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import Dataset, EnvironmentModel
from .errors import ConfigError, DataError
from .validation import as_positions


@dataclass(frozen=True)
class ScenarioSpec:
    """Extraction parameters: window lengths in frames, stride and crowd floor."""

    observation_frames: int = 8
    prediction_frames: int = 12
    min_agents: int = 2
    stride: int = 1

    def __post_init__(self):
        if self.observation_frames < 2:
            raise ConfigError("observation_frames must be >= 2 (velocity needs one finite difference)")
        if self.prediction_frames < 1:
            raise ConfigError("prediction_frames must be >= 1")
        if self.min_agents < 1:
            raise ConfigError("min_agents must be >= 1")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")

    @classmethod
    def from_seconds(
        cls,
        observation_s: float,
        prediction_s: float,
        frequency_hz: float,
        min_agents: int = 2,
        stride: int = 1,
    ) -> "ScenarioSpec":
        """Convert second-valued horizons to frames, warning on rounding."""
        o_p = round(observation_s * frequency_hz)
        t_p = round(prediction_s * frequency_hz)
        if abs(o_p - observation_s * frequency_hz) > 1e-9 or abs(t_p - prediction_s * frequency_hz) > 1e-9:
            warnings.warn(
                f"horizons ({observation_s}s, {prediction_s}s) are not whole frames at "
                f"{frequency_hz} Hz; rounded to ({o_p}, {t_p}) frames"
            )
        return cls(int(o_p), int(t_p), min_agents, stride)

    def observation_seconds(self, frequency_hz: float) -> float:
        return self.observation_frames / frequency_hz

    def prediction_seconds(self, frequency_hz: float) -> float:
        return self.prediction_frames / frequency_hz


@dataclass(frozen=True)
class ScenarioAgent:
    """One agent inside a scenario: its observed window and optional future."""

    agent_id: int
    original_id: int
    observed: np.ndarray           # (O_p, 2)
    future: np.ndarray | None = None  # (T_p, 2) when is_target
    is_target: bool = False

    def __post_init__(self):
        object.__setattr__(self, "observed", as_positions(self.observed, "observed"))
        if self.is_target:
            if self.future is None:
                raise DataError("target agent needs a ground-truth future")
            object.__setattr__(self, "future", as_positions(self.future, "future"))
        elif self.future is not None:
            raise DataError("context agent must not carry a future")


@dataclass(frozen=True)
class Scenario:
    """The atomic unit of evaluation, anchored at one frame."""

    anchor: int
    dt: float
    observation_frames: int
    prediction_frames: int
    agents: tuple[ScenarioAgent, ...]
    environment: EnvironmentModel | None = None

    def __post_init__(self):
        if not self.agents:
            raise DataError("scenario without agents")
        for agent in self.agents:
            if agent.observed.shape[0] != self.observation_frames:
                raise DataError(
                    f"agent {agent.original_id}: observed window has {agent.observed.shape[0]} "
                    f"frames, expected {self.observation_frames}"
                )
            if agent.is_target and agent.future.shape[0] != self.prediction_frames:
                raise DataError(
                    f"agent {agent.original_id}: future has {agent.future.shape[0]} "
                    f"frames, expected {self.prediction_frames}"
                )
        if not any(a.is_target for a in self.agents):
            raise DataError("scenario without a target agent")

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def targets(self) -> tuple[ScenarioAgent, ...]:
        return tuple(a for a in self.agents if a.is_target)

    def with_horizon(self, prediction_frames: int) -> "Scenario":
        """Same anchor and observations, futures truncated to a shorter horizon."""
        if prediction_frames > self.prediction_frames:
            raise ConfigError(
                f"cannot extend horizon from {self.prediction_frames} to {prediction_frames} frames"
            )
        agents = tuple(
            ScenarioAgent(
                a.agent_id,
                a.original_id,
                a.observed,
                a.future[:prediction_frames] if a.is_target else None,
                a.is_target,
            )
            for a in self.agents
        )
        return Scenario(self.anchor, self.dt, self.observation_frames, prediction_frames, agents, self.environment)

    def with_observation(self, observation_frames: int) -> "Scenario":
        """Same anchor and futures, observations shortened to the most recent frames."""
        if observation_frames > self.observation_frames:
            raise ConfigError(
                f"cannot extend observation from {self.observation_frames} to {observation_frames} frames"
            )
        if observation_frames < 2:
            raise ConfigError("observation window must keep at least 2 frames")
        agents = tuple(
            ScenarioAgent(
                a.agent_id,
                a.original_id,
                a.observed[self.observation_frames - observation_frames :],
                a.future,
                a.is_target,
            )
            for a in self.agents
        )
        return Scenario(self.anchor, self.dt, observation_frames, self.prediction_frames, agents, self.environment)


def extract_scenarios(dataset: Dataset, spec: ScenarioSpec) -> list[Scenario]:
    """Enumerate all scenarios of ``spec`` present in the dataset.

    One candidate is considered per anchor frame on the stride grid; an agent
    joins a candidate iff it is observed in every one of the observation
    frames, and counts as target iff it additionally appears in all prediction
    frames. Candidates keep only if they reach ``min_agents`` agents and at
    least one target. The result is deterministic and independent of agent
    ordering in the input.
    """
    o_p, t_p = spec.observation_frames, spec.prediction_frames
    dt = dataset.dt
    lo, hi = dataset.frame_range()

    index = []
    for track in sorted(dataset.tracks, key=lambda t: t.agent_id):
        frame_to_idx = {int(f): i for i, f in enumerate(track.frames)}
        index.append((track, frame_to_idx))

    scenarios = []
    for anchor in range(lo + o_p - 1, hi + 1, spec.stride):
        agents = []
        for track, frame_to_idx in index:
            obs_idx = _window_indices(frame_to_idx, anchor - o_p + 1, anchor)
            if obs_idx is None:
                continue
            fut_idx = _window_indices(frame_to_idx, anchor + 1, anchor + t_p)
            observed = track.positions[obs_idx]
            if fut_idx is not None:
                agents.append(
                    ScenarioAgent(track.agent_id, track.original_id, observed, track.positions[fut_idx], True)
                )
            else:
                agents.append(ScenarioAgent(track.agent_id, track.original_id, observed))
        if len(agents) < spec.min_agents or not any(a.is_target for a in agents):
            continue
        scenarios.append(
            Scenario(anchor, dt, o_p, t_p, tuple(agents), dataset.environment)
        )
    return scenarios


def _window_indices(frame_to_idx: dict, first: int, last: int):
    idx = []
    for frame in range(first, last + 1):
        i = frame_to_idx.get(frame)
        if i is None:
            return None
        idx.append(i)
    return np.asarray(idx)


def scenario_count_by_crowd(scenarios: Sequence[Scenario]) -> dict[int, int]:
    """Histogram of scenarios over the number of agents present."""
    return dict(sorted(Counter(s.n_agents for s in scenarios).items()))

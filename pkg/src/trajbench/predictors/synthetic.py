"""Deterministic synthetic fixtures for validating predictors.

The three two-agent interaction scenarios (chasing, opposing, crossing) use
exact constant-velocity observation windows and analytic straight-line
ground-truth futures: they probe the predicted interaction, not the realism of
the ground truth.
"""

from __future__ import annotations

import numpy as np

from ..data import AgentTrack, Dataset
from ..errors import ConfigError
from ..scenarios import Scenario, ScenarioAgent
from ..validation import check_positive

SYNTHETIC_KINDS = ("chasing", "opposing", "crossing")


def generate_synthetic(
    kind: str,
    speed: float = 1.0,
    y_offset: float = 0.2,
    frequency_hz: float = 2.5,
    observation_frames: int = 8,
    prediction_frames: int = 12,
) -> Scenario:
    """Build one synthetic two-agent scenario of the given kind."""
    tracks = _synthetic_positions(kind, speed, y_offset, frequency_hz, observation_frames, prediction_frames)
    dt = 1.0 / frequency_hz
    agents = tuple(
        ScenarioAgent(
            agent_id=i,
            original_id=i,
            observed=pos[:observation_frames],
            future=pos[observation_frames:],
            is_target=True,
        )
        for i, pos in enumerate(tracks)
    )
    return Scenario(
        anchor=observation_frames - 1,
        dt=dt,
        observation_frames=observation_frames,
        prediction_frames=prediction_frames,
        agents=agents,
    )


def synthetic_dataset(
    kind: str,
    speed: float = 1.0,
    y_offset: float = 0.2,
    frequency_hz: float = 2.5,
    observation_frames: int = 8,
    prediction_frames: int = 12,
    name: str | None = None,
) -> Dataset:
    """The same fixture as full tracks, for pipelines that start from a dataset."""
    tracks = _synthetic_positions(kind, speed, y_offset, frequency_hz, observation_frames, prediction_frames)
    n = observation_frames + prediction_frames
    frames = np.arange(n, dtype=np.int64)
    times = frames / frequency_hz
    agent_tracks = tuple(
        AgentTrack(agent_id=i, original_id=i, frames=frames, times=times, positions=pos)
        for i, pos in enumerate(tracks)
    )
    return Dataset(
        tracks=agent_tracks,
        frequency_hz=frequency_hz,
        name=name if name is not None else f"synthetic-{kind}",
    )


def constant_velocity_dataset(
    n_agents: int = 4,
    n_frames: int = 80,
    frequency_hz: float = 2.5,
    seed: int = 0,
    speed_range: tuple[float, float] = (0.5, 1.8),
    extent: float = 20.0,
    name: str = "synthetic-linear",
) -> Dataset:
    """Random agents moving at exact constant velocities over the whole span.

    Every agent is present in every frame, so extraction yields a scenario at
    every admissible anchor and constant-velocity predictors are exact on it.
    """
    check_positive(frequency_hz, "frequency_hz")
    if n_agents < 1 or n_frames < 2:
        raise ConfigError("need at least one agent and two frames")
    rng = np.random.default_rng(seed)
    dt = 1.0 / frequency_hz
    frames = np.arange(n_frames, dtype=np.int64)
    times = frames / frequency_hz
    tracks = []
    for i in range(n_agents):
        start = rng.uniform(-extent, extent, size=2)
        heading = rng.uniform(0, 2 * np.pi)
        speed = rng.uniform(*speed_range)
        velocity = speed * np.array([np.cos(heading), np.sin(heading)])
        positions = start + frames[:, None] * dt * velocity
        tracks.append(AgentTrack(agent_id=i, original_id=i, frames=frames, times=times, positions=positions))
    return Dataset(tracks=tuple(tracks), frequency_hz=frequency_hz, name=name)


def _synthetic_positions(kind, speed, y_offset, frequency_hz, observation_frames, prediction_frames):
    check_positive(speed, "speed")
    check_positive(frequency_hz, "frequency_hz")
    if observation_frames < 2 or prediction_frames < 1:
        raise ConfigError("need observation_frames >= 2 and prediction_frames >= 1")
    step = speed / frequency_hz
    if kind == "chasing":
        # same line, same direction, 1 m between follower and leader
        anchors = [np.array([0.0, 0.0]), np.array([1.0, 0.0])]
        headings = [np.array([1.0, 0.0]), np.array([1.0, 0.0])]
    elif kind == "opposing":
        # head-on courses offset laterally by y_offset
        anchors = [np.array([-step, 0.0]), np.array([step, y_offset])]
        headings = [np.array([1.0, 0.0]), np.array([-1.0, 0.0])]
    elif kind == "crossing":
        # orthogonal headings meeting near the origin 2 s past the anchor
        anchors = [np.array([-2.0 * speed, 0.0]), np.array([y_offset, -2.0 * speed])]
        headings = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    else:
        raise ConfigError(f"unknown synthetic scenario kind {kind!r}; expected one of {SYNTHETIC_KINDS}")

    n = observation_frames + prediction_frames
    k = np.arange(n, dtype=np.float64) - (observation_frames - 1)
    return [anchor + k[:, None] * step * heading for anchor, heading in zip(anchors, headings)]

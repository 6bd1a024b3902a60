"""Shared fixtures and independent oracles used across the test suite."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from trajbench import AgentTrack, Dataset, write_dataset

ADAPTER = Path(__file__).parent / "adapters" / "reference_adapter.py"


def brute_force_ade(predicted, gt) -> float:
    """Independent distance-loop oracle for the average displacement error."""
    total = 0.0
    for (px, py), (gx, gy) in zip(predicted, gt):
        total += math.hypot(px - gx, py - gy)
    return total / len(predicted)


def brute_force_fde(predicted, gt) -> float:
    px, py = predicted[-1]
    gx, gy = gt[-1]
    return math.hypot(px - gx, py - gy)


def brute_force_top_k(samples, gt, per_sample) -> float:
    return min(per_sample(s, gt) for s in samples)


def arc_dataset(n_agents: int = 2, n_frames: int = 60, radius: float = 5.0, frequency_hz: float = 2.5) -> Dataset:
    """Agents walking a circular arc at unit speed; curved ground truth."""
    dt = 1.0 / frequency_hz
    omega = 1.0 / radius  # rad/s at 1 m/s tangential speed
    frames = np.arange(n_frames, dtype=np.int64)
    times = frames * dt
    tracks = []
    for i in range(n_agents):
        phase = i * (2 * np.pi / max(n_agents, 1))
        angles = omega * times + phase
        positions = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        tracks.append(AgentTrack(agent_id=i, original_id=i, frames=frames, times=times, positions=positions))
    return Dataset(tracks=tuple(tracks), frequency_hz=frequency_hz, name="synthetic-arc")


def write_config(tmp_path: Path, dataset: Dataset, filename: str = "config.yaml", **overrides) -> Path:
    """Write a dataset plus a minimal valid run configuration around it."""
    data_path = tmp_path / f"{dataset.name or 'data'}.txt"
    write_dataset(dataset, data_path)
    config = {
        "version": 1,
        "seed": 0,
        "dataset": {"path": str(data_path), "format": "native"},
        # noiseless fixtures: smoothing would bend track ends (clipped windows)
        "preprocess": {"target_hz": dataset.frequency_hz, "smoothing_window": 1},
        "scenario": {"observation_frames": 8, "prediction_frames": 12, "min_agents": 2, "stride": 1},
        "predictor": {"id": "cvm"},
        "experiment": {"kind": "single"},
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(config.get(key), dict):
            config[key].update(value)
        else:
            config[key] = value
    path = tmp_path / filename
    path.write_text(yaml.safe_dump(config), encoding="utf-8")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

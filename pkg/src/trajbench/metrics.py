"""Geometric and probabilistic scoring plus scenario-level aggregation.

Per-scenario scores are the mean over that scenario's target agents; reports
then carry mean and population standard deviation across scenarios, optionally
grouped by a sweep key. Deterministic predictors are scored through the same
code path as K=1 sample sets.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .predictions import (
    AgentPrediction,
    GridPrediction,
    MixturePrediction,
    PointPrediction,
    Prediction,
    SamplePrediction,
    as_sample_set,
)
from .scenarios import Scenario

DENSITY_FLOOR = 1e-12

GEOMETRIC_METRICS = ("ade", "fde", "top_k_ade", "top_k_fde")
PROBABILISTIC_METRICS = ("nlp",)
KNOWN_METRICS = GEOMETRIC_METRICS + PROBABILISTIC_METRICS


def _check_pair(predicted, gt):
    predicted = np.asarray(predicted, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if predicted.shape != gt.shape or predicted.ndim != 2 or predicted.shape[1] != 2:
        raise DataError(f"length mismatch: predicted {predicted.shape} vs ground truth {gt.shape}")
    if predicted.shape[0] < 1:
        raise DataError("empty trajectories")
    return predicted, gt


def ade(predicted, gt) -> float:
    """Mean Euclidean distance between corresponding timesteps."""
    predicted, gt = _check_pair(predicted, gt)
    return float(np.linalg.norm(predicted - gt, axis=1).mean())


def fde(predicted, gt) -> float:
    """Euclidean distance at the last prediction step."""
    predicted, gt = _check_pair(predicted, gt)
    return float(np.linalg.norm(predicted[-1] - gt[-1]))


def top_k_ade(samples: SamplePrediction, gt) -> float:
    """ADE of the closest of the K sampled trajectories."""
    return min(ade(s, gt) for s in samples.samples)


def top_k_fde(samples: SamplePrediction, gt) -> float:
    """FDE of the closest of the K sampled trajectories."""
    return min(fde(s, gt) for s in samples.samples)


def nlp(prediction: MixturePrediction | GridPrediction, gt) -> float:
    """Mean negative log of the predicted density at the ground truth.

    Densities are floored at 1e-12 before the log so ground truth outside the
    predicted support stays finite.
    """
    gt = np.asarray(gt, dtype=np.float64)
    if not isinstance(prediction, (MixturePrediction, GridPrediction)):
        raise DataError(f"nlp needs a density representation, got {type(prediction).__name__}")
    if gt.shape != (prediction.horizon, 2):
        raise DataError(f"length mismatch: prediction horizon {prediction.horizon} vs ground truth {gt.shape}")
    total = 0.0
    for t in range(prediction.horizon):
        density = max(prediction.density_at(t, gt[t]), DENSITY_FLOOR)
        total -= math.log(density)
    return total / prediction.horizon


def score_agent(metric: str, prediction: AgentPrediction, gt) -> float:
    """Evaluate one named metric for one agent."""
    if metric == "ade":
        return ade(_single_trajectory(prediction), gt)
    if metric == "fde":
        return fde(_single_trajectory(prediction), gt)
    if metric == "top_k_ade":
        return top_k_ade(as_sample_set(prediction), gt)
    if metric == "top_k_fde":
        return top_k_fde(as_sample_set(prediction), gt)
    if metric == "nlp":
        return nlp(prediction, gt)
    raise DataError(f"unknown metric {metric!r}; expected one of {KNOWN_METRICS}")


def _single_trajectory(prediction: AgentPrediction) -> np.ndarray:
    if isinstance(prediction, PointPrediction):
        return prediction.points
    if isinstance(prediction, SamplePrediction):
        if prediction.k != 1:
            raise DataError("ade/fde need a single trajectory; use top_k_ade/top_k_fde for K > 1 samples")
        return prediction.samples[0]
    raise DataError(f"ade/fde need point predictions, got {type(prediction).__name__}")


def score_scenario(prediction: Prediction, scenario: Scenario, metrics: Sequence[str]) -> dict[str, float]:
    """Per-scenario value of each metric: the mean over target agents."""
    values = {}
    for metric in metrics:
        per_target = [
            score_agent(metric, prediction.for_agent(agent.agent_id), agent.future)
            for agent in scenario.targets
        ]
        values[metric] = float(np.mean(per_target))
    return values


# ---------------------------------------------------------------------------
# aggregation


@dataclass(frozen=True)
class ReportRow:
    metric: str
    group_key: str       # name of the sweep variable ("" for plain runs)
    group_value: str     # formatted value of the sweep variable
    mean: float
    std: float
    count: int

    def __post_init__(self):
        if self.count <= 0:
            raise DataError("report cell without scenarios")
        if self.std < 0:
            raise DataError("negative standard deviation")


@dataclass(frozen=True)
class MetricReport:
    """Aggregated results plus the metadata needed to reproduce them."""

    rows: tuple[ReportRow, ...]
    metadata: dict = field(default_factory=dict)

    CSV_FIELDS = ("metric", "group_key", "group_value", "mean", "std", "count")

    def row(self, metric: str, group_value: str | None = None) -> ReportRow:
        for r in self.rows:
            if r.metric == metric and (group_value is None or r.group_value == group_value):
                return r
        raise KeyError((metric, group_value))

    def to_csv(self, path) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.CSV_FIELDS)
            for r in self.rows:
                writer.writerow([r.metric, r.group_key, r.group_value, repr(r.mean), repr(r.std), r.count])
        tmp.replace(path)

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "metric": r.metric,
                    "group_key": r.group_key,
                    "group_value": r.group_value,
                    "mean": r.mean,
                    "std": r.std,
                    "count": r.count,
                }
                for r in self.rows
            ],
            "metadata": self.metadata,
        }

    def write_meta(self, path) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        tmp.replace(path)


def aggregate(
    per_scenario_values: Sequence[dict[str, float]],
    group_key: str = "",
    group_values: Sequence[object] | None = None,
    metadata: dict | None = None,
) -> MetricReport:
    """Mean and population std of each metric across scenarios, per group cell.

    ``per_scenario_values`` holds one dict (metric -> value) per scenario;
    ``group_values`` assigns each scenario to a group cell (all scenarios fall
    into one unnamed cell when omitted). Rows come out sorted by metric name
    and group cell in first-appearance order, which keeps report files
    bit-reproducible.
    """
    if group_values is None:
        group_values = [""] * len(per_scenario_values)
    if len(group_values) != len(per_scenario_values):
        raise DataError("group_values must align with per_scenario_values")

    cell_order: list[object] = []
    cells: dict[object, list[dict[str, float]]] = {}
    for value, group in zip(per_scenario_values, group_values):
        if group not in cells:
            cells[group] = []
            cell_order.append(group)
        cells[group].append(value)

    metrics = sorted({m for values in per_scenario_values for m in values})
    rows = []
    for metric in metrics:
        for group in cell_order:
            samples = np.array([v[metric] for v in cells[group] if metric in v])
            if samples.size == 0:
                continue
            rows.append(
                ReportRow(
                    metric=metric,
                    group_key=group_key,
                    group_value=format_group_value(group),
                    mean=float(samples.mean()),
                    std=float(samples.std()),  # population std
                    count=int(samples.size),
                )
            )
    return MetricReport(rows=tuple(rows), metadata=metadata or {})


def format_group_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


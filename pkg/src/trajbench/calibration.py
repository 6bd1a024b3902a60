"""In-repo hyperparameter search honoring a bounded-space optimizer protocol.

The optimizer is a seeded random search followed by coordinate-descent
refinement around the incumbent: dependency-free, deterministic, and adequate
for the <= 10-dimensional spaces of the force models. The module boundary
(space in, result out) matches an external Bayesian optimizer's, so one can be
swapped in without touching callers.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, clone

from .data import AgentTrack, Dataset
from .errors import ConfigError, DataError
from .metrics import score_scenario
from .predictors import TrajectoryPredictor, make_predictor
from .predictors.forces import PredictiveSocialForceModel, SocialForceModel
from .scenarios import Scenario, ScenarioSpec, extract_scenarios


@dataclass(frozen=True)
class ParamRange:
    """Search interval of one hyperparameter."""

    name: str
    lower: float
    upper: float
    scale: str = "linear"  # or "log"

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ConfigError(f"{self.name}: lower bound must be below upper, got [{self.lower}, {self.upper}]")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"{self.name}: scale must be 'linear' or 'log', got {self.scale!r}")
        if self.scale == "log" and self.lower <= 0:
            raise ConfigError(f"{self.name}: log scale requires positive bounds")

    def sample(self, rng: np.random.Generator) -> float:
        if self.scale == "log":
            return float(np.exp(rng.uniform(np.log(self.lower), np.log(self.upper))))
        return float(rng.uniform(self.lower, self.upper))

    def clip(self, value: float) -> float:
        return float(min(max(value, self.lower), self.upper))

    def step(self, value: float, fraction: float, sign: int) -> float:
        """Move by a fraction of the (possibly log) span, staying in bounds."""
        if self.scale == "log":
            span = math.log(self.upper) - math.log(self.lower)
            return self.clip(math.exp(math.log(value) + sign * fraction * span))
        return self.clip(value + sign * fraction * (self.upper - self.lower))


@dataclass(frozen=True)
class ParamSpace:
    """Named, bounded hyperparameters a calibrator may adjust."""

    ranges: tuple[ParamRange, ...]

    def __post_init__(self):
        object.__setattr__(self, "ranges", tuple(self.ranges))
        names = [r.name for r in self.ranges]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate parameter names in space: {names}")
        if not self.ranges:
            raise ConfigError("empty parameter space")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.ranges)

    def sample(self, rng: np.random.Generator) -> dict[str, float]:
        return {r.name: r.sample(rng) for r in self.ranges}

    def clip(self, params: dict[str, float]) -> dict[str, float]:
        return {r.name: r.clip(params[r.name]) for r in self.ranges}

    def contains(self, params: dict[str, float]) -> bool:
        return all(r.lower <= params[r.name] <= r.upper for r in self.ranges)

    def range(self, name: str) -> ParamRange:
        for r in self.ranges:
            if r.name == name:
                return r
        raise KeyError(name)


def default_search_space(predictor: TrajectoryPredictor) -> ParamSpace:
    """Literature-envelope bounds for the built-in force models."""
    if isinstance(predictor, SocialForceModel):
        ranges = [
            ParamRange("relaxation_time", 0.2, 2.0),
            ParamRange("repulsion_strength", 0.0, 10.0),
            ParamRange("repulsion_range", 0.1, 3.0),
            ParamRange("anisotropy", 0.0, 1.0),
            ParamRange("radius", 0.2, 0.5),
        ]
        if isinstance(predictor, PredictiveSocialForceModel):
            ranges += [
                ParamRange("evasion_strength", 0.0, 10.0),
                ParamRange("horizon", 0.5, 5.0),
                ParamRange("personal_distance", 0.2, 1.0),
            ]
        return ParamSpace(tuple(ranges))
    raise ConfigError(f"no default search space for predictor {type(predictor).__name__}")


@dataclass(frozen=True)
class Trial:
    params: dict[str, float]
    value: float
    timestamp: float


@dataclass(frozen=True)
class CalibrationResult:
    """Search outcome: incumbent parameters plus the full evaluation trace."""

    best_params: dict[str, float]
    best_value: float
    trace: tuple[Trial, ...]
    seed: int
    budget: int

    def __post_init__(self):
        if len(self.trace) != self.budget:
            raise DataError(f"trace length {len(self.trace)} != budget {self.budget}")
        if abs(min(t.value for t in self.trace) - self.best_value) > 0:
            raise DataError("best value must be the minimum over the trace")

    def incumbent_values(self) -> list[float]:
        """Best objective after each trial; non-increasing by construction."""
        out, best = [], math.inf
        for t in self.trace:
            best = min(best, t.value)
            out.append(best)
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "best_params": self.best_params,
                "best_value": self.best_value,
                "seed": self.seed,
                "budget": self.budget,
                "trace": [
                    {"params": t.params, "value": t.value, "timestamp": t.timestamp} for t in self.trace
                ],
            },
            indent=2,
            sort_keys=True,
        )

    def write(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, text: str) -> "CalibrationResult":
        raw = json.loads(text)
        return cls(
            best_params=dict(raw["best_params"]),
            best_value=float(raw["best_value"]),
            trace=tuple(Trial(dict(t["params"]), float(t["value"]), float(t["timestamp"])) for t in raw["trace"]),
            seed=int(raw["seed"]),
            budget=int(raw["budget"]),
        )


def split_calibration(dataset: Dataset, fraction: float) -> tuple[Dataset, Dataset]:
    """Split a dataset by time into (calibration, holdout) subsets.

    The calibration side holds every detection earlier than the given
    fraction of the dataset's time span; tracks crossing the boundary are
    truncated at it, so no detection appears in both subsets.
    """
    if not (0.0 < fraction < 1.0):
        raise ConfigError(f"calibration fraction must lie in (0, 1), got {fraction}")
    t_lo, t_hi = dataset.time_range()
    threshold = t_lo + fraction * (t_hi - t_lo)

    def subset(keep_fn) -> list[AgentTrack]:
        tracks = []
        for track in dataset.tracks:
            mask = keep_fn(track.times)
            if not np.any(mask):
                continue
            tracks.append(
                track.with_data(
                    frames=track.frames[mask], times=track.times[mask], positions=track.positions[mask]
                )
            )
        return tracks

    cal_tracks = subset(lambda t: t < threshold)
    holdout_tracks = subset(lambda t: t >= threshold)
    if not cal_tracks or not holdout_tracks:
        raise DataError(f"fraction {fraction} leaves an empty calibration or holdout subset")
    make = lambda tracks: Dataset(
        tracks=tuple(tracks),
        frequency_hz=dataset.frequency_hz,
        name=dataset.name,
        environment=dataset.environment,
    )
    return make(cal_tracks), make(holdout_tracks)


class CalibrationSearch(BaseEstimator):
    """Random search plus coordinate refinement over a predictor's parameters.

    Mirrors the sklearn search-estimator idiom: ``fit(scenarios)`` evaluates
    exactly ``budget`` parameter settings (trial 1 is the predictor's current
    parameters) and exposes ``best_params_``, ``best_score_``, ``trace_`` and
    a ready-to-use ``best_estimator_``.
    """

    def __init__(
        self,
        estimator: TrajectoryPredictor,
        space: ParamSpace | None = None,
        budget: int = 200,
        seed: int = 0,
        objective: str = "fde",
        random_fraction: float = 0.6,
        refine: bool = True,
        refine_step: float = 0.2,
    ):
        self.estimator = estimator
        self.space = space
        self.budget = budget
        self.seed = seed
        self.objective = objective
        self.random_fraction = random_fraction
        self.refine = refine
        self.refine_step = refine_step

    def fit(self, scenarios: Sequence[Scenario], y=None):
        if self.budget < 1:
            raise ConfigError(f"budget must be >= 1, got {self.budget}")
        scenarios = list(scenarios)
        if not scenarios:
            raise DataError("empty calibration scenario set")
        space = self.space if self.space is not None else default_search_space(self.estimator)
        rng = np.random.default_rng(self.seed)

        trace: list[Trial] = []
        best_params: dict[str, float] | None = None
        best_value = math.inf

        def evaluate(params: dict[str, float]) -> float:
            candidate = clone(self.estimator).set_params(**params)
            values = [score_scenario(candidate.predict(s), s, [self.objective])[self.objective] for s in scenarios]
            return float(np.mean(values))

        def run_trial(params: dict[str, float]) -> bool:
            """Evaluate, append to the trace, and report incumbent improvement."""
            nonlocal best_params, best_value
            value = evaluate(params)
            trace.append(Trial(dict(params), value, time.time()))
            if value < best_value:
                best_value = value
                best_params = dict(params)
                return True
            return False

        defaults = {name: float(self.estimator.get_params()[name]) for name in space.names}
        run_trial(space.clip(defaults))

        n_random = self.budget - 1
        if self.refine and self.budget > 2:
            n_random = min(n_random, max(1, math.ceil((self.budget - 1) * self.random_fraction)))
        for _ in range(n_random):
            run_trial(space.sample(rng))

        steps = {name: self.refine_step for name in space.names}
        while len(trace) < self.budget:
            improved_this_cycle = False
            for name in space.names:
                if len(trace) >= self.budget:
                    break
                accepted = False
                for sign in (1, -1):
                    if len(trace) >= self.budget:
                        break
                    candidate = dict(best_params)
                    moved_to = space.range(name).step(best_params[name], steps[name], sign)
                    if moved_to == candidate[name]:
                        continue  # clipped against a bound; not worth a trial
                    candidate[name] = moved_to
                    if run_trial(candidate):
                        accepted = True
                        improved_this_cycle = True
                        break
                if not accepted:
                    steps[name] /= 2.0
            if not improved_this_cycle and all(s < 1e-6 for s in steps.values()):
                # converged; spend any remaining budget on random probes
                while len(trace) < self.budget:
                    run_trial(space.sample(rng))

        self.best_params_ = best_params
        self.best_score_ = best_value
        self.trace_ = tuple(trace)
        self.best_estimator_ = clone(self.estimator).set_params(**best_params)
        return self

    def result(self) -> CalibrationResult:
        return CalibrationResult(
            best_params=self.best_params_,
            best_value=self.best_score_,
            trace=self.trace_,
            seed=self.seed,
            budget=self.budget,
        )


def calibrate(
    predictor: TrajectoryPredictor | str,
    dataset: Dataset,
    spec: ScenarioSpec | None = None,
    space: ParamSpace | None = None,
    objective: str = "fde",
    objective_horizon_s: float = 4.8,
    budget: int = 200,
    seed: int = 0,
) -> CalibrationResult:
    """Optimize a predictor's parameters on scenarios from ``dataset``.

    The objective is the scenario-mean of ``objective`` at
    ``objective_horizon_s`` (regardless of the horizons later evaluated), so
    sweeps built on a calibration all share the same incumbent.
    """
    if isinstance(predictor, str):
        predictor = make_predictor(predictor)
    horizon_frames = round(objective_horizon_s * dataset.frequency_hz)
    if spec is None:
        spec = ScenarioSpec(prediction_frames=horizon_frames)
    else:
        spec = replace(spec, prediction_frames=horizon_frames)
    scenarios = extract_scenarios(dataset, spec)
    if not scenarios:
        raise DataError("empty calibration scenario set")
    search = CalibrationSearch(predictor, space=space, budget=budget, seed=seed, objective=objective)
    search.fit(scenarios)
    return search.result()

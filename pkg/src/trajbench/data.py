"""Canonical in-memory data model: detections, tracks, environments, datasets.

All containers are immutable once constructed (numpy arrays are frozen), so a
loaded dataset can be shared freely across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .validation import as_point, as_positions, check_positive, readonly

# Grid cell label convention, shared by text matrices and grayscale images:
# 0 = occupied, 255 = free, anything in between is a semantic class id.
OCCUPIED = 0
FREE = 255


@dataclass(frozen=True)
class Detection:
    """One labeled observation of an agent: where it was and when."""

    frame: int
    time: float
    agent_id: int
    x: float
    y: float


@dataclass(frozen=True)
class AgentTrack:
    """Time-ordered detections of a single agent.

    ``agent_id`` is a dense internal index assigned at dataset construction;
    ``original_id`` keeps the id found in the source file for reporting.
    """

    agent_id: int
    original_id: int
    frames: np.ndarray    # (n,) int64
    times: np.ndarray     # (n,) float64, strictly increasing
    positions: np.ndarray  # (n, 2) float64, finite

    def __post_init__(self):
        frames = readonly(np.asarray(self.frames, dtype=np.int64))
        times = readonly(np.asarray(self.times, dtype=np.float64))
        positions = as_positions(self.positions, f"track {self.original_id}")
        if not (len(frames) == len(times) == len(positions)):
            raise DataError(f"track {self.original_id}: frames/times/positions length mismatch")
        if len(times) == 0:
            raise DataError(f"track {self.original_id}: empty track")
        if np.any(np.diff(times) <= 0):
            raise DataError(f"track {self.original_id}: timestamps must be strictly increasing")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", positions)

    def __len__(self) -> int:
        return len(self.frames)

    def detections(self) -> Iterable[Detection]:
        for f, t, (x, y) in zip(self.frames, self.times, self.positions):
            yield Detection(int(f), float(t), self.original_id, float(x), float(y))

    def with_data(self, frames=None, times=None, positions=None) -> "AgentTrack":
        return replace(
            self,
            frames=self.frames if frames is None else frames,
            times=self.times if times is None else times,
            positions=self.positions if positions is None else positions,
        )


@dataclass(frozen=True)
class EnvironmentModel:
    """Static context shared by all agents: grid map and goal points.

    Cell ``(ix, iy)`` covers the square whose center is
    ``origin + (cell + 0.5) * resolution``; the grid array is indexed
    ``grid[iy, ix]``.
    """

    resolution: float = 1.0
    origin: np.ndarray = field(default_factory=lambda: np.zeros(2))
    grid: np.ndarray | None = None    # (H, W) int16 cell labels
    goals: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    source: str | None = None         # path the grid was loaded from, if any

    def __post_init__(self):
        check_positive(self.resolution, "resolution")
        object.__setattr__(self, "origin", readonly(as_point(self.origin, "origin").copy()))
        goals = np.asarray(self.goals, dtype=np.float64).reshape(-1, 2)
        if goals.size and not np.all(np.isfinite(goals)):
            raise DataError("goals: non-finite coordinates")
        object.__setattr__(self, "goals", readonly(goals))
        if self.grid is not None:
            grid = np.asarray(self.grid, dtype=np.int16)
            if grid.ndim != 2 or grid.shape[0] < 1 or grid.shape[1] < 1:
                raise DataError(f"grid must be a 2D array of at least 1x1, got shape {grid.shape}")
            object.__setattr__(self, "grid", readonly(grid))

    @property
    def shape(self) -> tuple[int, int] | None:
        return None if self.grid is None else self.grid.shape

    def cell_center(self, ix: int, iy: int) -> np.ndarray:
        return self.origin + (np.array([ix, iy], dtype=np.float64) + 0.5) * self.resolution

    def world_to_cell(self, point) -> tuple[int, int]:
        p = as_point(point)
        cell = np.floor((p - self.origin) / self.resolution).astype(int)
        return int(cell[0]), int(cell[1])

    def is_occupied(self, ix: int, iy: int) -> bool:
        if self.grid is None:
            return False
        h, w = self.grid.shape
        if not (0 <= ix < w and 0 <= iy < h):
            return False
        return int(self.grid[iy, ix]) == OCCUPIED

    def occupied_cell_centers(self) -> np.ndarray:
        """World coordinates of all occupied cell centers, shape (m, 2)."""
        if self.grid is None:
            return np.zeros((0, 2))
        iy, ix = np.nonzero(self.grid == OCCUPIED)
        centers = self.origin + (np.stack([ix, iy], axis=1) + 0.5) * self.resolution
        return centers


@dataclass(frozen=True)
class Dataset:
    """A named collection of agent tracks sampled at a common frequency."""

    tracks: tuple[AgentTrack, ...]
    frequency_hz: float
    name: str = ""
    environment: EnvironmentModel | None = None

    def __post_init__(self):
        check_positive(self.frequency_hz, "frequency_hz")
        object.__setattr__(self, "tracks", tuple(self.tracks))
        if not self.tracks:
            raise DataError("empty dataset")

    @property
    def dt(self) -> float:
        return 1.0 / self.frequency_hz

    @property
    def n_agents(self) -> int:
        return len(self.tracks)

    @property
    def n_detections(self) -> int:
        return sum(len(t) for t in self.tracks)

    def frame_range(self) -> tuple[int, int]:
        lo = min(int(t.frames[0]) for t in self.tracks)
        hi = max(int(t.frames[-1]) for t in self.tracks)
        return lo, hi

    def time_range(self) -> tuple[float, float]:
        lo = min(float(t.times[0]) for t in self.tracks)
        hi = max(float(t.times[-1]) for t in self.tracks)
        return lo, hi

    def track_by_original_id(self, original_id: int) -> AgentTrack:
        for track in self.tracks:
            if track.original_id == original_id:
                return track
        raise KeyError(original_id)


def infer_frequency(times_per_track: Sequence[np.ndarray]) -> float:
    """Frequency as 1 / median inter-detection interval.

    Intervals and the resulting rate are rounded to 12 significant digits to
    absorb floating-point jitter, so a fixture with exact 0.4 s spacing infers
    2.5 Hz exactly.
    """
    diffs = [np.diff(t) for t in times_per_track if len(t) >= 2]
    if not diffs:
        raise DataError("cannot infer frequency: no consecutive detections; declare frequency_hz")
    all_diffs = np.concatenate(diffs)
    if np.any(all_diffs <= 0):
        raise DataError("cannot infer frequency: non-increasing timestamps")
    dt = float(f"{np.median(all_diffs):.12g}")
    return float(f"{1.0 / dt:.12g}")


def build_dataset(
    detections: Iterable[Detection],
    frequency_hz: float | None = None,
    name: str = "",
    environment: EnvironmentModel | None = None,
) -> Dataset:
    """Group raw detections into a Dataset.

    Detections are grouped per original agent id and sorted by time; dense
    internal ids are assigned in sorted original-id order, so the result does
    not depend on the input ordering. Frames are synthesized from timestamps
    when the source carried none (marked by frame < 0).
    """
    by_agent: dict[int, list[Detection]] = {}
    for det in detections:
        by_agent.setdefault(det.agent_id, []).append(det)
    if not by_agent:
        raise DataError("empty dataset")

    for agent_id, dets in by_agent.items():
        dets.sort(key=lambda d: d.time)

    times_per_track = [np.array([d.time for d in dets]) for dets in by_agent.values()]
    if frequency_hz is None:
        frequency_hz = infer_frequency(times_per_track)
    check_positive(frequency_hz, "frequency_hz")

    t0 = min(dets[0].time for dets in by_agent.values())
    tracks = []
    for dense_id, original_id in enumerate(sorted(by_agent)):
        dets = by_agent[original_id]
        frames = np.array(
            [
                d.frame if d.frame >= 0 else int(round((d.time - t0) * frequency_hz))
                for d in dets
            ],
            dtype=np.int64,
        )
        uniq, counts = np.unique(frames, return_counts=True)
        if np.any(counts > 1):
            dup = int(uniq[np.argmax(counts > 1)])
            raise DataError(f"duplicate detection for agent {original_id} at frame {dup}")
        times = np.array([d.time for d in dets])
        positions = np.array([[d.x, d.y] for d in dets])
        tracks.append(
            AgentTrack(
                agent_id=dense_id,
                original_id=original_id,
                frames=frames,
                times=times,
                positions=positions,
            )
        )
    return Dataset(tracks=tuple(tracks), frequency_hz=frequency_hz, name=name, environment=environment)


def datasets_allclose(
    a: Dataset,
    b: Dataset,
    time_tol: float = 1e-9,
    position_tol: float = 1e-9,
) -> bool:
    """Structural equality up to the stated tolerances on times and positions."""
    if a.n_agents != b.n_agents or a.name != b.name:
        return False
    if abs(a.frequency_hz - b.frequency_hz) > 1e-9:
        return False
    for ta, tb in zip(a.tracks, b.tracks):
        if ta.original_id != tb.original_id or len(ta) != len(tb):
            return False
        if not np.array_equal(ta.frames, tb.frames):
            return False
        if np.max(np.abs(ta.times - tb.times)) > time_tol:
            return False
        if np.max(np.abs(ta.positions - tb.positions)) > position_tol:
            return False
    ea, eb = a.environment, b.environment
    if (ea is None) != (eb is None):
        return False
    if ea is not None and eb is not None:
        if abs(ea.resolution - eb.resolution) > 1e-9:
            return False
        if np.max(np.abs(ea.origin - eb.origin), initial=0.0) > position_tol:
            return False
        if ea.goals.shape != eb.goals.shape:
            return False
        if ea.goals.size and np.max(np.abs(ea.goals - eb.goals)) > position_tol:
            return False
        if (ea.grid is None) != (eb.grid is None):
            return False
        if ea.grid is not None and not np.array_equal(ea.grid, eb.grid):
            return False
    return True

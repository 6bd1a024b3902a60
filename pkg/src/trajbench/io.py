"""Readers and writers for detection streams, goal lists and grid maps.

Two detection formats are supported:

* ``native``: newline-delimited text, one detection per line with fields
  ``frame time agent_id x y``. Header lines start with ``#`` and carry the
  dataset name, frequency, goals and an optional grid reference. Chosen for
  streamability and diff-friendliness.
* ``trajnet_json``: newline-delimited JSON in the TrajNet++ style. Each line
  holds one object: ``{"track": {"f": frame, "p": id, "x": .., "y": ..}}``
  with an optional ``"t"`` timestamp, plus optional ``{"scene": ...}``,
  ``{"goal": {"x": .., "y": ..}}``, ``{"grid": {...}}`` and
  ``{"meta": {...}}`` records. Unknown record kinds and extra fields are
  ignored with a one-time warning.

Grid maps are plain-text integer matrices or 8-bit grayscale images with the
shared cell-label convention (0 = occupied, 255 = free, other values are
semantic class ids). Resolution, origin and goals travel in a JSON sidecar
``<grid>.meta.json`` unless given explicitly.
"""

from __future__ import annotations

import json
import math
import warnings
from pathlib import Path

import numpy as np
from PIL import Image

from .data import Dataset, Detection, EnvironmentModel, build_dataset
from .errors import DataError, ParseError
from .validation import check_positive

_FORMATS = ("native", "trajnet_json")

_NO_FRAME = -1


def load_dataset(
    path,
    format: str = "native",
    frequency_hz: float | None = None,
    name: str | None = None,
) -> Dataset:
    """Parse a detection-stream file into a Dataset.

    ``frequency_hz`` overrides anything declared in the file; when neither is
    available the frequency is inferred as 1 / median inter-detection interval.
    """
    path = Path(path)
    if format not in _FORMATS:
        raise DataError(f"unknown dataset format {format!r}; expected one of {_FORMATS}")
    if not path.is_file():
        raise DataError(f"dataset file not found: {path}")
    if format == "native":
        parsed = _read_native(path)
    else:
        parsed = _read_trajnet(path)
    detections, declared_hz, declared_name, env = parsed
    if not detections:
        raise DataError(f"empty dataset: {path}")

    hz = frequency_hz if frequency_hz is not None else declared_hz
    if any(d.time != d.time for d in detections):  # NaN times mark frame-only records
        if hz is None:
            raise DataError(
                f"{path}: records carry frames but no timestamps; declare frequency_hz"
            )
        detections = [
            d if d.time == d.time else Detection(d.frame, d.frame / hz, d.agent_id, d.x, d.y)
            for d in detections
        ]
    dataset_name = name if name is not None else (declared_name or path.stem)
    return build_dataset(detections, frequency_hz=hz, name=dataset_name, environment=env)


def write_dataset(dataset: Dataset, path, format: str = "native") -> None:
    """Serialize a dataset so that loading it back yields an equal dataset.

    A grid map, when present, is written next to the file as
    ``<path>.grid.txt`` and referenced from the header.
    """
    path = Path(path)
    if format not in _FORMATS:
        raise DataError(f"unknown dataset format {format!r}; expected one of {_FORMATS}")
    grid_ref = None
    env = dataset.environment
    if env is not None and env.grid is not None:
        grid_ref = path.name + ".grid.txt"
        _write_grid_text(env.grid, path.parent / grid_ref)
    try:
        if format == "native":
            _write_native(dataset, path, grid_ref)
        else:
            _write_trajnet(dataset, path, grid_ref)
    except OSError as exc:
        raise DataError(f"cannot write dataset to {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# native format


def _read_native(path: Path):
    detections: list[Detection] = []
    declared_hz = None
    declared_name = None
    goals: list[list[float]] = []
    grid_spec = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                declared_hz, declared_name, grid_spec = _parse_native_header(
                    line, lineno, goals, declared_hz, declared_name, grid_spec
                )
                continue
            parts = line.split()
            if len(parts) != 5:
                raise ParseError(f"expected 5 fields (frame time agent_id x y), got {len(parts)}", lineno)
            try:
                frame = int(parts[0])
                time = float(parts[1])
                agent = int(parts[2])
                x = float(parts[3])
                y = float(parts[4])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from exc
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ParseError(f"non-finite coordinates for agent {agent}", lineno)
            detections.append(Detection(frame, time, agent, x, y))
    env = _assemble_environment(path, grid_spec, goals)
    return detections, declared_hz, declared_name, env


def _parse_native_header(line, lineno, goals, declared_hz, declared_name, grid_spec):
    fields = line[1:].split()
    if not fields:
        return declared_hz, declared_name, grid_spec
    key = fields[0]
    try:
        if key == "frequency_hz":
            declared_hz = float(fields[1])
        elif key == "name":
            declared_name = line[1:].split(None, 1)[1] if len(fields) > 1 else ""
        elif key == "goal":
            goals.append([float(fields[1]), float(fields[2])])
        elif key == "grid":
            grid_spec = {
                "path": fields[1],
                "resolution": float(fields[2]),
                "origin": [float(fields[3]), float(fields[4])],
            }
    except (IndexError, ValueError) as exc:
        raise ParseError(f"malformed header {line!r}: {exc}", lineno) from exc
    return declared_hz, declared_name, grid_spec


def _write_native(dataset: Dataset, path: Path, grid_ref: str | None) -> None:
    env = dataset.environment
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# trajbench native v1\n")
        if dataset.name:
            fh.write(f"# name {dataset.name}\n")
        fh.write(f"# frequency_hz {dataset.frequency_hz!r}\n")
        if env is not None:
            for gx, gy in env.goals:
                fh.write(f"# goal {float(gx)!r} {float(gy)!r}\n")
            if grid_ref is not None:
                fh.write(
                    f"# grid {grid_ref} {float(env.resolution)!r} "
                    f"{float(env.origin[0])!r} {float(env.origin[1])!r}\n"
                )
        for track in dataset.tracks:
            for f, t, (x, y) in zip(track.frames, track.times, track.positions):
                fh.write(f"{int(f)} {float(t)!r} {track.original_id} {float(x)!r} {float(y)!r}\n")


# ---------------------------------------------------------------------------
# trajnet-style ndjson


_KNOWN_TRACK_FIELDS = {"f", "p", "x", "y", "t"}
_KNOWN_RECORDS = {"track", "scene", "goal", "grid", "meta"}


def _read_trajnet(path: Path):
    detections: list[Detection] = []
    declared_hz = None
    declared_name = None
    goals: list[list[float]] = []
    grid_spec = None
    warned_extra = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc}", lineno) from exc
            if not isinstance(record, dict) or len(record) != 1:
                raise ParseError("expected an object with a single record key", lineno)
            kind, body = next(iter(record.items()))
            if kind not in _KNOWN_RECORDS:
                if not warned_extra:
                    warnings.warn(f"{path.name}: ignoring unknown record kind {kind!r}")
                    warned_extra = True
                continue
            if kind == "track":
                extra = set(body) - _KNOWN_TRACK_FIELDS
                if extra and not warned_extra:
                    warnings.warn(f"{path.name}: ignoring unknown track fields {sorted(extra)}")
                    warned_extra = True
                try:
                    frame = int(body.get("f", _NO_FRAME))
                    agent = int(body["p"])
                    x = float(body["x"])
                    y = float(body["y"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise ParseError(f"malformed track record: {exc}", lineno) from exc
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise ParseError(f"non-finite coordinates for agent {agent}", lineno)
                time = float(body["t"]) if "t" in body else float("nan")
                if "t" not in body and frame == _NO_FRAME:
                    raise ParseError("track record needs a frame 'f' or timestamp 't'", lineno)
                detections.append(Detection(frame, time, agent, x, y))
            elif kind == "scene":
                if isinstance(body, dict) and "fps" in body and declared_hz is None:
                    declared_hz = float(body["fps"])
            elif kind == "goal":
                try:
                    goals.append([float(body["x"]), float(body["y"])])
                except (KeyError, TypeError, ValueError) as exc:
                    raise ParseError(f"malformed goal record: {exc}", lineno) from exc
            elif kind == "grid":
                grid_spec = dict(body)
            elif kind == "meta":
                if isinstance(body, dict):
                    declared_name = body.get("name", declared_name)
                    if body.get("frequency_hz") is not None:
                        declared_hz = float(body["frequency_hz"])
    env = _assemble_environment(path, grid_spec, goals)
    return detections, declared_hz, declared_name, env


def _write_trajnet(dataset: Dataset, path: Path, grid_ref: str | None) -> None:
    env = dataset.environment
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"meta": {"name": dataset.name, "frequency_hz": dataset.frequency_hz}}) + "\n")
        if env is not None:
            for gx, gy in env.goals:
                fh.write(json.dumps({"goal": {"x": float(gx), "y": float(gy)}}) + "\n")
            if grid_ref is not None:
                fh.write(
                    json.dumps(
                        {
                            "grid": {
                                "path": grid_ref,
                                "resolution": env.resolution,
                                "origin": [float(env.origin[0]), float(env.origin[1])],
                            }
                        }
                    )
                    + "\n"
                )
        for track in dataset.tracks:
            for f, t, (x, y) in zip(track.frames, track.times, track.positions):
                rec = {"track": {"f": int(f), "p": track.original_id, "x": float(x), "y": float(y), "t": float(t)}}
                fh.write(json.dumps(rec) + "\n")


def _assemble_environment(path: Path, grid_spec, goals) -> EnvironmentModel | None:
    if grid_spec is None and not goals:
        return None
    if grid_spec is None:
        return EnvironmentModel(goals=np.asarray(goals, dtype=float).reshape(-1, 2))
    grid_path = path.parent / grid_spec["path"]
    env = load_environment(
        grid_path,
        resolution=grid_spec.get("resolution"),
        origin=grid_spec.get("origin"),
    )
    merged_goals = list(env.goals) + goals
    return EnvironmentModel(
        resolution=env.resolution,
        origin=env.origin,
        grid=env.grid,
        goals=np.asarray(merged_goals, dtype=float).reshape(-1, 2),
        source=env.source,
    )


# ---------------------------------------------------------------------------
# grid maps and goals


def load_environment(
    path,
    resolution: float | None = None,
    origin=None,
    goals=None,
) -> EnvironmentModel:
    """Load a grid map (text matrix or grayscale image) with its metadata.

    Metadata resolution/origin/goals are read from ``<path>.meta.json`` when
    present; explicit arguments take precedence.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"grid file not found: {path}")
    meta = {}
    meta_path = Path(str(path) + ".meta.json")
    if meta_path.is_file():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    if resolution is None:
        resolution = meta.get("resolution")
    if origin is None:
        origin = meta.get("origin", [0.0, 0.0])
    if goals is None:
        goals = meta.get("goals", [])
    if resolution is None:
        raise DataError(f"{path}: grid resolution not given and no sidecar metadata found")
    check_positive(resolution, "resolution")

    if path.suffix.lower() in {".png", ".pgm", ".bmp", ".tif", ".tiff", ".jpg", ".jpeg"}:
        grid = np.asarray(Image.open(path).convert("L"), dtype=np.int16)
    else:
        grid = _read_grid_text(path)
    return EnvironmentModel(
        resolution=float(resolution),
        origin=np.asarray(origin, dtype=float),
        grid=grid,
        goals=np.asarray(goals, dtype=float).reshape(-1, 2),
        source=str(path),
    )


def load_goals(path) -> np.ndarray:
    """Read a goals file: one ``x y`` pair per line, ``#`` comments allowed."""
    path = Path(path)
    goals = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ParseError(f"expected 'x y', got {line!r}", lineno)
            try:
                goals.append([float(parts[0]), float(parts[1])])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from exc
    return np.asarray(goals, dtype=float).reshape(-1, 2)


def _read_grid_text(path: Path) -> np.ndarray:
    rows = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                row = [int(tok) for tok in line.split()]
            except ValueError as exc:
                raise ParseError(f"unknown semantic label: {exc}", lineno) from exc
            for value in row:
                if not (0 <= value <= 255):
                    raise ParseError(f"unknown semantic label {value} (expected 0..255)", lineno)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"dimension mismatch: row has {len(row)} cells, expected {width}", lineno)
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: empty grid")
    return np.asarray(rows, dtype=np.int16)


def _write_grid_text(grid: np.ndarray, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.asarray(grid):
            fh.write(" ".join(str(int(v)) for v in row) + "\n")

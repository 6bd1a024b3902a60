"""Track cleaning and resampling: downsample, gap interpolation, smoothing, noise.

The pipeline order is fixed (downsample -> interpolate -> smooth -> noise) and
mirrored both by :func:`preprocess_dataset` and by the sklearn transformers,
which can also be assembled into an ``sklearn.pipeline.Pipeline``.

All operations are pure functions of immutable inputs; every transformer's
``fit`` is a no-op, so they are safe to apply concurrently to different tracks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .data import AgentTrack, Dataset
from .errors import ConfigError
from .validation import check_non_negative, check_positive


@dataclass(frozen=True)
class PreprocessConfig:
    """Knobs of the preprocessing stage, one section of the run configuration.

    ``target_hz`` must not exceed the source frequency. The smoothing window
    is in frames and must be odd; ``noise_sigma`` is the standard deviation in
    meters of the white Gaussian perturbation added per coordinate.
    """

    target_hz: float
    smoothing_window: int = 5
    gap_tolerance_factor: float = 1.5
    noise_sigma: float = 0.0
    noise_seed: int = 0

    def __post_init__(self):
        check_positive(self.target_hz, "target_hz")
        check_positive(self.gap_tolerance_factor, "gap_tolerance_factor")
        check_non_negative(self.noise_sigma, "noise_sigma")
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise ConfigError(f"smoothing_window must be an odd positive integer, got {self.smoothing_window}")


def detect_gaps(track: AgentTrack, expected_dt: float, gap_tolerance_factor: float = 1.5):
    """Return (start_time, end_time) pairs where the track skips frames.

    A gap is any interval between consecutive detections longer than
    ``gap_tolerance_factor * expected_dt``.
    """
    check_positive(expected_dt, "expected_dt")
    check_positive(gap_tolerance_factor, "gap_tolerance_factor")
    diffs = np.diff(track.times)
    idx = np.nonzero(diffs > gap_tolerance_factor * expected_dt)[0]
    return [(float(track.times[i]), float(track.times[i + 1])) for i in idx]


def interpolate_gaps(track: AgentTrack, expected_dt: float) -> AgentTrack:
    """Fill gaps with linearly interpolated detections on the expected_dt grid.

    Each gap receives round(gap/dt) - 1 inserted points; the original
    detections are preserved bit-exactly. Gap-free tracks are returned
    unchanged.
    """
    check_positive(expected_dt, "expected_dt")
    n_insert = [_half_up(dt / expected_dt) - 1 for dt in np.diff(track.times)]
    if not any(k > 0 for k in n_insert):
        return track

    frames, times, positions = [], [], []
    for i, k in enumerate(n_insert):
        frames.append(track.frames[i : i + 1])
        times.append(track.times[i : i + 1])
        positions.append(track.positions[i : i + 1])
        if k <= 0:
            continue
        t0, t1 = track.times[i], track.times[i + 1]
        f0, f1 = int(track.frames[i]), int(track.frames[i + 1])
        new_t = t0 + expected_dt * np.arange(1, k + 1)
        w = (new_t - t0) / (t1 - t0)
        new_p = track.positions[i] + w[:, None] * (track.positions[i + 1] - track.positions[i])
        new_f = f0 + np.rint(np.arange(1, k + 1) * (f1 - f0) / (k + 1)).astype(np.int64)
        frames.append(new_f)
        times.append(new_t)
        positions.append(new_p)
    frames.append(track.frames[-1:])
    times.append(track.times[-1:])
    positions.append(track.positions[-1:])
    return track.with_data(
        frames=np.concatenate(frames),
        times=np.concatenate(times),
        positions=np.concatenate(positions),
    )


def smooth_track(track: AgentTrack, window: int) -> AgentTrack:
    """Centered moving average over positions; timestamps stay untouched.

    The window is clipped at the track ends (so the first point of a
    window=3 track averages itself and its successor), keeping output length
    equal to input length.
    """
    if window < 1 or window % 2 == 0:
        raise ConfigError(f"smoothing window must be an odd positive integer, got {window}")
    if window == 1 or len(track) == 1:
        return track
    half = window // 2
    n = len(track)
    cumsum = np.zeros((n + 1, 2))
    np.cumsum(track.positions, axis=0, out=cumsum[1:])
    lo = np.maximum(np.arange(n) - half, 0)
    hi = np.minimum(np.arange(n) + half + 1, n)
    smoothed = (cumsum[hi] - cumsum[lo]) / (hi - lo)[:, None]
    return track.with_data(positions=smoothed)


def inject_noise(track: AgentTrack, sigma: float, seed: int) -> AgentTrack:
    """Perturb each coordinate with an independent N(0, sigma^2) draw.

    Draw streams are keyed per (seed, original agent id, frame) so the result
    does not depend on evaluation order; sigma = 0 returns the track unchanged.
    """
    check_non_negative(sigma, "sigma")
    if sigma == 0.0:
        return track
    noise = np.empty_like(track.positions)
    for i, frame in enumerate(track.frames):
        noise[i] = detection_noise(seed, track.original_id, int(frame), sigma)
    return track.with_data(positions=track.positions + noise)


def detection_noise(seed: int, agent_id: int, frame: int, sigma: float) -> np.ndarray:
    """The 2D Gaussian perturbation assigned to one detection."""
    seq = np.random.SeedSequence(
        seed & 0xFFFFFFFFFFFFFFFF,
        spawn_key=(agent_id & 0xFFFFFFFF, frame & 0xFFFFFFFF),
    )
    return np.random.default_rng(seq).normal(0.0, sigma, size=2)


def downsample(dataset: Dataset, target_hz: float) -> Dataset:
    """Reduce the sampling rate of all tracks to ``target_hz``.

    An integer source/target ratio decimates on the global frame grid;
    otherwise tracks are resampled by linear interpolation on a uniform
    target-time grid anchored at the dataset's first detection.
    """
    check_positive(target_hz, "target_hz")
    source_hz = dataset.frequency_hz
    if target_hz > source_hz * (1 + 1e-9):
        raise ConfigError(f"target_hz {target_hz} exceeds source frequency {source_hz}")
    ratio = source_hz / target_hz
    if abs(ratio - round(ratio)) < 1e-9:
        k = int(round(ratio))
        if k == 1:
            return dataset
        return _decimate(dataset, k, target_hz)
    return _resample_linear(dataset, target_hz)


def _decimate(dataset: Dataset, k: int, target_hz: float) -> Dataset:
    base, _ = dataset.frame_range()
    tracks = []
    for track in dataset.tracks:
        keep = (track.frames - base) % k == 0
        if not np.any(keep):
            continue
        tracks.append(
            track.with_data(
                frames=(track.frames[keep] - base) // k,
                times=track.times[keep],
                positions=track.positions[keep],
            )
        )
    return Dataset(
        tracks=tuple(tracks),
        frequency_hz=target_hz,
        name=dataset.name,
        environment=dataset.environment,
    )


def _resample_linear(dataset: Dataset, target_hz: float) -> Dataset:
    t0, _ = dataset.time_range()
    dt = 1.0 / target_hz
    eps = 1e-9
    tracks = []
    for track in dataset.tracks:
        j_first = math.ceil((track.times[0] - t0) / dt - eps)
        j_last = math.floor((track.times[-1] - t0) / dt + eps)
        if j_last < j_first:
            continue
        frames = np.arange(j_first, j_last + 1, dtype=np.int64)
        times = t0 + frames * dt
        clipped = np.clip(times, track.times[0], track.times[-1])
        x = np.interp(clipped, track.times, track.positions[:, 0])
        y = np.interp(clipped, track.times, track.positions[:, 1])
        tracks.append(track.with_data(frames=frames, times=times, positions=np.stack([x, y], axis=1)))
    return Dataset(
        tracks=tuple(tracks),
        frequency_hz=target_hz,
        name=dataset.name,
        environment=dataset.environment,
    )


def preprocess_dataset(dataset: Dataset, config: PreprocessConfig) -> Dataset:
    """Apply the full pipeline: downsample -> interpolate -> smooth -> noise."""
    out = downsample(dataset, config.target_hz)
    dt = 1.0 / config.target_hz
    tracks = [interpolate_gaps(t, dt) for t in out.tracks]
    tracks = [smooth_track(t, config.smoothing_window) for t in tracks]
    tracks = [inject_noise(t, config.noise_sigma, config.noise_seed) for t in tracks]
    return Dataset(
        tracks=tuple(tracks),
        frequency_hz=out.frequency_hz,
        name=out.name,
        environment=out.environment,
    )


def _half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


# ---------------------------------------------------------------------------
# sklearn-style transformers over Dataset objects


class _DatasetTransformer(BaseEstimator, TransformerMixin):
    def fit(self, X, y=None):
        return self

    def _per_track(self, dataset: Dataset, fn) -> Dataset:
        return Dataset(
            tracks=tuple(fn(t) for t in dataset.tracks),
            frequency_hz=dataset.frequency_hz,
            name=dataset.name,
            environment=dataset.environment,
        )


class Downsampler(_DatasetTransformer):
    """Transformer wrapper around :func:`downsample`."""

    def __init__(self, target_hz: float = 2.5):
        self.target_hz = target_hz

    def transform(self, X: Dataset) -> Dataset:
        return downsample(X, self.target_hz)


class GapInterpolator(_DatasetTransformer):
    """Fills missing frames in every track by linear interpolation."""

    def __init__(self, expected_dt: float | None = None):
        self.expected_dt = expected_dt

    def transform(self, X: Dataset) -> Dataset:
        dt = self.expected_dt if self.expected_dt is not None else X.dt
        return self._per_track(X, lambda t: interpolate_gaps(t, dt))


class Smoother(_DatasetTransformer):
    """Moving-average smoothing of every track."""

    def __init__(self, window: int = 5):
        self.window = window

    def transform(self, X: Dataset) -> Dataset:
        return self._per_track(X, lambda t: smooth_track(t, self.window))


class NoiseInjector(_DatasetTransformer):
    """Adds seeded white Gaussian noise to every detection."""

    def __init__(self, sigma: float = 0.0, seed: int = 0):
        self.sigma = sigma
        self.seed = seed

    def transform(self, X: Dataset) -> Dataset:
        return self._per_track(X, lambda t: inject_noise(t, self.sigma, self.seed))


def build_pipeline(config: PreprocessConfig):
    """The fixed-order preprocessing pipeline as an sklearn Pipeline."""
    from sklearn.pipeline import Pipeline

    return Pipeline(
        [
            ("downsample", Downsampler(config.target_hz)),
            ("interpolate", GapInterpolator(1.0 / config.target_hz)),
            ("smooth", Smoother(config.smoothing_window)),
            ("noise", NoiseInjector(config.noise_sigma, config.noise_seed)),
        ]
    )

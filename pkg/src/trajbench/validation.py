"""Input validation helpers, in the spirit of sklearn's check_array."""

from __future__ import annotations

import numpy as np

from .errors import DataError


def as_positions(value, name: str = "positions", length: int | None = None) -> np.ndarray:
    """Coerce to a read-only (n, 2) float64 array of finite planar positions."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 1 and arr.shape == (2,):
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DataError(f"{name}: expected shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name}: non-finite coordinates")
    if length is not None and arr.shape[0] != length:
        raise DataError(f"{name}: expected {length} rows, got {arr.shape[0]}")
    return readonly(arr)


def as_point(value, name: str = "point") -> np.ndarray:
    """Coerce to a finite (2,) float64 vector."""
    arr = np.asarray(value, dtype=np.float64).reshape(-1)
    if arr.shape != (2,):
        raise DataError(f"{name}: expected a 2-vector, got shape {np.shape(value)}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name}: non-finite coordinates")
    return arr


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise DataError(f"{name} must be positive, got {value!r}")
    return value


def check_non_negative(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise DataError(f"{name} must be non-negative, got {value!r}")
    return value


def check_unit_interval(value: float, name: str) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise DataError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def check_covariances(covs, name: str = "covariances") -> np.ndarray:
    """Validate a stack of 2x2 symmetric positive definite matrices."""
    arr = np.asarray(covs, dtype=np.float64)
    if arr.shape[-2:] != (2, 2):
        raise DataError(f"{name}: expected trailing shape (2, 2), got {arr.shape}")
    flat = arr.reshape(-1, 2, 2)
    if not np.all(np.isfinite(flat)):
        raise DataError(f"{name}: non-finite entries")
    if not np.allclose(flat, np.swapaxes(flat, -1, -2), atol=1e-12):
        raise DataError(f"{name}: matrices must be symmetric")
    det = flat[:, 0, 0] * flat[:, 1, 1] - flat[:, 0, 1] * flat[:, 1, 0]
    if np.any(flat[:, 0, 0] <= 0) or np.any(det <= 0):
        raise DataError(f"{name}: matrices must be positive definite")
    return readonly(arr)


def readonly(arr: np.ndarray) -> np.ndarray:
    """Return the array with its write flag cleared (copying views first)."""
    if arr.flags.writeable:
        if arr.base is not None:
            arr = arr.copy()
        arr.setflags(write=False)
    return arr

"""Input validation helpers shared by the public API."""

from __future__ import annotations

import math

import numpy as np

from .errors import ShapeError, ValidationError


def as_complex_grid(entries) -> np.ndarray:
    """Coerce to a non-empty rectangular 2-D complex array with finite entries."""
    try:
        arr = np.array(entries, dtype=complex)
    except (ValueError, TypeError) as exc:
        raise ShapeError(f"entries must form a rectangular complex grid: {exc}") from None
    if arr.ndim != 2 or arr.size == 0:
        raise ShapeError(f"expected a non-empty 2-D grid, got shape {arr.shape}")
    if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
        raise ValidationError("grid entries must all be finite")
    return arr


def as_real_grid(values, *, non_negative=False) -> np.ndarray:
    """Coerce to a non-empty rectangular 2-D float array with finite entries."""
    try:
        arr = np.array(values, dtype=float)
    except (ValueError, TypeError) as exc:
        raise ShapeError(f"values must form a rectangular real grid: {exc}") from None
    if arr.ndim != 2 or arr.size == 0:
        raise ShapeError(f"expected a non-empty 2-D grid, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("grid entries must all be finite")
    if non_negative and np.any(arr < 0):
        raise ValidationError("grid entries must be non-negative")
    return arr


def check_finite_scalar(name: str, value) -> float:
    """Validate a real scalar parameter, returning it as float."""
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(x):
        raise ValidationError(f"{name} must be finite, got {x}")
    return x


def check_count(name: str, value, minimum: int = 1) -> int:
    """Validate an integer count with a lower bound."""
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_mode_label(name: str, label, n_modes: int) -> int:
    """Validate a 1-based mode label against a mode count."""
    if not isinstance(label, (int, np.integer)) or isinstance(label, bool):
        raise ValidationError(f"{name} must be an integer mode label, got {label!r}")
    if not 1 <= label <= n_modes:
        raise IndexError(f"{name}={label} out of range for {n_modes} modes (labels are 1-based)")
    return int(label)


def check_occupations(occupations, n_modes: int) -> tuple[int, ...]:
    """Validate a per-mode photon occupation list of known length."""
    occ = tuple(occupations)
    if len(occ) != n_modes:
        raise ShapeError(f"occupation list has length {len(occ)}, expected {n_modes}")
    for x in occ:
        if not isinstance(x, (int, np.integer)) or isinstance(x, bool) or x < 0:
            raise ValidationError(f"occupations must be non-negative integers, got {x!r}")
    if sum(occ) < 1:
        raise ValidationError("total photon number must be at least 1")
    return tuple(int(x) for x in occ)

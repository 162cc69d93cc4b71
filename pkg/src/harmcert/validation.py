"""Input validation helpers.

All helpers raise ``ValueError`` with a message that starts with the field
name, so callers (including the CLI) can surface precise diagnostics.
"""

from __future__ import annotations

import numpy as np


def as_float_array(values, name: str) -> np.ndarray:
    """Coerce to a finite 1-D float64 array."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name}: expected a one-dimensional sequence, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: all entries must be finite")
    return arr


def as_complex_series(values, name: str) -> np.ndarray:
    """Coerce to a finite 1-D complex128 array."""
    arr = np.asarray(values, dtype=complex)
    if arr.ndim != 1:
        raise ValueError(f"{name}: expected a one-dimensional sequence, got shape {arr.shape}")
    if not np.all(np.isfinite(arr.real) & np.isfinite(arr.imag)):
        raise ValueError(f"{name}: all entries must be finite")
    return arr


def check_positive(value, name: str) -> float:
    x = float(value)
    if not np.isfinite(x) or x <= 0:
        raise ValueError(f"{name}: must be a positive finite number, got {value!r}")
    return x


def check_nonnegative(value, name: str) -> float:
    x = float(value)
    if not np.isfinite(x) or x < 0:
        raise ValueError(f"{name}: must be a nonnegative finite number, got {value!r}")
    return x


def check_integer(value, name: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ValueError(f"{name}: must be an integer, got {value!r}")
    n = int(value)
    if minimum is not None and n < minimum:
        raise ValueError(f"{name}: must be at least {minimum}, got {n}")
    return n


def check_distinct(values: np.ndarray, name: str) -> None:
    """Require pairwise-distinct entries (exact comparison on sorted values)."""
    if values.size > 1 and np.any(np.diff(np.sort(values)) == 0):
        raise ValueError(f"{name}: entries must be pairwise distinct")

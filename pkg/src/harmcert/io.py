"""File formats: series CSV, matrix dumps, JSON configs and results.

Floats are written with 17 significant digits so every CSV/JSON value
round-trips to the exact double, making regression outputs stable.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bounds import CertaintyBound
from .errors import ConfigError
from .inversion import InversionResult
from .signals import AutocorrSeries, FrequencyModel, NoiseSpec, SamplingGrid

SERIES_HEADER = ["n", "t", "re_c", "im_c"]
MATRIX_HEADER = ["row", "col", "re", "im"]


def fmt_float(x) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class RunConfig:
    """Model/grid/noise triple parsed from a flat JSON document."""

    model: FrequencyModel
    grid: SamplingGrid
    noise: NoiseSpec | None = None


# ---------------------------------------------------------------------------
# Config parsing; every error names the offending field


def _field(obj: dict, name: str, context: str = ""):
    label = f"{context}.{name}" if context else name
    if name not in obj:
        raise ConfigError(f"{label}: missing required field")
    return obj[name]


def _reraise(context: str, exc: ValueError):
    """Constructor ValueErrors already name the leaf field; add the path."""
    prefix = f"{context}." if context else ""
    raise ConfigError(f"{prefix}{exc}") from exc


def parse_model(obj: dict, context: str = "") -> FrequencyModel:
    omegas = _field(obj, "omegas", context)
    amps = _field(obj, "amps", context)
    try:
        return FrequencyModel(omegas, amps, normalized=bool(obj.get("normalized", False)))
    except ValueError as exc:
        _reraise(context, exc)


def parse_grid(obj: dict, context: str = "") -> SamplingGrid:
    delta_t = _field(obj, "delta_t", context)
    n_steps = _field(obj, "n_steps", context)
    try:
        return SamplingGrid(delta_t, n_steps)
    except ValueError as exc:
        _reraise(context, exc)


def parse_noise(obj: dict, context: str = "noise") -> NoiseSpec:
    eta_max = _field(obj, "eta_max", context)
    try:
        return NoiseSpec(
            eta_max,
            kind=obj.get("kind", "uniform-disk"),
            seed=obj.get("seed", 0),
            copies=obj.get("copies"),
        )
    except ValueError as exc:
        _reraise(context, exc)


def parse_run_config(obj: dict) -> RunConfig:
    """Flat document {"omegas", "amps", "delta_t", "n_steps", "noise": {...}}."""
    if not isinstance(obj, dict):
        raise ConfigError(f"config: expected a JSON object, got {type(obj).__name__}")
    model = parse_model(obj)
    grid = parse_grid(obj)
    noise = parse_noise(obj["noise"]) if obj.get("noise") is not None else None
    return RunConfig(model, grid, noise)


def load_run_config(path) -> RunConfig:
    return parse_run_config(_load_json(path))


def _load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Series and matrix CSV


def write_series_csv(series: AutocorrSeries, path) -> None:
    """Rows n,t,re_c,im_c for n = 0..N at full double precision."""
    dt = series.grid.delta_t
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SERIES_HEADER)
        for n, c in enumerate(series.values):
            writer.writerow([n, fmt_float(n * dt), fmt_float(c.real), fmt_float(c.imag)])


def read_series_csv(path, eta_max: float = 0.0) -> AutocorrSeries:
    """Inverse of :func:`write_series_csv`; the grid is inferred from the rows.

    The CSV does not carry the noise ceiling, so pass ``eta_max`` when the
    series is known to be noisy.
    """
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SERIES_HEADER:
            raise ConfigError(f"series: expected header {','.join(SERIES_HEADER)}, got {header}")
        rows = [row for row in reader if row]
    if len(rows) < 2:
        raise ConfigError("series: need at least two samples (n_steps >= 1)")
    indices = [int(row[0]) for row in rows]
    if indices != list(range(len(rows))):
        raise ConfigError("series: sample indices must run 0..N without gaps")
    values = np.array([complex(float(row[2]), float(row[3])) for row in rows])
    delta_t = float(rows[1][1]) - float(rows[0][1])
    grid = SamplingGrid(delta_t, len(rows) - 1)
    return AutocorrSeries(values, grid, eta_max=eta_max)


def write_matrix_csv(matrix, path) -> None:
    """Debug dump: one row,col,re,im line per entry."""
    a = np.asarray(matrix, dtype=complex)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MATRIX_HEADER)
        for i in range(a.shape[0]):
            for j in range(a.shape[1]):
                writer.writerow([i, j, fmt_float(a[i, j].real), fmt_float(a[i, j].imag)])


# ---------------------------------------------------------------------------
# Result serialization


def result_to_dict(result: InversionResult) -> dict:
    return {
        "k_detected": result.k_detected,
        "omegas": [float(w) for w in result.omegas],
        "amps": [float(d) for d in result.amps],
        "eigen_moduli": [float(m) for m in result.eigen_moduli],
        "residual": result.residual,
        "amps_clamped": result.amps_clamped,
    }


def bound_to_dict(bound: CertaintyBound) -> dict:
    return bound.as_dict()


def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_json(obj: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def ensure_parent(path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)

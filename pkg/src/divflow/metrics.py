"""Divergence and reconstruction-error metrics over a centred region."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .field import ScalarSlice, VectorSlice, crop_center, magnitude_image, require_same_grid
from .stencils import DerivKind, derivative


def discrete_divergence(center: VectorSlice, lower: VectorSlice, upper: VectorSlice, delta: float) -> ScalarSlice:
    """In-plane divergence of ``center`` plus dVz/dz across the two true neighbours.

    ``delta`` is the distance from ``center`` to each of ``lower``/``upper``.
    """
    grid = require_same_grid(center, lower, upper)
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    div = (derivative(center.vx.values, DerivKind.Dx, grid.dx, grid.dy)
           + derivative(center.vy.values, DerivKind.Dy, grid.dx, grid.dy)
           + (upper.vz.values - lower.vz.values) / (2.0 * delta))
    return ScalarSlice(grid, div)


def divergence_metric(div_slice: ScalarSlice, region_w: int, region_h: int) -> tuple[float, float]:
    """``(mean |div|, rms div)`` over the centred ``region_w x region_h`` window."""
    v = crop_center(div_slice, region_w, region_h).values
    return float(np.mean(np.abs(v))), float(np.sqrt(np.mean(v * v)))


def mse(reference: VectorSlice, candidate: VectorSlice, region_w: int, region_h: int) -> float:
    """Mean over the region of the squared velocity-vector error."""
    require_same_grid(reference, candidate)
    total = 0.0
    for r, c in zip(reference.components, candidate.components):
        diff = crop_center(c, region_w, region_h).values - crop_center(r, region_w, region_h).values
        total = total + diff * diff
    return float(np.mean(total))


def mse_magnitude(reference: VectorSlice, candidate: VectorSlice, region_w: int, region_h: int) -> float:
    require_same_grid(reference, candidate)
    r = crop_center(magnitude_image(reference), region_w, region_h).values
    c = crop_center(magnitude_image(candidate), region_w, region_h).values
    return float(np.mean((c - r) ** 2))


@dataclass(frozen=True)
class EvalReport:
    method: str
    divergence_mean_abs: float
    divergence_l2: float
    mse: float | None
    region_w: int
    region_h: int
    mse_mag: float | None = None
    params: dict = field(default_factory=dict)
    center: int | None = None
    step: int | None = None
    wall_ms: float | None = None

    def __post_init__(self):
        for name in ("divergence_mean_abs", "divergence_l2", "mse", "mse_mag"):
            v = getattr(self, name)
            if v is not None and not v >= 0:
                raise ValueError(f"{name} must be non-negative, got {v}")


def evaluate(method: str, reconstructed: VectorSlice, lower: VectorSlice, upper: VectorSlice, delta: float,
             region_w: int, region_h: int, truth: VectorSlice | None = None, params: dict | None = None,
             center: int | None = None, step: int | None = None, wall_ms: float | None = None) -> EvalReport:
    div = discrete_divergence(reconstructed, lower, upper, delta)
    mean_abs, l2 = divergence_metric(div, region_w, region_h)
    err = err_mag = None
    if truth is not None:
        err = mse(truth, reconstructed, region_w, region_h)
        err_mag = mse_magnitude(truth, reconstructed, region_w, region_h)
    return EvalReport(method, mean_abs, l2, err, region_w, region_h, err_mag, dict(params or {}),
                      center, step, wall_ms)

"""Classic gradient-based (HS) optical flow and flow-based slice interpolation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import (FlowField, ScalarSlice, VectorSlice, VolumeField, magnitude_image,
                    require_same_grid)
from .reconstruct import warp_average
from .stencils import DerivKind, average_neighbours, derivative


@dataclass(frozen=True)
class HsParams:
    lam: float = 1.0
    iterations: int = 2000
    early_stop_tol: float = 0.0

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError(f"iterations must be non-negative, got {self.iterations}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.early_stop_tol < 0:
            raise ValueError("early_stop_tol must be non-negative")


def hs_gradients(a: ScalarSlice, b: ScalarSlice) -> tuple[ScalarSlice, ScalarSlice, ScalarSlice]:
    """Brightness derivatives for the pair ``a -> b``.

    Spatial gradients are taken on the frame average with unit (pixel) spacing;
    the temporal derivative is the plain difference ``b - a``.
    """
    grid = require_same_grid(a, b)
    mean = 0.5 * (a.values + b.values)
    ix = derivative(mean, DerivKind.Dx)
    iy = derivative(mean, DerivKind.Dy)
    return ScalarSlice(grid, ix), ScalarSlice(grid, iy), ScalarSlice(grid, b.values - a.values)


def _hs_update(abar, bbar, ix, iy, it, lam2):
    common = (ix * abar + iy * bbar + it) / (lam2 + ix * ix + iy * iy)
    return abar - ix * common, bbar - iy * common


def hs_iterate(ix: np.ndarray, iy: np.ndarray, it: np.ndarray, lam: float, iterations: int,
               early_stop_tol: float = 0.0, alpha=None, beta=None, callback=None):
    """Run Jacobi HS sweeps on raw arrays; returns ``(alpha, beta, n_done)``.

    ``callback(n, alpha, beta)`` is invoked after each sweep when given.
    """
    alpha = np.zeros_like(ix) if alpha is None else np.array(alpha, dtype=np.float64)
    beta = np.zeros_like(ix) if beta is None else np.array(beta, dtype=np.float64)
    lam2 = lam * lam
    n = 0
    for n in range(1, iterations + 1):
        new_a, new_b = _hs_update(average_neighbours(alpha), average_neighbours(beta), ix, iy, it, lam2)
        change = max(np.max(np.abs(new_a - alpha)), np.max(np.abs(new_b - beta)))
        alpha, beta = new_a, new_b
        if callback is not None:
            callback(n, alpha, beta)
        if change < early_stop_tol:
            break
    return alpha, beta, n


def hs_step(flow: FlowField, ix: ScalarSlice, iy: ScalarSlice, it: ScalarSlice, lam: float) -> FlowField:
    grid = require_same_grid(flow, ix, iy, it)
    a, b = _hs_update(average_neighbours(flow.alpha.values), average_neighbours(flow.beta.values),
                      ix.values, iy.values, it.values, lam * lam)
    return FlowField.from_arrays(grid, a, b)


def hs_solve(a: ScalarSlice, b: ScalarSlice, params: HsParams) -> FlowField:
    ix, iy, it = hs_gradients(a, b)
    alpha, beta, _ = hs_iterate(ix.values, iy.values, it.values, params.lam, params.iterations,
                                params.early_stop_tol)
    return FlowField.from_arrays(a.grid, alpha, beta)


def hs_energy(flow: FlowField, ix: ScalarSlice, iy: ScalarSlice, it: ScalarSlice, lam: float) -> float:
    """Discrete HS functional: data residual plus gradient smoothness."""
    a, b = flow.alpha.values, flow.beta.values
    data = ix.values * a + iy.values * b + it.values
    smooth = sum(np.sum(derivative(f, k) ** 2) for f in (a, b) for k in (DerivKind.Dx, DerivKind.Dy))
    return float(np.sum(data * data) + lam * lam * smooth)


def hs_interpolate_midslice(vol: VolumeField, index_a: int, index_b: int, params: HsParams) -> VectorSlice:
    """Reconstruct the slice halfway between ``index_a`` and ``index_b``.

    The flow is estimated on magnitude images from slice ``a`` to slice ``b``;
    both slices are then warped half way toward the midpoint and averaged.
    """
    n = len(vol)
    if not (0 <= index_a < index_b < n):
        raise IndexError(f"need 0 <= index_a < index_b < {n}, got {index_a}, {index_b}")
    lower, upper = vol[index_a], vol[index_b]
    flow = hs_solve(magnitude_image(lower), magnitude_image(upper), params)
    return warp_average(lower, upper, flow.scaled(0.5))

"""Central finite-difference operators on 2D slices.

All stencils replicate edge values before differencing, so boundary rows
and columns see one-sided half-weight estimates; interior pixels get the
exact second-order central stencils.
"""

from __future__ import annotations

import enum

import numpy as np
from scipy import ndimage

from .field import DimensionError, GridMismatchError, ScalarSlice

# HS neighbourhood kernel: 1/6 edge neighbours, 1/12 diagonals.
AVERAGE_KERNEL = np.array([[1 / 12, 1 / 6, 1 / 12],
                           [1 / 6, 0.0, 1 / 6],
                           [1 / 12, 1 / 6, 1 / 12]])


class DerivKind(enum.Enum):
    Dx = "dx"
    Dy = "dy"
    Dxx = "dxx"
    Dyy = "dyy"
    Dxy = "dxy"


def _check_min_size(values: np.ndarray):
    if values.shape[0] < 3 or values.shape[1] < 3:
        raise DimensionError(f"stencils need a grid of at least 3x3, got {values.shape[1]}x{values.shape[0]}")


def derivative(values: np.ndarray, kind: DerivKind, dx: float = 1.0, dy: float = 1.0) -> np.ndarray:
    """Array-level central difference of ``values[y, x]``."""
    _check_min_size(values)
    p = np.pad(values, 1, mode="edge")
    c = p[1:-1, 1:-1]
    right, left = p[1:-1, 2:], p[1:-1, :-2]
    down, up = p[2:, 1:-1], p[:-2, 1:-1]
    if kind is DerivKind.Dx:
        return (right - left) / (2.0 * dx)
    if kind is DerivKind.Dy:
        return (down - up) / (2.0 * dy)
    if kind is DerivKind.Dxx:
        return (right - 2.0 * c + left) / (dx * dx)
    if kind is DerivKind.Dyy:
        return (down - 2.0 * c + up) / (dy * dy)
    if kind is DerivKind.Dxy:
        return ((p[2:, 2:] - p[2:, :-2]) - (p[:-2, 2:] - p[:-2, :-2])) / (4.0 * dx * dy)
    raise ValueError(f"unknown derivative kind {kind!r}")


def derive(s: ScalarSlice, kind: DerivKind) -> ScalarSlice:
    return ScalarSlice(s.grid, derivative(s.values, kind, s.grid.dx, s.grid.dy))


def average_neighbours(values: np.ndarray) -> np.ndarray:
    _check_min_size(values)
    return ndimage.convolve(values, AVERAGE_KERNEL, mode="nearest")


def neighborhood_average(s: ScalarSlice) -> ScalarSlice:
    return ScalarSlice(s.grid, average_neighbours(s.values))


def z_central_difference(a: ScalarSlice, b: ScalarSlice, spacing: float) -> ScalarSlice:
    """Midpoint z-derivative from the slice below (``a``) and above (``b``)."""
    if a.grid != b.grid:
        raise GridMismatchError("z difference needs slices on one grid")
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    return ScalarSlice(a.grid, (b.values - a.values) / (2.0 * spacing))

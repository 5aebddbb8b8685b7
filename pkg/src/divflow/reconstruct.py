"""Middle-slice reconstruction: plain averaging and symmetric warping."""

from __future__ import annotations

import numpy as np

from .field import FlowField, VectorSlice, require_same_grid, sample_bilinear


def linear_midpoint(lower: VectorSlice, upper: VectorSlice) -> VectorSlice:
    grid = require_same_grid(lower, upper)
    comps = [0.5 * (lo.values + up.values) for lo, up in zip(lower.components, upper.components)]
    return VectorSlice.from_arrays(grid, *comps)


def warp_average(lower: VectorSlice, upper: VectorSlice, flow: FlowField) -> VectorSlice:
    """Average ``upper`` sampled at ``p + d`` with ``lower`` sampled at ``p - d``.

    ``d = (alpha, beta)`` is taken per pixel from ``flow`` in pixel units.
    Callers wanting a half-flow warp pass an already scaled flow.
    """
    grid = require_same_grid(lower, upper, flow)
    ys, xs = np.mgrid[0:grid.ny, 0:grid.nx].astype(np.float64)
    a, b = flow.alpha.values, flow.beta.values
    comps = []
    for lo, up in zip(lower.components, upper.components):
        fwd = sample_bilinear(up.values, xs + a, ys + b)
        back = sample_bilinear(lo.values, xs - a, ys - b)
        comps.append(0.5 * (back + fwd))
    return VectorSlice.from_arrays(grid, *comps)

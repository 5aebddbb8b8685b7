"""Symmetric optical flow with a divergence penalty on the interpolated slice.

The solver estimates one displacement field ``(alpha, beta)`` such that the
slice above, sampled at ``p + d``, and the slice below, sampled at ``p - d``,
agree in velocity magnitude while the sum of their divergences at those
points is driven to zero.

Constraint fields are built with physical grid spacings, so the displacement
the iteration works on is a physical length. :func:`divflow_solve` converts
the converged field to pixels before returning it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import (FlowField, ScalarSlice, VectorSlice, VolumeField, magnitude_image,
                    require_same_grid)
from .reconstruct import warp_average
from .stencils import DerivKind, average_neighbours, derivative


class SingularSystemError(ArithmeticError):
    pass


@dataclass(frozen=True)
class DivParams:
    gamma: float = 150.0
    lam: float = 1.0
    iterations: int = 2000
    early_stop_tol: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be non-negative, got {self.iterations}")
        if self.early_stop_tol < 0:
            raise ValueError("early_stop_tol must be non-negative")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")


@dataclass(frozen=True)
class ConstraintFields:
    """Per-pixel brightness (``h*``) and divergence (``d*``) constraint terms."""

    hx: ScalarSlice
    hy: ScalarSlice
    hz: ScalarSlice
    dxf: ScalarSlice
    dyf: ScalarSlice
    dzf: ScalarSlice

    def __post_init__(self):
        require_same_grid(self.hx, self.hy, self.hz, self.dxf, self.dyf, self.dzf)

    @property
    def grid(self):
        return self.hx.grid

    def arrays(self):
        return tuple(f.values for f in (self.hx, self.hy, self.hz, self.dxf, self.dyf, self.dzf))


def assemble_constraints(lower: VectorSlice, upper: VectorSlice, delta: float) -> ConstraintFields:
    """Linearised constraint terms for the slice halfway between ``lower`` and ``upper``.

    ``lower`` sits at ``z - delta`` and ``upper`` at ``z + delta``. The
    z-derivative of Vz at the midpoint is doubled and taken across the full
    ``2 * delta`` gap, which is the only z information available.
    """
    grid = require_same_grid(lower, upper)
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    dx, dy = grid.dx, grid.dy

    def d(arr, kind):
        return derivative(arr, kind, dx, dy)

    ip, im = magnitude_image(upper).values, magnitude_image(lower).values
    vxp, vyp, vzp = (c.values for c in upper.components)
    vxm, vym, vzm = (c.values for c in lower.components)

    hx = d(ip, DerivKind.Dx) + d(im, DerivKind.Dx)
    hy = d(ip, DerivKind.Dy) + d(im, DerivKind.Dy)
    hz = ip - im
    dxf = (d(vxp, DerivKind.Dxx) - d(vxm, DerivKind.Dxx)
           + d(vyp, DerivKind.Dxy) - d(vym, DerivKind.Dxy))
    dyf = (d(vxp, DerivKind.Dxy) - d(vxm, DerivKind.Dxy)
           + d(vyp, DerivKind.Dyy) - d(vym, DerivKind.Dyy))
    dzf = (d(vxp, DerivKind.Dx) + d(vxm, DerivKind.Dx)
           + d(vyp, DerivKind.Dy) + d(vym, DerivKind.Dy)
           + (vzp - vzm) / delta)
    mk = lambda a: ScalarSlice(grid, a)  # noqa: E731
    return ConstraintFields(mk(hx), mk(hy), mk(hz), mk(dxf), mk(dyf), mk(dzf))


@dataclass(frozen=True)
class Coefficients:
    """Per-pixel coefficient arrays of the Jacobi update."""

    a1: np.ndarray
    b1: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    a2: np.ndarray
    b2: np.ndarray
    c3: np.ndarray
    c4: np.ndarray
    d3: np.ndarray
    d4: np.ndarray


def coefficient_arrays(hx, hy, hz, dx, dy, dz, gamma: float, lam: float) -> Coefficients:
    g2, l2 = gamma * gamma, lam * lam
    cross = hx * dy - hy * dx
    d1 = cross * cross
    d2 = hx * hx + hy * hy + l2 + g2 * dx * dx + g2 * dy * dy
    b1 = l2 * (hx * hy + g2 * dx * dy)
    return Coefficients(
        a1=g2 * d1 + l2 * (hx * hx + g2 * dx * dx),
        b1=b1,
        c1=hx * hz * dy * dy + hy * hy * dx * dz - hy * hz * dx * dy - hx * hy * dy * dz,
        c2=hx * hz + g2 * dx * dz,
        d1=d1,
        d2=d2,
        a2=b1,
        b2=g2 * d1 + l2 * (hy * hy + g2 * dy * dy),
        c3=hy * hz * dx * dx + hx * hx * dy * dz - hx * hz * dx * dy - hx * hy * dx * dz,
        c4=hy * hz + g2 * dy * dz,
        d3=d1,
        d4=d2,
    )


def assemble_coefficients(c: ConstraintFields, gamma: float, lam: float) -> Coefficients:
    if gamma < 0 or not lam > 0:
        raise ValueError("need gamma >= 0 and lambda > 0")
    return coefficient_arrays(*c.arrays(), gamma, lam)


class _Update:
    """Precomputed Jacobi update, applied to neighbourhood averages."""

    def __init__(self, coef: Coefficients, gamma: float, lam: float):
        g2, l2 = gamma * gamma, lam * lam
        self.coef = coef
        self.num_a = g2 * coef.c1 + l2 * coef.c2
        self.num_b = g2 * coef.c3 + l2 * coef.c4
        self.den_a = g2 * coef.d1 + l2 * coef.d2
        self.den_b = g2 * coef.d3 + l2 * coef.d4

    def __call__(self, abar, bbar):
        c = self.coef
        new_a = abar - (c.a1 * abar + c.b1 * bbar + self.num_a) / self.den_a
        new_b = bbar - (c.a2 * abar + c.b2 * bbar + self.num_b) / self.den_b
        return new_a, new_b


def divflow_iterate(c: ConstraintFields, gamma: float, lam: float, iterations: int,
                    early_stop_tol: float = 0.0, alpha=None, beta=None, callback=None):
    """Jacobi sweeps in the constraint fields' length units.

    Returns ``(alpha, beta, n_done)``. ``callback(n, alpha, beta)`` runs after
    every sweep. Iteration stops early once the largest per-pixel change drops
    below ``early_stop_tol``.
    """
    update = _Update(assemble_coefficients(c, gamma, lam), gamma, lam)
    shape = c.grid.shape
    alpha = np.zeros(shape) if alpha is None else np.array(alpha, dtype=np.float64)
    beta = np.zeros(shape) if beta is None else np.array(beta, dtype=np.float64)
    n = 0
    for n in range(1, iterations + 1):
        new_a, new_b = update(average_neighbours(alpha), average_neighbours(beta))
        change = max(np.max(np.abs(new_a - alpha)), np.max(np.abs(new_b - beta)))
        alpha, beta = new_a, new_b
        if callback is not None:
            callback(n, alpha, beta)
        if change < early_stop_tol:
            break
    return alpha, beta, n


def divflow_step(flow: FlowField, c: ConstraintFields, gamma: float, lam: float) -> FlowField:
    """One Jacobi update of a pixel-unit flow field."""
    grid = require_same_grid(flow, c)
    alpha = flow.alpha.values * grid.dx
    beta = flow.beta.values * grid.dy
    update = _Update(assemble_coefficients(c, gamma, lam), gamma, lam)
    new_a, new_b = update(average_neighbours(alpha), average_neighbours(beta))
    return FlowField.from_arrays(grid, new_a / grid.dx, new_b / grid.dy)


def direct_pixel_solve(abar, bbar, h, d, gamma: float, lam: float):
    """Solve the per-pixel 2x2 normal equations by Cramer's rule.

    ``h = (hx, hy, hz)`` and ``d = (dx, dy, dz)``; scalars or broadcastable
    arrays. Independent of the coefficient formulas used by the iteration.
    The expanded determinant cancels badly when the divergence terms
    dominate, so the arithmetic runs in ``np.longdouble`` (extended precision
    where the platform has it) and the result is rounded back to float64.
    """
    ld = np.longdouble
    hx, hy, hz = (np.asarray(v, dtype=ld) for v in h)
    dx, dy, dz = (np.asarray(v, dtype=ld) for v in d)
    g2, l2 = ld(gamma) * ld(gamma), ld(lam) * ld(lam)
    m11 = hx * hx + g2 * dx * dx + l2
    m12 = hx * hy + g2 * dx * dy
    m22 = hy * hy + g2 * dy * dy + l2
    r1 = l2 * np.asarray(abar, dtype=ld) - (hx * hz + g2 * dx * dz)
    r2 = l2 * np.asarray(bbar, dtype=ld) - (hy * hz + g2 * dy * dz)
    det = m11 * m22 - m12 * m12
    if np.any(np.abs(det) < 1e-30):
        raise SingularSystemError("per-pixel system is singular")
    alpha = ((r1 * m22 - m12 * r2) / det).astype(np.float64)
    beta = ((m11 * r2 - m12 * r1) / det).astype(np.float64)
    if alpha.ndim == 0:
        return float(alpha), float(beta)
    return alpha, beta


def symmetric_hs_iterate(c: ConstraintFields, lam: float, iterations: int, callback=None):
    """HS sweeps driven by the symmetric brightness terms alone.

    This is the independent reference the divergence solver must reproduce
    when its divergence weight is zero.
    """
    hx, hy, hz = c.hx.values, c.hy.values, c.hz.values
    l2 = lam * lam
    alpha = np.zeros(c.grid.shape)
    beta = np.zeros(c.grid.shape)
    for n in range(1, iterations + 1):
        abar, bbar = average_neighbours(alpha), average_neighbours(beta)
        common = (hx * abar + hy * bbar + hz) / (l2 + hx * hx + hy * hy)
        alpha, beta = abar - hx * common, bbar - hy * common
        if callback is not None:
            callback(n, alpha, beta)
    return alpha, beta


def divflow_energy(alpha: np.ndarray, beta: np.ndarray, c: ConstraintFields, gamma: float, lam: float) -> float:
    """Discrete functional: brightness residual, weighted divergence residual, smoothness."""
    hx, hy, hz, dx, dy, dz = c.arrays()
    r_h = hx * alpha + hy * beta + hz
    r_d = dx * alpha + dy * beta + dz
    smooth = sum(np.sum(np.diff(f, axis=ax) ** 2) for f in (alpha, beta) for ax in (0, 1))
    return float(np.sum(r_h * r_h) + gamma * gamma * np.sum(r_d * r_d) + lam * lam * smooth)


def _to_pixels(alpha, beta, grid) -> FlowField:
    return FlowField.from_arrays(grid, alpha / grid.dx, beta / grid.dy)


def divflow_solve(lower: VectorSlice, upper: VectorSlice, params: DivParams) -> FlowField:
    """Displacement field (pixels) for the slice midway between ``lower`` and ``upper``."""
    c = assemble_constraints(lower, upper, params.delta)
    alpha, beta, _ = divflow_iterate(c, params.gamma, params.lam, params.iterations, params.early_stop_tol)
    return _to_pixels(alpha, beta, c.grid)


def divflow_interpolate_midslice(vol: VolumeField, center: int, step: int, params: DivParams) -> VectorSlice:
    lo, hi = center - step, center + step
    if step < 1 or lo < 0 or hi >= len(vol):
        raise IndexError(f"slices {lo} and {hi} are not both inside a {len(vol)}-slice volume")
    expected = step * vol.dz
    if not np.isclose(params.delta, expected, rtol=1e-12, atol=0):
        raise ValueError(f"params.delta={params.delta} does not match step*dz={expected}")
    lower, upper = vol[lo], vol[hi]
    flow = divflow_solve(lower, upper, params)
    return warp_average(lower, upper, flow)

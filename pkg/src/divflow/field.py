"""Grid value types and slice-level geometry shared by solvers and metrics.

Arrays are stored row-major with ``values[y, x]``. Coordinates passed to
sampling routines are ``(x, y)`` in pixel units.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage


class GridMismatchError(ValueError):
    """Raised when two fields that must share a grid do not."""


class DimensionError(ValueError):
    """Raised when a requested size does not fit the grid."""


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    dx: float = 1.0
    dy: float = 1.0

    def __post_init__(self):
        # the 3x3 stencil minimum is enforced by the derivative operators
        if self.nx < 1 or self.ny < 1:
            raise DimensionError(f"grid must be non-empty, got {self.nx}x{self.ny}")
        if not (np.isfinite(self.dx) and np.isfinite(self.dy)) or self.dx <= 0 or self.dy <= 0:
            raise ValueError(f"grid spacing must be positive and finite, got dx={self.dx}, dy={self.dy}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    def resized(self, nx: int, ny: int) -> "GridSpec":
        return GridSpec(nx, ny, self.dx, self.dy)


@dataclass(frozen=True, eq=False)
class ScalarSlice:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.shape != self.grid.shape:
            raise DimensionError(f"values shape {arr.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("slice values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "ScalarSlice":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def full(cls, grid: GridSpec, value: float) -> "ScalarSlice":
        return cls(grid, np.full(grid.shape, float(value)))

    def with_values(self, values: np.ndarray) -> "ScalarSlice":
        return ScalarSlice(self.grid, values)

    def __eq__(self, other):
        if not isinstance(other, ScalarSlice):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class VectorSlice:
    """One plane of a 3-component velocity field."""

    grid: GridSpec
    vx: ScalarSlice
    vy: ScalarSlice
    vz: ScalarSlice

    def __post_init__(self):
        for name in ("vx", "vy", "vz"):
            if getattr(self, name).grid != self.grid:
                raise GridMismatchError(f"component {name} does not share the slice grid")

    @classmethod
    def from_arrays(cls, grid: GridSpec, vx, vy, vz) -> "VectorSlice":
        return cls(grid, ScalarSlice(grid, vx), ScalarSlice(grid, vy), ScalarSlice(grid, vz))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "VectorSlice":
        z = ScalarSlice.zeros(grid)
        return cls(grid, z, z, z)

    @property
    def components(self) -> tuple[ScalarSlice, ScalarSlice, ScalarSlice]:
        return (self.vx, self.vy, self.vz)

    def map(self, fn) -> "VectorSlice":
        """Apply ``fn`` (ScalarSlice -> ScalarSlice) to each component."""
        out = [fn(c) for c in self.components]
        return VectorSlice(out[0].grid, *out)

    def __eq__(self, other):
        if not isinstance(other, VectorSlice):
            return NotImplemented
        return self.grid == other.grid and all(a == b for a, b in zip(self.components, other.components))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class VolumeField:
    slices: tuple[VectorSlice, ...]
    dz: float

    def __post_init__(self):
        slices = tuple(self.slices)
        if len(slices) < 2:
            raise DimensionError("a volume needs at least 2 slices")
        grid = slices[0].grid
        if any(s.grid != grid for s in slices):
            raise GridMismatchError("all slices of a volume must share one grid")
        if not np.isfinite(self.dz) or self.dz <= 0:
            raise ValueError(f"slice spacing dz must be positive and finite, got {self.dz}")
        object.__setattr__(self, "slices", slices)

    @property
    def grid(self) -> GridSpec:
        return self.slices[0].grid

    @property
    def nz(self) -> int:
        return len(self.slices)

    def __len__(self):
        return len(self.slices)

    def __getitem__(self, i: int) -> VectorSlice:
        return self.slices[i]

    def __eq__(self, other):
        if not isinstance(other, VolumeField):
            return NotImplemented
        return self.dz == other.dz and len(self) == len(other) and all(
            a == b for a, b in zip(self.slices, other.slices))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class FlowField:
    """In-plane displacement field; ``alpha`` along x, ``beta`` along y, in pixels."""

    grid: GridSpec
    alpha: ScalarSlice
    beta: ScalarSlice

    def __post_init__(self):
        if self.alpha.grid != self.grid or self.beta.grid != self.grid:
            raise GridMismatchError("flow components must share the flow grid")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "FlowField":
        z = ScalarSlice.zeros(grid)
        return cls(grid, z, z)

    @classmethod
    def from_arrays(cls, grid: GridSpec, alpha, beta) -> "FlowField":
        return cls(grid, ScalarSlice(grid, alpha), ScalarSlice(grid, beta))

    def scaled(self, factor: float) -> "FlowField":
        return FlowField.from_arrays(self.grid, self.alpha.values * factor, self.beta.values * factor)

    def __eq__(self, other):
        if not isinstance(other, FlowField):
            return NotImplemented
        return self.grid == other.grid and self.alpha == other.alpha and self.beta == other.beta

    __hash__ = None


def require_same_grid(*items) -> GridSpec:
    grid = items[0].grid
    for item in items[1:]:
        if item.grid != grid:
            raise GridMismatchError(f"grid mismatch: {item.grid} vs {grid}")
    return grid


def magnitude_image(v: VectorSlice) -> ScalarSlice:
    vx, vy, vz = (c.values for c in v.components)
    return ScalarSlice(v.grid, np.sqrt(vx * vx + vy * vy + vz * vz))


def sample_bilinear(values: np.ndarray, x, y) -> np.ndarray:
    """Bilinear lookup of ``values[y, x]`` at real pixel coordinates.

    Coordinates outside the grid are clamped to the border (edge replication).
    """
    ny, nx = values.shape
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, nx - 1)
    y = np.clip(np.asarray(y, dtype=np.float64), 0.0, ny - 1)
    return ndimage.map_coordinates(values, [y, x], order=1, mode="nearest")


def bilinear_sample(s: ScalarSlice, x: float, y: float) -> float:
    return float(sample_bilinear(s.values, np.array([x]), np.array([y]))[0])


def _center_offset(big: int, small: int) -> int:
    # odd remainders: the extra discarded (or padded) cell goes right/bottom
    return (big - small) // 2


def crop_center(s: ScalarSlice, w: int, h: int) -> ScalarSlice:
    nx, ny = s.grid.nx, s.grid.ny
    if w > nx or h > ny:
        raise DimensionError(f"cannot crop {nx}x{ny} to {w}x{h}")
    if w < 1 or h < 1:
        raise DimensionError(f"crop size must be positive, got {w}x{h}")
    ox, oy = _center_offset(nx, w), _center_offset(ny, h)
    return ScalarSlice(s.grid.resized(w, h), s.values[oy:oy + h, ox:ox + w])


def pad_to(s: ScalarSlice, w: int, h: int, fill: float = 0.0) -> ScalarSlice:
    nx, ny = s.grid.nx, s.grid.ny
    if w < nx or h < ny:
        raise DimensionError(f"cannot pad {nx}x{ny} to {w}x{h}")
    ox, oy = _center_offset(w, nx), _center_offset(h, ny)
    out = np.full((h, w), float(fill))
    out[oy:oy + ny, ox:ox + nx] = s.values
    return ScalarSlice(s.grid.resized(w, h), out)


def crop_vector(v: VectorSlice, w: int, h: int) -> VectorSlice:
    return v.map(lambda c: crop_center(c, w, h))


def pad_vector(v: VectorSlice, w: int, h: int, fill: float = 0.0) -> VectorSlice:
    return v.map(lambda c: pad_to(c, w, h, fill))


def stack_values(slices: Sequence[ScalarSlice]) -> np.ndarray:
    return np.stack([s.values for s in slices])

"""Analytic test volumes, noise perturbation and volume file I/O.

VVF (version 1) layout::

    VVF1 nx ny nz ncomp dx dy dz\\n          ASCII header, ncomp is always 3
    <nz * 3 * ny * nx little-endian float64>

Payload order is slice-major, then component (vx, vy, vz), then row-major
within each plane.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Sequence, TextIO, Union

import numpy as np

from .field import GridSpec, VectorSlice, VolumeField

MAGIC = "VVF1"
NCOMP = 3

PathOrStream = Union[str, os.PathLike, BinaryIO]


class VVFFormatError(ValueError):
    """Malformed VVF stream (bad magic, header, or payload)."""


class PayloadLengthError(VVFFormatError):
    pass


class CSVSliceError(ValueError):
    pass


@dataclass(frozen=True)
class AnalyticSpec:
    grid_nx: int = 128
    grid_ny: int = 128
    z_positions: Sequence[float] = (0.0, 0.5, 1.0, 1.5, 2.0)
    x_range: tuple[float, float] = (-1.0, 1.0)
    y_range: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        for lo, hi in (self.x_range, self.y_range):
            if not hi > lo:
                raise ValueError(f"coordinate range must be increasing, got ({lo}, {hi})")
        if len(self.z_positions) < 2:
            raise ValueError("need at least two z positions")
        z = np.asarray(self.z_positions, dtype=float)
        steps = np.diff(z)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ValueError("z positions must be increasing and evenly spaced")
        object.__setattr__(self, "z_positions", tuple(float(v) for v in z))

    @property
    def grid(self) -> GridSpec:
        dx = (self.x_range[1] - self.x_range[0]) / (self.grid_nx - 1)
        dy = (self.y_range[1] - self.y_range[0]) / (self.grid_ny - 1)
        return GridSpec(self.grid_nx, self.grid_ny, dx, dy)

    @property
    def dz(self) -> float:
        z = self.z_positions
        return (z[-1] - z[0]) / (len(z) - 1)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical ``(x, y)`` arrays shaped ``(ny, nx)``."""
        x = np.linspace(self.x_range[0], self.x_range[1], self.grid_nx)
        y = np.linspace(self.y_range[0], self.y_range[1], self.grid_ny)
        return np.meshgrid(x, y)


@dataclass(frozen=True)
class NoiseSpec:
    fraction: float = 0.10
    seed: int = 0

    def __post_init__(self):
        if self.fraction < 0:
            raise ValueError(f"noise fraction must be non-negative, got {self.fraction}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def analytic_velocity(x, y, z):
    """Divergence-free polynomial test field."""
    x, y, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(z, float))
    vx = 0.3 * y ** 2 + 0.15 * x ** 2
    vy = 0.3 * (1.0 - x ** 2) * (y - 1.0) - 0.3 * y * x
    vz = -0.3 * (1.0 - x ** 2) * z
    return vx, vy, vz


def gen_analytic(spec: AnalyticSpec = AnalyticSpec()) -> VolumeField:
    grid = spec.grid
    x, y = spec.coordinates()
    slices = [VectorSlice.from_arrays(grid, *analytic_velocity(x, y, z)) for z in spec.z_positions]
    return VolumeField(tuple(slices), spec.dz)


def add_noise(vol: VolumeField, spec: NoiseSpec) -> VolumeField:
    """Add zero-mean Gaussian noise with sigma = fraction * max|component| per plane."""
    if spec.fraction == 0:
        return vol
    rng = np.random.default_rng(spec.seed)
    out = []
    for s in vol.slices:
        comps = []
        for c in s.components:
            sigma = spec.fraction * float(np.max(np.abs(c.values)))
            comps.append(c.values + rng.normal(0.0, 1.0, c.values.shape) * sigma)
        out.append(VectorSlice.from_arrays(s.grid, *comps))
    return VolumeField(tuple(out), vol.dz)


def volume_to_array(vol: VolumeField) -> np.ndarray:
    """Stack a volume as ``(nz, 3, ny, nx)`` float64."""
    return np.stack([np.stack([c.values for c in s.components]) for s in vol.slices])


def volume_from_array(arr: np.ndarray, grid: GridSpec, dz: float) -> VolumeField:
    return VolumeField(tuple(VectorSlice.from_arrays(grid, *plane) for plane in arr), dz)


def _open(target, mode):
    if hasattr(target, "read" if "r" in mode else "write"):
        return target, False
    return open(target, mode), True


def write_vvf(vol: VolumeField, destination: PathOrStream) -> None:
    g = vol.grid
    header = f"{MAGIC} {g.nx} {g.ny} {vol.nz} {NCOMP} {g.dx!r} {g.dy!r} {vol.dz!r}\n"
    payload = volume_to_array(vol).astype("<f8", copy=False).tobytes(order="C")
    fh, owned = _open(destination, "wb")
    try:
        fh.write(header.encode("ascii"))
        fh.write(payload)
    finally:
        if owned:
            fh.close()


def read_vvf(source: PathOrStream) -> VolumeField:
    fh, owned = _open(source, "rb")
    try:
        header = fh.readline(4096)
        data = fh.read()
    finally:
        if owned:
            fh.close()
    if not header.startswith(MAGIC.encode("ascii") + b" "):
        raise VVFFormatError(f"bad magic: expected {MAGIC!r}, got {header[:4]!r}")
    if not header.endswith(b"\n"):
        raise VVFFormatError("unterminated VVF header")
    parts = header.decode("ascii", errors="replace").split()
    if len(parts) != 8:
        raise VVFFormatError(f"VVF header needs 8 fields, got {len(parts)}")
    try:
        nx, ny, nz, ncomp = (int(p) for p in parts[1:5])
        dx, dy, dz = (float(p) for p in parts[5:8])
    except ValueError as exc:
        raise VVFFormatError(f"unparseable VVF header: {exc}") from None
    if ncomp != NCOMP:
        raise VVFFormatError(f"ncomp must be {NCOMP}, got {ncomp}")
    if min(nx, ny, nz) < 1:
        raise VVFFormatError(f"non-positive dimensions {nx}x{ny}x{nz}")
    for name, v in (("dx", dx), ("dy", dy), ("dz", dz)):
        if not np.isfinite(v) or v <= 0:
            raise VVFFormatError(f"spacing {name} must be positive and finite, got {v}")
    expected = nz * ncomp * ny * nx * 8
    if len(data) != expected:
        raise PayloadLengthError(f"payload is {len(data)} bytes, header implies {expected}")
    arr = np.frombuffer(data, dtype="<f8").astype(np.float64).reshape(nz, ncomp, ny, nx)
    try:
        return volume_from_array(arr, GridSpec(nx, ny, dx, dy), dz)
    except ValueError as exc:
        raise VVFFormatError(str(exc)) from None


CSV_COLUMNS = ("x", "y", "vx", "vy", "vz")


def _read_csv_plane(fh: TextIO, grid: GridSpec, label: str) -> np.ndarray:
    planes = np.zeros((3, grid.ny, grid.nx))
    seen = np.zeros(grid.shape, dtype=bool)
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
        raise CSVSliceError(f"{label}: line 1: expected header {','.join(CSV_COLUMNS)}")
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(CSV_COLUMNS):
            raise CSVSliceError(f"{label}: line {line}: expected 5 fields, got {len(row)}")
        try:
            xi, yi = int(row[0]), int(row[1])
            vals = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise CSVSliceError(f"{label}: line {line}: {exc}") from None
        if not (0 <= xi < grid.nx and 0 <= yi < grid.ny):
            raise CSVSliceError(f"{label}: line {line}: pixel ({xi}, {yi}) outside {grid.nx}x{grid.ny} grid")
        if not all(np.isfinite(vals)):
            raise CSVSliceError(f"{label}: line {line}: non-finite velocity")
        if seen[yi, xi]:
            raise CSVSliceError(f"{label}: line {line}: duplicate pixel ({xi}, {yi})")
        seen[yi, xi] = True
        planes[:, yi, xi] = vals
    if not seen.all():
        yi, xi = np.argwhere(~seen)[0]
        raise CSVSliceError(f"{label}: missing pixel ({xi}, {yi})")
    return planes


def read_csv_slices(sources: Iterable[Union[str, os.PathLike, TextIO]], grid: GridSpec, dz: float) -> VolumeField:
    """Assemble a volume from one ``x,y,vx,vy,vz`` CSV per slice (integer pixel indices)."""
    planes = []
    for i, src in enumerate(sources):
        if hasattr(src, "read"):
            planes.append(_read_csv_plane(src, grid, getattr(src, "name", f"source {i}")))
        else:
            with open(src, newline="", encoding="utf-8") as fh:
                planes.append(_read_csv_plane(fh, grid, os.fspath(src)))
    return volume_from_array(np.stack(planes), grid, dz)


def write_csv_slice(s: VectorSlice, destination: TextIO) -> None:
    w = csv.writer(destination, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for yi in range(s.grid.ny):
        for xi in range(s.grid.nx):
            w.writerow([xi, yi] + [repr(float(c.values[yi, xi])) for c in s.components])

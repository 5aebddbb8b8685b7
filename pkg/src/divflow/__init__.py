"""Divergence-aware optical-flow interpolation of velocimetry slices."""

from .datasets import (AnalyticSpec, NoiseSpec, add_noise, gen_analytic, read_csv_slices, read_vvf,
                       write_vvf)
from .divof import (ConstraintFields, DivParams, assemble_coefficients, assemble_constraints,
                    direct_pixel_solve, divflow_interpolate_midslice, divflow_solve, divflow_step)
from .field import (FlowField, GridSpec, ScalarSlice, VectorSlice, VolumeField, bilinear_sample,
                    crop_center, magnitude_image, pad_to)
from .hs import HsParams, hs_interpolate_midslice, hs_solve
from .metrics import discrete_divergence, divergence_metric, mse
from .reconstruct import linear_midpoint, warp_average

__version__ = "0.1.0"

__all__ = [
    "AnalyticSpec", "NoiseSpec", "add_noise", "gen_analytic", "read_csv_slices", "read_vvf", "write_vvf",
    "ConstraintFields", "DivParams", "assemble_coefficients", "assemble_constraints", "direct_pixel_solve",
    "divflow_interpolate_midslice", "divflow_solve", "divflow_step",
    "FlowField", "GridSpec", "ScalarSlice", "VectorSlice", "VolumeField", "bilinear_sample", "crop_center",
    "magnitude_image", "pad_to",
    "HsParams", "hs_interpolate_midslice", "hs_solve",
    "discrete_divergence", "divergence_metric", "mse",
    "linear_midpoint", "warp_average",
]

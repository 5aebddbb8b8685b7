"""Method dispatch for centre-slice reconstruction and evaluation."""

from __future__ import annotations

import time
from dataclasses import dataclass

from .divof import DivParams, divflow_interpolate_midslice
from .field import VectorSlice, VolumeField
from .hs import HsParams, hs_interpolate_midslice
from .metrics import EvalReport, evaluate
from .reconstruct import linear_midpoint

METHODS = ("linear", "hs", "divof")
HS_VARIANTS = ("classic", "symmetric")


@dataclass(frozen=True)
class MethodConfig:
    gamma: float = 150.0
    lam: float = 1.0
    iterations: int = 2000
    hs_variant: str = "classic"
    early_stop_tol: float = 0.0

    def __post_init__(self):
        if self.hs_variant not in HS_VARIANTS:
            raise ValueError(f"hs variant must be one of {HS_VARIANTS}, got {self.hs_variant!r}")

    def params_for(self, method: str) -> dict:
        if method == "linear":
            return {}
        if method == "hs":
            return {"lambda": self.lam, "iterations": self.iterations, "hs_variant": self.hs_variant}
        return {"gamma": self.gamma, "lambda": self.lam, "iterations": self.iterations}


def check_indices(vol: VolumeField, center: int, step: int) -> None:
    if step < 1:
        raise IndexError(f"step must be >= 1, got {step}")
    if center - step < 0 or center + step >= len(vol):
        raise IndexError(f"center {center} with step {step} needs slices {center - step}..{center + step}, "
                         f"volume has 0..{len(vol) - 1}")


def reconstruct_center(vol: VolumeField, method: str, center: int, step: int, cfg: MethodConfig) -> VectorSlice:
    check_indices(vol, center, step)
    lower, upper = vol[center - step], vol[center + step]
    if method == "linear":
        return linear_midpoint(lower, upper)
    if method == "hs" and cfg.hs_variant == "classic":
        return hs_interpolate_midslice(vol, center - step, center + step,
                                       HsParams(cfg.lam, cfg.iterations, cfg.early_stop_tol))
    if method in ("hs", "divof"):
        gamma = 0.0 if method == "hs" else cfg.gamma
        params = DivParams(gamma, cfg.lam, cfg.iterations, cfg.early_stop_tol, step * vol.dz)
        return divflow_interpolate_midslice(vol, center, step, params)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def run_and_evaluate(vol: VolumeField, method: str, center: int, step: int, cfg: MethodConfig,
                     region: tuple[int, int] = (110, 110), truth: VolumeField | None = None
                     ) -> tuple[VectorSlice, EvalReport]:
    """Reconstruct slice ``center`` from ``center +- step`` and score it.

    The reference slice comes from ``truth`` when given, otherwise from ``vol``.
    """
    t0 = time.perf_counter()
    out = reconstruct_center(vol, method, center, step, cfg)
    wall_ms = (time.perf_counter() - t0) * 1e3
    ref_vol = vol if truth is None else truth
    ref = ref_vol[center] if center < len(ref_vol) else None
    report = evaluate(method, out, vol[center - step], vol[center + step], step * vol.dz,
                      region[0], region[1], truth=ref, params=cfg.params_for(method),
                      center=center, step=step, wall_ms=wall_ms)
    return out, report

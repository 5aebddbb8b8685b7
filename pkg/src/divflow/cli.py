"""Command-line entry point: ``divflow {gen,interp,sweep,compare}``.

Exit codes: 0 success, 2 usage or validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .datasets import (AnalyticSpec, CSVSliceError, NoiseSpec, VVFFormatError, add_noise, gen_analytic,
                       read_vvf, write_vvf)
from .field import VolumeField, pad_vector
from .pipeline import HS_VARIANTS, METHODS, MethodConfig, check_indices, run_and_evaluate
from .report import REPORT_COLUMNS, SWEEP_COLUMNS, render_csv, report_row, sweep_row, sweep_svg

log = logging.getLogger("divflow")

EXIT_USAGE = 2
EXIT_IO = 3


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    """Parse ``a,b,c`` or a linear range ``start:stop:count``."""
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            return [float(v) for v in np.linspace(float(start), float(stop), int(count))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list or start:stop:count, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _range(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got {text!r}")
    return vals[0], vals[1]


def _region(text: str) -> tuple[int, int]:
    vals = _ints(text.replace("x", ","))
    if len(vals) == 1:
        return vals[0], vals[0]
    if len(vals) == 2:
        return vals[0], vals[1]
    raise argparse.ArgumentTypeError(f"expected N or WxH, got {text!r}")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="smoothness weight (default 1)")
    p.add_argument("--iters", type=int, default=2000, help="solver iterations (default 2000)")
    p.add_argument("--tol", type=float, default=0.0, help="early-stop tolerance on max update (default 0: off)")
    p.add_argument("--hs-variant", choices=HS_VARIANTS, default="classic",
                   help="classic: flow between outer slices; symmetric: divof solver with gamma=0")
    p.add_argument("--region", type=_region, default=(110, 110), help="metric window N or WxH (default 110)")
    p.add_argument("--truth", help="VVF volume holding reference slices (default: the input volume)")
    p.add_argument("--timing", action="store_true", help="record wall_ms in reports (breaks byte stability)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divflow", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write the analytic test volume")
    g.add_argument("--nx", type=int, default=128)
    g.add_argument("--ny", type=int, default=128)
    g.add_argument("--z", type=_floats, default=[0.0, 0.5, 1.0, 1.5, 2.0], help="slice z positions")
    g.add_argument("--x-range", type=_range, default=(-1.0, 1.0))
    g.add_argument("--y-range", type=_range, default=(-1.0, 1.0))
    g.add_argument("--pad", type=int, default=None, help="zero-pad each slice to N x N after generation")
    g.add_argument("--noise-frac", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    i = sub.add_parser("interp", help="reconstruct one centre slice")
    i.add_argument("input")
    i.add_argument("--method", choices=METHODS, default="divof")
    i.add_argument("--center", type=int, required=True)
    i.add_argument("--step", type=int, default=1)
    i.add_argument("--gamma", type=float, default=150.0)
    _add_solver_args(i)
    i.add_argument("--out", help="write the input volume with the centre slice replaced by the reconstruction")
    i.add_argument("--report", help="append the evaluation row to this CSV (default: stdout)")

    s = sub.add_parser("sweep", help="sweep gamma (and lambda) for the divof method")
    s.add_argument("input")
    s.add_argument("--center", type=int, required=True)
    s.add_argument("--step", type=int, default=1)
    s.add_argument("--gammas", type=_floats, required=True, help="list a,b,c or start:stop:count")
    s.add_argument("--lambdas", type=_floats, default=[1.0],
                   help="one value, or as many as --gammas for a paired sweep")
    s.add_argument("--iters", type=int, default=2000)
    s.add_argument("--tol", type=float, default=0.0)
    s.add_argument("--region", type=_region, default=(110, 110))
    s.add_argument("--truth")
    s.add_argument("--timing", action="store_true")
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    s.add_argument("--csv", required=True)
    s.add_argument("--svg")

    c = sub.add_parser("compare", help="table of methods x centres x steps")
    c.add_argument("input")
    c.add_argument("--methods", default=",".join(METHODS))
    c.add_argument("--centers", type=_ints, default=[2, 3, 4])
    c.add_argument("--steps", type=_ints, default=[1, 2])
    c.add_argument("--gamma", type=float, default=150.0)
    _add_solver_args(c)
    c.add_argument("--csv", help="output CSV (default: stdout)")
    return parser


def _load(path: str) -> VolumeField:
    return read_vvf(path)


def _config(args, gamma=None, lam=None) -> MethodConfig:
    return MethodConfig(gamma=args.gamma if gamma is None else gamma, lam=args.lam if lam is None else lam,
                        iterations=args.iters, hs_variant=getattr(args, "hs_variant", "classic"),
                        early_stop_tol=args.tol)


def _validate_common(args) -> None:
    if args.iters < 0:
        raise UsageError("--iters must be >= 0")
    if args.tol < 0:
        raise UsageError("--tol must be >= 0")


def _emit(text: str, path: str | None, append: bool = False) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "a" if append else "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


def cmd_gen(args) -> int:
    if args.nx < 3 or args.ny < 3:
        raise UsageError("--nx and --ny must be at least 3")
    if args.noise_frac < 0:
        raise UsageError("--noise-frac must be non-negative")
    try:
        spec = AnalyticSpec(args.nx, args.ny, tuple(args.z), tuple(args.x_range), tuple(args.y_range))
        vol = gen_analytic(spec)
        if args.noise_frac > 0:
            vol = add_noise(vol, NoiseSpec(args.noise_frac, args.seed))
        if args.pad is not None:
            vol = VolumeField(tuple(pad_vector(s, args.pad, args.pad, 0.0) for s in vol.slices), vol.dz)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_vvf(vol, args.out)
    log.info("wrote %d slices of %dx%d to %s", vol.nz, vol.grid.nx, vol.grid.ny, args.out)
    return 0


def cmd_interp(args) -> int:
    _validate_common(args)
    vol = _load(args.input)
    truth = _load(args.truth) if args.truth else None
    check_indices(vol, args.center, args.step)
    out, report = run_and_evaluate(vol, args.method, args.center, args.step, _config(args),
                                   tuple(args.region), truth)
    if args.out:
        slices = list(vol.slices)
        slices[args.center] = out
        write_vvf(VolumeField(tuple(slices), vol.dz), args.out)
    new_file = args.report is None or not os.path.exists(args.report) or os.path.getsize(args.report) == 0
    _emit(render_csv(REPORT_COLUMNS, [report_row(report, args.timing)], with_header=new_file), args.report,
          append=True)
    return 0


def _sweep_point(payload):
    vol, truth, center, step, gamma, lam, iters, tol, region = payload
    cfg = MethodConfig(gamma=gamma, lam=lam, iterations=iters, early_stop_tol=tol)
    _, report = run_and_evaluate(vol, "divof", center, step, cfg, region, truth)
    return report


def sweep_pairs(gammas: list[float], lambdas: list[float]) -> list[tuple[float, float]]:
    if not gammas or not lambdas:
        raise UsageError("sweep lists must be non-empty")
    if any(g < 0 for g in gammas) or any(not lam > 0 for lam in lambdas):
        raise UsageError("gamma values must be >= 0 and lambda values > 0")
    if len(lambdas) == 1:
        return [(g, lambdas[0]) for g in gammas]
    if len(lambdas) != len(gammas):
        raise UsageError("--lambdas must have one value or as many as --gammas")
    return list(zip(gammas, lambdas))


def cmd_sweep(args) -> int:
    _validate_common(args)
    pairs = sweep_pairs(args.gammas, args.lambdas)
    vol = _load(args.input)
    truth = _load(args.truth) if args.truth else None
    check_indices(vol, args.center, args.step)
    payloads = [(vol, truth, args.center, args.step, g, lam, args.iters, args.tol, tuple(args.region))
                for g, lam in pairs]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_sweep_point, payloads))
    else:
        reports = [_sweep_point(p) for p in payloads]
    rows = [sweep_row(g, lam, r, args.timing) for (g, lam), r in zip(pairs, reports)]
    _emit(render_csv(SWEEP_COLUMNS, rows), args.csv)
    if args.svg:
        paired = len(args.lambdas) > 1
        _emit(sweep_svg([g for g, _ in pairs], [r.divergence_mean_abs for r in reports],
                        [r.mse for r in reports], xlabel="gamma = lambda" if paired else "gamma"), args.svg)
    return 0


def cmd_compare(args) -> int:
    _validate_common(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if unknown or not methods:
        raise UsageError(f"unknown method(s) {unknown}; expected from {METHODS}")
    vol = _load(args.input)
    truth = _load(args.truth) if args.truth else None
    for center in args.centers:
        for step in args.steps:
            check_indices(vol, center, step)
    cfg = _config(args)
    rows = []
    for method in methods:
        for center in args.centers:
            for step in args.steps:
                _, report = run_and_evaluate(vol, method, center, step, cfg, tuple(args.region), truth)
                rows.append(report_row(report, args.timing))
    _emit(render_csv(REPORT_COLUMNS, rows), args.csv)
    return 0


COMMANDS = {"gen": cmd_gen, "interp": cmd_interp, "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, IndexError, ValueError) as exc:
        if isinstance(exc, (VVFFormatError, CSVSliceError)):
            print(f"divflow: input error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"divflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"divflow: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""CSV report rows and minimal static SVG line charts."""

from __future__ import annotations

import csv
import io
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

from .metrics import EvalReport

SCHEMA_LINE = "# divflow-report v1"

REPORT_COLUMNS = ("method", "center", "step", "gamma", "lambda", "iterations", "div_mean_abs", "div_l2",
                  "mse", "mse_mag", "region_w", "region_h", "wall_ms")
SWEEP_COLUMNS = ("gamma", "lambda", "iterations", "div_mean_abs", "div_l2", "mse", "mse_mag", "wall_ms")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def report_row(r: EvalReport, timing: bool = False) -> list[str]:
    p = r.params
    return [r.method, fmt(r.center), fmt(r.step), fmt(p.get("gamma")), fmt(p.get("lambda")),
            fmt(p.get("iterations")), fmt(r.divergence_mean_abs), fmt(r.divergence_l2), fmt(r.mse),
            fmt(r.mse_mag), fmt(r.region_w), fmt(r.region_h),
            fmt(round(r.wall_ms, 3)) if timing and r.wall_ms is not None else ""]


def sweep_row(gamma: float, lam: float, r: EvalReport, timing: bool = False) -> list[str]:
    return [fmt(float(gamma)), fmt(float(lam)), fmt(r.params.get("iterations")), fmt(r.divergence_mean_abs),
            fmt(r.divergence_l2), fmt(r.mse), fmt(r.mse_mag),
            fmt(round(r.wall_ms, 3)) if timing and r.wall_ms is not None else ""]


def render_csv(columns: Sequence[str], rows: Iterable[Sequence[str]], with_header: bool = True) -> str:
    buf = io.StringIO()
    if with_header:
        buf.write(SCHEMA_LINE + "\n")
    w = csv.writer(buf, lineterminator="\n")
    if with_header:
        w.writerow(columns)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def read_report(text: str) -> list[dict]:
    lines = text.splitlines()
    if not lines or lines[0] != SCHEMA_LINE:
        raise ValueError("missing divflow report schema line")
    return list(csv.DictReader(lines[1:]))


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _panel(x0, y0, w, h, xs, ys, title, xlabel, color) -> list[str]:
    out = [f'<g transform="translate({x0},{y0})">',
           f'<rect x="0" y="0" width="{w}" height="{h}" fill="none" stroke="#000"/>',
           f'<text x="{w / 2:.1f}" y="-10" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<text x="{w / 2:.1f}" y="{h + 36}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>']
    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(ys), max(ys)
    if yhi == ylo:
        pad = abs(ylo) * 0.05 or 1.0
        ylo, yhi = ylo - pad, yhi + pad
    if xhi == xlo:
        xlo, xhi = xlo - 1.0, xhi + 1.0

    def px(x):
        return (x - xlo) / (xhi - xlo) * w

    def py(y):
        return h - (y - ylo) / (yhi - ylo) * h

    for t in _nice_ticks(xlo, xhi):
        out.append(f'<line x1="{px(t):.2f}" y1="{h}" x2="{px(t):.2f}" y2="{h + 5}" stroke="#000"/>')
        out.append(f'<text x="{px(t):.2f}" y="{h + 18}" text-anchor="middle" font-size="10">{t:.4g}</text>')
    for t in _nice_ticks(ylo, yhi):
        out.append(f'<line x1="-5" y1="{py(t):.2f}" x2="0" y2="{py(t):.2f}" stroke="#000"/>')
        out.append(f'<text x="-8" y="{py(t) + 3:.2f}" text-anchor="end" font-size="10">{t:.4g}</text>')
    pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
    out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
    for x, y in zip(xs, ys):
        out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.5" fill="{color}"/>')
    out.append("</g>")
    return out


def sweep_svg(xs: Sequence[float], divergence: Sequence[float], mse: Sequence[float],
              xlabel: str = "gamma") -> str:
    """Two side-by-side line charts: divergence and MSE against the swept value."""
    w, h, margin = 320, 220, 70
    width = 2 * (w + margin) + margin
    height = h + 2 * margin
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
             f'font-family="sans-serif">',
             f'<rect width="{width}" height="{height}" fill="#fff"/>']
    parts += _panel(margin, margin, w, h, xs, divergence, "mean |divergence|", xlabel, "#1f5fa8")
    mse_vals = [m if m is not None else 0.0 for m in mse]
    parts += _panel(2 * margin + w, margin, w, h, xs, mse_vals, "vector MSE", xlabel, "#b8401a")
    ly = height - 12
    parts += [f'<line x1="{margin}" y1="{ly - 4}" x2="{margin + 20}" y2="{ly - 4}" stroke="#1f5fa8" stroke-width="2"/>',
              f'<text x="{margin + 25}" y="{ly}" font-size="11">divergence</text>',
              f'<line x1="{margin + 110}" y1="{ly - 4}" x2="{margin + 130}" y2="{ly - 4}" stroke="#b8401a" stroke-width="2"/>',
              f'<text x="{margin + 135}" y="{ly}" font-size="11">MSE</text>',
              "</svg>"]
    return "\n".join(parts) + "\n"

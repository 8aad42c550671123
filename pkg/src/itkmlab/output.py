"""CSV and SVG emitters for experiment results."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import fields
from pathlib import Path

from .experiments import GridPoint, TrialResult, aggregate, curve_label, curves, x_value

TRIAL_COLUMNS = [
    "experiment", "dims", "K", "S", "T", "b", "rho", "N", "t", "trial", "seed",
    "dist_raw", "dist_sign", "dist_matched", "objective", "safeguard_events", "wall_ms",
]  # fmt: skip
HEADER = TRIAL_COLUMNS + ["mean_dist_sign", "stderr_dist_sign"]
_POINT = [f.name for f in fields(GridPoint)]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in results:
        w.writerow([_fmt(getattr(r, c)) for c in TRIAL_COLUMNS] + ["", ""])
    for a in aggregate(results):
        p = a.point
        row = [_fmt(getattr(p, c)) for c in _POINT]
        row += ["-1", "", _fmt(a.dist_raw), _fmt(a.dist_sign), _fmt(a.dist_matched), _fmt(a.objective)]
        row += [str(a.safeguard_events), "", _fmt(a.mean_dist_sign), _fmt(a.stderr_dist_sign)]
        w.writerow(row)
    return buf.getvalue()


def emit_csv(results, path) -> None:
    """One row per trial, then one aggregate row (trial = -1) per grid point."""
    Path(path).write_text(csv_text(results), encoding="utf-8")


_TYPES = {"dims": int, "K": int, "S": int, "T": int, "N": int, "trial": int, "seed": int, "safeguard_events": int}


def read_csv(path):
    """Parse an emitted CSV into (trial results, aggregate dicts)."""
    trials, aggs = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["trial"] == "-1":
                agg = {k: v for k, v in row.items() if v != ""}
                for k, v in agg.items():
                    if k != "experiment":
                        agg[k] = _TYPES.get(k, float)(v)
                aggs.append(agg)
            else:
                vals = {c: (row[c] if c == "experiment" else _TYPES.get(c, float)(row[c])) for c in TRIAL_COLUMNS}
                trials.append(TrialResult(**vals))
    return trials, aggs


# -- SVG ---------------------------------------------------------------------------

_COLOURS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#7f7f7f"]
_W, _H = 720, 480
_L, _R, _T, _B = 80, 260, 30, 60


def _nice_ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-12 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _log_ticks(lo, hi):
    return [10.0**e for e in range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1)]


def _num(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:g}"


def svg_text(results, x_axis: str, log_x: bool = False, log_y: bool = False, title: str = "") -> str:
    """Polyline chart of the mean sign-invariant distance, one series per curve."""
    groups = curves(aggregate(results), x_axis)
    series = []
    for key, rows in groups.items():
        pts = [(x_value(r.point, x_axis), r.mean_dist_sign) for r in rows]
        if log_x:
            pts = [(x, y) for x, y in pts if x > 0]
        if log_y:
            pts = [(x, y) for x, y in pts if y > 0]
        if pts:
            series.append((curve_label(key), pts))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{_W / 2:.0f}" y="18" text-anchor="middle" font-size="14">{title}</text>')
    pw, ph = _W - _L - _R, _H - _T - _B
    out.append(f'<rect x="{_L}" y="{_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    xs = [x for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts]
    if xs:
        fx = (lambda v: math.log10(v)) if log_x else (lambda v: v)
        fy = (lambda v: math.log10(v)) if log_y else (lambda v: v)
        x0, x1 = min(map(fx, xs)), max(map(fx, xs))
        y0, y1 = min(map(fy, ys)), max(map(fy, ys))
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pad = 0.05 * (y1 - y0)
        y0, y1 = y0 - pad, y1 + pad

        def px(v):
            return _L + (fx(v) - x0) / (x1 - x0) * pw

        def py(v):
            return _T + ph - (fy(v) - y0) / (y1 - y0) * ph

        xt = _log_ticks(10**x0, 10**x1) if log_x else _nice_ticks(x0, x1)
        yt = _log_ticks(10**y0, 10**y1) if log_y else _nice_ticks(y0, y1)
        for v in xt:
            if x0 - 1e-9 <= fx(v) <= x1 + 1e-9:
                X = px(v)
                out.append(f'<line x1="{_num(X)}" y1="{_T + ph}" x2="{_num(X)}" y2="{_T + ph + 5}" stroke="black"/>')
                out.append(
                    f'<text x="{_num(X)}" y="{_T + ph + 18}" text-anchor="middle" font-size="11">{_tick_label(v)}</text>'
                )
        for v in yt:
            if y0 - 1e-9 <= fy(v) <= y1 + 1e-9:
                Y = py(v)
                out.append(f'<line x1="{_L - 5}" y1="{_num(Y)}" x2="{_L}" y2="{_num(Y)}" stroke="black"/>')
                out.append(
                    f'<text x="{_L - 8}" y="{_num(Y + 4)}" text-anchor="end" font-size="11">{_tick_label(v)}</text>'
                )
        for i, (label, pts) in enumerate(series):
            colour = _COLOURS[i % len(_COLOURS)]
            coords = " ".join(f"{_num(px(x))},{_num(py(y))}" for x, y in pts)
            out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{coords}"/>')
            for x, y in pts:
                out.append(f'<circle cx="{_num(px(x))}" cy="{_num(py(y))}" r="2.5" fill="{colour}"/>')
            ly = _T + 14 + 16 * i
            out.append(f'<line x1="{_W - _R + 12}" y1="{ly}" x2="{_W - _R + 32}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
            out.append(f'<text x="{_W - _R + 36}" y="{ly + 4}" font-size="10">{label}</text>')
    xlabel = {"rho2": "noise variance rho^2"}.get(x_axis, x_axis)
    out.append(f'<text x="{_L + pw / 2:.0f}" y="{_H - 15}" text-anchor="middle" font-size="12">{xlabel}</text>')
    out.append(
        f'<text x="18" y="{_T + ph / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 18 {_T + ph / 2:.0f})">recovery error (sign-invariant)</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(results, path, x_axis: str, log_x: bool = False, log_y: bool = False, title: str = "") -> None:
    Path(path).write_text(svg_text(results, x_axis, log_x, log_y, title), encoding="utf-8")

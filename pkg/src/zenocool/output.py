"""CSV, JSON and minimal SVG writers with deterministic formatting."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

PALETTE = ("#000000", "#d62728", "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd")
DASHES = ("", "6,4", "2,3", "8,3,2,3", "4,2", "1,2")


def fmt(value) -> str:
    """17-significant-digit decimal; empty string for missing values."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return f"{float(value):.17g}"


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path, data) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


Series = Tuple[str, Sequence[float], Sequence[float]]


def _ticks(lo: float, hi: float, n: int = 5) -> List[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    out = []
    x = start
    while x <= hi + 1e-12 * step:
        out.append(round(x, 12))
        x += step
    return out


def write_svg(path, series: Sequence[Series], xlabel: str = "", ylabel: str = "",
              title: str = "", markers: Optional[Sequence[bool]] = None,
              width: int = 640, height: int = 420) -> Path:
    """Line chart with linear axes and a legend; NaN/None points break the line."""
    left, right, top, bottom = 70, 20, 30, 50
    pw, ph = width - left - right, height - top - bottom
    xs_all, ys_all = [], []
    for _, xs, ys in series:
        for x, y in zip(xs, ys):
            if x is not None and y is not None and math.isfinite(x) and math.isfinite(y):
                xs_all.append(float(x))
                ys_all.append(float(y))
    x0, x1 = (min(xs_all), max(xs_all)) if xs_all else (0.0, 1.0)
    y0, y1 = (min(ys_all), max(ys_all)) if ys_all else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{px(t):.2f}" y1="{top + ph}" x2="{px(t):.2f}" '
                   f'y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{top + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{left - 5}" y1="{py(t):.2f}" x2="{left}" y2="{py(t):.2f}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    if title:
        out.append(f'<text x="{left + pw / 2:.1f}" y="18" text-anchor="middle">{_esc(title)}</text>')
    if xlabel:
        out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" '
                   f'text-anchor="middle">{_esc(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="15" y="{top + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 15 {top + ph / 2:.1f})">{_esc(ylabel)}</text>')
    markers = markers or [False] * len(series)
    for k, ((label, xs, ys), mark) in enumerate(zip(series, markers)):
        color, dash = PALETTE[k % len(PALETTE)], DASHES[k % len(DASHES)]
        if mark:
            for x, y in zip(xs, ys):
                if y is not None and math.isfinite(y):
                    out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="none" '
                               f'stroke="{color}"/>')
        else:
            for run in _runs(xs, ys):
                pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in run)
                dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
                out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                           f'stroke-width="1.5"{dash_attr}/>')
        ly = top + 15 + 16 * k
        out.append(f'<line x1="{left + pw - 150}" y1="{ly}" x2="{left + pw - 125}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="1.5"'
                   + (f' stroke-dasharray="{dash}"' if dash and not mark else "") + "/>")
        out.append(f'<text x="{left + pw - 120}" y="{ly + 4}">{_esc(label)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path


def _runs(xs, ys):
    run = []
    for x, y in zip(xs, ys):
        if y is None or not math.isfinite(y) or x is None or not math.isfinite(x):
            if len(run) > 1:
                yield run
            run = []
        else:
            run.append((float(x), float(y)))
    if len(run) > 1:
        yield run


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")

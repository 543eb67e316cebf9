"""Minimal self-contained SVG line plots with the plotted data embedded in comments."""

from __future__ import annotations

import datetime as _dt
import math
from html import escape
from pathlib import Path

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
W, H = 640, 420
ML, MR, MT, MB = 70, 160, 40, 55


def _nice_ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


def _fmt_tick(v):
    return f"{v:g}"


def line_plot(series, path, title="", xlabel="", ylabel="", timestamp=True, logx=False):
    """Write an SVG with one polyline+markers per series.

    ``series`` is a list of dicts with ``label``, ``x``, ``y`` and optional
    ``dash`` (bool) and ``markers`` (bool, default True).
    """
    xs = [x for s in series for x in s["x"]]
    ys = [y for s in series for y in s["y"]]
    if not xs:
        raise ValueError("nothing to plot")
    tx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    x0, x1 = min(map(tx, xs)), max(map(tx, xs))
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    pad = 0.05 * (y1 - y0 or 1.0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = W - ML - MR, H - MT - MB

    def px(v):
        return ML + (tx(v) - x0) / (x1 - x0) * pw

    def py(v):
        return MT + (1 - (v - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
           'font-family="sans-serif" font-size="11">']
    if timestamp:
        out.append(f"<!-- generated {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')} -->")
    for s in series:
        out.append(f"<!-- data: {escape(s['label'])}")
        out.append("x,y")
        out.extend(f"{x!r},{y!r}" for x, y in zip(s["x"], s["y"]))
        out.append("-->")
    out.append(f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>')
    if logx:
        xt = [10 ** e for e in range(math.floor(x0), math.ceil(x1) + 1) if x0 <= e <= x1]
        for base in range(math.floor(x0), math.ceil(x1) + 1):
            for m in (2, 5):
                v = math.log10(m * 10 ** base)
                if x0 <= v <= x1:
                    xt.append(m * 10 ** base)
        xt.sort()
    else:
        xt = _nice_ticks(x0, x1)
    for v in xt:
        X = px(v)
        out.append(f'<line x1="{X:.2f}" y1="{MT + ph}" x2="{X:.2f}" y2="{MT + ph + 4}" stroke="#444"/>')
        out.append(f'<text x="{X:.2f}" y="{MT + ph + 16}" text-anchor="middle">{_fmt_tick(v)}</text>')
    for v in _nice_ticks(y0, y1):
        Y = py(v)
        out.append(f'<line x1="{ML - 4}" y1="{Y:.2f}" x2="{ML + pw}" y2="{Y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{ML - 6}" y="{Y + 4:.2f}" text-anchor="end">{_fmt_tick(v)}</text>')
    out.append(f'<text x="{ML + pw / 2}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{MT + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MT + ph / 2})">{escape(ylabel)}</text>')
    out.append(f'<text x="{ML + pw / 2}" y="22" text-anchor="middle" font-size="13">{escape(title)}</text>')
    for i, s in enumerate(series):
        c = COLORS[i % len(COLORS)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s["x"], s["y"]))
        dash = ' stroke-dasharray="5,3"' if s.get("dash") else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1.6"{dash}/>')
        if s.get("markers", True):
            out.extend(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.8" fill="{c}"/>'
                       for x, y in zip(s["x"], s["y"]))
        ly = MT + 14 + 16 * i
        out.append(f'<line x1="{ML + pw + 10}" y1="{ly}" x2="{ML + pw + 30}" y2="{ly}" stroke="{c}" '
                   f'stroke-width="2"{dash}/>')
        out.append(f'<text x="{ML + pw + 35}" y="{ly + 4}">{escape(s["label"])}</text>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path

"""Minimal SVG line and scatter plots written as plain text."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["Series", "plot", "width_plot", "count_plot", "profile_plot", "save"]

_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 55


class Series:
    def __init__(self, x, y, label="", *, markers=True, line=True, step=False):
        self.x = np.asarray(x, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.float64)
        self.label = label
        self.markers = markers
        self.line = line
        self.step = step


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        stride = max(1, (b - a) // 8)
        return [float(t) for t in range(a, b + 1, stride)]
    span = hi - lo or 1.0
    raw = span / 6
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def _label(t, log):
    if log:
        return f"1e{int(t)}"
    return f"{t:.4g}"


def plot(series, *, title="", xlabel="", ylabel="", logx=False, logy=False, notes=()):
    """Render line/scatter series to an SVG document string."""
    xs, ys = [], []
    for s in series:
        ok = np.isfinite(s.x) & np.isfinite(s.y)
        if logx:
            ok &= s.x > 0
        if logy:
            ok &= s.y > 0
        xs.append(np.log10(s.x[ok]) if logx else s.x[ok])
        ys.append(np.log10(s.y[ok]) if logy else s.y[ok])
    allx = np.concatenate(xs) if xs else np.zeros(1)
    ally = np.concatenate(ys) if ys else np.zeros(1)
    if allx.size == 0:
        allx = ally = np.zeros(1)
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT)

    def py(y):
        return H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{LEFT}" y="{TOP}" width="{W - LEFT - RIGHT}" height="{H - TOP - BOTTOM}" '
           'fill="none" stroke="black"/>']
    for t in _ticks(x0, x1, logx):
        if x0 - 1e-9 <= t <= x1 + 1e-9:
            X = px(t)
            out.append(f'<line x1="{X:.2f}" y1="{H - BOTTOM}" x2="{X:.2f}" y2="{H - BOTTOM + 5}" stroke="black"/>')
            out.append(f'<text x="{X:.2f}" y="{H - BOTTOM + 18}" text-anchor="middle">{_label(t, logx)}</text>')
    for t in _ticks(y0, y1, logy):
        if y0 - 1e-9 <= t <= y1 + 1e-9:
            Y = py(t)
            out.append(f'<line x1="{LEFT - 5}" y1="{Y:.2f}" x2="{LEFT}" y2="{Y:.2f}" stroke="black"/>')
            out.append(f'<text x="{LEFT - 8}" y="{Y + 4:.2f}" text-anchor="end">{_label(t, logy)}</text>')
    for k, (s, x, y) in enumerate(zip(series, xs, ys)):
        col = _COLOURS[k % len(_COLOURS)]
        if s.line and x.size > 1:
            pts = []
            for i in range(x.size):
                if s.step and i:
                    pts.append(f"{px(x[i]):.2f},{py(y[i - 1]):.2f}")
                pts.append(f"{px(x[i]):.2f},{py(y[i]):.2f}")
            out.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        if s.markers:
            out += [f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3" fill="{col}"/>' for a, b in zip(x, y)]
        if s.label:
            out.append(f'<text x="{W - RIGHT - 8}" y="{TOP + 16 + 16 * k}" text-anchor="end" '
                       f'fill="{col}">{escape(s.label)}</text>')
    for k, note in enumerate(notes):
        out.append(f'<text x="{LEFT + 8}" y="{TOP + 16 + 16 * k}">{escape(note)}</text>')
    out.append(f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{H / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {H / 2})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def width_plot(report, fit=None, bracket=None):
    """Log-log width against gap, with the fitted slope as a note."""
    betas = np.array([r.beta for r in report.records])
    widths = np.array([r.separation for r in report.records])
    series = [Series(betas, widths, "width")]
    if bracket is not None:
        series += [Series(betas, bracket[0], "lower bracket", markers=False),
                   Series(betas, bracket[1], "upper bracket", markers=False)]
    notes = [f"fitted slope {fit.slope:.4f} (r2 = {fit.r2:.4f})"] if fit is not None else []
    return plot(series, title="Band width", xlabel="beta", ylabel="width",
                logx=True, logy=True, notes=notes)


def count_plot(report):
    """Number of superconducting components against the gap."""
    betas = np.array([r.beta for r in report.records])
    counts = np.array([r.count for r in report.records], dtype=float)
    return plot([Series(betas, counts, "components", step=True)], title="Component count",
                xlabel="beta", ylabel="count", logx=True)


def profile_plot(profiles, labels=None):
    """Overlay of ``v(phi)`` snapshots."""
    labels = labels or [f"beta = {p.beta:.4g}" for p in profiles]
    series = [Series(p.phi, p.v, lab, markers=False) for p, lab in zip(profiles, labels)]
    return plot(series, title="Profiles", xlabel="phi", ylabel="v")


def save(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path

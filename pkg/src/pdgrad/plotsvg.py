"""Minimal self-contained SVG line plots for trace files.

Hand-rolled rather than delegating to a plotting stack so the output is a
deterministic function of its inputs: same traces, same bytes. The y axis
is logarithmic (convergence curves), the x axis linear in iterations or
cumulative gradient evaluations. A digest of the plotted configuration is
embedded as an XML comment right after the declaration.
"""

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH = 720
HEIGHT = 480
MARGIN_L = 70
MARGIN_R = 20
MARGIN_T = 20
MARGIN_B = 50

PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
)


def _fnum(v):
    return format(float(v), ".6g")


def _x_ticks(lo, hi, count=6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * step:
        ticks.append(v)
        v += step
    return ticks


def _fmt_pow10(e):
    return f"1e{e:d}" if e != 0 else "1"


def render_series_svg(series, digest, x_label="t", y_label="value", title=""):
    """Render (label, x, y) series to SVG text; log y, positive y only.

    ``digest`` is embedded as a comment for provenance; nonpositive or
    non-finite y values are dropped point-wise (log scale).
    """
    pts = []
    for label, xs, ys in series:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        keep = np.isfinite(xs) & np.isfinite(ys) & (ys > 0)
        pts.append((label, xs[keep], ys[keep]))
    nonempty = [(l, x, y) for l, x, y in pts if x.size]
    if not nonempty:
        raise ValueError("nothing to plot: no positive finite values")
    x_lo = min(float(x.min()) for _, x, _ in nonempty)
    x_hi = max(float(x.max()) for _, x, _ in nonempty)
    y_lo = min(float(y.min()) for _, _, y in nonempty)
    y_hi = max(float(y.max()) for _, _, y in nonempty)
    e_lo = math.floor(math.log10(y_lo))
    e_hi = math.ceil(math.log10(y_hi))
    if e_hi == e_lo:
        e_hi += 1

    px_w = WIDTH - MARGIN_L - MARGIN_R
    px_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(v):
        if x_hi == x_lo:
            return MARGIN_L + px_w / 2.0
        return MARGIN_L + (v - x_lo) / (x_hi - x_lo) * px_w

    def sy(v):
        return MARGIN_T + (e_hi - math.log10(v)) / (e_hi - e_lo) * px_h

    out = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(f"<!-- config-digest: {digest} -->")
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    ax = (
        f'<path d="M {MARGIN_L} {MARGIN_T} L {MARGIN_L} {HEIGHT - MARGIN_B} '
        f'L {WIDTH - MARGIN_R} {HEIGHT - MARGIN_B}" stroke="black" fill="none"/>'
    )
    out.append(ax)
    for e in range(e_lo, e_hi + 1):
        y = sy(10.0**e)
        out.append(
            f'<line x1="{MARGIN_L}" y1="{_fnum(y)}" x2="{WIDTH - MARGIN_R}" '
            f'y2="{_fnum(y)}" stroke="#dddddd"/>'
        )
        out.append(
            f'<text x="{MARGIN_L - 8}" y="{_fnum(y + 4)}" text-anchor="end" '
            f'font-size="11" font-family="monospace">{_fmt_pow10(e)}</text>'
        )
    for v in _x_ticks(x_lo, x_hi):
        x = sx(v)
        out.append(
            f'<line x1="{_fnum(x)}" y1="{HEIGHT - MARGIN_B}" x2="{_fnum(x)}" '
            f'y2="{HEIGHT - MARGIN_B + 5}" stroke="black"/>'
        )
        out.append(
            f'<text x="{_fnum(x)}" y="{HEIGHT - MARGIN_B + 18}" text-anchor="middle" '
            f'font-size="11" font-family="monospace">{_fnum(v)}</text>'
        )
    out.append(
        f'<text x="{MARGIN_L + px_w / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-size="12" font-family="monospace">{escape(x_label)}</text>'
    )
    out.append(
        f'<text x="16" y="{MARGIN_T + px_h / 2}" text-anchor="middle" font-size="12" '
        f'font-family="monospace" transform="rotate(-90 16 {MARGIN_T + px_h / 2})">'
        f"{escape(y_label)}</text>"
    )
    if title:
        out.append(
            f'<text x="{MARGIN_L + px_w / 2}" y="14" text-anchor="middle" '
            f'font-size="12" font-family="monospace">{escape(title)}</text>'
        )
    for idx, (label, xs, ys) in enumerate(pts):
        color = PALETTE[idx % len(PALETTE)]
        if xs.size:
            coords = " ".join(f"{_fnum(sx(x))},{_fnum(sy(y))}" for x, y in zip(xs, ys))
            out.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        ly = MARGIN_T + 16 + 16 * idx
        out.append(
            f'<line x1="{WIDTH - 190}" y1="{ly - 4}" x2="{WIDTH - 166}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{WIDTH - 160}" y="{ly}" font-size="11" '
            f'font-family="monospace">{escape(label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def trace_series(tr, fields, x_axis="t"):
    """Extract (label, x, y) series from a trace for the requested columns."""
    xs = tr.grad_evals if x_axis == "grad_evals" else tr.t
    out = []
    for f in fields:
        out.append((f, xs, getattr(tr, f)))
    return out

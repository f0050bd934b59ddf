"""Minimal SVG line plots, no plotting dependency.

Renders one chart per file: shared time axis, one polyline per series,
nice 1/2/5-stepped ticks, a small legend.  Output is plain text SVG so
runs stay diffable and the registry stays self-contained.
"""

from __future__ import annotations

import math

__all__ = ["line_plot", "plot_trajectory"]

WIDTH = 840
HEIGHT = 480
MARGIN_L = 66
MARGIN_R = 16
MARGIN_T = 34
MARGIN_B = 46

PALETTE = (
    "#1f6fb2", "#d2542c", "#2e8540", "#8251a1",
    "#b0272f", "#6d6d00", "#0f7c8c", "#874312",
)


def _nice_ticks(lo, hi, target=6):
    """Tick positions at a 1/2/5 x 10^k step covering [lo, hi]."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        lo, hi = 0.0, 1.0
    if hi <= lo:
        pad = 1.0 if lo == 0.0 else abs(lo) * 0.5
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / max(target, 2)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if raw <= step:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    value = first
    while value <= hi + step * 1e-9:
        ticks.append(0.0 if abs(value) < step * 1e-9 else value)
        value += step
    return ticks


def _fmt(v):
    return "%.6g" % v


class _Axis:
    def __init__(self, lo, hi, pix_lo, pix_hi):
        if hi <= lo:
            pad = 1.0 if lo == 0.0 else abs(lo) * 0.5
            lo, hi = lo - pad, hi + pad
        self.lo, self.hi = lo, hi
        self.pix_lo, self.pix_hi = pix_lo, pix_hi

    def pix(self, v):
        frac = (v - self.lo) / (self.hi - self.lo)
        return self.pix_lo + frac * (self.pix_hi - self.pix_lo)


def line_plot(path, t, series, title="", xlabel="t [s]", ylabel=""):
    """Write one SVG chart.

    t: 1-D sample times; series: iterable of (label, values) with values
    matching len(t).  Returns path.
    """
    t = [float(v) for v in t]
    named = [(str(label), [float(v) for v in vals]) for label, vals in series]
    if not t or not named:
        raise ValueError("line_plot needs at least one sample and one series")
    for label, vals in named:
        if len(vals) != len(t):
            raise ValueError("series %r length %d != %d" % (label, len(vals), len(t)))
    ylo = min(min(vals) for _, vals in named)
    yhi = max(max(vals) for _, vals in named)
    xaxis = _Axis(min(t), max(t), MARGIN_L, WIDTH - MARGIN_R)
    yaxis = _Axis(ylo, yhi, HEIGHT - MARGIN_B, MARGIN_T)

    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'viewBox="0 0 %d %d" font-family="sans-serif" font-size="12">'
        % (WIDTH, HEIGHT, WIDTH, HEIGHT),
        '<rect width="%d" height="%d" fill="white"/>' % (WIDTH, HEIGHT),
    ]
    if title:
        parts.append(
            '<text x="%d" y="20" text-anchor="middle" font-size="14">%s</text>'
            % (WIDTH // 2, title)
        )
    for tick in _nice_ticks(xaxis.lo, xaxis.hi):
        px = xaxis.pix(tick)
        parts.append(
            '<line x1="%.2f" y1="%d" x2="%.2f" y2="%d" stroke="#ddd"/>'
            % (px, MARGIN_T, px, HEIGHT - MARGIN_B)
        )
        parts.append(
            '<text x="%.2f" y="%d" text-anchor="middle">%s</text>'
            % (px, HEIGHT - MARGIN_B + 18, _fmt(tick))
        )
    for tick in _nice_ticks(yaxis.lo, yaxis.hi):
        py = yaxis.pix(tick)
        parts.append(
            '<line x1="%d" y1="%.2f" x2="%d" y2="%.2f" stroke="#ddd"/>'
            % (MARGIN_L, py, WIDTH - MARGIN_R, py)
        )
        parts.append(
            '<text x="%d" y="%.2f" text-anchor="end" dy="4">%s</text>'
            % (MARGIN_L - 6, py, _fmt(tick))
        )
    parts.append(
        '<rect x="%d" y="%d" width="%d" height="%d" fill="none" stroke="#444"/>'
        % (MARGIN_L, MARGIN_T, WIDTH - MARGIN_L - MARGIN_R,
           HEIGHT - MARGIN_T - MARGIN_B)
    )
    if xlabel:
        parts.append(
            '<text x="%d" y="%d" text-anchor="middle">%s</text>'
            % ((MARGIN_L + WIDTH - MARGIN_R) // 2, HEIGHT - 10, xlabel)
        )
    if ylabel:
        parts.append(
            '<text x="16" y="%d" text-anchor="middle" '
            'transform="rotate(-90 16 %d)">%s</text>'
            % (HEIGHT // 2, HEIGHT // 2, ylabel)
        )
    for idx, (label, vals) in enumerate(named):
        color = PALETTE[idx % len(PALETTE)]
        points = " ".join(
            "%.2f,%.2f" % (xaxis.pix(tv), yaxis.pix(v))
            for tv, v in zip(t, vals)
        )
        parts.append(
            '<polyline points="%s" fill="none" stroke="%s" stroke-width="1.5"/>'
            % (points, color)
        )
    legend_y = MARGIN_T + 14
    for idx, (label, _) in enumerate(named):
        color = PALETTE[idx % len(PALETTE)]
        parts.append(
            '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="%s" '
            'stroke-width="2"/>'
            % (MARGIN_L + 10, legend_y + idx * 16 - 4,
               MARGIN_L + 34, legend_y + idx * 16 - 4, color)
        )
        parts.append(
            '<text x="%d" y="%d">%s</text>'
            % (MARGIN_L + 40, legend_y + idx * 16, label)
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
    return path


def plot_trajectory(traj, out_dir):
    """Standard chart set for one recorded run: states, gains, input.

    Uses the trajectory's column-group metadata; returns the written
    paths.
    """
    import os

    meta = traj.meta
    t = traj.t
    written = []

    def group(names, fname, title, ylabel):
        series = [(name, traj.col(name)) for name in names]
        path = os.path.join(out_dir, fname)
        written.append(line_plot(path, t, series, title=title, ylabel=ylabel))

    x_cols = meta.get("x_cols")
    if x_cols:
        group(x_cols, "states.svg", "%s: state" % traj.sid, "state")
    z_cols = meta.get("z_cols")
    if z_cols:
        group(z_cols, "errors.svg", "%s: transformed errors" % traj.sid, "z")
    k_cols = meta.get("k_cols")
    if k_cols:
        group(k_cols, "gains.svg", "%s: adaptive gains" % traj.sid, "k")
    if "u" in traj.columns:
        group(["u"], "input.svg", "%s: applied input" % traj.sid, "u")
    return written

"""Self-contained SVG plots, written without a plotting toolkit.

Two figures per run: the plane trajectory with the obstacle disc (when
the system has two axes and the barrier is a circle), and a two-panel
time series of the level-1 value and the input norm.  Numeric
annotations use 6 significant digits.  Long runs are downsampled by a
stride so a polyline stays under ~1600 points.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .barrier import CircularObstacle
from .sim import Trajectory

__all__ = ["trajectory_svg", "timeseries_svg"]

MAX_POINTS = 1600

_FONT = 'font-family="sans-serif" font-size="11"'


def _stride(count: int) -> int:
    return max(1, int(np.ceil(count / MAX_POINTS)))


def _fmt(v: float) -> str:
    return f"{v:.6g}"


class _Frame:
    """Maps data coordinates into a pixel viewport with a plain box axis."""

    def __init__(self, x0, x1, y0, y1, left, top, width, height):
        if x1 <= x0:
            x1 = x0 + 1.0
        if y1 <= y0:
            y1 = y0 + 1.0
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1
        self.left, self.top = left, top
        self.width, self.height = width, height

    def px(self, x):
        return self.left + (x - self.x0) / (self.x1 - self.x0) * self.width

    def py(self, y):
        # SVG y grows downward
        return self.top + (self.y1 - y) / (self.y1 - self.y0) * self.height

    def polyline(self, xs, ys, color, width=1.5):
        pts = " ".join(
            f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in zip(xs, ys)
        )
        return (
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"/>'
        )

    def box(self, title, xlabel, ylabel):
        x_mid = self.left + self.width / 2.0
        parts = [
            f'<rect x="{self.left}" y="{self.top}" width="{self.width}" '
            f'height="{self.height}" fill="none" stroke="black"/>',
            f'<text x="{x_mid:.1f}" y="{self.top - 8}" text-anchor="middle" '
            f"{_FONT}>{title}</text>",
            f'<text x="{x_mid:.1f}" y="{self.top + self.height + 30}" '
            f'text-anchor="middle" {_FONT}>{xlabel}</text>',
            f'<text x="{self.left - 44}" y="{self.top + self.height / 2.0:.1f}" '
            f'text-anchor="middle" {_FONT} transform="rotate(-90 '
            f'{self.left - 44} {self.top + self.height / 2.0:.1f})">{ylabel}</text>',
        ]
        for frac in (0.0, 0.5, 1.0):
            x = self.x0 + frac * (self.x1 - self.x0)
            y = self.y0 + frac * (self.y1 - self.y0)
            parts.append(
                f'<text x="{self.px(x):.1f}" y="{self.top + self.height + 14}" '
                f'text-anchor="middle" {_FONT}>{_fmt(x)}</text>'
            )
            parts.append(
                f'<text x="{self.left - 6}" y="{self.py(y) + 4:.1f}" '
                f'text-anchor="end" {_FONT}>{_fmt(y)}</text>'
            )
        return parts


def _document(width, height, body) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">\n'
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def _bounds(values, pad_frac=0.08):
    lo = float(np.min(values))
    hi = float(np.max(values))
    pad = (hi - lo) * pad_frac or 1.0
    return lo - pad, hi + pad


def _finite_rows(times, *series):
    """Drop samples where any plotted series is non-finite.

    Aborted runs can record values that later overflow derived
    quantities (like the input norm); those samples carry no visual
    information anyway.
    """
    mask = np.ones(times.shape[0], dtype=bool)
    for s in series:
        mask &= np.isfinite(s).reshape(times.shape[0], -1).all(axis=1)
    if mask.all():
        return (times,) + series
    return (times[mask],) + tuple(s[mask] for s in series)


def trajectory_svg(trajectory: Trajectory) -> str:
    """Plane path for two-axis systems, coordinates over time otherwise.

    The obstacle disc is drawn (as the single circle element of the
    figure) when the barrier is a planar circular obstacle.
    """
    s = trajectory.scenario
    m = s.system.axes
    if trajectory.times.shape[0] == 0:
        return _document(560, 120, [_empty_note(trajectory)])
    step = _stride(trajectory.times.shape[0])
    times, pos = _finite_rows(
        trajectory.times[::step], trajectory.states[::step, :m]
    )
    if times.shape[0] == 0:
        return _document(560, 120, [_empty_note(trajectory)])

    if m != 2:
        lo, hi = _bounds(pos)
        frame = _Frame(times[0], times[-1], lo, hi, 60, 40, 560, 320)
        body = frame.box("position coordinates over time", "t", "position")
        colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
        for j in range(m):
            body.append(
                frame.polyline(times, pos[:, j], colors[j % len(colors)])
            )
        return _document(680, 420, body)

    xs, ys = pos[:, 0], pos[:, 1]
    circle = None
    if isinstance(s.oracle, CircularObstacle) and len(s.oracle.center) == 2:
        circle = (s.oracle.center, s.oracle.radius)
    x_vals = [xs, [s.goal[0], s.x0[0]]]
    y_vals = [ys, [s.goal[1], s.x0[1]]]
    if circle is not None:
        (cx, cy), r = circle
        x_vals.append([cx - r, cx + r])
        y_vals.append([cy - r, cy + r])
    lo_x, hi_x = _bounds(np.concatenate([np.asarray(v, dtype=float) for v in x_vals]))
    lo_y, hi_y = _bounds(np.concatenate([np.asarray(v, dtype=float) for v in y_vals]))
    # keep x and y visually isotropic so the obstacle disc looks round
    span = max(hi_x - lo_x, hi_y - lo_y)
    cx_mid, cy_mid = (hi_x + lo_x) / 2.0, (hi_y + lo_y) / 2.0
    frame = _Frame(
        cx_mid - span / 2.0, cx_mid + span / 2.0,
        cy_mid - span / 2.0, cy_mid + span / 2.0,
        60, 40, 440, 440,
    )
    body = frame.box("plane trajectory", "x", "y")
    if circle is not None:
        (cx, cy), r = circle
        rx = abs(frame.px(cx + r) - frame.px(cx))
        body.append(
            f'<circle cx="{frame.px(cx):.2f}" cy="{frame.py(cy):.2f}" '
            f'r="{rx:.2f}" fill="#f4c7c3" stroke="#a33" stroke-width="1.5"/>'
        )
        body.append(
            f'<text x="{frame.px(cx):.1f}" y="{frame.py(cy) + 4:.1f}" '
            f'text-anchor="middle" {_FONT}>r = {_fmt(r)}</text>'
        )
    body.append(frame.polyline(xs, ys, "#1f77b4", 1.8))
    sx, sy = frame.px(s.x0[0]), frame.py(s.x0[1])
    body.append(
        f'<rect x="{sx - 4:.1f}" y="{sy - 4:.1f}" width="8" height="8" '
        f'fill="#2ca02c"/>'
    )
    gx, gy = frame.px(s.goal[0]), frame.py(s.goal[1])
    body.append(
        f'<path d="M {gx - 5:.1f} {gy - 5:.1f} L {gx + 5:.1f} {gy + 5:.1f} '
        f'M {gx - 5:.1f} {gy + 5:.1f} L {gx + 5:.1f} {gy - 5:.1f}" '
        f'stroke="#d62728" stroke-width="2.5" fill="none"/>'
    )
    body.append(
        f'<text x="{sx + 8:.1f}" y="{sy - 6:.1f}" {_FONT}>start</text>'
    )
    body.append(
        f'<text x="{gx + 8:.1f}" y="{gy - 6:.1f}" {_FONT}>goal</text>'
    )
    body.append(
        f'<text x="60" y="514" {_FONT}>min h1 = {_fmt(trajectory.min_h1)}, '
        f"goal error = {_fmt(trajectory.goal_error)}</text>"
    )
    return _document(560, 530, body)


def _empty_note(trajectory: Trajectory) -> str:
    note = escape(trajectory.annotation or "no samples recorded")
    return f'<text x="20" y="60" {_FONT}>{note}</text>'


def timeseries_svg(trajectory: Trajectory) -> str:
    """Level-1 value and input norm over time, stacked panels."""
    if trajectory.times.shape[0] == 0:
        return _document(560, 120, [_empty_note(trajectory)])
    step = _stride(trajectory.times.shape[0])
    with np.errstate(over="ignore"):
        u_norm = np.linalg.norm(trajectory.inputs[::step], axis=1)
    times, h1, u_norm = _finite_rows(
        trajectory.times[::step], trajectory.barrier_values[::step, 0], u_norm
    )
    if times.shape[0] == 0:
        return _document(560, 120, [_empty_note(trajectory)])

    lo_h, hi_h = _bounds(np.concatenate([h1, [0.0]]))
    top = _Frame(times[0], times[-1], lo_h, hi_h, 70, 40, 540, 190)
    body = top.box("level-1 barrier value", "t", "h1")
    if lo_h < 0.0 < hi_h:
        body.append(
            f'<line x1="{top.left}" y1="{top.py(0.0):.2f}" '
            f'x2="{top.left + top.width}" y2="{top.py(0.0):.2f}" '
            f'stroke="#999" stroke-dasharray="4 3"/>'
        )
    body.append(top.polyline(times, h1, "#1f77b4"))
    body.append(
        f'<text x="{top.left + 6}" y="{top.top + 16}" {_FONT}>'
        f"min = {_fmt(float(np.min(h1)))}</text>"
    )

    lo_u, hi_u = _bounds(np.concatenate([u_norm, [0.0]]))
    bottom = _Frame(times[0], times[-1], lo_u, hi_u, 70, 310, 540, 190)
    body += bottom.box("input norm", "t", "|u|")
    body.append(bottom.polyline(times, u_norm, "#d62728"))
    body.append(
        f'<text x="{bottom.left + 6}" y="{bottom.top + 16}" {_FONT}>'
        f"effort = {_fmt(trajectory.control_effort)}</text>"
    )
    return _document(680, 560, body)

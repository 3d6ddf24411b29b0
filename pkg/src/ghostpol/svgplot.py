"""Minimal deterministic SVG charts.

Output contains no timestamps or environment-dependent bytes, so a
rerun with the same inputs is byte-identical and plots can be diffed
by primitive element counts.
"""

from __future__ import annotations

import numpy as np

PALETTE = ("#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d68910", "#16a085")
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 56.0, 16.0, 28.0, 44.0


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = np.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(float(t))
        t += step
    return ticks


class _Canvas:
    def __init__(self, width: float, height: float) -> None:
        self.width = width
        self.height = height
        self.parts: list[str] = []

    def polyline(self, pts: list[tuple[float, float]], color: str,
                 width: float = 1.5, dash: str | None = None) -> None:
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<polyline fill="none" stroke="{color}" '
            f'stroke-width="{_fmt(width)}"{dash_attr} points="{coords}"/>'
        )

    def polygon(self, pts: list[tuple[float, float]], fill: str,
                opacity: float = 0.25) -> None:
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        self.parts.append(
            f'<polygon fill="{fill}" fill-opacity="{opacity}" '
            f'stroke="none" points="{coords}"/>'
        )

    def line(self, x1: float, y1: float, x2: float, y2: float,
             color: str = "#333333", width: float = 1.0) -> None:
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" '
            f'y2="{_fmt(y2)}" stroke="{color}" stroke-width="{_fmt(width)}"/>'
        )

    def ellipse(self, cx: float, cy: float, rx: float, ry: float,
                color: str, filled: bool) -> None:
        fill = color if filled else "none"
        self.parts.append(
            f'<ellipse cx="{_fmt(cx)}" cy="{_fmt(cy)}" rx="{_fmt(rx)}" '
            f'ry="{_fmt(ry)}" fill="{fill}" fill-opacity="0.35" '
            f'stroke="{color}" stroke-width="1.00"/>'
        )

    def text(self, x: float, y: float, s: str, size: float = 11.0,
             anchor: str = "middle", color: str = "#222222") -> None:
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{_fmt(size)}" '
            f'font-family="sans-serif" text-anchor="{anchor}" '
            f'fill="{color}">{s}</text>'
        )

    def to_string(self) -> str:
        body = "\n".join(self.parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" '
            f'width="{_fmt(self.width)}" height="{_fmt(self.height)}" '
            f'viewBox="0 0 {_fmt(self.width)} {_fmt(self.height)}">\n'
            f'<rect width="100%" height="100%" fill="#ffffff"/>\n'
            f"{body}\n</svg>\n"
        )


class _Axes:
    """Linear data-to-pixel mapping inside one plot box."""

    def __init__(self, canvas: _Canvas, box: tuple[float, float, float, float],
                 xlim: tuple[float, float], ylim: tuple[float, float]) -> None:
        self.canvas = canvas
        self.x0, self.y0, self.w, self.h = box
        self.xlim = xlim
        self.ylim = ylim

    def px(self, x: float) -> float:
        lo, hi = self.xlim
        return self.x0 + (x - lo) / (hi - lo) * self.w

    def py(self, y: float) -> float:
        lo, hi = self.ylim
        return self.y0 + self.h - (y - lo) / (hi - lo) * self.h

    def frame(self, xlabel: str, ylabel: str,
              xticks: list[float] | None = None) -> None:
        c = self.canvas
        c.line(self.x0, self.y0 + self.h, self.x0 + self.w, self.y0 + self.h)
        c.line(self.x0, self.y0, self.x0, self.y0 + self.h)
        if xticks is None:
            xticks = _nice_ticks(*self.xlim)
        for t in xticks:
            x = self.px(t)
            c.line(x, self.y0 + self.h, x, self.y0 + self.h + 4.0)
            c.text(x, self.y0 + self.h + 16.0, f"{t:g}", size=10.0)
        for t in _nice_ticks(*self.ylim):
            y = self.py(t)
            c.line(self.x0 - 4.0, y, self.x0, y)
            c.text(self.x0 - 7.0, y + 3.5, f"{t:g}", size=10.0, anchor="end")
        c.text(self.x0 + self.w / 2.0, self.y0 + self.h + 34.0, xlabel)
        c.text(self.x0 - 40.0, self.y0 - 8.0, ylabel, anchor="start")


def curve_chart(
    thetas: np.ndarray,
    series: np.ndarray,
    labels: list[str],
    title: str,
    bands: np.ndarray | None = None,
    width: float = 560.0,
    height: float = 360.0,
) -> str:
    """Response-versus-orientation chart, one polyline per projector.

    ``series`` is (n_theta, n_series); ``bands`` gives optional CI
    half-widths of the same shape, drawn as shaded strips.
    """
    canvas = _Canvas(width, height)
    top = np.max(series + (bands if bands is not None else 0.0))
    ylim = (0.0, max(1e-12, float(top)) * 1.05)
    axes = _Axes(
        canvas,
        (MARGIN_L, MARGIN_T, width - MARGIN_L - MARGIN_R,
         height - MARGIN_T - MARGIN_B),
        (float(thetas[0]), float(thetas[-1])),
        ylim,
    )
    axes.frame("orientation [deg]", "response",
               xticks=[0.0, 45.0, 90.0, 135.0, 180.0])
    canvas.text(width / 2.0, 16.0, title, size=13.0)
    for k in range(series.shape[1]):
        color = PALETTE[k % len(PALETTE)]
        if bands is not None:
            upper = [(axes.px(t), axes.py(series[i, k] + bands[i, k]))
                     for i, t in enumerate(thetas)]
            lower = [(axes.px(thetas[i]), axes.py(series[i, k] - bands[i, k]))
                     for i in range(len(thetas) - 1, -1, -1)]
            canvas.polygon(upper + lower, fill=color)
        canvas.polyline(
            [(axes.px(t), axes.py(series[i, k])) for i, t in enumerate(thetas)],
            color=color,
        )
        canvas.text(MARGIN_L + 8.0 + 90.0 * k, MARGIN_T - 6.0, labels[k],
                    size=10.0, anchor="start", color=color)
    return canvas.to_string()


def region_panels(
    families: list[dict],
    axis_pairs: list[tuple[int, int]],
    axis_names: list[str],
    title: str,
    panel: float = 300.0,
) -> str:
    """Response-space scatter with confidence ellipses.

    ``families`` entries hold ``label``, ``centers`` (n, k),
    ``semi_axes`` (n, k) and ``kept`` index list; one panel is drawn
    per requested coordinate pair.
    """
    width = MARGIN_L + len(axis_pairs) * (panel + 24.0)
    height = panel + MARGIN_T + MARGIN_B
    canvas = _Canvas(width, height)
    canvas.text(width / 2.0, 16.0, title, size=13.0)
    for p, (ix, iy) in enumerate(axis_pairs):
        box_x = MARGIN_L + p * (panel + 24.0)
        axes = _Axes(canvas, (box_x, MARGIN_T, panel, panel),
                     (-0.05, 1.05), (-0.05, 1.05))
        axes.frame(axis_names[ix], axis_names[iy],
                   xticks=[0.0, 0.5, 1.0])
        for f, fam in enumerate(families):
            color = PALETTE[f % len(PALETTE)]
            kept = set(fam["kept"])
            centers = fam["centers"]
            semis = fam["semi_axes"]
            for i in range(centers.shape[0]):
                cx, cy = axes.px(centers[i, ix]), axes.py(centers[i, iy])
                rx = semis[i, ix] / 1.1 * panel
                ry = semis[i, iy] / 1.1 * panel
                canvas.ellipse(cx, cy, max(rx, 1.0), max(ry, 1.0),
                               color, filled=(i in kept))
            canvas.text(box_x + 8.0, MARGIN_T - 6.0 + 12.0 * f,
                        fam["label"], size=10.0, anchor="start", color=color)
    return canvas.to_string()

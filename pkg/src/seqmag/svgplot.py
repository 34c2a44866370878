"""Minimal deterministic SVG rendering: polyline plots and heatmaps.

Same input always yields the same SVG bytes (no timestamps, no generated
ids), so rendered figures can be golden-file tested.
"""

from __future__ import annotations

import numpy as np

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 30, 30, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _axis_transform(lo: float, hi: float, log: bool):
    if log:
        if lo <= 0:
            raise ValueError("log axis requires positive data")
        lo, hi = np.log10(lo), np.log10(hi)
        conv = np.log10
    else:
        conv = lambda v: v
    span = hi - lo if hi > lo else 1.0
    return lo, span, conv


def _ticks(lo: float, hi: float, log: bool, n: int = 5):
    if log:
        lo_e, hi_e = np.floor(np.log10(lo)), np.ceil(np.log10(hi))
        exps = np.arange(lo_e, hi_e + 1)
        if len(exps) > n:
            exps = exps[:: max(1, len(exps) // n)]
        return [10.0**e for e in exps]
    return list(np.linspace(lo, hi, n))


def line_plot(
    series,
    xlabel: str = "",
    ylabel: str = "",
    log_x: bool = False,
    log_y: bool = False,
    title: str = "",
    markers: bool = True,
) -> str:
    """SVG line/scatter plot.  ``series`` is a list of (x, y, label) tuples."""
    if not series:
        raise ValueError("no series to plot")
    all_x = np.concatenate([np.asarray(s[0], float) for s in series])
    all_y = np.concatenate([np.asarray(s[1], float) for s in series])
    x_lo, x_span, x_conv = _axis_transform(all_x.min(), all_x.max(), log_x)
    y_lo, y_span, y_conv = _axis_transform(all_y.min(), all_y.max(), log_y)
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(v):
        return MARGIN_L + (x_conv(v) - x_lo) / x_span * plot_w

    def py(v):
        return HEIGHT - MARGIN_B - (y_conv(v) - y_lo) / y_span * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="black"/>',
    ]
    if title:
        parts.append(f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" '
                     f'font-size="14">{title}</text>')
    for tick in _ticks(all_x.min(), all_x.max(), log_x):
        x = px(tick)
        parts.append(f'<line x1="{_fmt(x)}" y1="{HEIGHT - MARGIN_B}" '
                     f'x2="{_fmt(x)}" y2="{HEIGHT - MARGIN_B + 5}" stroke="black"/>')
        parts.append(f'<text x="{_fmt(x)}" y="{HEIGHT - MARGIN_B + 18}" '
                     f'text-anchor="middle" font-size="11">{_fmt(tick)}</text>')
    for tick in _ticks(all_y.min(), all_y.max(), log_y):
        y = py(tick)
        parts.append(f'<line x1="{MARGIN_L - 5}" y1="{_fmt(y)}" '
                     f'x2="{MARGIN_L}" y2="{_fmt(y)}" stroke="black"/>')
        parts.append(f'<text x="{MARGIN_L - 8}" y="{_fmt(y + 4)}" '
                     f'text-anchor="end" font-size="11">{_fmt(tick)}</text>')
    if xlabel:
        parts.append(f'<text x="{WIDTH // 2}" y="{HEIGHT - 10}" '
                     f'text-anchor="middle" font-size="12">{xlabel}</text>')
    if ylabel:
        parts.append(f'<text x="15" y="{HEIGHT // 2}" text-anchor="middle" '
                     f'font-size="12" transform="rotate(-90 15 {HEIGHT // 2})">'
                     f'{ylabel}</text>')
    for idx, (xs, ys, label) in enumerate(series):
        color = _COLORS[idx % len(_COLORS)]
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     'stroke-width="1.5"/>')
        if markers:
            for x, y in zip(xs, ys):
                parts.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" '
                             f'r="2.5" fill="{color}"/>')
        if label:
            parts.append(f'<text x="{WIDTH - MARGIN_R - 5}" '
                         f'y="{MARGIN_T + 16 + 14 * idx}" text-anchor="end" '
                         f'font-size="11" fill="{color}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _viridis(value: float) -> str:
    # coarse 6-anchor approximation of the viridis ramp
    anchors = [
        (0.0, (68, 1, 84)), (0.2, (59, 82, 139)), (0.4, (33, 145, 140)),
        (0.6, (94, 201, 98)), (0.8, (253, 231, 37)), (1.0, (253, 231, 37)),
    ]
    value = min(max(value, 0.0), 1.0)
    for (t0, c0), (t1, c1) in zip(anchors, anchors[1:]):
        if value <= t1:
            frac = (value - t0) / (t1 - t0) if t1 > t0 else 0.0
            rgb = tuple(round(a + frac * (b - a)) for a, b in zip(c0, c1))
            return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"
    return "rgb(253,231,37)"


def heatmap(
    x_axis,
    y_axis,
    values,
    xlabel: str = "",
    ylabel: str = "",
    title: str = "",
) -> str:
    """SVG heatmap with a colorbar; values indexed [x, y]."""
    values = np.asarray(values, dtype=float)
    x_axis = np.asarray(x_axis, float)
    y_axis = np.asarray(y_axis, float)
    if values.shape != (len(x_axis), len(y_axis)):
        raise ValueError("values shape must be (len(x_axis), len(y_axis))")
    v_lo, v_hi = float(values.min()), float(values.max())
    v_span = v_hi - v_lo if v_hi > v_lo else 1.0
    plot_w = WIDTH - MARGIN_L - MARGIN_R - 60  # room for the colorbar
    plot_h = HEIGHT - MARGIN_T - MARGIN_B
    cell_w = plot_w / len(x_axis)
    cell_h = plot_h / len(y_axis)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" '
                     f'font-size="14">{title}</text>')
    for i in range(len(x_axis)):
        for j in range(len(y_axis)):
            color = _viridis((values[i, j] - v_lo) / v_span)
            x = MARGIN_L + i * cell_w
            y = HEIGHT - MARGIN_B - (j + 1) * cell_h
            parts.append(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" '
                         f'width="{_fmt(cell_w + 0.5)}" height="{_fmt(cell_h + 0.5)}" '
                         f'fill="{color}"/>')
    parts.append(f'<text x="{MARGIN_L}" y="{HEIGHT - MARGIN_B + 18}" '
                 f'text-anchor="middle" font-size="11">{_fmt(x_axis[0])}</text>')
    parts.append(f'<text x="{_fmt(MARGIN_L + plot_w)}" y="{HEIGHT - MARGIN_B + 18}" '
                 f'text-anchor="middle" font-size="11">{_fmt(x_axis[-1])}</text>')
    parts.append(f'<text x="{MARGIN_L - 8}" y="{HEIGHT - MARGIN_B + 4}" '
                 f'text-anchor="end" font-size="11">{_fmt(y_axis[0])}</text>')
    parts.append(f'<text x="{MARGIN_L - 8}" y="{MARGIN_T + 4}" '
                 f'text-anchor="end" font-size="11">{_fmt(y_axis[-1])}</text>')
    if xlabel:
        parts.append(f'<text x="{MARGIN_L + plot_w / 2:.6g}" y="{HEIGHT - 10}" '
                     f'text-anchor="middle" font-size="12">{xlabel}</text>')
    if ylabel:
        parts.append(f'<text x="15" y="{HEIGHT // 2}" text-anchor="middle" '
                     f'font-size="12" transform="rotate(-90 15 {HEIGHT // 2})">'
                     f'{ylabel}</text>')
    bar_x = MARGIN_L + plot_w + 20
    n_bar = 64
    bar_h = plot_h / n_bar
    for k in range(n_bar):
        color = _viridis(k / (n_bar - 1))
        y = HEIGHT - MARGIN_B - (k + 1) * bar_h
        parts.append(f'<rect x="{_fmt(bar_x)}" y="{_fmt(y)}" width="18" '
                     f'height="{_fmt(bar_h + 0.5)}" fill="{color}"/>')
    parts.append(f'<text x="{_fmt(bar_x + 22)}" y="{HEIGHT - MARGIN_B + 4}" '
                 f'font-size="10">{_fmt(v_lo)}</text>')
    parts.append(f'<text x="{_fmt(bar_x + 22)}" y="{MARGIN_T + 4}" '
                 f'font-size="10">{_fmt(v_hi)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

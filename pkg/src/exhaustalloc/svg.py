"""Minimal deterministic SVG charts (fixed layout, fixed number formatting)."""
from __future__ import annotations

from typing import Dict, Sequence

W, H = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 60, 20, 30, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _f(v: float) -> str:
    return f"{v:.2f}"


def _frame(title: str, xlabel: str, ylabel: str, ymax: float, body: list) -> str:
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
        f'<text x="{LEFT + pw / 2}" y="{H - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="14" y="{TOP + ph / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {TOP + ph / 2})">{ylabel}</text>',
    ]
    for k in range(5):
        v = ymax * k / 4
        y = TOP + ph - ph * k / 4
        out.append(f'<text x="{LEFT - 6}" y="{_f(y + 4)}" text-anchor="end" font-size="10">{v:.3g}</text>')
    out += body
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bar_chart(groups: Sequence[str], series: Dict[str, Sequence[float]], title: str,
              xlabel: str, ylabel: str) -> str:
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM
    ymax = max(max(v) for v in series.values()) * 1.1 or 1.0
    ng, ns = len(groups), len(series)
    slot = pw / ng
    bw = slot * 0.8 / ns
    body = []
    for s, (name, vals) in enumerate(series.items()):
        for g, v in enumerate(vals):
            x = LEFT + g * slot + slot * 0.1 + s * bw
            h = ph * v / ymax
            body.append(f'<rect x="{_f(x)}" y="{_f(TOP + ph - h)}" width="{_f(bw)}" height="{_f(h)}" '
                        f'fill="{COLORS[s % len(COLORS)]}"/>')
        body.append(f'<text x="{LEFT + pw - 5}" y="{TOP + 14 * (s + 1)}" text-anchor="end" font-size="11" '
                    f'fill="{COLORS[s % len(COLORS)]}">{name}</text>')
    for g, label in enumerate(groups):
        body.append(f'<text x="{_f(LEFT + (g + 0.5) * slot)}" y="{TOP + ph + 15}" text-anchor="middle" '
                    f'font-size="10">{label}</text>')
    return _frame(title, xlabel, ylabel, ymax, body)


def line_chart(x: Sequence[float], series: Dict[str, Sequence[float]], title: str,
               xlabel: str, ylabel: str) -> str:
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM
    ymax = max(max(v) for v in series.values()) * 1.1 or 1.0
    x0, x1 = min(x), max(x)
    span = (x1 - x0) or 1.0
    body = []
    for s, (name, vals) in enumerate(series.items()):
        pts = " ".join(f"{_f(LEFT + pw * (xi - x0) / span)},{_f(TOP + ph - ph * v / ymax)}"
                       for xi, v in zip(x, vals))
        dash = ' stroke-dasharray="6 3"' if s % 2 else ""
        body.append(f'<polyline points="{pts}" fill="none" stroke="{COLORS[s % len(COLORS)]}" '
                    f'stroke-width="2"{dash}/>')
        body.append(f'<text x="{LEFT + pw - 5}" y="{TOP + 14 * (s + 1)}" text-anchor="end" font-size="11" '
                    f'fill="{COLORS[s % len(COLORS)]}">{name}</text>')
    for k in range(5):
        xv = x0 + span * k / 4
        body.append(f'<text x="{_f(LEFT + pw * k / 4)}" y="{TOP + ph + 15}" text-anchor="middle" '
                    f'font-size="10">{xv:.3g}</text>')
    return _frame(title, xlabel, ylabel, ymax, body)

"""
率失真曲线的 SVG 1.1 输出
每个算子一条 PSNR-bpp 折线，无损点按 PSNR_PLOT_CAP 绘制。
"""

import math
from xml.sax.saxutils import escape

from core.config import PSNR_PLOT_CAP

_COLORS = {
    "p0": "#8c564b",
    "p1": "#ff7f0e",
    "p2": "#d62728",
    "diffusion": "#1f77b4",
    "shepard": "#2ca02c",
}

WIDTH, HEIGHT = 640, 420
MARGIN = 56


def _plot_value(psnr: float) -> float:
    return PSNR_PLOT_CAP if math.isinf(psnr) else min(psnr, PSNR_PLOT_CAP)


def render_rd_svg(series: dict, title: str = "rate-distortion") -> str:
    """series: {算子名: [(bpp, psnr), ...]}，点已按 bpp 升序排列"""
    points = [(b, _plot_value(p)) for pts in series.values() for b, p in pts]
    if points:
        x_max = max(b for b, _ in points) or 1.0
        y_min = min(p for _, p in points)
        y_max = max(p for _, p in points)
    else:
        x_max, y_min, y_max = 1.0, 0.0, 1.0
    if y_max - y_min < 1e-9:
        y_min, y_max = y_min - 1.0, y_max + 1.0

    def sx(b):
        return MARGIN + (WIDTH - 2 * MARGIN) * b / x_max

    def sy(p):
        return HEIGHT - MARGIN - (HEIGHT - 2 * MARGIN) * (p - y_min) / (y_max - y_min)

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 16}" text-anchor="middle" font-size="12">bits per pixel</text>',
        f'<text x="16" y="{HEIGHT / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {HEIGHT / 2})">PSNR (dB)</text>',
        f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 16}" font-size="10">0</text>',
        f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 16}" text-anchor="end" font-size="10">{x_max:.3f}</text>',
        f'<text x="{MARGIN - 4}" y="{HEIGHT - MARGIN}" text-anchor="end" font-size="10">{y_min:.1f}</text>',
        f'<text x="{MARGIN - 4}" y="{MARGIN + 4}" text-anchor="end" font-size="10">{y_max:.1f}</text>',
    ]
    for k, (name, pts) in enumerate(series.items()):
        color = _COLORS.get(name, "#7f7f7f")
        coords = " ".join(f"{sx(b):.2f},{sy(_plot_value(p)):.2f}" for b, p in pts)
        if coords:
            lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        lines.append(f'<text x="{WIDTH - MARGIN + 4}" y="{MARGIN + 14 * k}" font-size="11" '
                     f'fill="{color}">{escape(name)}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"

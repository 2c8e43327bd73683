"""Dependency-free SVG heatmap for phase grids."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

_BLUE = (33, 102, 172)
_RED = (178, 24, 43)
_WHITE = (247, 247, 247)


def diverging_color(value: float, center: float = 0.5) -> str:
    """Blue below ``center``, red above, near-white at it; clipped to [0, 1]."""
    t = (min(max(float(value), 0.0), 1.0) - center) / max(center, 1.0 - center)
    end = _RED if t > 0 else _BLUE
    t = abs(t)
    rgb = tuple(round(w + (e - w) * t) for w, e in zip(_WHITE, end))
    return "#%02x%02x%02x" % rgb


def _ticks(axis, count=5):
    idx = np.unique(np.linspace(0, axis.size - 1, min(count, axis.size)).round().astype(int))
    return [(int(i), float(axis[i])) for i in idx]


def phase_heatmap_svg(grid, title="Omega_n", cell=18, center=0.5) -> str:
    """Render ``grid.values`` with mu on the x axis and sigma increasing upward."""
    n_mu, n_sigma = grid.values.shape
    left, top, right, bottom = 70, 40, 110, 60
    w, h = n_mu * cell, n_sigma * cell
    width, height = left + w + right, top + h + bottom
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<text x="{left + w / 2:.1f}" y="22" text-anchor="middle" font-size="13">{escape(title)}</text>',
    ]
    for i in range(n_mu):
        for j in range(n_sigma):
            x = left + i * cell
            y = top + (n_sigma - 1 - j) * cell
            v = float(grid.values[i, j])
            out.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{diverging_color(v, center)}">'
                f"<title>mu={grid.mu_axis[i]:.4g} sigma={grid.sigma_axis[j]:.4g} value={v:.4f}</title></rect>"
            )
    out.append(f'<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="#333"/>')
    for i, mu in _ticks(grid.mu_axis):
        x = left + (i + 0.5) * cell
        out.append(f'<line x1="{x:.1f}" y1="{top + h}" x2="{x:.1f}" y2="{top + h + 4}" stroke="#333"/>')
        out.append(f'<text x="{x:.1f}" y="{top + h + 16}" text-anchor="middle">{mu:.2f}</text>')
    for j, sigma in _ticks(grid.sigma_axis):
        y = top + (n_sigma - 1 - j + 0.5) * cell
        out.append(f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" stroke="#333"/>')
        out.append(f'<text x="{left - 7}" y="{y + 4:.1f}" text-anchor="end">{sigma:.2f}</text>')
    out.append(f'<text x="{left + w / 2:.1f}" y="{top + h + 40}" text-anchor="middle">μ</text>')
    out.append(
        f'<text x="20" y="{top + h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {top + h / 2:.1f})">σ</text>'
    )
    # color bar
    bx, steps = left + w + 30, 20
    for k in range(steps):
        v = 1.0 - (k + 0.5) / steps
        out.append(f'<rect x="{bx}" y="{top + k * h / steps:.2f}" width="16" height="{h / steps + 0.5:.2f}" '
                   f'fill="{diverging_color(v, center)}"/>')
    out.append(f'<rect x="{bx}" y="{top}" width="16" height="{h}" fill="none" stroke="#333"/>')
    for v in (0.0, center, 1.0):
        y = top + (1.0 - v) * h
        out.append(f'<text x="{bx + 22}" y="{y + 4:.1f}">{v:.2f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

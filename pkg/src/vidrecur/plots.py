"""Deterministic SVG scatter plots of persistence diagrams."""
from __future__ import annotations

import math

from .ph import PersistenceDiagrams

_COLORS = ("#1f77b4", "#d62728", "#2ca02c")
_SIZE = 400
_PAD = 50


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def export_diagram_svg(dgms: PersistenceDiagrams, path) -> None:
    """Birth on x, death on y, one marker per finite pair, plus the diagonal.

    Each marker carries ``class="h<dim>"`` and the exact pair in
    ``data-birth``/``data-death`` attributes.
    """
    pts = []
    for k, dgm in enumerate(dgms.diagrams):
        for b, d in dgm:
            if math.isfinite(d):
                pts.append((k, float(b), float(d)))
    hi = max([d for _, _, d in pts], default=0.0)
    if not hi > 0:
        hi = dgms.threshold if math.isfinite(dgms.threshold) and dgms.threshold > 0 else 1.0
    hi *= 1.05
    span = _SIZE - 2 * _PAD

    def sx(x):
        return _PAD + span * x / hi

    def sy(y):
        return _SIZE - _PAD - span * y / hi

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" height="{_SIZE}" '
        f'viewBox="0 0 {_SIZE} {_SIZE}">',
        f'<rect x="0" y="0" width="{_SIZE}" height="{_SIZE}" fill="white"/>',
        f'<line class="axis" x1="{_PAD}" y1="{_SIZE - _PAD}" x2="{_SIZE - _PAD}" '
        f'y2="{_SIZE - _PAD}" stroke="black"/>',
        f'<line class="axis" x1="{_PAD}" y1="{_SIZE - _PAD}" x2="{_PAD}" y2="{_PAD}" stroke="black"/>',
        f'<line class="diagonal" x1="{_fmt(sx(0))}" y1="{_fmt(sy(0))}" x2="{_fmt(sx(hi))}" '
        f'y2="{_fmt(sy(hi))}" stroke="gray" stroke-dasharray="4 3"/>',
        f'<text x="{_SIZE / 2:.0f}" y="{_SIZE - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">Birth</text>',
        f'<text x="16" y="{_SIZE / 2:.0f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14" transform="rotate(-90 16 {_SIZE / 2:.0f})">Death</text>',
        f'<text x="{_PAD}" y="{_SIZE - _PAD + 16}" font-family="sans-serif" font-size="10">0</text>',
        f'<text x="{_SIZE - _PAD}" y="{_SIZE - _PAD + 16}" text-anchor="end" '
        f'font-family="sans-serif" font-size="10">{hi:.3g}</text>',
    ]
    for k in range(len(dgms.diagrams)):
        color = _COLORS[k % len(_COLORS)]
        out.append(f'<g class="series" data-dim="{k}">')
        for kk, b, d in pts:
            if kk == k:
                out.append(f'<circle class="h{k}" cx="{_fmt(sx(b))}" cy="{_fmt(sy(d))}" r="3" '
                           f'fill="{color}" data-birth="{b!r}" data-death="{d!r}"/>')
        out.append("</g>")
        out.append(f'<text x="{_SIZE - _PAD - 40}" y="{_PAD + 16 * k}" font-family="sans-serif" '
                   f'font-size="12" fill="{color}">H{k}</text>')
    out.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")

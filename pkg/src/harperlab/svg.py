"""Minimal SVG emitters (fixed viewBox, deterministic formatting)."""

from __future__ import annotations

import math
from datetime import datetime, timezone
from typing import Sequence

WIDTH = 1000
HEIGHT = 1000
MARGIN = 60


def _header(title: str, reproducible: bool, config_json: str | None) -> list[str]:
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">']
    if config_json:
        out.append(f"<!-- config: {config_json.replace('--', '- -')} -->")
    if not reproducible:
        out.append(f"<!-- generated {datetime.now(timezone.utc).isoformat(timespec='seconds')} -->")
    out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    out.append(f'<text x="{WIDTH / 2:.1f}" y="30" text-anchor="middle" font-size="20">{_esc(title)}</text>')
    return out


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def butterfly_svg(rows: Sequence[tuple[float, Sequence[tuple[float, float]]]], title: str = "butterfly",
                  reproducible: bool = False, config_json: str | None = None) -> str:
    """rows: (alpha, [(lo, hi), ...]); each row becomes a horizontal line of bands at height alpha."""
    lo = min((b[0] for _, bands in rows for b in bands), default=-1.0)
    hi = max((b[1] for _, bands in rows for b in bands), default=1.0)
    span = (hi - lo) or 1.0
    w, h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
    out = _header(title, reproducible, config_json)
    out.append('<g stroke="black" stroke-width="1.5">')
    for alpha, bands in rows:
        y = MARGIN + (1.0 - alpha) * h
        for a, b in bands:
            x0 = MARGIN + (a - lo) / span * w
            x1 = max(MARGIN + (b - lo) / span * w, x0 + 0.5)
            out.append(f'<line x1="{x0:.2f}" y1="{y:.2f}" x2="{x1:.2f}" y2="{y:.2f}"/>')
    out.append("</g>")
    out += _axis_labels(f"E in [{lo:.4g}, {hi:.4g}]", "alpha")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def loglog_svg(series: dict[str, tuple[Sequence[float], Sequence[float]]], title: str, xlabel: str, ylabel: str,
               reproducible: bool = False, config_json: str | None = None) -> str:
    pts = [(x, y) for xs, ys in series.values() for x, y in zip(xs, ys) if x > 0 and y > 0]
    lx = [math.log10(x) for x, _ in pts] or [0.0, 1.0]
    ly = [math.log10(y) for _, y in pts] or [0.0, 1.0]
    x0, x1 = min(lx), max(lx)
    y0, y1 = min(ly), max(ly)
    sx, sy = (x1 - x0) or 1.0, (y1 - y0) or 1.0
    w, h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
    colors = ["black", "#c0392b", "#2471a3", "#229954", "#7d3c98"]
    out = _header(title, reproducible, config_json)
    for i, (name, (xs, ys)) in enumerate(series.items()):
        coords = [(MARGIN + (math.log10(x) - x0) / sx * w, MARGIN + (1 - (math.log10(y) - y0) / sy) * h)
                  for x, y in zip(xs, ys) if x > 0 and y > 0]
        c = colors[i % len(colors)]
        path = " ".join(f"{a:.2f},{b:.2f}" for a, b in coords)
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="2" points="{path}"/>')
        for a, b in coords:
            out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="4" fill="{c}"/>')
        out.append(f'<text x="{WIDTH - MARGIN:.1f}" y="{MARGIN + 20 * (i + 1):.1f}" text-anchor="end" '
                   f'font-size="16" fill="{c}">{_esc(name)}</text>')
    out += _axis_labels(f"log10 {xlabel} in [{x0:.3g}, {x1:.3g}]", f"log10 {ylabel} in [{y0:.3g}, {y1:.3g}]")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _axis_labels(xlabel: str, ylabel: str) -> list[str]:
    return [
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" height="{HEIGHT - 2 * MARGIN}" '
        f'fill="none" stroke="gray"/>',
        f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 20}" text-anchor="middle" font-size="16">{_esc(xlabel)}</text>',
        f'<text x="20" y="{HEIGHT / 2:.1f}" font-size="16" transform="rotate(-90 20 {HEIGHT / 2:.1f})" '
        f'text-anchor="middle">{_esc(ylabel)}</text>',
    ]

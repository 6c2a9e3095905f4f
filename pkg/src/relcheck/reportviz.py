"""Static report artifacts: rank-grid maps, map comparison, and line charts as CSV/SVG."""

from __future__ import annotations

import csv
from collections.abc import Sequence
from dataclasses import dataclass
from html import escape
from pathlib import Path

from .relmodel import NodeOrdering
from .score import DegenerateInputError, pearson


@dataclass(frozen=True)
class MapPoint:
    obj: str
    x: int
    y: int


def reconstruct_map(x_order: NodeOrdering, y_order: NodeOrdering) -> list[MapPoint]:
    """Place each object at (rank on X, rank on Y); sorted by object id."""
    if set(x_order.rank) != set(y_order.rank):
        raise ValueError("x and y orderings cover different objects")
    return [MapPoint(o, x_order.rank[o], y_order.rank[o]) for o in sorted(x_order.rank)]


def compare_maps(recon: Sequence[MapPoint], reference: Sequence[MapPoint]) -> dict[str, float]:
    """Spearman rank correlation per axis (ranks are distinct, so Pearson on ranks)."""
    a = {p.obj: p for p in recon}
    b = {p.obj: p for p in reference}
    if set(a) != set(b):
        raise ValueError("maps cover different objects")
    if len(a) < 2:
        raise DegenerateInputError("need at least two objects")
    keys = sorted(a)
    return {
        "spearman_x": pearson([a[k].x for k in keys], [b[k].x for k in keys]),
        "spearman_y": pearson([a[k].y for k in keys], [b[k].y for k in keys]),
    }


def write_map_csv(path: str | Path, points: Sequence[MapPoint]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["object", "x_rank", "y_rank"])
        for p in points:
            w.writerow([p.obj, p.x, p.y])


def _fmt(v: float) -> str:
    s = f"{v:.2f}"
    return s.rstrip("0").rstrip(".") if "." in s else s


def map_svg(points: Sequence[MapPoint], title: str = "", *, cell: int = 28, margin: int = 40) -> str:
    n = max([max(p.x, p.y) for p in points], default=1)
    size = margin * 2 + cell * n
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 20}" '
        f'viewBox="0 0 {size} {size + 20}" font-family="sans-serif" font-size="9">',
        f'<rect x="{margin}" y="{margin}" width="{cell * n}" height="{cell * n}" fill="none" stroke="#999"/>',
    ]
    if title:
        out.append(f'<text x="{size / 2:.1f}" y="16" text-anchor="middle" font-size="13">{escape(title)}</text>')
    out.append(f'<text x="{size / 2:.1f}" y="{size + 10}" text-anchor="middle">west to east rank</text>')
    out.append(f'<text x="12" y="{size / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 12 {size / 2:.1f})">south to north rank</text>')
    for p in points:
        cx = margin + cell * (p.x - 0.5)
        cy = margin + cell * (n - p.y + 0.5)  # north at the top
        out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="3" fill="#1f77b4"/>')
        out.append(f'<text x="{_fmt(cx + 4)}" y="{_fmt(cy - 4)}">{escape(p.obj)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def line_chart_svg(
    series: dict[str, Sequence[tuple[float, float]]],
    *,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    width: int = 480,
    height: int = 320,
) -> str:
    """Polyline chart for one or more (x, y) series; axes start at zero."""
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
    pts = [p for s in series.values() for p in s]
    x_max = max([x for x, _ in pts], default=1.0) or 1.0
    y_max = max([y for _, y in pts], default=1.0) or 1.0
    left, right, top, bottom = 56, 16, 28, 40
    pw, ph = width - left - right, height - top - bottom

    def sx(x: float) -> float:
        return left + pw * x / x_max

    def sy(y: float) -> float:
        return top + ph * (1 - y / y_max)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="#000"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="#000"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="16" text-anchor="middle" font-size="13">{escape(title)}</text>')
    for k in range(5):
        xv, yv = x_max * k / 4, y_max * k / 4
        out.append(f'<text x="{_fmt(sx(xv))}" y="{top + ph + 14}" text-anchor="middle">{_fmt(xv)}</text>')
        out.append(f'<text x="{left - 6}" y="{_fmt(sy(yv) + 3)}" text-anchor="end">{yv:.3f}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 6}" text-anchor="middle">{escape(x_label)}</text>')
    out.append(f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(y_label)}</text>')
    for k, (name, s) in enumerate(series.items()):
        c = colors[k % len(colors)]
        coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in s)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        for x, y in s:
            out.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="2.5" fill="{c}"/>')
        out.append(f'<text x="{left + pw - 4}" y="{top + 12 + 12 * k}" text-anchor="end" fill="{c}">'
                   f'{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_xy_csv(path: str | Path, header: Sequence[str], rows: Sequence[Sequence[object]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def read_xy_csv(path: str | Path) -> list[tuple[float, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return [(float(r[0]), float(r[1])) for r in rows[1:] if r]

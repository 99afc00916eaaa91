"""Access-pattern plots: per-process columnar series and a simple SVG of offset over time."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable

from .analysis.survey import Access, SurveyTable
from .model import Activity, Registry

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


@dataclass
class PlotSeries:
    pid: int
    points: list[tuple[int, int, int, str]] = field(default_factory=list)  # (t ns, offset, length, direction)


def plot_series(activities: Iterable[Activity], registry: Registry) -> dict[int, PlotSeries]:
    table = SurveyTable(registry, keep_accesses=True)
    for a in sorted(activities, key=Activity.sort_key):
        table.update(a)
    return series_from_accesses(table.accesses)


def series_from_accesses(accesses: Iterable[Access]) -> dict[int, PlotSeries]:
    out: dict[int, PlotSeries] = {}
    for a in accesses:
        out.setdefault(a.pid, PlotSeries(a.pid)).points.append((a.t, a.offset, a.length, a.direction))
    for s in out.values():
        s.points.sort()
    return dict(sorted(out.items()))


def series_text(series: PlotSeries) -> str:
    lines = ["# t_ns offset length direction"]
    lines += [f"{t} {off} {length} {d}" for t, off, length, d in series.points]
    return "\n".join(lines) + "\n"


def render_svg(series: dict[int, PlotSeries], width: int = 800, height: int = 500) -> str:
    pad = 50
    pts = [p for s in series.values() for p in s.points]
    t_lo = min((p[0] for p in pts), default=0)
    t_hi = max((p[0] for p in pts), default=1)
    o_hi = max((p[1] + p[2] for p in pts), default=1)
    t_span = max(t_hi - t_lo, 1)
    o_span = max(o_hi, 1)

    def xy(t, off):
        x = pad + (t - t_lo) / t_span * (width - 2 * pad)
        y = height - pad - off / o_span * (height - 2 * pad)
        return f"{x:.2f},{y:.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 10}" text-anchor="middle" font-size="12">time (ns)</text>',
        f'<text x="12" y="{height // 2}" font-size="12" transform="rotate(-90 12 {height // 2})" '
        f'text-anchor="middle">offset (bytes)</text>',
    ]
    for i, (pid, s) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(xy(t, off) for t, off, _, _ in s.points)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{coords}">'
                     f"<title>pid {pid}</title></polyline>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_plot(series: dict[int, PlotSeries], out_dir, prefix: str = "access") -> list[str]:
    """Write ``<prefix>.<pid>.dat`` per process and ``<prefix>.svg``; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for pid, s in series.items():
        path = os.path.join(out_dir, f"{prefix}.{pid}.dat")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(series_text(s))
        paths.append(path)
    path = os.path.join(out_dir, f"{prefix}.svg")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_svg(series))
    paths.append(path)
    return paths

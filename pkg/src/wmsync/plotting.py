"""Dependency-free SVG line plots with the plotted values embedded as data attributes."""
from __future__ import annotations

from collections import defaultdict
from html import escape
from pathlib import Path
from typing import Iterable, Mapping, Sequence

COLORS = {"dm1": "#1f77b4", "dm2": "#2ca02c", "fsmc": "#d62728"}
_FALLBACK = ("#9467bd", "#8c564b", "#e377c2", "#7f7f7f")

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 130, 40, 50


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def line_plot_svg(series: Mapping[str, Sequence[tuple[float, float]]], title: str = "",
                  xlabel: str = "", ylabel: str = "") -> str:
    """Render one polyline per series. Output depends only on the input."""
    pts = [p for s in series.values() for p in s]
    if pts:
        xs, ys = zip(*pts)
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(0.0, min(ys)), max(ys)
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">'
           f'{escape(title)}</text>',
           f'<g class="axes" stroke="black">'
           f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}"/>'
           f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}"/></g>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.1f}" y="{TOP + ph + 18}" text-anchor="middle" '
                   f'font-size="11">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{LEFT - 6}" y="{sy(t) + 4:.1f}" text-anchor="end" '
                   f'font-size="11">{t:.3g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle" '
               f'font-size="13">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2:.1f}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 16 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>')

    for idx, (name, s) in enumerate(series.items()):
        color = COLORS.get(name, _FALLBACK[idx % len(_FALLBACK)])
        s = sorted(s)
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in s)
        out.append(f'<g class="series" data-series="{escape(name)}">')
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{coords}"/>')
        for x, y in s:
            out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5" fill="{color}" '
                       f'data-x="{x!r}" data-y="{y!r}"/>')
        out.append("</g>")
        ly = TOP + 16 * idx + 8
        out.append(f'<line x1="{WIDTH - RIGHT + 12}" y1="{ly}" x2="{WIDTH - RIGHT + 32}" '
                   f'y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{WIDTH - RIGHT + 38}" y="{ly + 4}" font-size="12">'
                   f'{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


_METRICS = (("ber", "BER"), ("niis", "NIIS"), ("sao", "SAO"))


def _mean_series(rows: Iterable[dict], xkey: str, ykey: str) -> dict:
    acc = defaultdict(lambda: defaultdict(list))
    for r in rows:
        if r.get(ykey, "") == "":
            continue
        acc[r["decoder"]][r[xkey]].append(float(r[ykey]))
    return {dec: [(float(x), sum(v) / len(v)) for x, v in sorted(pts.items())]
            for dec, pts in acc.items()}


def emit_plots(out_dir, overall: Sequence[dict] | None = None,
               constant: Sequence[dict] | None = None) -> list[Path]:
    """Write metric-vs-entropy SVGs for whichever tables are given."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if overall is not None:
        for key, label in _METRICS:
            series = _mean_series(overall, "entropy_target", f"mean_{key}")
            path = out_dir / f"overall_{key}.svg"
            path.write_text(line_plot_svg(series, f"{label} vs entropy (varying matrices)",
                                          "entropy (bits/symbol)", label))
            written.append(path)
    if constant is not None:
        for key, label in _METRICS:
            series = _mean_series(constant, "entropy", key)
            path = out_dir / f"constant_{key}.svg"
            path.write_text(line_plot_svg(series, f"{label} vs entropy (fixed matrix)",
                                          "entropy (bits/symbol)", label))
            written.append(path)
    return written

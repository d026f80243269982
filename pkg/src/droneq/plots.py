"""Minimal SVG output: route maps and line charts."""
from __future__ import annotations

import math
from pathlib import Path

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list:
    if hi <= lo:
        hi = lo + 1
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-12:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _doc(width, height, body) -> str:
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n' + "\n".join(body) + "\n</svg>\n"
    )


def line_chart(series: dict, path, xlabel="step", ylabel="AR", title="", width=640, height=400) -> None:
    """series: name -> list of (x, y)."""
    pts = [p for s in series.values() for p in s]
    xs, ys = [p[0] for p in pts] or [0, 1], [p[1] for p in pts] or [0, 1]
    x0, x1 = min(xs), max(xs) if max(xs) > min(xs) else min(xs) + 1
    y0, y1 = min(ys), max(ys) if max(ys) > min(ys) else min(ys) + 1
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    L, R, T, B = 60, 20, 30, 45
    sx = lambda x: L + (x - x0) / (x1 - x0) * (width - L - R)
    sy = lambda y: height - B - (y - y0) / (y1 - y0) * (height - T - B)
    body = [f'<text x="{width / 2}" y="18" text-anchor="middle">{title}</text>']
    body.append(f'<line x1="{L}" y1="{height - B}" x2="{width - R}" y2="{height - B}" stroke="black"/>')
    body.append(f'<line x1="{L}" y1="{T}" x2="{L}" y2="{height - B}" stroke="black"/>')
    for t in _nice_ticks(x0, x1):
        body.append(f'<line x1="{sx(t):.1f}" y1="{height - B}" x2="{sx(t):.1f}" y2="{height - B + 4}" stroke="black"/>')
        body.append(f'<text x="{sx(t):.1f}" y="{height - B + 16}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(y0, y1):
        body.append(f'<line x1="{L - 4}" y1="{sy(t):.1f}" x2="{L}" y2="{sy(t):.1f}" stroke="black"/>')
        body.append(f'<text x="{L - 6}" y="{sy(t) + 4:.1f}" text-anchor="end">{t:g}</text>')
    body.append(f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle">{xlabel}</text>')
    body.append(f'<text x="14" y="{height / 2}" transform="rotate(-90 14 {height / 2})" text-anchor="middle">{ylabel}</text>')
    for k, (name, s) in enumerate(series.items()):
        c = COLORS[k % len(COLORS)]
        poly = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in s)
        body.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{poly}"/>')
        body.append(f'<text x="{width - R - 120}" y="{T + 14 * (k + 1)}" fill="{c}">{name}</text>')
    Path(path).write_text(_doc(width, height, body))


def route_map(inst, routes, path, width=520, height=520) -> None:
    """Nodes at their coordinates (circle layout if none), one colour per drone."""
    base_ids = [n.origin or n.id for n in inst.nodes]
    ids = list(dict.fromkeys(base_ids))
    pos = {}
    for n in inst.nodes:
        if n.pos is not None:
            pos.setdefault(n.origin or n.id, n.pos)
    if len(pos) < len(ids):
        for k, i in enumerate(ids):
            a = 2 * math.pi * k / len(ids)
            pos[i] = (math.cos(a), math.sin(a))
    xs, ys = [p[0] for p in pos.values()], [p[1] for p in pos.values()]
    span = max(max(xs) - min(xs), max(ys) - min(ys)) or 1.0
    m = 50
    sx = lambda x: m + (x - min(xs)) / span * (width - 2 * m)
    sy = lambda y: height - m - (y - min(ys)) / span * (height - 2 * m)
    body = []
    for k, r in enumerate(routes.routes):
        c = COLORS[k % len(COLORS)]
        seq = [inst.node(n).origin or n for n in r.nodes]
        poly = " ".join(f"{sx(pos[n][0]):.1f},{sy(pos[n][1]):.1f}" for n in seq)
        body.append(f'<polyline fill="none" stroke="{c}" stroke-width="2" points="{poly}"/>')
        body.append(f'<text x="10" y="{16 * (k + 1)}" fill="{c}">drone {r.drone}: end {r.end_time}</text>')
    for i in ids:
        x, y = sx(pos[i][0]), sy(pos[i][1])
        body.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="9" fill="white" stroke="black"/>')
        body.append(f'<text x="{x:.1f}" y="{y + 4:.1f}" text-anchor="middle">{i}</text>')
    Path(path).write_text(_doc(width, height, body))

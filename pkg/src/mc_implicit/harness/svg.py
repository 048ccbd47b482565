"""A small SVG line-chart writer: axes, optional log scales, polylines and a legend."""

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")
WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 80, 150, 40, 60


def _span(vals):
    lo, hi = min(vals), max(vals)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def _ticks(lo, hi, log):
    if log:
        return [float(k) for k in range(math.floor(lo), math.ceil(hi) + 1)]
    step = (hi - lo) / 4
    return [lo + i * step for i in range(5)]


def _label(v, log):
    return f"1e{int(v)}" if log else f"{v:.3g}"


def line_chart(series, title="", xlabel="", ylabel="", logx=False, logy=False):
    """Render ``{name: (xs, ys)}`` as an SVG document string.

    Points with nonpositive coordinates are dropped on log axes.
    """
    pts = {}
    for name, (xs, ys) in series.items():
        keep = [(x, y) for x, y in zip(xs, ys) if (x > 0 or not logx) and (y > 0 or not logy)]
        pts[name] = ([math.log10(x) if logx else x for x, _ in keep], [math.log10(y) if logy else y for _, y in keep])
    allx = [x for xs, _ in pts.values() for x in xs] or [0.0]
    ally = [y for _, ys in pts.values() for y in ys] or [0.0]
    x0, x1 = _span(allx)
    y0, y1 = _span(ally)
    if logy:
        y0, y1 = math.floor(y0), math.ceil(y1)
        if y0 == y1:
            y1 += 1
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return TOP + (1 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1, logx):
        if x0 <= t <= x1:
            out.append(f'<line x1="{sx(t):.1f}" y1="{TOP + ph}" x2="{sx(t):.1f}" y2="{TOP + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{sx(t):.1f}" y="{TOP + ph + 18}" text-anchor="middle">{_label(t, logx)}</text>')
    for t in _ticks(y0, y1, logy):
        if y0 <= t <= y1:
            out.append(f'<line x1="{LEFT - 5}" y1="{sy(t):.1f}" x2="{LEFT}" y2="{sy(t):.1f}" stroke="black"/>')
            out.append(f'<text x="{LEFT - 8}" y="{sy(t) + 4:.1f}" text-anchor="end">{_label(t, logy)}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (name, (xs, ys)) in enumerate(pts.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in zip(xs, ys):
            out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>')
        ly = TOP + 10 + 18 * i
        out.append(f'<line x1="{LEFT + pw + 15}" y1="{ly}" x2="{LEFT + pw + 40}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + pw + 45}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

"""Minimal deterministic SVG line plots (no timestamps, fixed formatting)."""

import numpy as np

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 64, 16, 28, 44
_COLORS = ("#1f6fb2", "#b2501f", "#2e8b57", "#8b2e62", "#666666", "#b29a1f")


def _fmt(x):
    return f"{x:.6g}"


def _ticks(lo, hi, log):
    if log:
        lo_e = int(np.floor(np.log10(lo)))
        hi_e = int(np.ceil(np.log10(hi)))
        step = max(1, (hi_e - lo_e) // 6)
        return [10.0**e for e in range(lo_e, hi_e + 1, step)]
    span = hi - lo
    raw = span / 5.0
    mag = 10.0 ** np.floor(np.log10(raw))
    for m in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= m * mag:
            step = m * mag
            break
    t0 = np.ceil(lo / step) * step
    out = []
    t = t0
    while t <= hi + 1e-12 * span:
        out.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return out


class _Axis:
    def __init__(self, lo, hi, log, pix0, pix1):
        if log:
            lo = max(lo, 1e-300)
            hi = max(hi, lo * 10.0)
        if hi <= lo:
            hi = lo + 1.0
        self.lo, self.hi, self.log = lo, hi, log
        self.p0, self.p1 = pix0, pix1

    def to_pix(self, v):
        if self.log:
            v = np.maximum(v, self.lo * 1e-3)
            f = (np.log10(v) - np.log10(self.lo)) / (np.log10(self.hi) - np.log10(self.lo))
        else:
            f = (v - self.lo) / (self.hi - self.lo)
        return self.p0 + f * (self.p1 - self.p0)


def line_plot(path, series, title="", xlabel="", ylabel="", logx=False, logy=False):
    """Write an SVG polyline plot; ``series`` is a list of (name, x, y)."""
    xs = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    if logy:
        pos = ys > 0
        ymin = float(ys[pos].min()) if np.any(pos) else 1e-12
        ymax = float(ys[pos].max()) if np.any(pos) else 1.0
    else:
        ymin, ymax = float(ys.min()), float(ys.max())
        pad = 0.05 * (ymax - ymin + 1e-12)
        ymin, ymax = ymin - pad, ymax + pad
    ax = _Axis(float(xs.min()), float(xs.max()), logx, _ML, _W - _MR)
    ay = _Axis(ymin, ymax, logy, _H - _MB, _MT)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W // 2}" y="18" font-size="14" text-anchor="middle" '
        f'font-family="sans-serif">{title}</text>',
    ]
    for tv in _ticks(ax.lo, ax.hi, logx):
        px = float(ax.to_pix(tv))
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{_MT}" x2="{_fmt(px)}" y2="{_H - _MB}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{_H - _MB + 16}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{_fmt(tv)}</text>'
        )
    for tv in _ticks(ay.lo, ay.hi, logy):
        py = float(ay.to_pix(tv))
        parts.append(
            f'<line x1="{_ML}" y1="{_fmt(py)}" x2="{_W - _MR}" y2="{_fmt(py)}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_ML - 6}" y="{_fmt(py + 4)}" font-size="11" '
            f'text-anchor="end" font-family="sans-serif">{_fmt(tv)}</text>'
        )
    parts.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
        f'height="{_H - _MT - _MB}" fill="none" stroke="#333333"/>'
    )
    for k, (name, x, y) in enumerate(series):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if logy:
            keep = y > 0
            x, y = x[keep], y[keep]
        if len(x) == 0:
            continue
        pts = " ".join(
            f"{_fmt(float(ax.to_pix(xi)))},{_fmt(float(ay.to_pix(yi)))}"
            for xi, yi in zip(x, y)
        )
        color = _COLORS[k % len(_COLORS)]
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{_W - _MR - 6}" y="{_MT + 14 + 13 * k}" font-size="11" '
            f'text-anchor="end" font-family="sans-serif" fill="{color}">{name}</text>'
        )
    parts.append(
        f'<text x="{_W // 2}" y="{_H - 8}" font-size="12" text-anchor="middle" '
        f'font-family="sans-serif">{xlabel}</text>'
    )
    parts.append(
        f'<text x="14" y="{_H // 2}" font-size="12" text-anchor="middle" '
        f'font-family="sans-serif" transform="rotate(-90 14 {_H // 2})">{ylabel}</text>'
    )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")

"""Minimal self-contained SVG error-bar charts (mean with min/max whiskers)."""

from __future__ import annotations

W, H = 640, 420
MARGIN = {"l": 70, "r": 20, "t": 40, "b": 60}


def error_bar_svg(title: str, x_label: str, y_label: str,
                  points: list[tuple[float, float, float, float]]) -> str:
    """points: (x, mean, low, high) per category position."""
    if not points:
        return ('<svg xmlns="http://www.w3.org/2000/svg" '
                f'width="{W}" height="{H}"><text x="20" y="40">'
                'no data</text></svg>\n')
    inner_w = W - MARGIN["l"] - MARGIN["r"]
    inner_h = H - MARGIN["t"] - MARGIN["b"]
    n = len(points)
    ys = [v for p in points for v in p[1:]]
    y_lo, y_hi = min(ys), max(ys)
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    pad = 0.08 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    def px(i):
        return MARGIN["l"] + inner_w * (i + 0.5) / n

    def py(v):
        return MARGIN["t"] + inner_h * (1.0 - (v - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{_esc(title)}</text>',
        f'<line x1="{MARGIN["l"]}" y1="{H - MARGIN["b"]}" '
        f'x2="{W - MARGIN["r"]}" y2="{H - MARGIN["b"]}" stroke="black"/>',
        f'<line x1="{MARGIN["l"]}" y1="{MARGIN["t"]}" '
        f'x2="{MARGIN["l"]}" y2="{H - MARGIN["b"]}" stroke="black"/>',
        f'<text x="{W / 2:.1f}" y="{H - 14}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{_esc(x_label)}</text>',
        f'<text x="18" y="{H / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 18 {H / 2:.1f})">{_esc(y_label)}</text>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = y_lo + frac * (y_hi - y_lo)
        y = py(v)
        parts.append(f'<line x1="{MARGIN["l"] - 4}" y1="{y:.1f}" '
                     f'x2="{MARGIN["l"]}" y2="{y:.1f}" stroke="black"/>')
        parts.append(f'<text x="{MARGIN["l"] - 8}" y="{y + 4:.1f}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="10">{v:.3g}</text>')
    for i, (x, mean, low, high) in enumerate(points):
        cx = px(i)
        parts.append(f'<line x1="{cx:.1f}" y1="{py(low):.1f}" '
                     f'x2="{cx:.1f}" y2="{py(high):.1f}" '
                     f'stroke="#1f77b4" stroke-width="1.5"/>')
        for v in (low, high):
            parts.append(f'<line x1="{cx - 5:.1f}" y1="{py(v):.1f}" '
                         f'x2="{cx + 5:.1f}" y2="{py(v):.1f}" '
                         f'stroke="#1f77b4" stroke-width="1.5"/>')
        parts.append(f'<circle cx="{cx:.1f}" cy="{py(mean):.1f}" r="4" '
                     f'fill="#1f77b4"/>')
        parts.append(f'<text x="{cx:.1f}" y="{H - MARGIN["b"] + 16}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="10">{x:.4g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))

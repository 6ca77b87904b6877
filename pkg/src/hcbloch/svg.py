"""Standalone SVG band diagrams (reduced frequency against tau squared)."""
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = 56


def _fmt(x):
    return f"{x:.2f}"


def emit_band_svg(zeta, tau_sq, band=None, asymptotes=(), resonances=(), title="band diagram"):
    """Render sampled ``(zeta, tau^2)`` pairs as an SVG document.

    Parameters
    ----------
    zeta, tau_sq : array_like
        Samples; consecutive samples with the same ``band`` label are joined.
    band : array_like of int, optional
        Band label per sample; negative labels (stop bands) are not drawn.
    asymptotes : sequence of float
        Drawn as dashed vertical lines.
    resonances : sequence of float
        Drawn as dots on the abscissa.

    Returns
    -------
    str

    Raises
    ------
    ValueError
        For an empty sample set.
    """
    z = np.asarray(zeta, dtype=float).ravel()
    t = np.asarray(tau_sq, dtype=float).ravel()
    if z.size == 0:
        raise ValueError("no dispersion samples to draw")
    if z.shape != t.shape:
        raise ValueError("zeta and tau_sq differ in length")
    b = np.zeros(z.size, dtype=int) if band is None else np.asarray(band, dtype=int).ravel()

    drawn = b >= 0
    xmax = max(float(z.max()), *(a for a in asymptotes if a <= z.max()), 1e-12) if z.size else 1.0
    xmin = min(0.0, float(z.min()))
    visible = t[drawn & np.isfinite(t)]
    ymax = float(np.quantile(visible, 0.9)) * 1.5 if visible.size else 1.0
    ymax = ymax if ymax > 0 else 1.0
    if xmax <= xmin:
        xmax = xmin + 1.0

    def px(x):
        return MARGIN + (x - xmin) / (xmax - xmin) * (WIDTH - 2 * MARGIN)

    def py(y):
        return HEIGHT - MARGIN - min(max(y, 0.0), ymax) / ymax * (HEIGHT - 2 * MARGIN)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f"<title>{escape(title)}</title>",
           '<rect width="100%" height="100%" fill="white"/>',
           f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" '
           'stroke="black"/>',
           f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
           f'<text x="{WIDTH / 2}" y="{HEIGHT - 16}" text-anchor="middle" font-size="14">zeta</text>',
           f'<text x="16" y="{HEIGHT / 2}" text-anchor="middle" font-size="14" '
           f'transform="rotate(-90 16 {HEIGHT / 2})">tau^2</text>',
           f'<text x="{MARGIN - 4}" y="{MARGIN + 4}" text-anchor="end" font-size="10">{ymax:.3g}</text>',
           f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 14}" text-anchor="end" '
           f'font-size="10">{xmax:.4g}</text>']
    for a in asymptotes:
        if xmin <= a <= xmax:
            x = _fmt(px(a))
            out.append(f'<line class="asymptote" x1="{x}" y1="{MARGIN}" x2="{x}" y2="{HEIGHT - MARGIN}" '
                       'stroke="gray" stroke-dasharray="4 3"/>')
    for r in resonances:
        if xmin <= r <= xmax:
            out.append(f'<circle class="resonance" cx="{_fmt(px(r))}" cy="{HEIGHT - MARGIN}" r="3" '
                       'fill="black"/>')

    segments, current = [], []
    for i in range(z.size):
        if not drawn[i] or not np.isfinite(t[i]) or (current and b[i] != b[current[-1]]):
            if current:
                segments.append(current)
            current = []
        if drawn[i] and np.isfinite(t[i]):
            current.append(i)
    if current:
        segments.append(current)
    for seg in segments:
        if len(seg) == 1:
            i = seg[0]
            out.append(f'<circle class="sample" cx="{_fmt(px(z[i]))}" cy="{_fmt(py(t[i]))}" r="2.5" '
                       'fill="steelblue"/>')
        else:
            pts = " ".join(f"{_fmt(px(z[i]))},{_fmt(py(t[i]))}" for i in seg)
            out.append(f'<polyline class="band" points="{pts}" fill="none" stroke="steelblue" '
                       'stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

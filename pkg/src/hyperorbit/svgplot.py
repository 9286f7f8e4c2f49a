"""Deterministic SVG scatter plots of orbit clouds.

Purely diagnostic output: a fixed 640x640 viewport mapped linearly from the
coverage box, optional grid lines at cell boundaries, and one small circle
per point.  No timestamps, no randomness, and fixed two-decimal pixel
coordinates, so the same cloud always yields byte-identical SVG.
"""

from __future__ import annotations

from .errors import DimensionMismatch, MalformedInput
from .verification import PointCloud, _coerce_fraction, _realify

VIEW = 640  # drawing area edge in pixels
MARGIN = 40
MAX_POINTS = 20_000  # deterministic stride subsampling beyond this
MAX_GRIDLINES = 128  # omit the grid rather than drawing a black rectangle


def _px(value: float) -> str:
    return f"{value:.2f}"


def scatter_svg(cloud: PointCloud, box, cell=None) -> str:
    """Render a 1-D or 2-D (realified) cloud against the given box.

    `box` lists one exact (lo, hi) pair per real axis, as for coverage;
    1-D clouds draw on a horizontal midline.  Points outside the box are
    simply not drawn.  Clouds larger than MAX_POINTS are subsampled at a
    fixed stride so the file stays reviewable.
    """
    d = cloud.real_dimension
    if d not in (1, 2):
        raise DimensionMismatch(
            f"scatter plots need a 1-D or 2-D realified cloud, got {d}-D"
        )
    axes = []
    for lo, hi in box:
        lof, hif = _coerce_fraction(lo), _coerce_fraction(hi)
        if not lof < hif:
            raise MalformedInput(f"empty plot axis: [{lo!r}, {hi!r}]")
        axes.append((lof, hif))
    if len(axes) != d:
        raise DimensionMismatch(f"box has {len(axes)} axes for a {d}-D cloud")
    cellf = None
    if cell is not None:
        cellf = _coerce_fraction(cell)
        if cellf <= 0:
            raise MalformedInput(f"cell width must be positive: {cell!r}")

    total = VIEW + 2 * MARGIN
    spans = [float(hi - lo) for lo, hi in axes]
    los = [float(lo) for lo, _ in axes]

    def map_x(v: float) -> float:
        return MARGIN + (v - los[0]) / spans[0] * VIEW

    def map_y(v: float) -> float:
        if d == 1:
            return total / 2
        return MARGIN + (1 - (v - los[1]) / spans[1]) * VIEW

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{total}" '
        f'height="{total}" viewBox="0 0 {total} {total}">',
        f'<rect x="0" y="0" width="{total}" height="{total}" fill="#ffffff"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{VIEW}" height="{VIEW}" '
        f'fill="none" stroke="#404040" stroke-width="1"/>',
    ]
    if cellf is not None:
        for axis in range(d):
            lo, hi = axes[axis]
            steps = (hi - lo) / cellf
            if steps.denominator != 1 or int(steps) > MAX_GRIDLINES:
                continue
            for i in range(1, int(steps)):
                frac = float(lo + i * cellf)
                if axis == 0:
                    x = _px(map_x(frac))
                    parts.append(
                        f'<line x1="{x}" y1="{MARGIN}" x2="{x}" '
                        f'y2="{MARGIN + VIEW}" stroke="#d0d0d0" stroke-width="0.5"/>'
                    )
                else:
                    y = _px(map_y(frac))
                    parts.append(
                        f'<line x1="{MARGIN}" y1="{y}" x2="{MARGIN + VIEW}" '
                        f'y2="{y}" stroke="#d0d0d0" stroke-width="0.5"/>'
                    )
    stride = max(1, -(-len(cloud.points) // MAX_POINTS))
    for idx in range(0, len(cloud.points), stride):
        coords = _realify(cloud.points[idx], cloud.field)
        vals = [float(c) for c in coords]
        if any(
            not float(axes[i][0]) <= v <= float(axes[i][1])
            for i, v in enumerate(vals)
        ):
            continue
        cx = _px(map_x(vals[0]))
        cy = _px(map_y(vals[1])) if d == 2 else _px(total / 2)
        parts.append(f'<circle cx="{cx}" cy="{cy}" r="2" fill="#1f6feb"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def save_scatter_svg(path, cloud: PointCloud, box, cell=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scatter_svg(cloud, box, cell))

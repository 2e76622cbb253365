"""CSV, JSON and SVG writers with fixed float formatting."""

from __future__ import annotations

import io
import json
import math
from typing import Iterable, Sequence

from .bifurcation import BifurcationCurve

__all__ = ["fmt", "curves_csv", "rows_csv", "dumps", "diagram_svg"]

CURVE_HEADER = ("curve_type", "k", "mu1", "mu2", "residual")


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def rows_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(fmt(v) for v in r) + "\n")
    return buf.getvalue()


def curves_csv(curves: Iterable[BifurcationCurve]) -> str:
    return rows_csv(CURVE_HEADER, (r for c in curves for r in c.rows()))


def _jsonable(v):
    if isinstance(v, float):
        if math.isfinite(v):
            return float("%.17g" % v)
        return str(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def dumps(doc) -> str:
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


_W, _H, _PAD = 800, 640, 60
_PLUS_COLOUR = "#c0392b"
_MINUS_COLOUR = "#2471a3"


def _pts(samples) -> str:
    return " ".join("%.17g,%.17g" % (a, b) for a, b in samples)


def diagram_svg(
    curves: Sequence[BifurcationCurve],
    mu1_range: tuple[float, float],
    mu2_range: tuple[float, float],
    title: str = "",
) -> str:
    """Self-contained SVG 1.1 drawing of the curves in the ``(mu1, mu2)`` plane.

    Polylines carry the exact CSV sample values; a single affine transform
    maps them to the canvas.
    """
    x0, x1 = mu1_range
    y0, y1 = mu2_range
    sx = (_W - 2 * _PAD) / (x1 - x0)
    sy = (_H - 2 * _PAD) / (y1 - y0)
    tx = _PAD - x0 * sx
    ty = _H - _PAD + y0 * sy
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
        'fill="none" stroke="black" stroke-width="1"/>',
        f'<clipPath id="plot"><rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}"/></clipPath>',
        f'<g clip-path="url(#plot)"><g transform="matrix({"%.17g" % sx} 0 0 {"%.17g" % -sy} '
        f'{"%.17g" % tx} {"%.17g" % ty})">',
    ]
    by_k: dict[int, dict[str, BifurcationCurve]] = {}
    for c in curves:
        if c.k is not None:
            by_k.setdefault(c.k, {})[c.curve_type] = c
    for k in sorted(by_k):
        pair = by_k[k]
        if "LkPlus" in pair and "LkMinus" in pair:
            pm, mm = pair["LkPlus"].mu1_at(), pair["LkMinus"].mu1_at()
            common = sorted(set(pm) & set(mm))
            if len(common) >= 2:
                poly = [(pm[m], m) for m in common] + [(mm[m], m) for m in reversed(common)]
                out.append(
                    f'<polygon class="delta" data-k="{k}" points="{_pts(poly)}" '
                    'fill="#7dcea0" fill-opacity="0.6" stroke="none"/>'
                )
    styles = {
        "Lplus": ("black", "2", ""),
        "Lh": ("black", "2", ""),
        "LkPlus": (_PLUS_COLOUR, "1", ""),
        "LkMinus": (_MINUS_COLOUR, "1", ' stroke-dasharray="4 2"'),
    }
    for c in curves:
        if len(c.samples) < 2:
            continue
        colour, width, extra = styles[c.curve_type]
        kattr = "" if c.k is None else f' data-k="{c.k}"'
        out.append(
            f'<polyline class="{c.curve_type}"{kattr} points="{_pts(c.samples)}" fill="none" '
            f'stroke="{colour}" stroke-width="{width}" vector-effect="non-scaling-stroke"{extra}/>'
        )
    out.append("</g></g>")
    font = 'font-family="sans-serif" font-size="13"'
    out.append(f'<text x="{_W / 2}" y="{_H - 15}" text-anchor="middle" {font}>mu1</text>')
    out.append(f'<text x="18" y="{_H / 2}" text-anchor="middle" {font} transform="rotate(-90 18 {_H / 2})">mu2</text>')
    out.append(f'<text x="{_PAD}" y="{_H - _PAD + 18}" text-anchor="middle" {font}>{"%.3g" % x0}</text>')
    out.append(f'<text x="{_W - _PAD}" y="{_H - _PAD + 18}" text-anchor="middle" {font}>{"%.3g" % x1}</text>')
    out.append(f'<text x="{_PAD - 6}" y="{_H - _PAD}" text-anchor="end" {font}>{"%.3g" % y0}</text>')
    out.append(f'<text x="{_PAD - 6}" y="{_PAD + 4}" text-anchor="end" {font}>{"%.3g" % y1}</text>')
    if title:
        out.append(f'<text x="{_W / 2}" y="30" text-anchor="middle" {font}>{title}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

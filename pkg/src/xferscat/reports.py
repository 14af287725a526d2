"""Artifact emission: CSV tables, JSON reports, polar SVG plots.

All writers are atomic (temp file in the target directory, then rename)
and byte-deterministic: floats use repr (shortest round-trip), nothing
embeds timestamps.
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

AMPLITUDE_HEADER = "k,theta0_deg,side,theta_deg,re_f,im_f,abs_f2"
ORDER_HEADER = "n,sin_theta_n,re_r,im_r,re_t,im_t"


def atomic_write_text(path: str, text: str) -> None:
    """Write text to path via a temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(x) -> str:
    return repr(float(x))


def amplitude_csv(tables) -> str:
    """CSV for one or more AmplitudeTable objects (rows concatenated)."""
    lines = [AMPLITUDE_HEADER]
    for table in tables:
        for k, t0, side, th, re_f, im_f, a2 in table.rows():
            lines.append(
                ",".join([_num(k), _num(t0), side, _num(th), _num(re_f), _num(im_f), _num(a2)])
            )
    return "\n".join(lines) + "\n"


def order_csv(table) -> str:
    lines = [ORDER_HEADER]
    for n, s, re_r, im_r, re_t, im_t in table.rows():
        lines.append(
            ",".join([str(n), _num(s), _num(re_r), _num(im_r), _num(re_t), _num(im_t)])
        )
    return "\n".join(lines) + "\n"


def report_json(report) -> str:
    return report.to_json() + "\n"


def grid_json(grid) -> str:
    return json.dumps(grid.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"


def polar_svg(table, size: int = 480, n_rings: int = 4) -> str:
    """Static polar plot of |f(theta)| for one amplitude table.

    theta = 0 points right (forward direction); radius is |f| normalized
    to the outer ring.  No timestamps or random ids, so output bytes are a
    pure function of the table.
    """
    cx = cy = size / 2.0
    radius = size * 0.42
    fabs = np.abs(table.f)
    fmax = float(fabs.max()) if fabs.size else 0.0
    scale = radius / fmax if fmax > 0 else 0.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for i in range(1, n_rings + 1):
        r = radius * i / n_rings
        parts.append(
            f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{r:.1f}" fill="none" '
            'stroke="#cccccc" stroke-width="1"/>'
        )
    parts.append(
        f'<line x1="{cx - radius:.1f}" y1="{cy:.1f}" x2="{cx + radius:.1f}" y2="{cy:.1f}" '
        'stroke="#cccccc" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{cx:.1f}" y1="{cy - radius:.1f}" x2="{cx:.1f}" y2="{cy + radius:.1f}" '
        'stroke="#cccccc" stroke-width="1"/>'
    )
    if fmax > 0:
        points = []
        for th, fa in zip(table.thetas, fabs):
            r = scale * fa
            x = cx + r * math.cos(th)
            y = cy - r * math.sin(th)
            points.append(f"{x:.3f},{y:.3f}")
        parts.append(
            '<polyline fill="none" stroke="#1f6fb2" stroke-width="1.5" points="'
            + " ".join(points)
            + '"/>'
        )
    label = (
        f"k={table.k:g} theta0={math.degrees(table.theta0):g}deg side={table.side} "
        f"max|f|={fmax:.6g}"
    )
    parts.append(
        f'<text x="8" y="{size - 10}" font-family="monospace" font-size="12">{label}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

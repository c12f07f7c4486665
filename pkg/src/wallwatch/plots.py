"""Deterministic SVG renderings of the analysis products.

Plain hand-assembled SVG: textual, diffable, no rendering dependency,
and byte-stable for identical inputs (no timestamps or random ids).
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

from wallwatch.capture.model import US_PER_S

STATE_COLORS = {"off": "#d9d9d9", "idle": "#7fb3d5", "active": "#e74c3c"}

_FONT = 'font-family="monospace" font-size="11"'


def _f(v: float) -> str:
    return f"{v:.2f}"


def _header(width: int, height: int) -> str:
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
    )


def svg_day_strip(
    timelines: dict[str, list[dict]],
    t_start_us: int,
    t_end_us: int,
    labels: Optional[dict[str, str]] = None,
) -> str:
    """One horizontal strip per device, colored by state over time."""
    macs = sorted(timelines)
    width, row_h, left = 900, 18, 190
    height = 40 + row_h * max(1, len(macs))
    span = max(1, t_end_us - t_start_us)
    out = [_header(width, height)]
    out.append(f'<text x="8" y="16" {_FONT}>device states over time</text>\n')
    for r, mac in enumerate(macs):
        y = 30 + r * row_h
        name = (labels or {}).get(mac, mac)
        out.append(f'<text x="8" y="{y + 12}" {_FONT}>{name[:28]}</text>\n')
        for seg in timelines[mac]:
            x0 = left + (seg["t_start_us"] - t_start_us) / span * (width - left - 10)
            x1 = left + (seg["t_end_us"] - t_start_us) / span * (width - left - 10)
            color = STATE_COLORS.get(seg["state"], "#000000")
            out.append(
                f'<rect x="{_f(x0)}" y="{y}" width="{_f(max(0.2, x1 - x0))}" '
                f'height="{row_h - 4}" fill="{color}"/>\n'
            )
    out.append("</svg>\n")
    return "".join(out)


def svg_threshold_plot(
    bin_counts: Sequence[int],
    bin_width_s: int,
    t_idle: float,
    t_active: float,
    title: str,
) -> str:
    """Traffic volume against the calibrated idle/active thresholds."""
    width, height, left, bottom = 900, 260, 50, 230
    n = max(1, len(bin_counts))
    peak = max(max(bin_counts, default=1), t_active) * 1.1
    out = [_header(width, height)]
    out.append(f'<text x="8" y="16" {_FONT}>{title}</text>\n')

    def sx(i: float) -> float:
        return left + i / n * (width - left - 10)

    def sy(v: float) -> float:
        return bottom - v / peak * (bottom - 30)

    step = max(1, n // 1800)
    pts = []
    for i in range(0, n, step):
        chunk = bin_counts[i : i + step]
        pts.append(f"{_f(sx(i))},{_f(sy(max(chunk)))}")
    out.append(
        f'<polyline points="{" ".join(pts)}" fill="none" stroke="#2c3e50" '
        'stroke-width="1"/>\n'
    )
    for value, color, name in (
        (t_idle, "#7fb3d5", "idle"),
        (t_active, "#e74c3c", "active"),
    ):
        y = sy(value)
        out.append(
            f'<line x1="{left}" y1="{_f(y)}" x2="{width - 10}" y2="{_f(y)}" '
            f'stroke="{color}" stroke-dasharray="6,3"/>\n'
            f'<text x="{width - 70}" y="{_f(y - 4)}" {_FONT} fill="{color}">'
            f"{name}={value:g}</text>\n"
        )
    out.append("</svg>\n")
    return "".join(out)


def svg_polar_directions(
    directions: dict[str, dict],
    sectors: Sequence[dict],
    labels: Optional[dict[str, str]] = None,
) -> str:
    """Unit direction vectors with sector arcs."""
    size, cx, cy, r = 460, 230, 230, 170
    out = [_header(size, size)]
    out.append(f'<circle cx="{cx}" cy="{cy}" r="{r}" fill="none" stroke="#aaa"/>\n')

    for s in sectors:
        a0 = math.radians(s["start_deg"])
        a1 = math.radians(s["start_deg"] + s["span_deg"])
        large = 1 if s["span_deg"] > 180 else 0
        x0, y0 = cx + r * math.cos(a0), cy - r * math.sin(a0)
        x1, y1 = cx + r * math.cos(a1), cy - r * math.sin(a1)
        out.append(
            f'<path d="M {cx} {cy} L {_f(x0)} {_f(y0)} '
            f'A {r} {r} 0 {large} 0 {_f(x1)} {_f(y1)} Z" '
            'fill="#f4d03f" fill-opacity="0.15" stroke="none"/>\n'
        )
        mid = math.radians(s["start_deg"] + s["span_deg"] / 2)
        out.append(
            f'<text x="{_f(cx + (r + 14) * math.cos(mid))}" '
            f'y="{_f(cy - (r + 14) * math.sin(mid))}" {_FONT}>{s["label"]}</text>\n'
        )

    palette = ["#2980b9", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#16a085"]
    for i, mac in enumerate(sorted(directions)):
        est = directions[mac]
        ang = math.radians(est["angle_deg"])
        x, y = cx + r * math.cos(ang), cy - r * math.sin(ang)
        color = palette[i % len(palette)]
        out.append(
            f'<line x1="{cx}" y1="{cy}" x2="{_f(x)}" y2="{_f(y)}" '
            f'stroke="{color}" stroke-width="2"/>\n'
        )
        name = (labels or {}).get(mac, mac[:8])
        out.append(
            f'<text x="{_f(cx + (r + 28) * math.cos(ang) - 20)}" '
            f'y="{_f(cy - (r + 28) * math.sin(ang))}" {_FONT} '
            f'fill="{color}">{name}</text>\n'
        )
    out.append("</svg>\n")
    return "".join(out)


def svg_week_heat(weekly: dict) -> str:
    """7x24 presence-probability grid."""
    cell, left, top = 28, 60, 40
    width, height = left + 24 * cell + 20, top + 7 * cell + 20
    days = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"]
    out = [_header(width, height)]
    out.append(
        f'<text x="8" y="16" {_FONT}>weekly presence: {weekly.get("subject", "")}'
        "</text>\n"
    )
    fractions = weekly["fractions"]
    recurring = {tuple(x) for x in weekly.get("recurring_absence", [])}
    for h in range(24):
        out.append(
            f'<text x="{left + h * cell + 4}" y="{top - 8}" {_FONT}>{h:02d}</text>\n'
        )
    for d in range(7):
        out.append(
            f'<text x="8" y="{top + d * cell + 18}" {_FONT}>{days[d]}</text>\n'
        )
        for h in range(24):
            v = fractions[d][h]
            if v is None:
                fill = "#ffffff"
            else:
                # present=dark blue, absent=light
                level = int(235 - 160 * float(v))
                fill = f"rgb({level},{level},255)"
            x, y = left + h * cell, top + d * cell
            out.append(
                f'<rect x="{x}" y="{y}" width="{cell - 2}" height="{cell - 2}" '
                f'fill="{fill}" stroke="#ccc"/>\n'
            )
            if (d, h) in recurring:
                out.append(
                    f'<rect x="{x}" y="{y}" width="{cell - 2}" '
                    f'height="{cell - 2}" fill="none" stroke="#e74c3c" '
                    'stroke-width="2"/>\n'
                )
    out.append("</svg>\n")
    return "".join(out)


def svg_event_table(events: Sequence[dict], title: str) -> str:
    """Chronological event table (e.g. a guest visit timeline)."""
    row_h, top = 20, 50
    width = 640
    height = top + row_h * max(1, len(events)) + 20
    out = [_header(width, height)]
    out.append(f'<text x="8" y="16" {_FONT}>{title}</text>\n')
    out.append(
        f'<text x="8" y="36" {_FONT} font-weight="bold">time / kind / subject'
        "</text>\n"
    )
    for i, ev in enumerate(events):
        y = top + i * row_h
        when = ev.get("t_start_iso", str(ev.get("t_start_us")))
        out.append(
            f'<text x="8" y="{y}" {_FONT}>{when}  {ev["kind"]:<14}  '
            f'{ev["subject"]}</text>\n'
        )
    out.append("</svg>\n")
    return "".join(out)

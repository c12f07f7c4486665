"""Analysis output files: JSON report, CSV exports and SVG plots."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

from wallwatch.capture.model import CaptureSet
from wallwatch.capture.ops import bin_traffic
from wallwatch.har import iso
from wallwatch.pipeline import AnalysisResult
from wallwatch import plots


def _device_labels(report: dict) -> dict[str, str]:
    labels = {}
    for p in report.get("inventory", []):
        labels[p["mac"]] = p.get("identity_name") or p["mac"]
    return labels


def write_outputs(
    result: AnalysisResult,
    out_dir,
    capture: Optional[CaptureSet] = None,
) -> list[str]:
    """Write report.json plus CSV and SVG exports; returns file names."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = result.to_report_dict()
    written = []

    def save(name: str, text: str):
        (out / name).write_text(text, encoding="utf-8", newline="\n")
        written.append(name)

    save("report.json", json.dumps(report, indent=1, sort_keys=True) + "\n")

    # State timelines as CSV.
    rows = []
    for mac, segs in sorted(report["timelines"].items()):
        for seg in segs:
            rows.append(
                (mac, iso(seg["t_start_us"]), iso(seg["t_end_us"]), seg["state"])
            )
    save(
        "timelines.csv",
        _csv(("mac", "t_start_iso", "t_end_iso", "state"), rows),
    )

    rows = []
    for mac, est in sorted(report["directions"].items()):
        sector = next(
            (s["label"] for s in report["sectors"] if mac in s["members"]), ""
        )
        rows.append(
            (
                mac,
                iso(est["t_start_us"]),
                est["angle_deg"],
                est["confidence"],
                sector,
            )
        )
    save(
        "directions.csv",
        _csv(("mac", "t_start_iso", "angle_deg", "confidence", "sector"), rows),
    )

    rows = []
    for subject, weekly in sorted(report["weekly"].items()):
        for d in range(7):
            for h in range(24):
                rows.append(
                    (
                        subject,
                        d,
                        h,
                        weekly["fractions"][d][h],
                        weekly["observations"][d][h],
                    )
                )
    save(
        "weekly.csv",
        _csv(("subject", "weekday", "hour", "presence_fraction", "observations"), rows),
    )

    labels = _device_labels(report)
    save(
        "day_strip.svg",
        plots.svg_day_strip(
            report["timelines"],
            report["window"]["t_start_us"],
            report["window"]["t_end_us"],
            labels,
        ),
    )
    save(
        "directions.svg",
        plots.svg_polar_directions(report["directions"], report["sectors"], labels),
    )
    for subject, weekly in sorted(report["weekly"].items()):
        save(f"week_heat_{subject}.svg", plots.svg_week_heat(weekly))

    guest_events = [
        e
        for e in report["events"]
        if e["kind"] in ("guest_arrive", "guest_depart", "sleep", "wake")
    ]
    if guest_events:
        save(
            "guest_timeline.svg",
            plots.svg_event_table(guest_events, "inferred visit timeline"),
        )

    if capture is not None:
        for alias, mac in sorted(result.config.subjects.items()):
            th = result.thresholds.get(mac)
            if th is None:
                continue
            series = bin_traffic(capture, mac, result.config.bin_width_s)
            save(
                f"thresholds_{alias}.svg",
                plots.svg_threshold_plot(
                    series.counts.tolist(),
                    series.bin_width_s,
                    th.t_idle,
                    th.t_active,
                    f"traffic thresholds: {labels.get(mac, mac)}",
                ),
            )
    return written


def _csv(header, rows) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()

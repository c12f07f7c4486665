"""Multi-sniffer merging and per-device traffic binning."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from wallwatch.capture.model import (
    RSSI_NONE,
    CaptureSet,
    TrafficSeries,
    US_PER_S,
    bin_count,
    bin_origin_us,
    mac_to_int,
)
from wallwatch.errors import MergeError

# Clocks are assumed pre-synchronized; the tolerated skew is only echoed
# into the report so downstream consumers can judge alignment claims.
DEFAULT_MAX_SKEW_US = 500_000

MIN_WINDOW_OVERLAP = 0.5


@dataclass
class MergeReport:
    max_skew_us: int
    input_sizes: list[int] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "max_skew_us": self.max_skew_us,
            "input_sizes": list(self.input_sizes),
            "warnings": list(self.warnings),
        }


def merge_sniffers(
    captures: Sequence[CaptureSet], max_skew_us: int = DEFAULT_MAX_SKEW_US
) -> tuple[CaptureSet, MergeReport]:
    """Merge per-sniffer captures into one sorted CaptureSet.

    No deduplication is performed: one over-the-air frame heard by all
    three sniffers stays one record per sniffer, which is exactly what
    direction fingerprinting needs. Inputs must come from distinct
    sniffers; heavily disjoint windows only produce a warning.
    """
    report = MergeReport(max_skew_us=max_skew_us)
    seen: set[int] = set()
    for cap in captures:
        report.input_sizes.append(len(cap))
        ids = set(int(v) for v in np.unique(cap.sniffer_id))
        dup = seen & ids
        if dup:
            raise MergeError(f"duplicate sniffer ids across inputs: {sorted(dup)}")
        seen |= ids

    nonempty = [c for c in captures if len(c)]
    for i in range(len(nonempty)):
        for j in range(i + 1, len(nonempty)):
            a, b = nonempty[i], nonempty[j]
            span_a = a.t_end_us - a.t_start_us
            span_b = b.t_end_us - b.t_start_us
            shorter = max(1, min(span_a, span_b))
            overlap = min(a.t_end_us, b.t_end_us) - max(a.t_start_us, b.t_start_us)
            if overlap / shorter < MIN_WINDOW_OVERLAP:
                report.warnings.append(
                    "capture windows overlap by less than 50%; sniffer clocks or "
                    "capture spans may be misaligned"
                )
                break
        else:
            continue
        break

    if not captures:
        merged = CaptureSet.from_records([])
        return merged, report

    merged = CaptureSet(
        np.concatenate([c.ts_us for c in captures]),
        np.concatenate([c.sniffer_id for c in captures]),
        np.concatenate([c.src_mac for c in captures]),
        np.concatenate([c.dst_mac for c in captures]),
        np.concatenate([c.frame_len for c in captures]),
        np.concatenate([c.rssi_dbm for c in captures]),
        np.concatenate([c.proto for c in captures]),
        _merge_info(captures),
        min(c.t_start_us for c in captures),
        max(c.t_end_us for c in captures),
    )
    return merged, report


def _merge_info(captures: Sequence[CaptureSet]) -> dict[int, dict[str, bytes]]:
    info: dict[int, dict[str, bytes]] = {}
    base = 0
    for cap in captures:
        for i, v in cap.info.items():
            info[base + i] = v
        base += len(cap)
    return info


def bin_traffic(capture: CaptureSet, mac: str, bin_width_s: int = 1) -> TrafficSeries:
    """Aggregate one device's frames into fixed-width wall-clock bins.

    Bins originate at the whole second containing the capture window
    start. A device absent from the capture yields an all-zero series
    over the window. A record falling exactly on the window end lands in
    the final bin.
    """
    if bin_width_s < 1:
        raise ValueError("bin_width_s must be >= 1")

    t0 = bin_origin_us(capture.t_start_us)
    n_bins = bin_count(t0, capture.t_end_us, bin_width_s)
    width_us = bin_width_s * US_PER_S

    mac_val = mac_to_int(mac)
    mask = capture.src_mac == mac_val
    ts = capture.ts_us[mask]
    idx = (ts - t0) // width_us
    np.minimum(idx, n_bins - 1, out=idx)

    counts = np.bincount(idx, minlength=n_bins).astype(np.int64)
    byte_sums = np.bincount(
        idx, weights=capture.frame_len[mask].astype(np.float64), minlength=n_bins
    ).astype(np.int64)

    # Rows are indexed by sniffer id so the same device binned from any
    # subset of the capture keeps a stable row layout.
    n_rows = int(capture.sniffer_id.max()) + 1 if len(capture) else 1
    rssi_mean = np.full((n_rows, n_bins), np.nan, dtype=np.float32)
    sn = capture.sniffer_id[mask]
    rs = capture.rssi_dbm[mask]
    have = rs != RSSI_NONE
    for sid in (int(v) for v in np.unique(sn)):
        sel = have & (sn == sid)
        if not sel.any():
            continue
        c = np.bincount(idx[sel], minlength=n_bins)
        s = np.bincount(idx[sel], weights=rs[sel].astype(np.float64), minlength=n_bins)
        nz = c > 0
        rssi_mean[sid, nz] = (s[nz] / c[nz]).astype(np.float32)

    return TrafficSeries(
        mac=mac,
        bin_width_s=bin_width_s,
        t0_us=t0,
        counts=counts,
        byte_sums=byte_sums,
        rssi_mean=rssi_mean,
    )

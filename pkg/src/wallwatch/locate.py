"""Direction estimation from three-sniffer RSSI fingerprints.

The relative signal strengths a device produces at spatially separated
sniffers encode its rough bearing. Each fingerprint (per-sniffer mean
RSSI over a window) is turned into a softmax-weighted combination of the
sniffer offsets from their centroid, normalized to a unit direction
vector. Stationary devices cluster into angular sectors; mobile devices
are tracked as a sequence of windowed estimates.

Adding a constant to every RSSI leaves the softmax weights, and hence
the vector, bit-for-bit unchanged: only relative strengths matter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from wallwatch.capture.model import RSSI_NONE, US_PER_S, CaptureSet, mac_to_int
from wallwatch.errors import (
    AmbiguousDirection,
    InsufficientObservations,
    WallwatchError,
)

DEFAULT_BETA = 0.5  # per dB; a 10 dB advantage then dominates ~148:1
DEFAULT_GAP_DEG = 45.0
_MIN_RAW_NORM = 1e-6


@dataclass(frozen=True)
class SnifferGeometry:
    """Sniffer positions in meters, in an attacker-chosen frame."""

    positions: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.positions) != 3:
            raise ValueError("exactly three sniffer positions are required")
        (x0, y0), (x1, y1), (x2, y2) = self.positions
        area = abs((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)) / 2.0
        if area <= 0.01:
            raise ValueError("sniffer positions are (near-)collinear")

    @property
    def centroid(self) -> tuple[float, float]:
        xs = [p[0] for p in self.positions]
        ys = [p[1] for p in self.positions]
        return (sum(xs) / 3.0, sum(ys) / 3.0)

    def offsets(self) -> np.ndarray:
        """3x2 array of position minus centroid."""
        c = self.centroid
        return np.array(
            [[p[0] - c[0], p[1] - c[1]] for p in self.positions], dtype=np.float64
        )


@dataclass(frozen=True)
class Fingerprint:
    mac: str
    t_start_us: int
    t_end_us: int
    rssi_dbm: tuple[Optional[float], Optional[float], Optional[float]]
    sample_count: tuple[int, int, int]

    def present(self) -> list[int]:
        return [i for i, v in enumerate(self.rssi_dbm) if v is not None]


@dataclass(frozen=True)
class DirectionEstimate:
    mac: str
    t_start_us: int
    t_end_us: int
    vector: tuple[float, float]
    angle_deg: float
    confidence: float

    def to_dict(self) -> dict:
        return {
            "mac": self.mac,
            "t_start_us": self.t_start_us,
            "t_end_us": self.t_end_us,
            "vector": [self.vector[0], self.vector[1]],
            "angle_deg": round(self.angle_deg, 3),
            "confidence": round(self.confidence, 4),
        }


@dataclass
class Sector:
    label: str
    start_deg: float
    span_deg: float
    members: list[str] = field(default_factory=list)

    def contains(self, angle_deg: float) -> bool:
        return ((angle_deg - self.start_deg) % 360.0) <= self.span_deg

    def distance_to(self, angle_deg: float) -> float:
        if self.contains(angle_deg):
            return 0.0
        end = (self.start_deg + self.span_deg) % 360.0
        return min(circular_distance(angle_deg, self.start_deg),
                   circular_distance(angle_deg, end))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "start_deg": round(self.start_deg, 3),
            "span_deg": round(self.span_deg, 3),
            "members": list(self.members),
        }


@dataclass(frozen=True)
class TrackPoint:
    t_start_us: int
    t_end_us: int
    estimate: Optional[DirectionEstimate]
    sector: Optional[str]
    reason: Optional[str] = None  # why there is a gap


def circular_distance(a_deg: float, b_deg: float) -> float:
    d = abs(a_deg - b_deg) % 360.0
    return min(d, 360.0 - d)


def fingerprint(
    capture: CaptureSet, mac: str, t_start_us: int, t_end_us: int
) -> Fingerprint:
    """Per-sniffer mean RSSI of a device over a window.

    Raises InsufficientObservations when fewer than two sniffers heard
    the device in the window.
    """
    mask = (
        (capture.src_mac == mac_to_int(mac))
        & (capture.ts_us >= t_start_us)
        & (capture.ts_us <= t_end_us)
        & (capture.rssi_dbm != RSSI_NONE)
    )
    sn = capture.sniffer_id[mask]
    rs = capture.rssi_dbm[mask].astype(np.float64)

    means: list[Optional[float]] = [None, None, None]
    counts = [0, 0, 0]
    for s in range(3):
        sel = sn == s
        c = int(sel.sum())
        counts[s] = c
        if c:
            means[s] = float(rs[sel].mean())
    if sum(1 for m in means if m is not None) < 2:
        raise InsufficientObservations(
            f"{mac}: heard by fewer than two sniffers in window"
        )
    return Fingerprint(mac, t_start_us, t_end_us, tuple(means), tuple(counts))


def _softmax_vector(
    rssi: Sequence[Optional[float]], offsets: np.ndarray, beta: float
) -> np.ndarray:
    present = [i for i, v in enumerate(rssi) if v is not None]
    vals = np.array([rssi[i] for i in present], dtype=np.float64)
    # Subtracting the max keeps exp() in range and makes the constant-
    # offset invariance exact in floating point.
    w = np.exp(beta * (vals - vals.max()))
    w /= w.sum()
    return w @ offsets[present]


def direction_vector(
    fp: Fingerprint, geom: SnifferGeometry, beta: float = DEFAULT_BETA
) -> DirectionEstimate:
    """Unit direction vector for a fingerprint.

    Weights each sniffer's centroid offset by softmax(beta * RSSI) over
    the sniffers that heard the device. A perfectly balanced fingerprint
    has no meaningful direction and raises AmbiguousDirection rather
    than inventing one.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    v_raw = _softmax_vector(fp.rssi_dbm, geom.offsets(), beta)
    norm = float(np.hypot(v_raw[0], v_raw[1]))
    if norm < _MIN_RAW_NORM:
        raise AmbiguousDirection(f"{fp.mac}: fingerprint is directionally balanced")
    v = v_raw / norm
    angle = math.degrees(math.atan2(v[1], v[0])) % 360.0
    return DirectionEstimate(
        mac=fp.mac,
        t_start_us=fp.t_start_us,
        t_end_us=fp.t_end_us,
        vector=(float(v[0]), float(v[1])),
        angle_deg=angle,
        confidence=1.0,
    )


def _per_bin_vectors(
    rssi_bins: np.ndarray, offsets: np.ndarray, beta: float
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized softmax direction per bin.

    rssi_bins is (3, n) with NaN where a sniffer has no samples. Returns
    (unit vectors (n, 2), validity mask); bins with fewer than two
    sniffers or a balanced fingerprint are invalid.
    """
    present = ~np.isnan(rssi_bins)
    enough = present.sum(axis=0) >= 2
    with np.errstate(invalid="ignore"):
        col_max = np.max(np.where(present, rssi_bins, -np.inf), axis=0)
        w = np.exp(beta * (rssi_bins - col_max))
    w[~present] = 0.0
    np.nan_to_num(w, copy=False)
    total = w.sum(axis=0)
    total[total == 0] = 1.0
    w /= total
    v = w.T @ offsets  # (n, 2)
    norms = np.hypot(v[:, 0], v[:, 1])
    valid = enough & (norms >= _MIN_RAW_NORM)
    out = np.zeros_like(v)
    nz = norms > 0
    out[nz] = v[nz] / norms[nz, None]
    return out, valid


def estimate_direction(
    capture: CaptureSet,
    mac: str,
    t_start_us: int,
    t_end_us: int,
    geom: SnifferGeometry,
    beta: float = DEFAULT_BETA,
    dispersion_bin_s: int = 60,
) -> DirectionEstimate:
    """Window direction with a dispersion-based confidence.

    The direction comes from the window-mean fingerprint; confidence is
    the circular resultant length of per-bin direction estimates (1.0
    when all bins agree, near 0 for scattered bearings or when too few
    bins allow a per-bin estimate).
    """
    fp = fingerprint(capture, mac, t_start_us, t_end_us)
    est = direction_vector(fp, geom, beta)

    mask = (
        (capture.src_mac == mac_to_int(mac))
        & (capture.ts_us >= t_start_us)
        & (capture.ts_us <= t_end_us)
        & (capture.rssi_dbm != RSSI_NONE)
    )
    ts = capture.ts_us[mask]
    if ts.size:
        width_us = dispersion_bin_s * US_PER_S
        idx = ((ts - t_start_us) // width_us).astype(np.int64)
        n_bins = int(idx.max()) + 1
        rssi_bins = np.full((3, n_bins), np.nan)
        sn = capture.sniffer_id[mask]
        rs = capture.rssi_dbm[mask].astype(np.float64)
        for s in range(3):
            sel = sn == s
            if not sel.any():
                continue
            c = np.bincount(idx[sel], minlength=n_bins)
            t = np.bincount(idx[sel], weights=rs[sel], minlength=n_bins)
            nz = c > 0
            rssi_bins[s, nz] = t[nz] / c[nz]
        vectors, valid = _per_bin_vectors(rssi_bins, geom.offsets(), beta)
        if int(valid.sum()) >= 2:
            resultant = vectors[valid].sum(axis=0)
            confidence = float(np.hypot(*resultant) / valid.sum())
            return DirectionEstimate(
                est.mac, est.t_start_us, est.t_end_us, est.vector, est.angle_deg,
                confidence,
            )
    return est


def cluster_sectors(
    estimates: Sequence[DirectionEstimate], gap_deg: float = DEFAULT_GAP_DEG
) -> list[Sector]:
    """Group direction estimates into angular sectors.

    Estimates are sorted by angle and cut at every circular gap of at
    least gap_deg; each remaining arc becomes a sector. No sector count
    has to be chosen in advance. A single estimate forms its own sector.
    """
    if gap_deg <= 0:
        raise ValueError("gap_deg must be positive")
    if not estimates:
        return []

    order = sorted(estimates, key=lambda e: (e.angle_deg, e.mac))
    angles = [e.angle_deg for e in order]
    n = len(order)

    if n == 1:
        return [Sector("S1", angles[0], 0.0, [order[0].mac])]

    gaps = [(angles[(i + 1) % n] - angles[i]) % 360.0 for i in range(n)]
    cut_after = [i for i in range(n) if gaps[i] >= gap_deg]
    if not cut_after:
        # Everything belongs together; open the arc at the widest gap so
        # the sector still has a defined start.
        cut_after = [max(range(n), key=lambda i: gaps[i])]

    sectors: list[Sector] = []
    start = (cut_after[-1] + 1) % n
    boundaries = cut_after
    i = start
    current: list[DirectionEstimate] = []
    for _ in range(n):
        current.append(order[i])
        if i in boundaries:
            sectors.append(_make_sector(current))
            current = []
        i = (i + 1) % n
    if current:
        sectors.append(_make_sector(current))

    sectors.sort(key=lambda s: s.start_deg)
    for k, s in enumerate(sectors, start=1):
        s.label = f"S{k}"
    return sectors


def _make_sector(members: list[DirectionEstimate]) -> Sector:
    start = members[0].angle_deg
    span = (members[-1].angle_deg - start) % 360.0
    return Sector("S?", start, span, [m.mac for m in members])


def assign_sector(
    angle_deg: float, sectors: Sequence[Sector], gap_deg: float = DEFAULT_GAP_DEG
) -> Optional[str]:
    """Nearest sector label, or None when outside every arc by more than
    half the clustering gap."""
    best = None
    best_d = None
    for s in sectors:
        d = s.distance_to(angle_deg)
        if best_d is None or d < best_d:
            best, best_d = s.label, d
    if best is None or best_d > gap_deg / 2.0:
        return None
    return best


def track_mobile(
    capture: CaptureSet,
    mac: str,
    window_s: int,
    stride_s: int,
    geom: SnifferGeometry,
    sectors: Sequence[Sector],
    beta: float = DEFAULT_BETA,
    gap_deg: float = DEFAULT_GAP_DEG,
) -> list[TrackPoint]:
    """Sliding-window direction track of one device.

    Windows with too few observations or a balanced fingerprint become
    gaps; nothing is interpolated. Each estimate is mapped to the nearest
    sector arc (or none).
    """
    if not window_s >= stride_s >= 1:
        raise ValueError("window_s >= stride_s >= 1 required")

    grain = math.gcd(window_s, stride_s)
    grain_us = grain * US_PER_S
    t0 = capture.t_start_us
    span_us = capture.t_end_us - t0
    n_bins = max(1, math.ceil(span_us / grain_us)) if span_us else 1

    mask = (capture.src_mac == mac_to_int(mac)) & (capture.rssi_dbm != RSSI_NONE)
    ts = capture.ts_us[mask]
    sn = capture.sniffer_id[mask]
    rs = capture.rssi_dbm[mask].astype(np.float64)
    idx = np.minimum((ts - t0) // grain_us, n_bins - 1).astype(np.int64)

    counts = np.zeros((3, n_bins))
    sums = np.zeros((3, n_bins))
    for s in range(3):
        sel = sn == s
        if sel.any():
            counts[s] = np.bincount(idx[sel], minlength=n_bins)
            sums[s] = np.bincount(idx[sel], weights=rs[sel], minlength=n_bins)

    with np.errstate(invalid="ignore", divide="ignore"):
        rssi_bins = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    vectors, valid = _per_bin_vectors(rssi_bins, geom.offsets(), beta)

    # Prefix sums let every window query run in constant time.
    pc = np.concatenate([np.zeros((3, 1)), np.cumsum(counts, axis=1)], axis=1)
    ps = np.concatenate([np.zeros((3, 1)), np.cumsum(sums, axis=1)], axis=1)
    pv = np.concatenate(
        [np.zeros((1, 2)), np.cumsum(np.where(valid[:, None], vectors, 0.0), axis=0)]
    )
    pn = np.concatenate([[0], np.cumsum(valid.astype(np.int64))])

    win_bins = window_s // grain
    stride_bins = stride_s // grain
    offsets = geom.offsets()

    points: list[TrackPoint] = []
    w0 = 0
    while True:
        w1 = min(n_bins, w0 + win_bins)
        t_start = t0 + w0 * grain_us
        t_end = t0 + w1 * grain_us

        wc = pc[:, w1] - pc[:, w0]
        ws = ps[:, w1] - ps[:, w0]
        present = wc > 0
        if int(present.sum()) < 2:
            points.append(TrackPoint(t_start, t_end, None, None, "insufficient"))
        else:
            means: list[Optional[float]] = [
                float(ws[s] / wc[s]) if present[s] else None for s in range(3)
            ]
            fp = Fingerprint(
                mac, t_start, t_end, tuple(means), tuple(int(c) for c in wc)
            )
            try:
                est = direction_vector(fp, geom, beta)
            except AmbiguousDirection:
                points.append(TrackPoint(t_start, t_end, None, None, "ambiguous"))
            else:
                nv = int(pn[w1] - pn[w0])
                if nv >= 2:
                    res = pv[w1] - pv[w0]
                    conf = float(np.hypot(res[0], res[1]) / nv)
                    est = DirectionEstimate(
                        est.mac, est.t_start_us, est.t_end_us, est.vector,
                        est.angle_deg, conf,
                    )
                sector = assign_sector(est.angle_deg, sectors, gap_deg)
                points.append(TrackPoint(t_start, t_end, est, sector))

        if w1 >= n_bins:
            break
        w0 += stride_bins
        if w0 >= n_bins:
            break
    return points

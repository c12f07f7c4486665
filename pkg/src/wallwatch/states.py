"""Operational state, traffic profile and mobility classification.

Works purely on binned per-device traffic. States are decided by two
volume thresholds calibrated from the series itself, with long silences
demoted to 'off' and a majority vote smoothing out single-bin flicker.
The autonomous/interactive split uses the periodicity of the binary
activity sequence against the spread of nonzero bin volumes; mobility
uses the variance of per-bin mean RSSI across sniffers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from wallwatch.capture.model import US_PER_S, TrafficSeries
from wallwatch.errors import UnknownMobility, UnknownProfile, WallwatchError

STATE_OFF = "off"
STATE_IDLE = "idle"
STATE_ACTIVE = "active"
_STATE_NAMES = (STATE_OFF, STATE_IDLE, STATE_ACTIVE)

DEFAULT_OFF_GAP_S = 300
DEFAULT_SMOOTH_WINDOW_S = 60

PROFILE_AUTONOMOUS = "autonomous"
PROFILE_INTERACTIVE = "interactive"
DEFAULT_PERIODICITY_MIN = 0.5
DEFAULT_BURSTINESS_MAX = 2.0
_PERIOD_LAG_MIN_S = 5
_PERIOD_LAG_MAX_S = 600

MOBILITY_STATIC = "static"
MOBILITY_MOBILE = "mobile"
DEFAULT_SIGMA_MAX_DB = 4.0


@dataclass(frozen=True)
class Thresholds:
    """Frame-count thresholds separating off/idle/active bins."""

    t_idle: float
    t_active: float
    off_gap_s: int = DEFAULT_OFF_GAP_S
    smooth_window_s: int = DEFAULT_SMOOTH_WINDOW_S
    degenerate: bool = False

    def __post_init__(self):
        if not self.degenerate:
            if not 0 < self.t_idle <= self.t_active:
                raise ValueError("thresholds must satisfy 0 < t_idle <= t_active")
            if self.off_gap_s < self.smooth_window_s:
                raise ValueError("off_gap_s must be >= smooth_window_s")

    def to_dict(self) -> dict:
        return {
            "t_idle": self.t_idle,
            "t_active": self.t_active,
            "off_gap_s": self.off_gap_s,
            "smooth_window_s": self.smooth_window_s,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class Segment:
    t_start_us: int
    t_end_us: int
    state: str

    def duration_s(self) -> float:
        return (self.t_end_us - self.t_start_us) / US_PER_S


@dataclass
class StateTimeline:
    """Maximal contiguous state segments tiling the observation window."""

    mac: str
    segments: list[Segment]

    @property
    def t_start_us(self) -> int:
        return self.segments[0].t_start_us if self.segments else 0

    @property
    def t_end_us(self) -> int:
        return self.segments[-1].t_end_us if self.segments else 0

    def state_at(self, ts_us: int) -> Optional[str]:
        for seg in self.segments:
            if seg.t_start_us <= ts_us < seg.t_end_us:
                return seg.state
        return None

    def intervals(self, state: str) -> list[tuple[int, int]]:
        return [
            (s.t_start_us, s.t_end_us) for s in self.segments if s.state == state
        ]

    def not_off_intervals(self) -> list[tuple[int, int]]:
        """Merged spans where the device is idle or active."""
        out: list[tuple[int, int]] = []
        for seg in self.segments:
            if seg.state == STATE_OFF:
                continue
            if out and out[-1][1] == seg.t_start_us:
                out[-1] = (out[-1][0], seg.t_end_us)
            else:
                out.append((seg.t_start_us, seg.t_end_us))
        return out

    def check_invariants(self) -> None:
        prev_end = None
        prev_state = None
        for seg in self.segments:
            if seg.t_end_us <= seg.t_start_us:
                raise WallwatchError("empty or inverted segment")
            if prev_end is not None and seg.t_start_us != prev_end:
                raise WallwatchError("segments do not tile the window")
            if seg.state == prev_state:
                raise WallwatchError("adjacent segments share a state")
            prev_end = seg.t_end_us
            prev_state = seg.state

    def to_rows(self) -> list[dict]:
        return [
            {"t_start_us": s.t_start_us, "t_end_us": s.t_end_us, "state": s.state}
            for s in self.segments
        ]


@dataclass(frozen=True)
class ProfileVerdict:
    mac: str
    profile: str
    periodicity_score: float
    burstiness: float

    def to_dict(self) -> dict:
        return {
            "mac": self.mac,
            "profile": self.profile,
            "periodicity_score": round(self.periodicity_score, 4),
            "burstiness": round(self.burstiness, 4),
        }


def calibrate_thresholds(
    series: TrafficSeries,
    off_gap_s: int = DEFAULT_OFF_GAP_S,
    smooth_window_s: int = DEFAULT_SMOOTH_WINDOW_S,
) -> Thresholds:
    """Derive volume thresholds from the series itself.

    t_idle is the 90th percentile of nonzero bins inside the quietest
    contiguous quarter of the window (background-sync level); t_active is
    the 75th percentile of all nonzero bins, floored at twice t_idle.
    An all-zero series yields degenerate thresholds under which the whole
    window classifies as off.
    """
    if series.span_s < 3600:
        raise ValueError("threshold calibration needs at least one hour of data")

    counts = series.counts
    nonzero = counts[counts > 0]
    if nonzero.size == 0:
        return Thresholds(
            t_idle=1.0, t_active=2.0, off_gap_s=0, smooth_window_s=0, degenerate=True
        )

    n = len(counts)
    q = max(1, n // 4)
    window_sums = np.convolve(counts, np.ones(q, dtype=np.int64), mode="valid")
    start = int(np.argmin(window_sums))
    quiet = counts[start : start + q]
    quiet_nz = quiet[quiet > 0]
    if quiet_nz.size:
        t_idle = max(1.0, float(np.percentile(quiet_nz, 90)))
    else:
        t_idle = 1.0
    t_active = max(2.0 * t_idle, float(np.percentile(nonzero, 75)))
    return Thresholds(
        t_idle=t_idle,
        t_active=t_active,
        off_gap_s=off_gap_s,
        smooth_window_s=smooth_window_s,
    )


def _zero_runs_to_off(labels: np.ndarray, counts: np.ndarray, min_bins: int) -> None:
    """Demote zero-count runs of at least min_bins bins to off, in place."""
    if min_bins <= 0:
        labels[counts == 0] = 0
        return
    zero = counts == 0
    if not zero.any():
        return
    padded = np.concatenate(([False], zero, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    starts, ends = edges[0::2], edges[1::2]
    for s, e in zip(starts, ends):
        if e - s >= min_bins:
            labels[s:e] = 0


def _majority_smooth(labels: np.ndarray, window_bins: int) -> np.ndarray:
    """Centered majority vote; ties keep the centre bin's label, then the
    lowest state code."""
    n = len(labels)
    if window_bins <= 1 or n == 0:
        return labels
    if window_bins % 2 == 0:
        window_bins += 1
    half = window_bins // 2

    votes = np.empty((3, n), dtype=np.int32)
    kernel = np.ones(window_bins, dtype=np.int32)
    for state in range(3):
        ind = (labels == state).astype(np.int32)
        votes[state] = np.convolve(ind, kernel, mode="same")

    best = votes.max(axis=0)
    winner = votes.argmax(axis=0).astype(np.int8)  # lowest code on ties
    centre_is_max = votes[labels, np.arange(n)] == best
    return np.where(centre_is_max, labels, winner).astype(np.int8)


def raw_bin_labels(counts: np.ndarray, th: Thresholds, bin_width_s: int) -> np.ndarray:
    """Per-bin labels before smoothing: 0=off, 1=idle, 2=active."""
    labels = np.ones(len(counts), dtype=np.int8)
    labels[counts >= th.t_active] = 2
    if th.off_gap_s <= 0:
        labels[counts == 0] = 0
    else:
        _zero_runs_to_off(labels, counts, max(1, math.ceil(th.off_gap_s / bin_width_s)))
    return labels


def classify_states(series: TrafficSeries, th: Thresholds) -> StateTimeline:
    """Label every bin and merge into maximal segments.

    Zero bins are provisionally idle and only become off as part of a
    zero run of at least off_gap_s; a majority vote over smooth_window_s
    then removes single-bin flicker.
    """
    counts = series.counts
    labels = raw_bin_labels(counts, th, series.bin_width_s)
    window_bins = max(1, int(round(th.smooth_window_s / series.bin_width_s)))
    labels = _majority_smooth(labels, window_bins)

    segments: list[Segment] = []
    n = len(labels)
    if n:
        change = np.flatnonzero(np.diff(labels)) + 1
        starts = np.concatenate(([0], change))
        ends = np.concatenate((change, [n]))
        bw_us = series.bin_width_s * US_PER_S
        for s, e in zip(starts, ends):
            segments.append(
                Segment(
                    t_start_us=series.t0_us + int(s) * bw_us,
                    t_end_us=series.t0_us + int(e) * bw_us,
                    state=_STATE_NAMES[labels[s]],
                )
            )
    timeline = StateTimeline(mac=series.mac, segments=segments)
    return timeline


def classify_profile(
    series: TrafficSeries,
    periodicity_min: float = DEFAULT_PERIODICITY_MIN,
    burstiness_max: float = DEFAULT_BURSTINESS_MAX,
) -> ProfileVerdict:
    """Autonomous vs. interactive from periodicity and burstiness.

    periodicity_score is the peak normalized autocorrelation of the
    binary activity sequence over lags of 5 s to 600 s; burstiness is the
    coefficient of variation of nonzero bin counts. Continuous periodic
    background traffic scores high/low, user-driven spike traffic scores
    low/high.
    """
    if series.span_s < 6 * 3600:
        raise ValueError("profile classification needs at least six hours of data")
    counts = series.counts
    nonzero = counts[counts > 0]
    if nonzero.size < 2:
        raise UnknownProfile(f"{series.mac}: fewer than two nonzero bins")

    bw = series.bin_width_s
    lag_min = max(1, math.ceil(_PERIOD_LAG_MIN_S / bw))
    lag_max = min(len(counts) - 1, _PERIOD_LAG_MAX_S // bw)
    if lag_max < lag_min:
        raise UnknownProfile(f"{series.mac}: bin width too coarse for periodicity")

    b = (counts > 0).astype(np.float64)
    n = len(b)
    nfft = 1 << int(math.ceil(math.log2(2 * n)))
    spectrum = np.fft.rfft(b, nfft)
    autocorr = np.fft.irfft(spectrum * np.conj(spectrum), nfft)[: lag_max + 1]
    prefix = np.cumsum(b)
    lags = np.arange(lag_min, lag_max + 1)
    denom = prefix[n - lags]  # ones count in the overlapping prefix
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(denom > 0, autocorr[lag_min : lag_max + 1] / denom, 0.0)
    periodicity = float(np.clip(r.max(), 0.0, 1.0)) if r.size else 0.0

    mean = float(nonzero.mean())
    burstiness = float(nonzero.std()) / mean if mean > 0 else 0.0

    autonomous = periodicity >= periodicity_min and burstiness < burstiness_max
    return ProfileVerdict(
        mac=series.mac,
        profile=PROFILE_AUTONOMOUS if autonomous else PROFILE_INTERACTIVE,
        periodicity_score=periodicity,
        burstiness=burstiness,
    )


def classify_mobility(
    series: TrafficSeries,
    sigma_max_db: float = DEFAULT_SIGMA_MAX_DB,
    window_s: int = 600,
    stride_s: int = 300,
    min_window_samples: int = 5,
) -> str:
    """Static vs. mobile from RSSI variability.

    For each sniffer, the standard deviation of per-bin mean RSSI is
    computed over rolling windows; the device is mobile when the median
    across windows of the max-across-sniffers deviation exceeds
    sigma_max_db. Bins without frames carry no RSSI, so off periods drop
    out naturally.
    """
    valid = ~np.isnan(series.rssi_mean)
    if int((valid.sum(axis=0) >= 2).sum()) < 30:
        raise UnknownMobility(
            f"{series.mac}: fewer than 30 bins with RSSI on two or more sniffers"
        )

    bw = series.bin_width_s
    win = max(1, window_s // bw)
    stride = max(1, stride_s // bw)
    n = series.n_bins
    rssi = series.rssi_mean.astype(np.float64)

    window_maxima: list[float] = []
    starts = range(0, max(1, n - win + 1), stride)
    for w0 in starts:
        w1 = min(n, w0 + win)
        best = None
        for s in range(series.n_sniffers):
            vals = rssi[s, w0:w1]
            vals = vals[~np.isnan(vals)]
            if vals.size >= min_window_samples:
                sd = float(vals.std(ddof=1))
                if best is None or sd > best:
                    best = sd
        if best is not None:
            window_maxima.append(best)

    if not window_maxima:
        raise UnknownMobility(f"{series.mac}: no window had enough RSSI samples")
    median = float(np.median(window_maxima))
    return MOBILITY_MOBILE if median > sigma_max_db else MOBILITY_STATIC

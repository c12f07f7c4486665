"""Household activity synthesis.

Combines state timelines, direction tracks and the device inventory into
semantic events: presence and absence, guest visits, sleep and waking,
work and leisure sessions, and weekly routine aggregation. Rules are
deliberately plain interval algebra; every emitted event references the
timeline segments or track windows it was derived from.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from wallwatch.capture.model import US_PER_S
from wallwatch.errors import (
    CannotInferPresence,
    InsufficientHistory,
    NoSleepInference,
)
from wallwatch.identify.inventory import DeviceProfile
from wallwatch.locate import TrackPoint
from wallwatch.states import (
    STATE_ACTIVE,
    STATE_OFF,
    PROFILE_INTERACTIVE,
    StateTimeline,
)

US_PER_DAY = 86_400 * US_PER_S

EVENT_PRESENT = "present"
EVENT_ABSENT = "absent"
EVENT_SLEEP = "sleep"
EVENT_WAKE = "wake"
EVENT_GUEST_ARRIVE = "guest_arrive"
EVENT_GUEST_DEPART = "guest_depart"
EVENT_WORK = "work_session"
EVENT_LEISURE = "leisure_session"
EVENT_TRANSITION = "transition"

DEFAULT_ABSENCE_MIN_S = 1800
DEFAULT_DEPART_GAP_S = 3600
DEFAULT_WARMUP_S = 72 * 3600
DEFAULT_SLEEP_MIN_S = 3 * 3600
DEFAULT_SESSION_MIN_S = 1800
DEFAULT_TRANSITION_MIN_S = 120
# Night window for sleep inference, as seconds after local midnight of
# the evening day (21:00 through 11:00 the next morning).
DEFAULT_NIGHT_START_S = 21 * 3600
DEFAULT_NIGHT_END_S = (24 + 11) * 3600
# A burst this short, flanked by long quiet, is a night waking rather
# than the end of sleep.
BRIEF_WAKE_MAX_S = 900
FLANK_QUIET_MIN_S = 1800
# When the device is off for most of the night the subject was likely
# away and sleep must not be claimed.
ABSENT_NIGHT_OFF_FRACTION = 0.8

RECURRING_ABSENCE_MAX_PRESENCE = 0.25
HOUR_PRESENT_MIN_S = 1800

Interval = tuple[int, int]


@dataclass
class ActivityEvent:
    kind: str
    subject: str
    t_start_us: int
    t_end_us: int
    evidence: list[str] = field(default_factory=list)
    confidence: str = "high"

    def __post_init__(self):
        if self.t_end_us < self.t_start_us:
            raise ValueError("event interval is inverted")
        if not self.evidence:
            raise ValueError("every event needs at least one evidence reference")

    @property
    def is_point(self) -> bool:
        return self.t_end_us == self.t_start_us

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "subject": self.subject,
            "t_start_us": self.t_start_us,
            "t_end_us": self.t_end_us,
            "t_start_iso": iso(self.t_start_us),
            "t_end_iso": iso(self.t_end_us),
            "evidence": list(self.evidence),
            "confidence": self.confidence,
        }


@dataclass
class PresenceTimeline:
    subject: str
    t_start_us: int
    t_end_us: int
    present: list[Interval]
    absent: list[Interval]

    def present_overlap_us(self, t0: int, t1: int) -> int:
        total = 0
        for a, b in self.present:
            total += max(0, min(b, t1) - max(a, t0))
        return total


@dataclass
class WeeklySchedule:
    subject: str
    fractions: np.ndarray  # (7, 24) presence probability, NaN when unobserved
    observations: np.ndarray  # (7, 24) int
    recurring_absence: list[tuple[int, int]]  # (weekday, hour)

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "fractions": [
                [None if np.isnan(v) else round(float(v), 4) for v in row]
                for row in self.fractions
            ],
            "observations": self.observations.astype(int).tolist(),
            "recurring_absence": [list(x) for x in self.recurring_absence],
        }


def iso(ts_us: int) -> str:
    return (
        datetime.fromtimestamp(ts_us / US_PER_S, tz=timezone.utc)
        .strftime("%Y-%m-%dT%H:%M:%SZ")
    )


def merge_intervals(intervals: Sequence[Interval]) -> list[Interval]:
    out: list[Interval] = []
    for a, b in sorted(i for i in intervals if i[1] > i[0]):
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def complement_intervals(intervals: Sequence[Interval], t0: int, t1: int) -> list[Interval]:
    out: list[Interval] = []
    cursor = t0
    for a, b in intervals:
        a, b = max(a, t0), min(b, t1)
        if b <= a:
            continue
        if a > cursor:
            out.append((cursor, a))
        cursor = max(cursor, b)
    if cursor < t1:
        out.append((cursor, t1))
    return out


def detect_presence(
    subject: str,
    subject_timeline: Optional[StateTimeline],
    interactive_timelines: Sequence[StateTimeline],
    t_start_us: int,
    t_end_us: int,
    absence_min_s: int = DEFAULT_ABSENCE_MIN_S,
) -> PresenceTimeline:
    """Presence from the subject's mobile device plus interactive activity.

    The subject counts as present while their mobile device is not off,
    or any interactive device shows an active segment. Gaps shorter than
    absence_min_s are bridged; longer gaps become absence intervals.
    """
    if subject_timeline is None and not interactive_timelines:
        raise CannotInferPresence(
            f"{subject}: no interactive device to infer presence from"
        )

    evidence_intervals: list[Interval] = []
    if subject_timeline is not None:
        evidence_intervals.extend(subject_timeline.not_off_intervals())
    for tl in interactive_timelines:
        evidence_intervals.extend(tl.intervals(STATE_ACTIVE))

    merged = merge_intervals(
        [(max(a, t_start_us), min(b, t_end_us)) for a, b in evidence_intervals]
    )

    absence_min_us = absence_min_s * US_PER_S
    present: list[Interval] = []
    for a, b in merged:
        if present and a - present[-1][1] < absence_min_us:
            present[-1] = (present[-1][0], b)
        else:
            present.append((a, b))
    # Short lead-in and tail gaps attach to the adjacent presence.
    if present:
        if present[0][0] - t_start_us < absence_min_us:
            present[0] = (t_start_us, present[0][1])
        if t_end_us - present[-1][1] < absence_min_us:
            present[-1] = (present[-1][0], t_end_us)

    absent = complement_intervals(present, t_start_us, t_end_us)
    return PresenceTimeline(subject, t_start_us, t_end_us, present, absent)


def detect_guests(
    profiles: Sequence[DeviceProfile],
    warmup_end_us: int,
    capture_end_us: int,
    depart_gap_s: int = DEFAULT_DEPART_GAP_S,
) -> list[ActivityEvent]:
    """Guest arrivals and departures from non-baseline interactive MACs.

    A MAC first seen after the warm-up window with an interactive traffic
    profile is a guest device; it departs when it stays silent for at
    least depart_gap_s with no reappearance before the capture ends.
    Autonomous newcomers (a newly installed appliance) are not guests.
    """
    events: list[ActivityEvent] = []
    guests = [
        p
        for p in profiles
        if p.profile == PROFILE_INTERACTIVE and p.first_seen_us > warmup_end_us
    ]
    guests.sort(key=lambda p: (p.first_seen_us, p.mac))
    for i, p in enumerate(guests, start=1):
        alias = f"guest-{i}"
        events.append(
            ActivityEvent(
                EVENT_GUEST_ARRIVE,
                alias,
                p.first_seen_us,
                p.first_seen_us,
                evidence=[f"profile:{p.mac}"],
            )
        )
        if capture_end_us - p.last_seen_us >= depart_gap_s * US_PER_S:
            events.append(
                ActivityEvent(
                    EVENT_GUEST_DEPART,
                    alias,
                    p.last_seen_us,
                    p.last_seen_us,
                    evidence=[f"profile:{p.mac}"],
                )
            )
    events.sort(key=lambda e: (e.t_start_us, e.kind, e.subject))
    return events


def guest_alias_map(
    profiles: Sequence[DeviceProfile], warmup_end_us: int
) -> dict[str, str]:
    """alias -> mac for guests, in arrival order."""
    guests = [
        p
        for p in profiles
        if p.profile == PROFILE_INTERACTIVE and p.first_seen_us > warmup_end_us
    ]
    guests.sort(key=lambda p: (p.first_seen_us, p.mac))
    return {f"guest-{i}": p.mac for i, p in enumerate(guests, start=1)}


def infer_sleep(
    timeline: StateTimeline,
    night_start_us: int,
    night_end_us: int,
    sleep_min_s: int = DEFAULT_SLEEP_MIN_S,
    brief_wake_max_s: int = BRIEF_WAKE_MAX_S,
    flank_quiet_min_s: int = FLANK_QUIET_MIN_S,
) -> tuple[list[Interval], list[int]]:
    """Sleep intervals and wake instants within one night window.

    Sleep is a long quiet stretch (device off or idle). A short active
    burst flanked by long quiet on both sides is a night waking: it
    splits the sleep interval and yields a wake event but does not end
    the night's sleep. The first active segment after the sleep block is
    the final wake. Raises NoSleepInference when the device was off for
    most of the window (subject likely away, not asleep).
    """
    t0 = max(night_start_us, timeline.t_start_us)
    t1 = min(night_end_us, timeline.t_end_us)
    if t1 <= t0:
        raise NoSleepInference("night window outside the observation window")

    window_us = t1 - t0
    off_us = sum(
        max(0, min(b, t1) - max(a, t0)) for a, b in timeline.intervals(STATE_OFF)
    )
    if off_us >= ABSENT_NIGHT_OFF_FRACTION * window_us:
        raise NoSleepInference("device absent for most of the night")

    active = [
        (max(a, t0), min(b, t1))
        for a, b in timeline.intervals(STATE_ACTIVE)
        if min(b, t1) > max(a, t0)
    ]
    quiet = complement_intervals(active, t0, t1)
    if not quiet:
        return [], []

    brief_us = brief_wake_max_s * US_PER_S
    flank_us = flank_quiet_min_s * US_PER_S

    # Chain quiet intervals across brief, well-flanked active bursts.
    blocks: list[list[Interval]] = []
    wakes_in_block: list[list[int]] = []
    cur = [quiet[0]]
    cur_wakes: list[int] = []
    for nxt in quiet[1:]:
        prev = cur[-1]
        burst = (prev[1], nxt[0])
        burst_len = burst[1] - burst[0]
        if (
            burst_len <= brief_us
            and prev[1] - prev[0] >= flank_us
            and nxt[1] - nxt[0] >= flank_us
        ):
            cur_wakes.append(burst[0])
            cur.append(nxt)
        else:
            blocks.append(cur)
            wakes_in_block.append(cur_wakes)
            cur = [nxt]
            cur_wakes = []
    blocks.append(cur)
    wakes_in_block.append(cur_wakes)

    sleep_min_us = sleep_min_s * US_PER_S
    sleeps: list[Interval] = []
    wakes: list[int] = []
    for block, block_wakes in zip(blocks, wakes_in_block):
        span = block[-1][1] - block[0][0]
        if span < sleep_min_us:
            continue
        sleeps.extend(block)
        wakes.extend(block_wakes)
        block_end = block[-1][1]
        following = [a for a, b in active if a >= block_end]
        if following:
            wakes.append(min(following))
    return sorted(sleeps), sorted(wakes)


def _modal_sector(track: Sequence[TrackPoint], t0: int, t1: int) -> Optional[str]:
    hits = Counter()
    for p in track:
        if p.sector is None:
            continue
        if min(p.t_end_us, t1) > max(p.t_start_us, t0):
            hits[p.sector] += 1
    if not hits:
        return None
    return hits.most_common(1)[0][0]


def detect_transitions(
    subject: str,
    track: Sequence[TrackPoint],
    transition_min_s: int = DEFAULT_TRANSITION_MIN_S,
) -> list[ActivityEvent]:
    """Sector changes sustained for at least transition_min_s."""
    events: list[ActivityEvent] = []
    min_us = transition_min_s * US_PER_S
    runs: list[tuple[str, int, int, list[int]]] = []
    for i, p in enumerate(track):
        if p.sector is None:
            continue
        if runs and runs[-1][0] == p.sector and p.t_start_us <= runs[-1][2]:
            sec, s, _, idxs = runs[-1]
            runs[-1] = (sec, s, p.t_end_us, idxs + [i])
        else:
            runs.append((p.sector, p.t_start_us, p.t_end_us, [i]))
    prev_sector = None
    for sector, s, e, idxs in runs:
        if e - s >= min_us and sector != prev_sector:
            if prev_sector is not None:
                events.append(
                    ActivityEvent(
                        EVENT_TRANSITION,
                        subject,
                        s,
                        s,
                        evidence=[f"track:{subject}#{i}" for i in idxs[:3]],
                    )
                )
            prev_sector = sector
    return events


def synthesize_day(
    subject: str,
    day_start_us: int,
    day_end_us: int,
    presence: PresenceTimeline,
    timelines: dict[str, StateTimeline],
    roles: dict[str, str],
    device_sectors: Optional[dict[str, str]] = None,
    track: Optional[Sequence[TrackPoint]] = None,
    sleeps: Optional[list[Interval]] = None,
    wakes: Optional[list[int]] = None,
    session_min_s: int = DEFAULT_SESSION_MIN_S,
    transition_min_s: int = DEFAULT_TRANSITION_MIN_S,
) -> list[ActivityEvent]:
    """Rule-based event synthesis for one day.

    roles maps 'laptop', 'tv', 'console' to MACs when such devices were
    identified. Work sessions need the laptop active for at least 30
    minutes; when a direction track is available the phone must sit in
    the laptop's sector for full confidence, otherwise the event is
    emitted with reduced confidence. Leisure sessions are long TV or
    console activity after the day's work ends.
    """
    events: list[ActivityEvent] = []
    min_us = session_min_s * US_PER_S
    device_sectors = device_sectors or {}

    for a, b in presence.absent:
        a, b = max(a, day_start_us), min(b, day_end_us)
        if b > a:
            events.append(
                ActivityEvent(
                    EVENT_ABSENT, subject, a, b, evidence=[f"presence:{subject}"]
                )
            )

    last_work_end = None
    laptop = roles.get("laptop")
    if laptop and laptop in timelines:
        laptop_sector = device_sectors.get(laptop)
        for i, seg in enumerate(timelines[laptop].segments):
            if seg.state != STATE_ACTIVE:
                continue
            a = max(seg.t_start_us, day_start_us)
            b = min(seg.t_end_us, day_end_us)
            if b - a < min_us:
                continue
            confidence = "reduced"
            evidence = [f"state:{laptop}#{i}"]
            if track and laptop_sector:
                phone_sector = _modal_sector(track, a, b)
                if phone_sector == laptop_sector:
                    confidence = "high"
                    evidence.append(f"sector:{laptop}={laptop_sector}")
            events.append(
                ActivityEvent(EVENT_WORK, subject, a, b, evidence, confidence)
            )
            last_work_end = b if last_work_end is None else max(last_work_end, b)

    for role in ("tv", "console"):
        mac = roles.get(role)
        if not mac or mac not in timelines:
            continue
        for i, seg in enumerate(timelines[mac].segments):
            if seg.state != STATE_ACTIVE:
                continue
            a = max(seg.t_start_us, day_start_us)
            b = min(seg.t_end_us, day_end_us)
            if b - a < min_us:
                continue
            if last_work_end is not None and a < last_work_end:
                continue
            events.append(
                ActivityEvent(
                    EVENT_LEISURE, subject, a, b, evidence=[f"state:{mac}#{i}"]
                )
            )

    if track:
        events.extend(
            e
            for e in detect_transitions(subject, track, transition_min_s)
            if day_start_us <= e.t_start_us < day_end_us
        )

    for a, b in sleeps or []:
        events.append(
            ActivityEvent(EVENT_SLEEP, subject, a, b, evidence=[f"sleep:{subject}"])
        )
    for w in wakes or []:
        events.append(
            ActivityEvent(EVENT_WAKE, subject, w, w, evidence=[f"sleep:{subject}"])
        )

    events.sort(key=lambda e: (e.t_start_us, e.t_end_us, e.kind))
    return events


def weekly_schedule(
    presence: PresenceTimeline,
    day_anchor_us: int,
    recurring_max_presence: float = RECURRING_ABSENCE_MAX_PRESENCE,
) -> WeeklySchedule:
    """Hour-of-week presence fractions over all observed days.

    day_anchor_us must be a local midnight at or before the window start.
    An hour counts as present when the subject was present for at least
    half of it. Recurring absence needs presence at or below the cutoff
    with two or more observations of that weekday hour.
    """
    span_days = (presence.t_end_us - day_anchor_us) // US_PER_DAY
    if span_days < 7:
        raise InsufficientHistory(
            f"weekly aggregation needs at least 7 observed days, got {span_days}"
        )

    weekday0 = datetime.fromtimestamp(
        day_anchor_us / US_PER_S, tz=timezone.utc
    ).weekday()

    present_counts = np.zeros((7, 24), dtype=np.int64)
    obs_counts = np.zeros((7, 24), dtype=np.int64)
    hour_us = 3600 * US_PER_S
    present_min_us = HOUR_PRESENT_MIN_S * US_PER_S

    for d in range(int(span_days)):
        day_t0 = day_anchor_us + d * US_PER_DAY
        if day_t0 < presence.t_start_us - US_PER_DAY:
            continue
        weekday = (weekday0 + d) % 7
        for h in range(24):
            h0 = day_t0 + h * hour_us
            h1 = h0 + hour_us
            if h1 <= presence.t_start_us or h0 >= presence.t_end_us:
                continue
            obs_counts[weekday, h] += 1
            if presence.present_overlap_us(h0, h1) >= present_min_us:
                present_counts[weekday, h] += 1

    with np.errstate(invalid="ignore", divide="ignore"):
        fractions = np.where(
            obs_counts > 0, present_counts / np.maximum(obs_counts, 1), np.nan
        )

    recurring = [
        (int(w), int(h))
        for w in range(7)
        for h in range(24)
        if obs_counts[w, h] >= 2 and fractions[w, h] <= recurring_max_presence
    ]
    return WeeklySchedule(presence.subject, fractions, obs_counts, recurring)

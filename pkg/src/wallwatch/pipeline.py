"""End-to-end analysis orchestration: identify, states, locate, har.

Stages run in order, each consuming the previous stage's products. Any
stage can be disabled; downstream stages then degrade (activity
synthesis without direction data emits reduced-confidence events).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from typing import Optional

import numpy as np

from wallwatch import har as har_mod
from wallwatch.capture.model import RSSI_NONE, US_PER_S, CaptureSet, mac_to_int
from wallwatch.capture.ops import bin_traffic
from wallwatch.errors import (
    AmbiguousDirection,
    CannotInferPresence,
    ConfigError,
    InsufficientHistory,
    InsufficientObservations,
    NoSleepInference,
    UnknownMobility,
    UnknownProfile,
)
from wallwatch.har import (
    ActivityEvent,
    PresenceTimeline,
    WeeklySchedule,
    detect_guests,
    detect_presence,
    guest_alias_map,
    infer_sleep,
    synthesize_day,
    weekly_schedule,
)
from wallwatch.identify.inventory import (
    DeviceProfile,
    SOURCE_TRAFFIC,
    build_inventory,
)
from wallwatch.identify.leaks import (
    DEFAULT_SETUP_PATTERNS,
    LeakEvent,
    extract_setup_leaks,
    load_setup_patterns,
)
from wallwatch.identify.oui import OuiRegistry, load_oui_registry
from wallwatch.locate import (
    DirectionEstimate,
    Sector,
    SnifferGeometry,
    TrackPoint,
    cluster_sectors,
    estimate_direction,
    track_mobile,
)
from wallwatch.states import (
    PROFILE_INTERACTIVE,
    ProfileVerdict,
    StateTimeline,
    Thresholds,
    calibrate_thresholds,
    classify_mobility,
    classify_profile,
    classify_states,
)

SCHEMA_VERSION = 1
ALL_STAGES = ("identify", "states", "locate", "har")

US_PER_DAY = 86_400 * US_PER_S


@dataclass
class AnalysisConfig:
    """Everything the pipeline needs besides the capture itself."""

    geometry: Optional[SnifferGeometry] = None
    oui_registry_path: Optional[str] = None
    setup_patterns_path: Optional[str] = None
    subjects: dict[str, str] = field(default_factory=dict)  # alias -> mac
    roles: dict[str, str] = field(default_factory=dict)  # role -> mac override
    stages: tuple[str, ...] = ALL_STAGES

    bin_width_s: int = 1
    min_frames: int = 10
    off_gap_s: int = 300
    smooth_window_s: int = 60
    periodicity_min: float = 0.5
    burstiness_max: float = 2.0
    sigma_max_db: float = 4.0
    beta: float = 0.5
    gap_deg: float = 45.0
    exclude_rssi_above_dbm: float = -40.0
    track_window_s: int = 300
    track_stride_s: int = 60
    absence_min_s: int = 1800
    depart_gap_s: int = 3600
    warmup_s: int = 259200
    sleep_min_s: int = 10800
    session_min_s: int = 1800
    transition_min_s: int = 120
    night_start_s: int = 75600  # 21:00 local
    night_end_s: int = 126000  # 11:00 next day
    max_skew_us: int = 500000

    def validate(self) -> None:
        bad = set(self.stages) - set(ALL_STAGES)
        if bad:
            raise ConfigError(f"unknown stages: {sorted(bad)}")
        if "locate" in self.stages and self.geometry is None:
            raise ConfigError("locate stage requested but no sniffer geometry given")
        if self.bin_width_s < 1:
            raise ConfigError("bin_width_s must be >= 1")
        if not 0 < self.periodicity_min <= 1:
            raise ConfigError("periodicity_min must be in (0, 1]")
        if self.track_window_s < self.track_stride_s:
            raise ConfigError("track_window_s must be >= track_stride_s")

    def to_dict(self) -> dict:
        return {
            "geometry": (
                [list(p) for p in self.geometry.positions] if self.geometry else None
            ),
            "oui_registry_path": self.oui_registry_path,
            "setup_patterns_path": self.setup_patterns_path,
            "subjects": dict(self.subjects),
            "roles": dict(self.roles),
            "stages": list(self.stages),
            "constants": {
                k: getattr(self, k)
                for k in (
                    "bin_width_s", "min_frames", "off_gap_s", "smooth_window_s",
                    "periodicity_min", "burstiness_max", "sigma_max_db", "beta",
                    "gap_deg", "exclude_rssi_above_dbm", "track_window_s",
                    "track_stride_s", "absence_min_s", "depart_gap_s", "warmup_s",
                    "sleep_min_s", "session_min_s", "transition_min_s",
                    "night_start_s", "night_end_s", "max_skew_us",
                )
            },
        }


@dataclass
class AnalysisResult:
    config: AnalysisConfig
    t_start_us: int
    t_end_us: int
    stages: dict[str, str] = field(default_factory=dict)
    parse_reports: list[dict] = field(default_factory=list)
    merge_report: Optional[dict] = None
    inventory: list[DeviceProfile] = field(default_factory=list)
    leaks: list[LeakEvent] = field(default_factory=list)
    thresholds: dict[str, Thresholds] = field(default_factory=dict)
    timelines: dict[str, StateTimeline] = field(default_factory=dict)
    verdicts: dict[str, ProfileVerdict] = field(default_factory=dict)
    stage_notes: dict[str, list[str]] = field(default_factory=dict)
    directions: dict[str, DirectionEstimate] = field(default_factory=dict)
    excluded_in_room: list[str] = field(default_factory=list)
    sectors: list[Sector] = field(default_factory=list)
    tracks: dict[str, list[TrackPoint]] = field(default_factory=dict)
    presence: dict[str, PresenceTimeline] = field(default_factory=dict)
    events: list[ActivityEvent] = field(default_factory=list)
    weekly: dict[str, WeeklySchedule] = field(default_factory=dict)
    evidence: dict[str, str] = field(default_factory=dict)
    timings_s: dict[str, float] = field(default_factory=dict)

    def note(self, stage: str, message: str) -> None:
        self.stage_notes.setdefault(stage, []).append(message)

    def profile_for(self, mac: str) -> Optional[DeviceProfile]:
        for p in self.inventory:
            if p.mac == mac:
                return p
        return None

    def to_report_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "generated_by": "wallwatch",
            "config": self.config.to_dict(),
            "window": {
                "t_start_us": self.t_start_us,
                "t_end_us": self.t_end_us,
                "t_start_iso": har_mod.iso(self.t_start_us),
                "t_end_iso": har_mod.iso(self.t_end_us),
            },
            "stages": dict(self.stages),
            "stage_notes": {k: list(v) for k, v in self.stage_notes.items()},
            "parse": list(self.parse_reports),
            "merge": self.merge_report,
            "inventory": [p.to_dict() for p in self.inventory],
            "leaks": [
                {
                    "ts_us": e.ts_us,
                    "mac": e.mac,
                    "kind": e.kind.value,
                    "value": e.value,
                }
                for e in self.leaks
            ],
            "thresholds": {m: t.to_dict() for m, t in self.thresholds.items()},
            "timelines": {m: t.to_rows() for m, t in self.timelines.items()},
            "profiles": {m: v.to_dict() for m, v in self.verdicts.items()},
            "directions": {m: e.to_dict() for m, e in self.directions.items()},
            "excluded_in_room": list(self.excluded_in_room),
            "sectors": [s.to_dict() for s in self.sectors],
            "tracks": {
                subj: [
                    {
                        "t_start_us": p.t_start_us,
                        "t_end_us": p.t_end_us,
                        "angle_deg": (
                            round(p.estimate.angle_deg, 3) if p.estimate else None
                        ),
                        "confidence": (
                            round(p.estimate.confidence, 4) if p.estimate else None
                        ),
                        "sector": p.sector,
                        "gap": p.reason,
                    }
                    for p in points
                ]
                for subj, points in self.tracks.items()
            },
            "presence": {
                subj: {
                    "present": [list(i) for i in p.present],
                    "absent": [list(i) for i in p.absent],
                }
                for subj, p in self.presence.items()
            },
            "events": [e.to_dict() for e in self.events],
            "weekly": {s: w.to_dict() for s, w in self.weekly.items()},
            "timings_s": {k: round(v, 3) for k, v in self.timings_s.items()},
        }


def load_default_registry() -> OuiRegistry:
    text = resources.files("wallwatch.data").joinpath("oui.txt").read_text("utf-8")
    return load_oui_registry(text)


def load_default_patterns() -> list[str]:
    text = (
        resources.files("wallwatch.data")
        .joinpath("setup_patterns.txt")
        .read_text("utf-8")
    )
    return load_setup_patterns(text)


def infer_roles(profiles: list[DeviceProfile]) -> dict[str, str]:
    """Map laptop/tv/console roles from identity strings.

    A casual lookup: vendor and model names carry enough signal ('Intel'
    means a computer, 'TV' a television, 'Nintendo' a console).
    """
    roles: dict[str, str] = {}
    for p in profiles:
        text = " ".join(
            filter(None, [p.identity.name, p.identity.kind])
        ).lower()
        if "tv" in text and "tv" not in roles:
            roles["tv"] = p.mac
        elif any(k in text for k in ("nintendo", "playstation", "xbox")) and (
            "console" not in roles
        ):
            roles["console"] = p.mac
        elif any(k in text for k in ("intel", "laptop", "notebook")) and (
            "laptop" not in roles
        ):
            roles["laptop"] = p.mac
    return roles


def _stage_identify(cap: CaptureSet, cfg: AnalysisConfig, res: AnalysisResult):
    if cfg.oui_registry_path:
        with open(cfg.oui_registry_path, "r", encoding="utf-8") as fh:
            registry = load_oui_registry(fh)
    else:
        registry = load_default_registry()
    if cfg.setup_patterns_path:
        with open(cfg.setup_patterns_path, "r", encoding="utf-8") as fh:
            patterns = load_setup_patterns(fh)
    else:
        patterns = load_default_patterns()

    res.leaks = extract_setup_leaks(cap, patterns)
    res.inventory = build_inventory(
        cap, registry, patterns, cfg.min_frames, leaks=res.leaks
    )
    for w in registry.warnings:
        res.note("identify", f"registry: {w}")
    for p in res.inventory:
        res.evidence[f"profile:{p.mac}"] = f"inventory profile of {p.mac}"


def _stage_states(cap: CaptureSet, cfg: AnalysisConfig, res: AnalysisResult):
    for prof in res.inventory:
        series = bin_traffic(cap, prof.mac, cfg.bin_width_s)
        try:
            th = calibrate_thresholds(series, cfg.off_gap_s, cfg.smooth_window_s)
        except ValueError as exc:
            res.note("states", f"{prof.mac}: {exc}")
            continue
        res.thresholds[prof.mac] = th
        timeline = classify_states(series, th)
        res.timelines[prof.mac] = timeline
        for i in range(len(timeline.segments)):
            res.evidence[f"state:{prof.mac}#{i}"] = (
                f"state segment {i} of {prof.mac}"
            )

        try:
            verdict = classify_profile(
                series, cfg.periodicity_min, cfg.burstiness_max
            )
            res.verdicts[prof.mac] = verdict
            prof.profile = verdict.profile
        except (UnknownProfile, ValueError) as exc:
            res.note("states", f"{prof.mac}: profile: {exc}")

        try:
            prof.mobility = classify_mobility(series, cfg.sigma_max_db)
        except UnknownMobility as exc:
            res.note("states", f"{prof.mac}: mobility: {exc}")

        # Devices identified only by their traffic (randomized or unknown
        # MACs) owe that knowledge to this stage.
        if prof.profile and prof.identity.kind in ("randomized", "unknown"):
            prof.sources.add(SOURCE_TRAFFIC)


def _stage_locate(cap: CaptureSet, cfg: AnalysisConfig, res: AnalysisResult):
    geom = cfg.geometry
    assert geom is not None
    t0, t1 = cap.t_start_us, cap.t_end_us

    candidates = [
        p
        for p in res.inventory
        if p.mobility == "static" or (p.mobility is None and p.profile == "autonomous")
    ]
    estimates = []
    for prof in candidates:
        try:
            est = estimate_direction(cap, prof.mac, t0, t1, geom, cfg.beta)
        except (InsufficientObservations, AmbiguousDirection) as exc:
            res.note("locate", f"{prof.mac}: {exc}")
            continue
        # Devices effectively inside the monitoring room swamp the sector
        # map; their strongest mean RSSI gives them away.
        strongest = _max_mean_rssi(cap, prof.mac)
        if strongest is not None and strongest > cfg.exclude_rssi_above_dbm:
            res.excluded_in_room.append(prof.mac)
            res.note(
                "locate",
                f"{prof.mac}: excluded from sector map "
                f"(mean RSSI {strongest:.1f} dBm, likely same room)",
            )
            continue
        res.directions[prof.mac] = est
        estimates.append(est)

    res.sectors = cluster_sectors(estimates, cfg.gap_deg)
    for s in res.sectors:
        for mac in s.members:
            res.evidence[f"sector:{mac}={s.label}"] = (
                f"{mac} assigned to sector {s.label}"
            )


def _max_mean_rssi(cap: CaptureSet, mac: str) -> Optional[float]:
    mask = (cap.src_mac == mac_to_int(mac)) & (cap.rssi_dbm != RSSI_NONE)
    if not mask.any():
        return None
    sn = cap.sniffer_id[mask]
    rs = cap.rssi_dbm[mask].astype(np.float64)
    best = None
    for s in np.unique(sn):
        m = float(rs[sn == s].mean())
        if best is None or m > best:
            best = m
    return best


def _stage_har(cap: CaptureSet, cfg: AnalysisConfig, res: AnalysisResult):
    t0, t1 = cap.t_start_us, cap.t_end_us
    warmup_end = t0 + cfg.warmup_s * US_PER_S

    guest_events = detect_guests(res.inventory, warmup_end, t1, cfg.depart_gap_s)
    res.events.extend(guest_events)
    aliases = guest_alias_map(res.inventory, warmup_end)

    subjects: dict[str, str] = {}
    subjects.update(cfg.subjects)
    subjects.update(aliases)

    interactive_tls = [
        res.timelines[p.mac]
        for p in res.inventory
        if p.profile == PROFILE_INTERACTIVE and p.mac in res.timelines
    ]

    device_sectors = {m: s.label for s in res.sectors for m in s.members}
    roles = infer_roles(res.inventory)
    roles.update(cfg.roles)

    for alias, mac in sorted(subjects.items()):
        timeline = res.timelines.get(mac)
        if timeline is None:
            res.note("har", f"{alias}: no state timeline for {mac}")
            continue
        # Household-wide interactive activity backs the resident's
        # presence; a guest is judged by their own phone alone.
        backing = interactive_tls if alias == "resident" else []
        try:
            presence = detect_presence(
                alias, timeline, backing, t0, t1, cfg.absence_min_s
            )
        except CannotInferPresence as exc:
            res.note("har", f"{alias}: {exc}")
            continue
        res.presence[alias] = presence
        res.evidence[f"presence:{alias}"] = f"presence timeline of {alias}"
        res.evidence[f"sleep:{alias}"] = f"night quiet analysis of {alias}"

        track = None
        if res.sectors and cfg.geometry is not None:
            track = track_mobile(
                cap, mac, cfg.track_window_s, cfg.track_stride_s,
                cfg.geometry, res.sectors, cfg.beta, cfg.gap_deg,
            )
            res.tracks[alias] = track
            for i in range(len(track)):
                res.evidence[f"track:{alias}#{i}"] = (
                    f"direction track window {i} of {alias}"
                )

        # Nights: the window starting on each scenario day.
        sleeps_all: list[tuple[int, int]] = []
        wakes_all: list[int] = []
        day0 = (t0 // US_PER_DAY) * US_PER_DAY
        n_days = int(-(-(t1 - day0) // US_PER_DAY))
        for d in range(n_days):
            night0 = day0 + d * US_PER_DAY + cfg.night_start_s * US_PER_S
            night1 = day0 + d * US_PER_DAY + cfg.night_end_s * US_PER_S
            if night1 <= t0 or night0 >= t1:
                continue
            try:
                sleeps, wakes = infer_sleep(
                    timeline, night0, night1, cfg.sleep_min_s
                )
            except NoSleepInference as exc:
                res.note("har", f"{alias} night {d}: {exc}")
                continue
            sleeps_all.extend(sleeps)
            wakes_all.extend(wakes)

        for d in range(n_days):
            d0 = day0 + d * US_PER_DAY
            d1 = d0 + US_PER_DAY
            if d1 <= t0 or d0 >= t1:
                continue
            day_sleeps = [s for s in sleeps_all if d0 <= s[0] < d1]
            day_wakes = [w for w in wakes_all if d0 <= w < d1]
            events = synthesize_day(
                alias, max(d0, t0), min(d1, t1), presence,
                res.timelines, roles if alias == "resident" else {},
                device_sectors, track, day_sleeps, day_wakes,
                cfg.session_min_s, cfg.transition_min_s,
            )
            res.events.extend(events)

        try:
            res.weekly[alias] = weekly_schedule(presence, day0)
        except InsufficientHistory as exc:
            res.note("har", f"{alias}: weekly: {exc}")

    res.events.sort(key=lambda e: (e.t_start_us, e.t_end_us, e.kind, e.subject))


def run_analysis(capture: CaptureSet, config: AnalysisConfig) -> AnalysisResult:
    """Run the enabled stages over a merged capture."""
    config.validate()
    res = AnalysisResult(
        config=config, t_start_us=capture.t_start_us, t_end_us=capture.t_end_us
    )

    stage_fns = {
        "identify": _stage_identify,
        "states": _stage_states,
        "locate": _stage_locate,
        "har": _stage_har,
    }
    deps = {
        "states": ("identify",),
        "locate": ("identify", "states"),
        "har": ("identify", "states"),
    }
    done: set[str] = set()
    for stage in ALL_STAGES:
        if stage not in config.stages:
            res.stages[stage] = "skipped"
            continue
        missing = [d for d in deps.get(stage, ()) if d not in done]
        if missing:
            res.stages[stage] = f"skipped (needs {', '.join(missing)})"
            continue
        start = time.perf_counter()
        try:
            stage_fns[stage](capture, config, res)
        except Exception as exc:  # recorded, not raised: partial reports stay useful
            res.stages[stage] = f"error: {exc}"
            res.timings_s[stage] = time.perf_counter() - start
            continue
        res.stages[stage] = "ok"
        res.timings_s[stage] = time.perf_counter() - start
        done.add(stage)
    return res

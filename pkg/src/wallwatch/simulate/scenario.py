"""Scenario schema: floorplan, radio model, devices and schedules.

Times inside device schedules are seconds after local midnight of the
schedule day; recurrence is either daily, by weekday (0=Monday), or by
absolute day index for one-off events. The scenario start is anchored to
a local midnight that falls on a Monday so weekday arithmetic is plain.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import yaml

from wallwatch.errors import ScenarioError

S_PER_DAY = 86_400

KIND_AUTONOMOUS = "autonomous"
KIND_INTERACTIVE = "interactive"
KIND_MOBILE = "mobile_interactive"
_KINDS = (KIND_AUTONOMOUS, KIND_INTERACTIVE, KIND_MOBILE)


@dataclass(frozen=True)
class Wall:
    x0: float
    y0: float
    x1: float
    y1: float
    atten_db: float = 6.0


@dataclass(frozen=True)
class Room:
    name: str
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)


@dataclass
class Floorplan:
    rooms: list[Room]
    walls: list[Wall]

    def room_at(self, x: float, y: float) -> Optional[str]:
        for r in self.rooms:
            if r.contains(x, y):
                return r.name
        return None

    def bounds(self) -> tuple[float, float, float, float]:
        xs = [r.x0 for r in self.rooms] + [r.x1 for r in self.rooms]
        ys = [r.y0 for r in self.rooms] + [r.y1 for r in self.rooms]
        return (min(xs), min(ys), max(xs), max(ys))


@dataclass(frozen=True)
class RadioModel:
    """Log-distance path loss with per-wall attenuation.

    PL(d) = pl0_db + 10 * exponent * log10(max(d, d0) / d0) plus
    atten_db per crossed wall plus gaussian noise. Frames below the
    sensitivity floor are dropped (and logged).
    """

    pl0_db: float = 40.0
    d0_m: float = 1.0
    exponent: float = 2.5
    noise_sigma_db: float = 4.0
    sensitivity_floor_dbm: float = -95.0


@dataclass(frozen=True)
class TrickleSpec:
    """Sparse background traffic: one frame every period_s give or take."""

    start_s: int
    end_s: int
    period_s: float
    jitter_s: float = 0.0
    frame_len: int = 90
    weekdays: Optional[tuple[int, ...]] = None  # None = daily
    day_indices: Optional[tuple[int, ...]] = None


@dataclass(frozen=True)
class SessionSpec:
    """A dense usage block: most seconds carry several frames, plus
    occasional tall download spikes."""

    start_s: int
    end_s: int
    density: float = 0.75
    amp_lo: int = 3
    amp_hi: int = 4
    spike_period_s: float = 0.0  # 0 disables spikes
    spike_lo: int = 40
    spike_hi: int = 120
    frame_len: int = 420
    weekdays: Optional[tuple[int, ...]] = None
    day_indices: Optional[tuple[int, ...]] = None


@dataclass(frozen=True)
class AbsenceSpec:
    """The device leaves radio range between leave_s and return_s."""

    leave_s: int
    return_s: int
    weekdays: Optional[tuple[int, ...]] = None
    day_indices: Optional[tuple[int, ...]] = None


@dataclass(frozen=True)
class WaypointSpec:
    """Position change at time_s; movement is linear over move_s."""

    time_s: int
    x: float
    y: float
    move_s: int = 40
    weekdays: Optional[tuple[int, ...]] = None
    day_indices: Optional[tuple[int, ...]] = None


@dataclass
class DeviceSpec:
    mac: str
    name: str
    kind: str
    x: float
    y: float
    room: Optional[str] = None
    tx_power_dbm: float = 14.0
    appear_s: int = 0
    disappear_s: Optional[int] = None
    # extra per-frame noise for carried devices (body shadowing)
    carry_sigma_db: float = 0.0

    # autonomous heartbeat
    period_s: Optional[float] = None
    jitter_s: float = 0.1
    frame_len: int = 120
    # heartbeats become beacons carrying this SSID (access points)
    beacon_ssid: Optional[str] = None
    burst_times_s: Optional[tuple[int, ...]] = None  # daily event bursts
    burst_frames: int = 3

    # BLE advertising
    ble_name: Optional[str] = None
    ble_period_s: Optional[float] = None
    ble_jitter_s: float = 0.1

    # installation phase
    setup_ssid: Optional[str] = None
    setup_window: Optional[tuple[int, int]] = None  # absolute seconds
    setup_period_s: float = 2.0
    mdns_name: Optional[str] = None
    probe_ssid: Optional[str] = None
    probe_period_s: float = 1800.0

    # interactive schedule
    trickles: list[TrickleSpec] = field(default_factory=list)
    sessions: list[SessionSpec] = field(default_factory=list)
    absences: list[AbsenceSpec] = field(default_factory=list)
    waypoints: list[WaypointSpec] = field(default_factory=list)

    # ground-truth annotations
    true_identity: str = "unknown"
    true_profile: Optional[str] = None
    true_mobility: Optional[str] = None


@dataclass
class Scenario:
    name: str
    seed: int
    start_epoch_us: int
    duration_s: int
    floorplan: Floorplan
    radio: RadioModel
    sniffers: tuple[tuple[float, float], ...]
    devices: list[DeviceSpec]
    # Scripted ground-truth annotations carried through to the truth file:
    # semantic events ({kind, subject, ts_us[, t_end_us]}) and the
    # person-alias to device mapping.
    truth_events: list[dict] = field(default_factory=list)
    subject_map: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        if self.duration_s < 0:
            raise ScenarioError("duration must be non-negative", field="duration_s")
        if len(self.sniffers) != 3:
            raise ScenarioError("exactly three sniffers required", field="sniffers")
        if self.start_epoch_us % (S_PER_DAY * 1_000_000):
            raise ScenarioError(
                "start must be a local midnight", field="start_epoch_us"
            )
        bounds = self.floorplan.bounds() if self.floorplan.rooms else None
        seen_macs: set[str] = set()
        for i, dev in enumerate(self.devices):
            where = f"devices[{i}] ({dev.name})"
            if dev.kind not in _KINDS:
                raise ScenarioError(f"bad kind {dev.kind!r}", field=where)
            if dev.mac in seen_macs:
                raise ScenarioError(f"duplicate mac {dev.mac}", field=where)
            seen_macs.add(dev.mac)
            if dev.kind == KIND_AUTONOMOUS:
                if dev.period_s is None and dev.ble_period_s is None:
                    raise ScenarioError(
                        "autonomous device needs period_s or ble_period_s",
                        field=where,
                    )
                if dev.period_s is not None and dev.period_s <= 0:
                    raise ScenarioError("period_s must be positive", field=where)
            if dev.waypoints and dev.kind != KIND_MOBILE:
                raise ScenarioError(
                    "waypoints only apply to mobile devices", field=where
                )
            if bounds is not None:
                x0, y0, x1, y1 = bounds
                if not (x0 <= dev.x <= x1 and y0 <= dev.y <= y1):
                    raise ScenarioError(
                        f"position ({dev.x}, {dev.y}) outside floorplan", field=where
                    )
            if dev.disappear_s is not None and dev.disappear_s <= dev.appear_s:
                raise ScenarioError("disappear before appear", field=where)
            if dev.appear_s > self.duration_s:
                raise ScenarioError("appears after scenario end", field=where)
            for spec in dev.sessions:
                if not 0.0 <= spec.density <= 1.0:
                    raise ScenarioError("session density outside [0,1]", field=where)
                if spec.amp_lo < 1 or spec.amp_hi < spec.amp_lo:
                    raise ScenarioError("bad session amplitudes", field=where)

    def device(self, mac: str) -> DeviceSpec:
        for d in self.devices:
            if d.mac == mac:
                return d
        raise KeyError(mac)


def expand_days(
    duration_s: int,
    weekdays: Optional[Sequence[int]],
    day_indices: Optional[Sequence[int]],
) -> list[int]:
    """Day indices (0-based, day 0 is a Monday) a schedule entry covers."""
    n_days = math.ceil(duration_s / S_PER_DAY)
    if day_indices is not None:
        return [d for d in day_indices if 0 <= d < n_days]
    if weekdays is None:
        return list(range(n_days))
    wd = set(weekdays)
    return [d for d in range(n_days) if d % 7 in wd]


def expand_windows(
    duration_s: int,
    start_s: int,
    end_s: int,
    weekdays: Optional[Sequence[int]],
    day_indices: Optional[Sequence[int]],
) -> list[tuple[int, int]]:
    """Absolute [start, end) second intervals for a recurring window.

    end_s may exceed 86400 to let a window run past midnight.
    """
    out = []
    for d in expand_days(duration_s, weekdays, day_indices):
        a = d * S_PER_DAY + start_s
        b = d * S_PER_DAY + end_s
        a, b = max(0, a), min(duration_s, b)
        if b > a:
            out.append((a, b))
    return out


# ---------------------------------------------------------------------------
# YAML (de)serialization


def scenario_to_dict(sc: Scenario) -> dict:
    d = asdict(sc)
    d["schema_version"] = 1
    return d


def scenario_to_yaml(sc: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=True)


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ScenarioError(f"missing required key {key!r}", field=where)
    return mapping[key]


def _tupled(value):
    if value is None:
        return None
    return tuple(value)


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario document must be a mapping")
    version = data.get("schema_version", 1)
    if version != 1:
        raise ScenarioError(f"unsupported schema_version {version}")

    fp_raw = _require(data, "floorplan", "scenario")
    rooms = [Room(**r) for r in fp_raw.get("rooms", [])]
    walls = [Wall(**w) for w in fp_raw.get("walls", [])]
    floorplan = Floorplan(rooms, walls)

    radio = RadioModel(**data.get("radio", {}))
    sniffers = tuple(tuple(p) for p in _require(data, "sniffers", "scenario"))

    devices = []
    for i, raw in enumerate(data.get("devices", [])):
        where = f"devices[{i}]"
        try:
            dev = DeviceSpec(
                mac=_require(raw, "mac", where),
                name=_require(raw, "name", where),
                kind=_require(raw, "kind", where),
                x=float(_require(raw, "x", where)),
                y=float(_require(raw, "y", where)),
                room=raw.get("room"),
                tx_power_dbm=float(raw.get("tx_power_dbm", 14.0)),
                appear_s=int(raw.get("appear_s", 0)),
                disappear_s=raw.get("disappear_s"),
                carry_sigma_db=float(raw.get("carry_sigma_db", 0.0)),
                period_s=raw.get("period_s"),
                jitter_s=float(raw.get("jitter_s", 0.1)),
                frame_len=int(raw.get("frame_len", 120)),
                beacon_ssid=raw.get("beacon_ssid"),
                burst_times_s=_tupled(raw.get("burst_times_s")),
                burst_frames=int(raw.get("burst_frames", 3)),
                ble_name=raw.get("ble_name"),
                ble_period_s=raw.get("ble_period_s"),
                ble_jitter_s=float(raw.get("ble_jitter_s", 0.1)),
                setup_ssid=raw.get("setup_ssid"),
                setup_window=_tupled(raw.get("setup_window")),
                setup_period_s=float(raw.get("setup_period_s", 2.0)),
                mdns_name=raw.get("mdns_name"),
                probe_ssid=raw.get("probe_ssid"),
                probe_period_s=float(raw.get("probe_period_s", 1800.0)),
                trickles=[
                    TrickleSpec(
                        start_s=int(t["start_s"]),
                        end_s=int(t["end_s"]),
                        period_s=float(t["period_s"]),
                        jitter_s=float(t.get("jitter_s", 0.0)),
                        frame_len=int(t.get("frame_len", 90)),
                        weekdays=_tupled(t.get("weekdays")),
                        day_indices=_tupled(t.get("day_indices")),
                    )
                    for t in raw.get("trickles", [])
                ],
                sessions=[
                    SessionSpec(
                        start_s=int(s["start_s"]),
                        end_s=int(s["end_s"]),
                        density=float(s.get("density", 0.75)),
                        amp_lo=int(s.get("amp_lo", 3)),
                        amp_hi=int(s.get("amp_hi", 4)),
                        spike_period_s=float(s.get("spike_period_s", 0.0)),
                        spike_lo=int(s.get("spike_lo", 40)),
                        spike_hi=int(s.get("spike_hi", 120)),
                        frame_len=int(s.get("frame_len", 420)),
                        weekdays=_tupled(s.get("weekdays")),
                        day_indices=_tupled(s.get("day_indices")),
                    )
                    for s in raw.get("sessions", [])
                ],
                absences=[
                    AbsenceSpec(
                        leave_s=int(a["leave_s"]),
                        return_s=int(a["return_s"]),
                        weekdays=_tupled(a.get("weekdays")),
                        day_indices=_tupled(a.get("day_indices")),
                    )
                    for a in raw.get("absences", [])
                ],
                waypoints=[
                    WaypointSpec(
                        time_s=int(w["time_s"]),
                        x=float(w["x"]),
                        y=float(w["y"]),
                        move_s=int(w.get("move_s", 40)),
                        weekdays=_tupled(w.get("weekdays")),
                        day_indices=_tupled(w.get("day_indices")),
                    )
                    for w in raw.get("waypoints", [])
                ],
                true_identity=raw.get("true_identity", "unknown"),
                true_profile=raw.get("true_profile"),
                true_mobility=raw.get("true_mobility"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(str(exc), field=where) from exc
        devices.append(dev)

    sc = Scenario(
        name=str(data.get("name", "scenario")),
        seed=int(_require(data, "seed", "scenario")),
        start_epoch_us=int(_require(data, "start_epoch_us", "scenario")),
        duration_s=int(_require(data, "duration_s", "scenario")),
        floorplan=floorplan,
        radio=radio,
        sniffers=sniffers,
        devices=devices,
        truth_events=list(data.get("truth_events", [])),
        subject_map=dict(data.get("subject_map", {})),
    )
    sc.validate()
    return sc


def load_scenario(text: str) -> Scenario:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f" at line {mark.line + 1}" if mark else ""
        raise ScenarioError(f"invalid YAML{line}: {exc}") from exc
    return scenario_from_dict(data)


def load_scenario_file(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return load_scenario(fh.read())

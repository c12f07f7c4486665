"""Ground-truth labels emitted alongside simulated captures."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from wallwatch.capture.model import US_PER_S

SCHEMA_VERSION = 1


@dataclass
class DeviceTruth:
    mac: str
    name: str
    identity: str  # expected identity class: exact_model | vendor_only | randomized
    profile: Optional[str]
    mobility: Optional[str]
    room: Optional[str]
    position: Optional[tuple[float, float]]
    bearing_deg: Optional[float]  # from sniffer centroid, static devices only
    state_segments: list[tuple[int, int, str]]  # (t_start_us, t_end_us, state)
    emitted_frames: int = 0

    def to_dict(self) -> dict:
        return {
            "mac": self.mac,
            "name": self.name,
            "identity": self.identity,
            "profile": self.profile,
            "mobility": self.mobility,
            "room": self.room,
            "position": list(self.position) if self.position else None,
            "bearing_deg": self.bearing_deg,
            "state_segments": [[a, b, s] for a, b, s in self.state_segments],
            "emitted_frames": self.emitted_frames,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DeviceTruth":
        return cls(
            mac=d["mac"],
            name=d["name"],
            identity=d["identity"],
            profile=d.get("profile"),
            mobility=d.get("mobility"),
            room=d.get("room"),
            position=tuple(d["position"]) if d.get("position") else None,
            bearing_deg=d.get("bearing_deg"),
            state_segments=[(int(a), int(b), s) for a, b, s in d["state_segments"]],
            emitted_frames=int(d.get("emitted_frames", 0)),
        )

    def state_at(self, ts_us: int) -> Optional[str]:
        for a, b, s in self.state_segments:
            if a <= ts_us < b:
                return s
        return None

    def transitions_us(self) -> list[int]:
        return [seg[0] for seg in self.state_segments[1:]]


@dataclass
class GroundTruth:
    scenario_name: str
    seed: int
    start_epoch_us: int
    duration_s: int
    sniffers: list[tuple[float, float]]
    devices: dict[str, DeviceTruth]
    # scripted semantic events: {kind, subject, ts_us[, t_end_us]}
    events: list[dict] = field(default_factory=list)
    subject_map: dict[str, str] = field(default_factory=dict)  # alias -> mac
    drops: dict[str, list[int]] = field(default_factory=dict)  # mac -> per sniffer

    @property
    def t_end_us(self) -> int:
        return self.start_epoch_us + self.duration_s * US_PER_S

    def total_emitted(self) -> int:
        return sum(d.emitted_frames for d in self.devices.values())

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario_name": self.scenario_name,
            "seed": self.seed,
            "start_epoch_us": self.start_epoch_us,
            "duration_s": self.duration_s,
            "sniffers": [list(p) for p in self.sniffers],
            "devices": {m: d.to_dict() for m, d in sorted(self.devices.items())},
            "events": self.events,
            "subject_map": self.subject_map,
            "drops": self.drops,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        return cls(
            scenario_name=d["scenario_name"],
            seed=int(d["seed"]),
            start_epoch_us=int(d["start_epoch_us"]),
            duration_s=int(d["duration_s"]),
            sniffers=[tuple(p) for p in d["sniffers"]],
            devices={
                m: DeviceTruth.from_dict(v) for m, v in d.get("devices", {}).items()
            },
            events=list(d.get("events", [])),
            subject_map=dict(d.get("subject_map", {})),
            drops={m: list(v) for m, v in d.get("drops", {}).items()},
        )

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        return cls.from_dict(json.loads(text))

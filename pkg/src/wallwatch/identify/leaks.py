"""Installation-phase plaintext leaks.

Many devices open a temporary unencrypted access point while being set
up, and companion phones chatter service names. Both show up in capture
metadata as beacon SSIDs, probe-request SSIDs and mdns_name info fields;
this module turns them into attributable leak events.
"""

from __future__ import annotations

import fnmatch
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, TextIO, Union

import numpy as np

from wallwatch.capture.model import CaptureSet, Proto, int_to_mac


class LeakKind(Enum):
    setup_ssid = "setup_ssid"
    plaintext_credentials = "plaintext_credentials"
    mdns_name = "mdns_name"
    probe_ssid = "probe_ssid"


@dataclass(frozen=True)
class LeakEvent:
    ts_us: int
    mac: str
    kind: LeakKind
    value: str

    def __post_init__(self):
        if not self.value:
            raise ValueError("leak value must be non-empty")


# Setup access points of common household vendors; a site-specific
# pattern file can replace these.
DEFAULT_SETUP_PATTERNS = [
    "Tapo*",
    "TP-Link*",
    "shelly*",
    "Shelly*",
    "SmartLife*",
    "ESP_*",
    "SL-*",
    "tuya*",
]


def load_setup_patterns(stream: Union[TextIO, str]) -> list[str]:
    """One glob pattern per line; '#' comments and blanks are ignored."""
    if isinstance(stream, str):
        lines = stream.splitlines()
    else:
        lines = stream.read().splitlines()
    patterns = []
    for raw in lines:
        line = raw.strip()
        if line and not line.startswith("#"):
            patterns.append(line)
    return patterns


def _matches_any(name: str, patterns: Sequence[str]) -> bool:
    return any(fnmatch.fnmatchcase(name, p) for p in patterns)


def _decode(value: bytes) -> str:
    return value.decode("utf-8", errors="replace").strip()


def extract_setup_leaks(
    capture: CaptureSet, patterns: Sequence[str] = DEFAULT_SETUP_PATTERNS
) -> list[LeakEvent]:
    """Collect leak events from beacons, probe requests and mdns names.

    Beacon SSIDs only count when they match a setup pattern (ordinary
    infrastructure beacons are not leaks); every probe-request SSID is a
    preferred-network leak; mdns_name info fields leak outright.
    """
    events: list[LeakEvent] = []
    if not capture.info:
        return events

    for idx in sorted(capture.info):
        entry = capture.info[idx]
        ts = int(capture.ts_us[idx])
        mac = int_to_mac(int(capture.src_mac[idx]))
        proto = int(capture.proto[idx])

        ssid = entry.get("ssid")
        if ssid:
            name = _decode(ssid)
            if name:
                if proto == Proto.wifi_beacon and _matches_any(name, patterns):
                    events.append(LeakEvent(ts, mac, LeakKind.setup_ssid, name))
                elif proto == Proto.wifi_probe_req:
                    events.append(LeakEvent(ts, mac, LeakKind.probe_ssid, name))

        mdns = entry.get("mdns_name")
        if mdns:
            name = _decode(mdns)
            if name:
                events.append(LeakEvent(ts, mac, LeakKind.mdns_name, name))

    return events

"""Attacker-side device inventory."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from wallwatch.capture.model import (
    CaptureSet,
    Proto,
    int_to_mac,
    is_locally_administered,
)
from wallwatch.identify.ble import ble_local_name, parse_ble_adv
from wallwatch.identify.leaks import (
    DEFAULT_SETUP_PATTERNS,
    LeakEvent,
    LeakKind,
    extract_setup_leaks,
)
from wallwatch.identify.oui import Identity, OuiRegistry, lookup_vendor
from wallwatch.errors import BleParseError

# Below this frame count a MAC is treated as a passer-by and kept out of
# the inventory, unless it produced an identity leak.
DEFAULT_MIN_FRAMES = 10

SOURCE_OUI = "oui"
SOURCE_BLE = "ble_name"
SOURCE_SETUP = "setup_leak"
SOURCE_TRAFFIC = "traffic_shape"

# Leak kinds that name the emitting device itself (probe SSIDs name the
# network being searched for, not the device).
_IDENTITY_LEAKS = (LeakKind.setup_ssid, LeakKind.mdns_name)


@dataclass
class DeviceProfile:
    """Everything inferred about one MAC."""

    mac: str
    identity: Identity
    sources: set[str] = field(default_factory=set)
    profile: Optional[str] = None  # 'autonomous' | 'interactive'
    mobility: Optional[str] = None  # 'static' | 'mobile'
    first_seen_us: int = 0
    last_seen_us: int = 0
    frame_count: int = 0

    def to_dict(self) -> dict:
        return {
            "mac": self.mac,
            "identity": self.identity.kind,
            "identity_name": self.identity.name,
            "sources": sorted(self.sources),
            "profile": self.profile,
            "mobility": self.mobility,
            "first_seen_us": self.first_seen_us,
            "last_seen_us": self.last_seen_us,
            "frame_count": self.frame_count,
        }


def _ble_names(capture: CaptureSet) -> dict[str, str]:
    """Earliest parseable local name per advertising MAC."""
    names: dict[str, str] = {}
    for idx in sorted(capture.info):
        if int(capture.proto[idx]) != Proto.ble_adv:
            continue
        blob = capture.info[idx].get("ble_adv")
        if not blob:
            continue
        mac = int_to_mac(int(capture.src_mac[idx]))
        if mac in names:
            continue
        try:
            name = ble_local_name(parse_ble_adv(blob))
        except BleParseError:
            continue
        if name:
            names[mac] = name
    return names


def build_inventory(
    capture: CaptureSet,
    registry: OuiRegistry,
    patterns: Sequence[str] = DEFAULT_SETUP_PATTERNS,
    min_frames: int = DEFAULT_MIN_FRAMES,
    leaks: Optional[list[LeakEvent]] = None,
) -> list[DeviceProfile]:
    """One profile per observed MAC, identity by most-specific source.

    Precedence: setup leak > BLE name > vendor prefix. Randomized MACs
    are flagged and never receive a vendor. MACs below min_frames are
    dropped unless they produced a leak. Traffic profile and mobility
    stay unset here; the state-recognition stage fills them in.
    """
    if leaks is None:
        leaks = extract_setup_leaks(capture, patterns)

    if len(capture):
        macs, first_idx, counts = np.unique(
            capture.src_mac, return_index=True, return_counts=True
        )
        # Records are time-sorted, so the first occurrence is first-seen.
        first_seen = capture.ts_us[first_idx]
        last_seen = np.empty_like(first_seen)
        order = np.argsort(capture.src_mac, kind="stable")
        boundaries = np.cumsum(counts) - 1
        last_seen = capture.ts_us[order[boundaries]]
        stats = {
            int_to_mac(int(m)): (int(f), int(l), int(c))
            for m, f, l, c in zip(macs, first_seen, last_seen, counts)
        }
    else:
        stats = {}

    ble_names = _ble_names(capture)

    leak_name: dict[str, str] = {}
    leak_macs: set[str] = set()
    for ev in sorted(leaks, key=lambda e: (e.ts_us, e.value)):
        leak_macs.add(ev.mac)
        if ev.kind in _IDENTITY_LEAKS and ev.mac not in leak_name:
            leak_name[ev.mac] = ev.value

    profiles: list[DeviceProfile] = []
    for mac in sorted(stats):
        first, last, count = stats[mac]
        if count < min_frames and mac not in leak_macs:
            continue

        sources: set[str] = set()
        oui_identity = lookup_vendor(mac, registry)
        if oui_identity.kind == "vendor_only":
            sources.add(SOURCE_OUI)
        if mac in ble_names:
            sources.add(SOURCE_BLE)
        if mac in leak_name:
            sources.add(SOURCE_SETUP)

        if mac in leak_name:
            identity = Identity("exact_model", leak_name[mac])
        elif mac in ble_names:
            identity = Identity("exact_model", ble_names[mac])
        elif is_locally_administered(mac):
            identity = Identity("randomized")
        else:
            identity = oui_identity

        profiles.append(
            DeviceProfile(
                mac=mac,
                identity=identity,
                sources=sources,
                first_seen_us=first,
                last_seen_us=last,
                frame_count=count,
            )
        )
    return profiles

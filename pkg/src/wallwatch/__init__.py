"""Passive wireless traffic analysis toolkit.

Turns multi-sniffer WiFi/BLE capture metadata into a device inventory,
per-device state timelines, coarse direction estimates and household
activity timelines, and ships a deterministic traffic simulator that
provides labeled ground truth for end-to-end verification.
"""

__version__ = "0.1.0"

from wallwatch.errors import WallwatchError

__all__ = ["WallwatchError", "__version__"]

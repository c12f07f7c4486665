"""Device inventory construction from OUIs, BLE names and setup leaks."""

from wallwatch.identify.ble import ble_local_name, parse_ble_adv
from wallwatch.identify.inventory import DeviceProfile, Identity, build_inventory
from wallwatch.identify.leaks import (
    LeakEvent,
    LeakKind,
    extract_setup_leaks,
    load_setup_patterns,
)
from wallwatch.identify.oui import (
    OuiRegistry,
    load_oui_registry,
    lookup_vendor,
)

__all__ = [
    "OuiRegistry",
    "load_oui_registry",
    "lookup_vendor",
    "parse_ble_adv",
    "ble_local_name",
    "LeakEvent",
    "LeakKind",
    "extract_setup_leaks",
    "load_setup_patterns",
    "Identity",
    "DeviceProfile",
    "build_inventory",
]

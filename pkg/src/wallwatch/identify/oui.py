"""Vendor attribution from MAC address prefixes.

The registry file holds one assignment per line, "XX:XX:XX<TAB>Vendor",
with '#' comments. A curated subset of public prefix assignments for
common household vendors ships with the package; any fuller registry in
the same format can be supplied instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, TextIO, Union

from wallwatch.capture.model import is_locally_administered
from wallwatch.errors import RegistryError


@dataclass(frozen=True)
class Identity:
    """How precisely a device is known.

    kind is one of 'exact_model', 'vendor_only', 'randomized', 'unknown';
    name carries the model string or vendor name where applicable.
    """

    kind: str
    name: Optional[str] = None

    def __str__(self):
        if self.name:
            return f"{self.kind}({self.name})"
        return self.kind


class OuiRegistry:
    """Mapping from 3-byte MAC prefix to vendor string."""

    def __init__(self, entries: dict[str, str], warnings: Optional[list[str]] = None):
        if not entries:
            raise RegistryError("vendor registry is empty")
        self._entries = entries
        self.warnings = warnings or []

    def __len__(self) -> int:
        return len(self._entries)

    def vendor(self, mac: str) -> Optional[str]:
        prefix = mac.lower()[:8]
        return self._entries.get(prefix)

    def prefixes(self) -> list[str]:
        return sorted(self._entries)


def _normalize_prefix(token: str) -> str:
    t = token.strip().lower().replace("-", ":")
    if len(t) == 6 and ":" not in t:
        t = f"{t[0:2]}:{t[2:4]}:{t[4:6]}"
    parts = t.split(":")
    if len(parts) != 3 or not all(len(p) == 2 for p in parts):
        raise ValueError(f"bad prefix {token!r}")
    int(t.replace(":", ""), 16)
    return t


def load_oui_registry(stream: Union[TextIO, str]) -> OuiRegistry:
    """Load a registry file. Duplicate prefixes: last one wins, with a warning."""
    if isinstance(stream, str):
        lines = stream.splitlines()
    else:
        lines = stream.read().splitlines()

    entries: dict[str, str] = {}
    warnings: list[str] = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        prefix_tok, _, vendor = line.partition("\t")
        vendor = vendor.strip()
        if not vendor:
            warnings.append(f"line {line_no}: missing vendor name, skipped")
            continue
        try:
            prefix = _normalize_prefix(prefix_tok)
        except ValueError:
            warnings.append(f"line {line_no}: bad prefix {prefix_tok!r}, skipped")
            continue
        if prefix in entries:
            warnings.append(f"line {line_no}: duplicate prefix {prefix}, last wins")
        entries[prefix] = vendor

    return OuiRegistry(entries, warnings)


def load_oui_registry_file(path) -> OuiRegistry:
    with open(path, "r", encoding="utf-8") as fh:
        return load_oui_registry(fh)


def lookup_vendor(mac: str, registry: OuiRegistry) -> Identity:
    """Classify a MAC: randomized beats any prefix match.

    A locally administered address carries no manufacturer information,
    so it is never attributed to a vendor.
    """
    if is_locally_administered(mac):
        return Identity("randomized")
    vendor = registry.vendor(mac)
    if vendor is not None:
        return Identity("vendor_only", vendor)
    return Identity("unknown")

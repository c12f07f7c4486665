"""BLE advertising-data parsing (length/type/value structures)."""

from __future__ import annotations

from typing import Optional

from wallwatch.errors import BleParseError

AD_SHORTENED_LOCAL_NAME = 0x08
AD_COMPLETE_LOCAL_NAME = 0x09


def parse_ble_adv(payload: bytes) -> dict[int, bytes]:
    """Split an advertising blob into {ad_type: value}.

    Each structure is [len | type | value(len-1)]. A zero length byte
    terminates parsing (early-termination convention); a length running
    past the payload raises BleParseError. Repeated types keep the last
    occurrence.
    """
    fields: dict[int, bytes] = {}
    pos = 0
    n = len(payload)
    while pos < n:
        length = payload[pos]
        if length == 0:
            break
        if pos + 1 + length > n:
            raise BleParseError(
                f"ad structure at offset {pos} claims {length} bytes but only "
                f"{n - pos - 1} remain"
            )
        ad_type = payload[pos + 1]
        fields[ad_type] = bytes(payload[pos + 2 : pos + 1 + length])
        pos += 1 + length
    return fields


def ble_local_name(fields: dict[int, bytes]) -> Optional[str]:
    """Device name from the advertisement, preferring the complete form."""
    for ad_type in (AD_COMPLETE_LOCAL_NAME, AD_SHORTENED_LOCAL_NAME):
        value = fields.get(ad_type)
        if value:
            try:
                name = value.decode("utf-8").strip()
            except UnicodeDecodeError:
                continue
            if name:
                return name
    return None


def build_adv_with_name(name: str) -> bytes:
    """Assemble a minimal advertisement carrying a complete local name."""
    raw = name.encode("utf-8")
    if len(raw) > 0xFE:
        raise ValueError("name too long for one ad structure")
    flags = bytes([2, 0x01, 0x06])
    return flags + bytes([len(raw) + 1, AD_COMPLETE_LOCAL_NAME]) + raw

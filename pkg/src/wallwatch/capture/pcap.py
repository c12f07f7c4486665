"""Minimal pcap ingestion for radiotap-wrapped 802.11 captures.

Supports the classic pcap container (24-byte global header, 16-byte
record headers, both magic byte orders) with linktype 127 (radiotap).
Of the radiotap header only the antenna-signal field is extracted; all
other fields are skipped by walking the known size/alignment table up to
that field and then jumping to the end of the header via its declared
length, so unknown trailing fields are never guessed at.

Of 802.11 itself only the frame-control classification into data, probe
request and beacon frames plus address extraction is performed. SSID
information elements of management frames are copied into the record's
info map. Everything else (QoS, control frames, FCS checking) is out of
scope and such frames are skipped and counted.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from wallwatch.capture.model import (
    MAC_NONE,
    RSSI_NONE,
    CaptureSet,
    Proto,
)
from wallwatch.errors import CaptureFormatError

PCAP_MAGIC_LE = b"\xd4\xc3\xb2\xa1"  # file written little-endian
PCAP_MAGIC_BE = b"\xa1\xb2\xc3\xd4"  # file written big-endian
LINKTYPE_RADIOTAP = 127

GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16

# Radiotap fields in bit order up to the one we need: (size, alignment).
# Bits 0..5: TSFT, Flags, Rate, Channel, FHSS, dBm antenna signal.
_RT_FIELD_LAYOUT = [(8, 8), (1, 1), (1, 1), (4, 2), (2, 1), (1, 1)]
_RT_BIT_ANTSIGNAL = 5
_RT_BIT_EXT = 31
_RT_MAX_PRESENT_WORDS = 8

_FC_TYPE_MGMT = 0
_FC_TYPE_DATA = 2
_FC_SUBTYPE_PROBE_REQ = 4
_FC_SUBTYPE_BEACON = 8

_IE_SSID = 0
_BEACON_FIXED_LEN = 12  # timestamp(8) + interval(2) + capabilities(2)
_BROADCAST = 0xFFFFFFFFFFFF


@dataclass
class PcapReport:
    """Per-file accounting of skipped frames and soft anomalies."""

    records_total: int = 0
    records_parsed: int = 0
    frames_skipped: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "records_total": self.records_total,
            "records_parsed": self.records_parsed,
            "frames_skipped": self.frames_skipped,
            "warnings": list(self.warnings),
        }


def _radiotap_signal(buf: bytes, base: int, rt_len: int) -> tuple[Optional[int], int]:
    """Return (antenna signal dBm or None, radiotap length).

    ``base`` is the offset of the radiotap header inside ``buf``. Raises
    CaptureFormatError on structural problems.
    """
    if rt_len < 8:
        raise CaptureFormatError("radiotap header shorter than 8 bytes", offset=base)
    version = buf[base]
    if version != 0:
        raise CaptureFormatError(f"unsupported radiotap version {version}", offset=base)

    # Present bitmask chain: bit 31 of each word announces another word.
    words = []
    pos = base + 4
    while True:
        if len(words) >= _RT_MAX_PRESENT_WORDS:
            raise CaptureFormatError("radiotap present chain too long", offset=base)
        if pos + 4 > base + rt_len:
            raise CaptureFormatError("radiotap present chain overruns header", offset=base)
        (word,) = struct.unpack_from("<I", buf, pos)
        words.append(word)
        pos += 4
        if not word & (1 << _RT_BIT_EXT):
            break

    present = words[0]
    offset = pos - base  # field area starts after the present chain
    for bit, (size, align) in enumerate(_RT_FIELD_LAYOUT):
        if not present & (1 << bit):
            continue
        if offset % align:
            offset += align - offset % align
        if bit == _RT_BIT_ANTSIGNAL:
            if offset + size > rt_len:
                raise CaptureFormatError(
                    "radiotap antenna-signal field overruns header", offset=base
                )
            raw = buf[base + offset]
            signal = raw - 256 if raw >= 128 else raw
            return signal, rt_len
        offset += size
    return None, rt_len


def _extract_ssid(buf: bytes, start: int, end: int) -> Optional[bytes]:
    """Scan information elements for the SSID; tolerate a snapped tail."""
    pos = start
    while pos + 2 <= end:
        ie_id = buf[pos]
        ie_len = buf[pos + 1]
        if pos + 2 + ie_len > end:
            return None
        if ie_id == _IE_SSID:
            return bytes(buf[pos + 2 : pos + 2 + ie_len])
        pos += 2 + ie_len
    return None


def parse_pcap_radiotap(
    data: bytes, sniffer_id: int = 0
) -> tuple[CaptureSet, PcapReport]:
    """Parse a pcap byte string into a CaptureSet.

    Frames other than data, probe-request and beacon are skipped and
    counted in the report. Raises CaptureFormatError on bad magic, wrong
    linktype or truncation (naming the byte offset).
    """
    if len(data) < GLOBAL_HEADER_LEN:
        raise CaptureFormatError("input shorter than pcap global header", offset=0)
    magic = bytes(data[:4])
    if magic == PCAP_MAGIC_LE:
        endian = "<"
    elif magic == PCAP_MAGIC_BE:
        endian = ">"
    else:
        raise CaptureFormatError(
            f"unsupported capture format (magic {magic.hex()})", offset=0
        )
    _, _, _, _, _, linktype = struct.unpack(endian + "HHiIII", data[4:GLOBAL_HEADER_LEN])
    if linktype != LINKTYPE_RADIOTAP:
        raise CaptureFormatError(
            f"unsupported linktype {linktype} (only {LINKTYPE_RADIOTAP}/radiotap)",
            offset=20,
        )

    report = PcapReport()
    rec_fmt = endian + "IIII"

    ts_l: list[int] = []
    src_l: list[int] = []
    dst_l: list[int] = []
    fl_l: list[int] = []
    rs_l: list[int] = []
    pr_l: list[int] = []
    info: dict[int, dict[str, bytes]] = {}

    pos = GLOBAL_HEADER_LEN
    total = len(data)
    while pos < total:
        if pos + RECORD_HEADER_LEN > total:
            raise CaptureFormatError("truncated record header", offset=pos)
        ts_sec, ts_usec, incl_len, orig_len = struct.unpack_from(rec_fmt, data, pos)
        body = pos + RECORD_HEADER_LEN
        if ts_usec >= 1_000_000:
            raise CaptureFormatError("record microseconds field out of range", offset=pos)
        if body + incl_len > total:
            raise CaptureFormatError("truncated record body", offset=pos)
        report.records_total += 1
        end = body + incl_len
        pos = end

        if incl_len < 8:
            raise CaptureFormatError("record too short for radiotap", offset=body)
        (rt_len,) = struct.unpack_from("<H", data, body + 2)
        if rt_len > incl_len:
            raise CaptureFormatError("radiotap length exceeds record", offset=body)
        rssi, _ = _radiotap_signal(data, body, rt_len)
        if rssi is not None and not -120 <= rssi <= 0:
            report.warnings.append(
                f"implausible antenna signal {rssi} dBm dropped at offset {body}"
            )
            rssi = None

        mac = body + rt_len
        if mac + 16 > end:
            raise CaptureFormatError("802.11 header truncated", offset=mac)
        (fc,) = struct.unpack_from("<H", data, mac)
        ftype = (fc >> 2) & 0x3
        subtype = (fc >> 4) & 0xF

        if ftype == _FC_TYPE_DATA:
            proto = Proto.wifi_data
        elif ftype == _FC_TYPE_MGMT and subtype == _FC_SUBTYPE_PROBE_REQ:
            proto = Proto.wifi_probe_req
        elif ftype == _FC_TYPE_MGMT and subtype == _FC_SUBTYPE_BEACON:
            proto = Proto.wifi_beacon
        else:
            report.frames_skipped += 1
            continue

        dst = int.from_bytes(data[mac + 4 : mac + 10], "big")
        src = int.from_bytes(data[mac + 10 : mac + 16], "big")

        ssid = None
        if proto is Proto.wifi_probe_req:
            ssid = _extract_ssid(data, mac + 24, end)
        elif proto is Proto.wifi_beacon:
            ssid = _extract_ssid(data, mac + 24 + _BEACON_FIXED_LEN, end)

        idx = len(ts_l)
        ts_l.append(ts_sec * 1_000_000 + ts_usec)
        src_l.append(src)
        dst_l.append(MAC_NONE if dst == _BROADCAST else dst)
        fl_l.append(max(0, orig_len - rt_len))
        rs_l.append(RSSI_NONE if rssi is None else rssi)
        pr_l.append(int(proto))
        if ssid is not None:
            info[idx] = {"ssid": ssid}
        report.records_parsed += 1

    n = len(ts_l)
    capture = CaptureSet(
        np.array(ts_l, dtype=np.int64),
        np.full(n, sniffer_id, dtype=np.int16),
        np.array(src_l, dtype=np.int64),
        np.array(dst_l, dtype=np.int64),
        np.array(fl_l, dtype=np.int64),
        np.array(rs_l, dtype=np.int16),
        np.array(pr_l, dtype=np.uint8),
        info,
    )
    return capture, report


def _build_frame(proto: int, src: int, dst: int, ssid: Optional[bytes]) -> bytes:
    if proto == Proto.wifi_data:
        fc = (_FC_TYPE_DATA << 2)
    elif proto == Proto.wifi_probe_req:
        fc = (_FC_TYPE_MGMT << 2) | (_FC_SUBTYPE_PROBE_REQ << 4)
    elif proto == Proto.wifi_beacon:
        fc = (_FC_TYPE_MGMT << 2) | (_FC_SUBTYPE_BEACON << 4)
    else:
        raise ValueError("only wifi frames can be written to pcap")

    dst_bytes = (dst if dst != MAC_NONE else _BROADCAST).to_bytes(6, "big")
    src_bytes = src.to_bytes(6, "big")
    header = struct.pack("<HH", fc, 0) + dst_bytes + src_bytes + src_bytes + b"\x00\x00"
    body = b""
    if proto == Proto.wifi_beacon:
        body += b"\x00" * 8 + struct.pack("<HH", 100, 0)
    if ssid is not None and proto in (Proto.wifi_probe_req, Proto.wifi_beacon):
        body += bytes([_IE_SSID, len(ssid)]) + ssid
    return header + body


def write_pcap(capture: CaptureSet) -> bytes:
    """Serialize wifi frames of a CaptureSet to pcap/radiotap bytes.

    The original payload is gone by design, so the written frame is a
    synthesized header (plus the SSID element where known) and the
    record's orig_len preserves the observed frame length. BLE records
    and info fields other than ssid cannot be represented and raise
    ValueError; filter with ``capture.select`` first.
    """
    out = bytearray()
    out += PCAP_MAGIC_LE
    out += struct.pack("<HHiIII", 2, 4, 0, 0, 65535, LINKTYPE_RADIOTAP)

    for i in range(len(capture)):
        proto = int(capture.proto[i])
        if proto == Proto.ble_adv:
            raise ValueError("ble_adv records cannot be written to a radiotap pcap")
        entry = capture.info.get(i, {})
        extra = set(entry) - {"ssid"}
        if extra:
            raise ValueError(f"info keys {sorted(extra)} cannot be written to pcap")

        rssi = int(capture.rssi_dbm[i])
        if rssi != RSSI_NONE:
            rt = struct.pack("<BBHI", 0, 0, 9, 1 << _RT_BIT_ANTSIGNAL) + struct.pack(
                "b", rssi
            )
        else:
            rt = struct.pack("<BBHI", 0, 0, 8, 0)

        frame = _build_frame(
            proto, int(capture.src_mac[i]), int(capture.dst_mac[i]), entry.get("ssid")
        )
        frame_len = int(capture.frame_len[i])
        if frame_len < len(frame):
            raise ValueError(
                f"frame_len {frame_len} smaller than the {len(frame)}-byte "
                f"synthesized header"
            )
        ts = int(capture.ts_us[i])
        incl = len(rt) + len(frame)
        orig = len(rt) + frame_len
        out += struct.pack("<IIII", ts // 1_000_000, ts % 1_000_000, incl, orig)
        out += rt
        out += frame
    return bytes(out)

"""Canonical on-disk capture format (.wwcap).

UTF-8 text, one record per line, tab-separated fields in fixed order:

    ts_us  sniffer_id  src_mac  dst_mac|-  frame_len  rssi_dbm|-  proto  [key=hex ...]

MACs are lowercase colon-hex. Info values are hex-encoded byte strings.
Lines starting with '#' are comments; blank lines are ignored. The format
is deliberately plain text: it is inspectable with standard tools and
byte-diffable in golden tests.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Optional, TextIO, Union

import numpy as np

from wallwatch.capture.model import (
    ALLOWED_INFO_KEYS,
    MAC_NONE,
    PROTO_CODES,
    PROTO_NAMES,
    RSSI_NONE,
    CaptureSet,
    mac_to_int,
)
from wallwatch.errors import CaptureFormatError

HEADER_COMMENT = "# wwcap 1"

# Above this malformed-line fraction the whole file is rejected: a file
# that is mostly garbage is more likely the wrong format than a capture
# with glitches.
MALFORMED_FRACTION_LIMIT = 0.5

_MAX_REPORTED_ERRORS = 100


@dataclass
class ParseReport:
    """Accounting for one parse run; malformed lines are never silent."""

    total_lines: int = 0
    record_lines: int = 0
    malformed_lines: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def note_error(self, line_no: int, reason: str) -> None:
        self.malformed_lines += 1
        if len(self.errors) < _MAX_REPORTED_ERRORS:
            self.errors.append((line_no, reason))

    def to_dict(self) -> dict:
        return {
            "total_lines": self.total_lines,
            "record_lines": self.record_lines,
            "malformed_lines": self.malformed_lines,
            "errors": [{"line": n, "reason": r} for n, r in self.errors],
            "warnings": list(self.warnings),
        }


def _parse_mac_cached(token: str, cache: dict) -> int:
    v = cache.get(token)
    if v is None:
        v = mac_to_int(token)
        cache[token] = v
    return v


def parse_capture_records(
    stream: Union[TextIO, BinaryIO, bytes, str],
    t_start_us: Optional[int] = None,
    t_end_us: Optional[int] = None,
) -> tuple[CaptureSet, ParseReport]:
    """Parse a .wwcap stream into a CaptureSet plus a parse report.

    Malformed lines are counted and reported. If more than half of the
    non-comment lines are malformed the whole stream is rejected with
    CaptureFormatError.
    """
    if isinstance(stream, bytes):
        text = stream.decode("utf-8", errors="replace")
        lines = text.splitlines()
    elif isinstance(stream, str):
        lines = stream.splitlines()
    else:
        data = stream.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8", errors="replace")
        lines = data.splitlines()

    report = ParseReport()
    ts_l: list[int] = []
    sn_l: list[int] = []
    src_l: list[int] = []
    dst_l: list[int] = []
    fl_l: list[int] = []
    rs_l: list[int] = []
    pr_l: list[int] = []
    info: dict[int, dict[str, bytes]] = {}
    mac_cache: dict[str, int] = {}
    proto_codes = PROTO_CODES

    for line_no, line in enumerate(lines, start=1):
        report.total_lines += 1
        if not line or line.startswith("#"):
            continue
        report.record_lines += 1
        parts = line.split("\t")
        if len(parts) < 7:
            report.note_error(line_no, "fewer than 7 fields")
            continue
        try:
            ts = int(parts[0])
            sn = int(parts[1])
            src = _parse_mac_cached(parts[2], mac_cache)
            dst = MAC_NONE if parts[3] == "-" else _parse_mac_cached(parts[3], mac_cache)
            fl = int(parts[4])
            rs = RSSI_NONE if parts[5] == "-" else int(parts[5])
            pr = proto_codes[parts[6]]
            if ts < 0 or fl < 0 or not 0 <= sn <= 255:
                raise ValueError("field out of range")
            if rs != RSSI_NONE and not -120 <= rs <= 0:
                raise ValueError("rssi out of range")
        except (ValueError, KeyError) as exc:
            report.note_error(line_no, str(exc) or "unparseable field")
            continue

        entry = None
        if len(parts) > 7:
            entry = {}
            ok = True
            for pair in parts[7:]:
                key, sep, hexval = pair.partition("=")
                if not sep or key not in ALLOWED_INFO_KEYS:
                    report.note_error(line_no, f"bad info field {pair!r}")
                    ok = False
                    break
                try:
                    entry[key] = bytes.fromhex(hexval)
                except ValueError:
                    report.note_error(line_no, f"bad hex in info field {key!r}")
                    ok = False
                    break
            if not ok:
                continue

        idx = len(ts_l)
        ts_l.append(ts)
        sn_l.append(sn)
        src_l.append(src)
        dst_l.append(dst)
        fl_l.append(fl)
        rs_l.append(rs)
        pr_l.append(pr)
        if entry:
            info[idx] = entry

    if report.record_lines:
        frac = report.malformed_lines / report.record_lines
        if frac > MALFORMED_FRACTION_LIMIT:
            raise CaptureFormatError(
                f"{report.malformed_lines} of {report.record_lines} lines are "
                f"malformed; refusing to treat this as a capture file"
            )

    capture = CaptureSet(
        np.array(ts_l, dtype=np.int64),
        np.array(sn_l, dtype=np.int16),
        np.array(src_l, dtype=np.int64),
        np.array(dst_l, dtype=np.int64),
        np.array(fl_l, dtype=np.int64),
        np.array(rs_l, dtype=np.int16),
        np.array(pr_l, dtype=np.uint8),
        info,
        t_start_us,
        t_end_us,
    )
    return capture, report


def format_record_line(
    ts_us: int,
    sniffer_id: int,
    src_mac: str,
    dst_mac: Optional[str],
    frame_len: int,
    rssi_dbm: Optional[int],
    proto_name: str,
    info: Optional[dict[str, bytes]] = None,
) -> str:
    fields = [
        str(ts_us),
        str(sniffer_id),
        src_mac,
        dst_mac if dst_mac is not None else "-",
        str(frame_len),
        str(rssi_dbm) if rssi_dbm is not None else "-",
        proto_name,
    ]
    if info:
        for key in sorted(info):
            fields.append(f"{key}={info[key].hex()}")
    return "\t".join(fields)


def write_capture_records(capture: CaptureSet, out: Union[TextIO, io.TextIOBase]) -> int:
    """Serialize a CaptureSet to .wwcap text. Returns the record count."""
    out.write(HEADER_COMMENT + "\n")
    n = len(capture)
    if n == 0:
        return 0

    mac_str: dict[int, str] = {}

    def fmt_mac(v: int) -> str:
        s = mac_str.get(v)
        if s is None:
            h = f"{v:012x}"
            s = ":".join(h[i : i + 2] for i in range(0, 12, 2))
            mac_str[v] = s
        return s

    ts = capture.ts_us
    sn = capture.sniffer_id
    src = capture.src_mac
    dst = capture.dst_mac
    fl = capture.frame_len
    rs = capture.rssi_dbm
    pr = capture.proto
    info = capture.info
    names = PROTO_NAMES
    chunk: list[str] = []
    for i in range(n):
        rssi = int(rs[i])
        d = int(dst[i])
        line = format_record_line(
            int(ts[i]),
            int(sn[i]),
            fmt_mac(int(src[i])),
            fmt_mac(d) if d != MAC_NONE else None,
            int(fl[i]),
            rssi if rssi != RSSI_NONE else None,
            names[int(pr[i])],
            info.get(i),
        )
        chunk.append(line)
        if len(chunk) == 65536:
            out.write("\n".join(chunk) + "\n")
            chunk = []
    if chunk:
        out.write("\n".join(chunk) + "\n")
    return n


def write_capture_file(capture: CaptureSet, path) -> int:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        return write_capture_records(capture, fh)


def parse_capture_file(path) -> tuple[CaptureSet, ParseReport]:
    with open(path, "rb") as fh:
        return parse_capture_records(fh)

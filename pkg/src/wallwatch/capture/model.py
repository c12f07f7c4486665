"""Canonical capture data types.

A capture is stored column-wise in numpy arrays so that multi-week,
multi-million-record captures stay within a few hundred MB and the
analysis stages can run vectorized. ``FrameRecord`` is the logical
per-record view used for construction, iteration and small fixtures.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from wallwatch.errors import WallwatchError

US_PER_S = 1_000_000

# Sentinels for optional columns.
RSSI_NONE = np.int16(-32768)
MAC_NONE = np.int64(-1)

# Only plaintext metadata ever enters the info map; payload bytes are
# stripped at capture time and must never reappear downstream.
ALLOWED_INFO_KEYS = frozenset({"ssid", "ble_adv", "mdns_name"})

_MAC_RE = re.compile(r"^[0-9a-f]{2}(:[0-9a-f]{2}){5}$")


class Proto(IntEnum):
    """Frame classes the toolkit distinguishes."""

    wifi_data = 0
    wifi_probe_req = 1
    wifi_beacon = 2
    ble_adv = 3


PROTO_NAMES = {p.value: p.name for p in Proto}
PROTO_CODES = {p.name: p.value for p in Proto}


def mac_to_int(mac: str) -> int:
    """Convert 'aa:bb:cc:dd:ee:ff' to its 48-bit integer value."""
    m = mac.lower()
    if not _MAC_RE.match(m):
        raise ValueError(f"invalid MAC address: {mac!r}")
    return int(m.replace(":", ""), 16)


def int_to_mac(value: int) -> str:
    if not 0 <= value <= 0xFFFFFFFFFFFF:
        raise ValueError(f"MAC integer out of range: {value}")
    h = f"{value:012x}"
    return ":".join(h[i : i + 2] for i in range(0, 12, 2))


def is_locally_administered(mac: str) -> bool:
    """True when bit 1 of the first octet is set (randomized/software MAC)."""
    first = int(mac.split(":", 1)[0], 16)
    return bool(first & 0x02)


@dataclass(frozen=True)
class FrameRecord:
    """Metadata of one captured frame. No payload bytes are ever stored."""

    ts_us: int
    sniffer_id: int
    src_mac: str
    frame_len: int
    proto: Proto
    dst_mac: Optional[str] = None
    rssi_dbm: Optional[int] = None
    info: Mapping[str, bytes] = field(default_factory=dict)

    def __post_init__(self):
        if self.ts_us < 0:
            raise ValueError("ts_us must be non-negative")
        if self.frame_len < 0:
            raise ValueError("frame_len must be non-negative")
        if not 0 <= self.sniffer_id <= 255:
            raise ValueError("sniffer_id out of range")
        mac_to_int(self.src_mac)
        if self.dst_mac is not None:
            mac_to_int(self.dst_mac)
        if self.rssi_dbm is not None and not -120 <= self.rssi_dbm <= 0:
            raise ValueError(f"rssi_dbm out of range: {self.rssi_dbm}")
        bad = set(self.info) - ALLOWED_INFO_KEYS
        if bad:
            raise ValueError(f"unsupported info keys: {sorted(bad)}")
        for v in self.info.values():
            if not isinstance(v, (bytes, bytearray)):
                raise ValueError("info values must be byte strings")


class CaptureSet:
    """A time-ordered collection of frame records from one or more sniffers.

    Records are kept sorted by (ts_us, sniffer_id, src_mac). The window
    [t_start_us, t_end_us] covers every record; an empty set has the
    degenerate window [0, 0].
    """

    __slots__ = (
        "ts_us",
        "sniffer_id",
        "src_mac",
        "dst_mac",
        "frame_len",
        "rssi_dbm",
        "proto",
        "info",
        "t_start_us",
        "t_end_us",
        "sniffer_count",
    )

    def __init__(
        self,
        ts_us: np.ndarray,
        sniffer_id: np.ndarray,
        src_mac: np.ndarray,
        dst_mac: np.ndarray,
        frame_len: np.ndarray,
        rssi_dbm: np.ndarray,
        proto: np.ndarray,
        info: Optional[dict[int, dict[str, bytes]]] = None,
        t_start_us: Optional[int] = None,
        t_end_us: Optional[int] = None,
        *,
        presorted: bool = False,
    ):
        n = len(ts_us)
        cols = (sniffer_id, src_mac, dst_mac, frame_len, rssi_dbm, proto)
        if any(len(c) != n for c in cols):
            raise ValueError("column length mismatch")

        ts_us = np.asarray(ts_us, dtype=np.int64)
        sniffer_id = np.asarray(sniffer_id, dtype=np.int16)
        src_mac = np.asarray(src_mac, dtype=np.int64)
        dst_mac = np.asarray(dst_mac, dtype=np.int64)
        frame_len = np.asarray(frame_len, dtype=np.int64)
        rssi_dbm = np.asarray(rssi_dbm, dtype=np.int16)
        proto = np.asarray(proto, dtype=np.uint8)
        info = info or {}

        if n and not presorted:
            order = np.lexsort((src_mac, sniffer_id, ts_us))
            if not np.array_equal(order, np.arange(n)):
                ts_us = ts_us[order]
                sniffer_id = sniffer_id[order]
                src_mac = src_mac[order]
                dst_mac = dst_mac[order]
                frame_len = frame_len[order]
                rssi_dbm = rssi_dbm[order]
                proto = proto[order]
                if info:
                    inverse = np.empty(n, dtype=np.int64)
                    inverse[order] = np.arange(n)
                    info = {int(inverse[i]): v for i, v in info.items()}

        self.ts_us = ts_us
        self.sniffer_id = sniffer_id
        self.src_mac = src_mac
        self.dst_mac = dst_mac
        self.frame_len = frame_len
        self.rssi_dbm = rssi_dbm
        self.proto = proto
        self.info = info

        if n:
            lo, hi = int(ts_us[0]), int(ts_us[-1])
        else:
            lo, hi = 0, 0
        self.t_start_us = lo if t_start_us is None else int(t_start_us)
        self.t_end_us = hi if t_end_us is None else int(t_end_us)
        if n and (ts_us[0] < self.t_start_us or ts_us[-1] > self.t_end_us):
            raise ValueError("records fall outside the declared window")
        if self.t_end_us < self.t_start_us:
            raise ValueError("t_end_us precedes t_start_us")

        if n:
            self.sniffer_count = int(np.unique(sniffer_id).size)
        else:
            self.sniffer_count = 0

    @classmethod
    def from_records(
        cls,
        records: Iterable[FrameRecord],
        t_start_us: Optional[int] = None,
        t_end_us: Optional[int] = None,
    ) -> "CaptureSet":
        recs = list(records)
        n = len(recs)
        ts = np.empty(n, dtype=np.int64)
        sn = np.empty(n, dtype=np.int16)
        src = np.empty(n, dtype=np.int64)
        dst = np.empty(n, dtype=np.int64)
        fl = np.empty(n, dtype=np.int64)
        rs = np.empty(n, dtype=np.int16)
        pr = np.empty(n, dtype=np.uint8)
        info: dict[int, dict[str, bytes]] = {}
        for i, r in enumerate(recs):
            ts[i] = r.ts_us
            sn[i] = r.sniffer_id
            src[i] = mac_to_int(r.src_mac)
            dst[i] = MAC_NONE if r.dst_mac is None else mac_to_int(r.dst_mac)
            fl[i] = r.frame_len
            rs[i] = RSSI_NONE if r.rssi_dbm is None else r.rssi_dbm
            pr[i] = int(r.proto)
            if r.info:
                info[i] = dict(r.info)
        return cls(ts, sn, src, dst, fl, rs, pr, info, t_start_us, t_end_us)

    def __len__(self) -> int:
        return len(self.ts_us)

    def record(self, i: int) -> FrameRecord:
        if i < 0:
            i += len(self)
        rssi = int(self.rssi_dbm[i])
        dst = int(self.dst_mac[i])
        return FrameRecord(
            ts_us=int(self.ts_us[i]),
            sniffer_id=int(self.sniffer_id[i]),
            src_mac=int_to_mac(int(self.src_mac[i])),
            dst_mac=None if dst == MAC_NONE else int_to_mac(dst),
            frame_len=int(self.frame_len[i]),
            rssi_dbm=None if rssi == RSSI_NONE else rssi,
            proto=Proto(int(self.proto[i])),
            info=dict(self.info.get(i, {})),
        )

    def __iter__(self) -> Iterator[FrameRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def macs(self) -> list[str]:
        """Distinct source MACs, ascending."""
        return [int_to_mac(int(v)) for v in np.unique(self.src_mac)]

    def select(
        self,
        mac: Optional[str] = None,
        proto: Optional[Proto] = None,
        t0_us: Optional[int] = None,
        t1_us: Optional[int] = None,
    ) -> "CaptureSet":
        """Subset by source MAC, protocol and/or closed time window."""
        mask = np.ones(len(self), dtype=bool)
        if mac is not None:
            mask &= self.src_mac == mac_to_int(mac)
        if proto is not None:
            mask &= self.proto == int(proto)
        if t0_us is not None:
            mask &= self.ts_us >= t0_us
        if t1_us is not None:
            mask &= self.ts_us <= t1_us
        idx = np.flatnonzero(mask)
        info = {}
        if self.info:
            pos = {int(j): k for k, j in enumerate(idx)}
            for j, v in self.info.items():
                if j in pos:
                    info[pos[j]] = v
        lo = self.t_start_us if t0_us is None else max(self.t_start_us, t0_us)
        hi = self.t_end_us if t1_us is None else min(self.t_end_us, t1_us)
        if hi < lo:
            lo, hi = self.t_start_us, self.t_start_us
        return CaptureSet(
            self.ts_us[idx],
            self.sniffer_id[idx],
            self.src_mac[idx],
            self.dst_mac[idx],
            self.frame_len[idx],
            self.rssi_dbm[idx],
            self.proto[idx],
            info,
            lo,
            hi,
            presorted=True,
        )

    def check_invariants(self) -> None:
        n = len(self)
        if n == 0:
            return
        key = np.lexsort((self.src_mac, self.sniffer_id, self.ts_us))
        if not np.array_equal(key, np.arange(n)):
            raise WallwatchError("capture records are not sorted")
        if int(self.ts_us[0]) < self.t_start_us or int(self.ts_us[-1]) > self.t_end_us:
            raise WallwatchError("records outside window bounds")
        if (self.frame_len < 0).any():
            raise WallwatchError("negative frame length")
        real = self.rssi_dbm[self.rssi_dbm != RSSI_NONE]
        if real.size and ((real < -120).any() or (real > 0).any()):
            raise WallwatchError("rssi out of range")
        for entry in self.info.values():
            bad = set(entry) - ALLOWED_INFO_KEYS
            if bad:
                raise WallwatchError(f"unsupported info keys: {sorted(bad)}")


@dataclass
class TrafficSeries:
    """Per-device traffic aggregated into fixed-width wall-clock bins."""

    mac: str
    bin_width_s: int
    t0_us: int
    counts: np.ndarray  # int64, frames per bin
    byte_sums: np.ndarray  # int64, payload-length sum per bin
    rssi_mean: np.ndarray  # float32 (n_sniffers, n_bins), NaN where absent

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def n_sniffers(self) -> int:
        return self.rssi_mean.shape[0]

    @property
    def span_s(self) -> int:
        return self.n_bins * self.bin_width_s

    def bin_start_us(self, i: int) -> int:
        return self.t0_us + i * self.bin_width_s * US_PER_S

    def check_invariants(self, expected_total: Optional[int] = None) -> None:
        if len(self.byte_sums) != self.n_bins:
            raise WallwatchError("counts/bytes length mismatch")
        if self.rssi_mean.shape[1] != self.n_bins:
            raise WallwatchError("rssi_mean length mismatch")
        if (self.counts < 0).any():
            raise WallwatchError("negative bin count")
        if expected_total is not None and int(self.counts.sum()) != expected_total:
            raise WallwatchError("bin counts do not conserve record total")


def bin_origin_us(t_start_us: int) -> int:
    """Bins align to whole wall-clock seconds at or before the window start."""
    return (t_start_us // US_PER_S) * US_PER_S


def bin_count(t0_us: int, t_end_us: int, bin_width_s: int) -> int:
    width_us = bin_width_s * US_PER_S
    span = max(0, t_end_us - t0_us)
    return max(1, math.ceil(span / width_us))

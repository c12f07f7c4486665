"""Turn a scenario into three sniffer captures plus ground truth.

Every stochastic quantity (heartbeat jitter, session densities and
amplitudes, per-frame noise) is drawn from a Philox counter-based
generator seeded by (scenario seed, device index, stream id). Devices
therefore generate independently and reproducibly: the same scenario
yields bit-identical captures regardless of generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from wallwatch.capture.model import (
    MAC_NONE,
    RSSI_NONE,
    CaptureSet,
    Proto,
    US_PER_S,
    mac_to_int,
)
from wallwatch.identify.ble import build_adv_with_name
from wallwatch.simulate.scenario import (
    KIND_AUTONOMOUS,
    KIND_MOBILE,
    S_PER_DAY,
    DeviceSpec,
    Scenario,
    expand_windows,
)
from wallwatch.simulate.truth import DeviceTruth, GroundTruth

# Stream ids for the per-device generators. Each purpose owns one stream
# so adding draws to one program never shifts another.
_S_HEARTBEAT = 0
_S_BLE = 1
_S_SETUP = 2
_S_MDNS = 3
_S_PROBE = 4
_S_OFFSETS = 5
_S_RSSI0 = 6  # .. +2 for sniffers 1 and 2
_S_TRICKLE = 16  # + spec index
_S_SESSION_MASK = 48  # + spec index
_S_SESSION_AMP = 80  # + spec index
_S_SESSION_SPIKE = 112  # + spec index


def _rng(seed: int, dev_idx: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=(int(seed), int(dev_idx), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


def _walk_times(
    rng: np.random.Generator, w0: float, w1: float, period: float, jitter: float
) -> np.ndarray:
    """Quasi-periodic event times in [w0, w1): each step is period plus
    uniform jitter, so the phase drifts but the cadence holds."""
    span = w1 - w0
    if span <= 0 or period <= 0:
        return np.empty(0)
    n = int(span / period) + 2
    steps = np.full(n, period, dtype=np.float64)
    if jitter > 0:
        steps += rng.uniform(-jitter, jitter, n)
    t = w0 + np.cumsum(steps)
    return t[t < w1]


def _clip_intervals(intervals, lo: int, hi: int) -> list[tuple[int, int]]:
    out = []
    for a, b in intervals:
        a, b = max(a, lo), min(b, hi)
        if b > a:
            out.append((a, b))
    return sorted(out)


def _merge(intervals) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def _subtract(intervals, holes) -> list[tuple[int, int]]:
    out = []
    for a, b in intervals:
        cur = a
        for h0, h1 in holes:
            if h1 <= cur or h0 >= b:
                continue
            if h0 > cur:
                out.append((cur, h0))
            cur = max(cur, h1)
            if cur >= b:
                break
        if cur < b:
            out.append((cur, b))
    return out


def _mask_times(times: np.ndarray, holes) -> np.ndarray:
    """Drop event times that fall inside any hole interval."""
    if not holes or times.size == 0:
        return times
    starts = np.array([h[0] for h in holes], dtype=np.float64)
    ends = np.array([h[1] for h in holes], dtype=np.float64)
    idx = np.searchsorted(starts, times, side="right") - 1
    inside = (idx >= 0) & (times < ends[np.clip(idx, 0, len(ends) - 1)])
    return times[~inside]


@dataclass
class _Emission:
    ts_s: np.ndarray  # float seconds from scenario start
    frame_len: np.ndarray
    proto: np.ndarray
    info: dict[int, dict[str, bytes]] = field(default_factory=dict)


class _DeviceFrames:
    def __init__(self):
        self.parts: list[_Emission] = []

    def add(
        self,
        ts_s: np.ndarray,
        frame_len: int,
        proto: Proto,
        info: Optional[dict[str, bytes]] = None,
    ):
        n = len(ts_s)
        if n == 0:
            return
        em = _Emission(
            ts_s=np.asarray(ts_s, dtype=np.float64),
            frame_len=np.full(n, frame_len, dtype=np.int32),
            proto=np.full(n, int(proto), dtype=np.uint8),
        )
        if info is not None:
            # One shared dict for the whole group keeps memory flat.
            em.info = {i: info for i in range(n)}
        self.parts.append(em)

    def concatenated(self) -> _Emission:
        if not self.parts:
            return _Emission(
                np.empty(0), np.empty(0, np.int32), np.empty(0, np.uint8), {}
            )
        ts = np.concatenate([p.ts_s for p in self.parts])
        fl = np.concatenate([p.frame_len for p in self.parts])
        pr = np.concatenate([p.proto for p in self.parts])
        info: dict[int, dict[str, bytes]] = {}
        base = 0
        for p in self.parts:
            for i, v in p.info.items():
                info[base + i] = v
            base += len(p.ts_s)
        order = np.argsort(ts, kind="stable")
        if info:
            inverse = np.empty(len(ts), dtype=np.int64)
            inverse[order] = np.arange(len(ts))
            info = {int(inverse[i]): v for i, v in info.items()}
        return _Emission(ts[order], fl[order], pr[order], info)


def _device_emissions(
    sc: Scenario, dev_idx: int, dev: DeviceSpec
) -> tuple[_Emission, list[tuple[int, int]], list[tuple[int, int]]]:
    """All frames a device transmits, plus its away and session intervals
    (in scenario seconds) for ground-truth labeling."""
    seed = sc.seed
    duration = sc.duration_s
    life0 = dev.appear_s
    life1 = duration if dev.disappear_s is None else min(dev.disappear_s, duration)
    frames = _DeviceFrames()
    if life1 <= life0:
        return frames.concatenated(), [], []

    away = _merge(
        [
            iv
            for spec in dev.absences
            for iv in expand_windows(
                duration, spec.leave_s, spec.return_s, spec.weekdays, spec.day_indices
            )
        ]
    )
    away = _clip_intervals(away, life0, life1)

    # Autonomous heartbeat (or infrastructure beacons).
    if dev.period_s:
        rng = _rng(seed, dev_idx, _S_HEARTBEAT)
        t = _walk_times(rng, life0, life1, dev.period_s, dev.jitter_s)
        t = _mask_times(t, away)
        if dev.beacon_ssid:
            frames.add(
                t,
                dev.frame_len,
                Proto.wifi_beacon,
                {"ssid": dev.beacon_ssid.encode()},
            )
        else:
            frames.add(t, dev.frame_len, Proto.wifi_data)

    # Scheduled event bursts (e.g. a motion sensor reporting).
    if dev.burst_times_s:
        times = []
        for d in range(math.ceil(duration / S_PER_DAY)):
            for s in dev.burst_times_s:
                base = d * S_PER_DAY + s
                if life0 <= base < life1:
                    times.extend(base + 0.2 * k for k in range(dev.burst_frames))
        t = _mask_times(np.array(times, dtype=np.float64), away)
        frames.add(t, dev.frame_len, Proto.wifi_data)

    # BLE advertising.
    if dev.ble_period_s and dev.ble_name:
        rng = _rng(seed, dev_idx, _S_BLE)
        t = _walk_times(rng, life0, life1, dev.ble_period_s, dev.ble_jitter_s)
        t = _mask_times(t, away)
        frames.add(
            t, 46, Proto.ble_adv, {"ble_adv": build_adv_with_name(dev.ble_name)}
        )

    # Installation phase: temporary setup AP and mdns chatter.
    if dev.setup_window:
        w0, w1 = dev.setup_window
        w0, w1 = max(w0, life0), min(w1, life1)
        if w1 > w0:
            if dev.setup_ssid:
                rng = _rng(seed, dev_idx, _S_SETUP)
                t = _walk_times(rng, w0, w1, dev.setup_period_s, 0.1)
                frames.add(
                    t, 140, Proto.wifi_beacon, {"ssid": dev.setup_ssid.encode()}
                )
            if dev.mdns_name:
                rng = _rng(seed, dev_idx, _S_MDNS)
                t = _walk_times(rng, w0, w1, max(dev.setup_period_s, 5.0), 0.5)
                frames.add(
                    t, 180, Proto.wifi_data, {"mdns_name": dev.mdns_name.encode()}
                )

    # Preferred-network probe requests.
    if dev.probe_ssid:
        rng = _rng(seed, dev_idx, _S_PROBE)
        t = _walk_times(rng, life0, life1, dev.probe_period_s, dev.probe_period_s / 10)
        t = _mask_times(t, away)
        frames.add(t, 80, Proto.wifi_probe_req, {"ssid": dev.probe_ssid.encode()})

    # Background trickle.
    for k, spec in enumerate(dev.trickles):
        rng = _rng(seed, dev_idx, _S_TRICKLE + k)
        windows = expand_windows(
            duration, spec.start_s, spec.end_s, spec.weekdays, spec.day_indices
        )
        windows = _subtract(_clip_intervals(windows, life0, life1), away)
        times = [
            _walk_times(rng, w0, w1, spec.period_s, spec.jitter_s)
            for w0, w1 in windows
        ]
        if times:
            frames.add(np.concatenate(times), spec.frame_len, Proto.wifi_data)

    # Usage sessions.
    session_intervals: list[tuple[int, int]] = []
    off_rng = _rng(seed, dev_idx, _S_OFFSETS)
    for k, spec in enumerate(dev.sessions):
        mask_rng = _rng(seed, dev_idx, _S_SESSION_MASK + k)
        amp_rng = _rng(seed, dev_idx, _S_SESSION_AMP + k)
        spike_rng = _rng(seed, dev_idx, _S_SESSION_SPIKE + k)
        windows = expand_windows(
            duration, spec.start_s, spec.end_s, spec.weekdays, spec.day_indices
        )
        windows = _subtract(_clip_intervals(windows, life0, life1), away)
        session_intervals.extend(windows)
        for w0, w1 in windows:
            n = w1 - w0
            if spec.density >= 1.0:
                active = np.ones(n, dtype=bool)
            else:
                active = mask_rng.random(n) < spec.density
            if spec.amp_lo == spec.amp_hi:
                amps = np.full(n, spec.amp_lo, dtype=np.int64)
            else:
                amps = amp_rng.integers(spec.amp_lo, spec.amp_hi + 1, n)
            counts = np.where(active, amps, 0)
            if spec.spike_period_s > 0:
                st = _walk_times(
                    spike_rng, w0, w1, spec.spike_period_s, spec.spike_period_s * 0.2
                )
                sidx = (st - w0).astype(np.int64)
                if spec.spike_lo == spec.spike_hi:
                    sa = np.full(len(sidx), spec.spike_lo, dtype=np.int64)
                else:
                    sa = spike_rng.integers(spec.spike_lo, spec.spike_hi + 1, len(sidx))
                np.add.at(counts, sidx, sa)
            total = int(counts.sum())
            if total == 0:
                continue
            seconds = np.repeat(np.arange(w0, w1, dtype=np.float64), counts)
            t = seconds + off_rng.random(total)
            frames.add(t, spec.frame_len, Proto.wifi_data)

    return frames.concatenated(), away, _merge(session_intervals)


def _positions_at(
    sc: Scenario, dev: DeviceSpec, ts_s: np.ndarray
) -> np.ndarray:
    """Device position for every frame time (linear moves between
    waypoints, at the home position otherwise)."""
    n = len(ts_s)
    pos = np.empty((n, 2), dtype=np.float64)
    pos[:, 0] = dev.x
    pos[:, 1] = dev.y
    if not dev.waypoints:
        return pos

    knots_t = [0.0]
    knots_x = [dev.x]
    knots_y = [dev.y]
    events = []
    for spec in dev.waypoints:
        for d in _wp_days(sc.duration_s, spec):
            events.append((d * S_PER_DAY + spec.time_s, spec))
    for t, spec in sorted(events, key=lambda e: e[0]):
        prev_x, prev_y = knots_x[-1], knots_y[-1]
        knots_t.extend([float(t), float(t + spec.move_s)])
        knots_x.extend([prev_x, spec.x])
        knots_y.extend([prev_y, spec.y])
    pos[:, 0] = np.interp(ts_s, knots_t, knots_x)
    pos[:, 1] = np.interp(ts_s, knots_t, knots_y)
    return pos


def _wp_days(duration_s: int, spec) -> list[int]:
    from wallwatch.simulate.scenario import expand_days

    return expand_days(duration_s, spec.weekdays, spec.day_indices)


def _wall_attenuation(
    pos: np.ndarray, sniffer: tuple[float, float], walls
) -> np.ndarray:
    """Total attenuation (dB) of the walls each device->sniffer path
    crosses, using a strict segment intersection test per wall."""
    n = len(pos)
    total = np.zeros(n, dtype=np.float64)
    sx, sy = sniffer
    px, py = pos[:, 0], pos[:, 1]
    for w in walls:
        ax, ay, bx, by = w.x0, w.y0, w.x1, w.y1
        d1 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        d2 = (bx - ax) * (sy - ay) - (by - ay) * (sx - ax)
        d3 = (sx - px) * (ay - py) - (sy - py) * (ax - px)
        d4 = (sx - px) * (by - py) - (sy - py) * (bx - px)
        crosses = ((d1 * d2) < 0) & ((d3 * d4) < 0)
        total += crosses * w.atten_db
    return total


def _true_segments(
    sc: Scenario,
    dev: DeviceSpec,
    away: list[tuple[int, int]],
    sessions: list[tuple[int, int]],
) -> list[tuple[int, int, str]]:
    duration = sc.duration_s
    life0 = dev.appear_s
    life1 = duration if dev.disappear_s is None else min(dev.disappear_s, duration)

    boundaries = {0, duration}
    boundaries.update([life0, life1])
    for a, b in away:
        boundaries.update([a, b])
    for a, b in sessions:
        boundaries.update([a, b])
    cuts = sorted(b for b in boundaries if 0 <= b <= duration)

    def state_of(s: int) -> str:
        if s < life0 or s >= life1:
            return "off"
        for a, b in away:
            if a <= s < b:
                return "off"
        for a, b in sessions:
            if a <= s < b:
                return "active"
        return "idle"

    segments: list[tuple[int, int, str]] = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        st = state_of(a)
        if segments and segments[-1][2] == st:
            segments[-1] = (segments[-1][0], b, st)
        else:
            segments.append((a, b, st))
    t0 = sc.start_epoch_us
    return [(t0 + a * US_PER_S, t0 + b * US_PER_S, s) for a, b, s in segments]


def generate(sc: Scenario) -> tuple[list[CaptureSet], GroundTruth]:
    """Simulate the scenario; returns one CaptureSet per sniffer and the
    ground truth."""
    sc.validate()
    t_start = sc.start_epoch_us
    t_end = t_start + sc.duration_s * US_PER_S
    cx = sum(p[0] for p in sc.sniffers) / 3.0
    cy = sum(p[1] for p in sc.sniffers) / 3.0

    router_mac = next(
        (mac_to_int(d.mac) for d in sc.devices if d.beacon_ssid), MAC_NONE
    )

    per_sniffer: list[dict[str, list]] = [
        {"ts": [], "src": [], "dst": [], "fl": [], "rs": [], "pr": [], "info": []}
        for _ in range(3)
    ]
    truth_devices: dict[str, DeviceTruth] = {}
    drops: dict[str, list[int]] = {}

    for dev_idx, dev in enumerate(sc.devices):
        em, away, sessions = _device_emissions(sc, dev_idx, dev)
        n = len(em.ts_s)
        mac_val = mac_to_int(dev.mac)

        pos = _positions_at(sc, dev, em.ts_s) if n else np.empty((0, 2))
        ts_us = t_start + np.rint(em.ts_s * US_PER_S).astype(np.int64)

        dst = np.full(n, MAC_NONE, dtype=np.int64)
        if router_mac != MAC_NONE and mac_val != router_mac:
            dst[em.proto == int(Proto.wifi_data)] = router_mac

        sigma = math.hypot(sc.radio.noise_sigma_db, dev.carry_sigma_db)
        dev_drops = [0, 0, 0]
        for s_idx, sniffer in enumerate(sc.sniffers):
            d = np.hypot(pos[:, 0] - sniffer[0], pos[:, 1] - sniffer[1])
            d = np.maximum(d, sc.radio.d0_m)
            pl = sc.radio.pl0_db + 10.0 * sc.radio.exponent * np.log10(
                d / sc.radio.d0_m
            )
            rssi = dev.tx_power_dbm - pl
            if sc.floorplan.walls:
                rssi = rssi - _wall_attenuation(pos, sniffer, sc.floorplan.walls)
            if sigma > 0:
                rng = _rng(sc.seed, dev_idx, _S_RSSI0 + s_idx)
                rssi = rssi + rng.normal(0.0, sigma, n)
            rssi_q = np.rint(rssi).astype(np.int64)
            keep = rssi_q >= sc.radio.sensitivity_floor_dbm
            np.clip(rssi_q, -120, 0, out=rssi_q)
            dev_drops[s_idx] = int(n - keep.sum())

            bucket = per_sniffer[s_idx]
            base = sum(len(a) for a in bucket["ts"])
            kept_idx = np.flatnonzero(keep)
            bucket["ts"].append(ts_us[keep])
            bucket["src"].append(np.full(len(kept_idx), mac_val, dtype=np.int64))
            bucket["dst"].append(dst[keep])
            bucket["fl"].append(em.frame_len[keep].astype(np.int64))
            bucket["rs"].append(rssi_q[keep].astype(np.int16))
            bucket["pr"].append(em.proto[keep])
            if em.info:
                pos_of = {int(j): k for k, j in enumerate(kept_idx)}
                bucket["info"].append(
                    {base + pos_of[i]: v for i, v in em.info.items() if i in pos_of}
                )

        bearing = None
        if dev.kind != KIND_MOBILE:
            bearing = math.degrees(math.atan2(dev.y - cy, dev.x - cx)) % 360.0
        truth_devices[dev.mac] = DeviceTruth(
            mac=dev.mac,
            name=dev.name,
            identity=dev.true_identity,
            profile=dev.true_profile,
            mobility=dev.true_mobility,
            room=dev.room or sc.floorplan.room_at(dev.x, dev.y),
            position=None if dev.kind == KIND_MOBILE else (dev.x, dev.y),
            bearing_deg=bearing,
            state_segments=_true_segments(sc, dev, away, sessions),
            emitted_frames=n,
        )
        drops[dev.mac] = dev_drops

    captures = []
    for s_idx in range(3):
        b = per_sniffer[s_idx]
        if b["ts"]:
            ts = np.concatenate(b["ts"])
            info: dict[int, dict[str, bytes]] = {}
            for chunk in b["info"]:
                info.update(chunk)
            cap = CaptureSet(
                ts,
                np.full(len(ts), s_idx, dtype=np.int16),
                np.concatenate(b["src"]),
                np.concatenate(b["dst"]),
                np.concatenate(b["fl"]),
                np.concatenate(b["rs"]),
                np.concatenate(b["pr"]),
                info,
                t_start,
                t_end,
            )
        else:
            cap = CaptureSet.from_records([], t_start, t_end)
        captures.append(cap)

    truth = GroundTruth(
        scenario_name=sc.name,
        seed=sc.seed,
        start_epoch_us=sc.start_epoch_us,
        duration_s=sc.duration_s,
        sniffers=[tuple(p) for p in sc.sniffers],
        devices=truth_devices,
        events=list(getattr(sc, "truth_events", []) or []),
        subject_map=dict(getattr(sc, "subject_map", {}) or {}),
        drops=drops,
    )
    return captures, truth

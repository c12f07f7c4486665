"""Built-in scenarios: a three-week household study and smaller variants.

The default household models ten resident devices (smart bulbs, sensors,
plug, router, TV, console, laptop, phone) in a five-room apartment with
the monitoring sniffers in the living room, plus an overnight visit by
two guests with randomized-MAC smartphones in the second week. Schedules
are scripted so that every semantic event the analysis should recover
has a known ground-truth counterpart.
"""

from __future__ import annotations

import dataclasses
from datetime import datetime, timezone

from wallwatch.capture.model import US_PER_S
from wallwatch.simulate.scenario import (
    AbsenceSpec,
    DeviceSpec,
    Floorplan,
    RadioModel,
    Room,
    Scenario,
    SessionSpec,
    TrickleSpec,
    Wall,
    WaypointSpec,
    S_PER_DAY,
)

# Monday 2025-03-03 00:00 UTC; scenario days then map 0=Mon .. 6=Sun.
START_EPOCH_US = int(
    datetime(2025, 3, 3, tzinfo=timezone.utc).timestamp() * US_PER_S
)

MAC_TUYA_BULB = "d8:f1:5b:3a:74:c2"
MAC_SHELLY_HT = "08:b6:1f:52:9e:11"
MAC_TAPO_BULB = "6c:5a:b0:7d:22:05"
MAC_TAPO_PLUG = "54:af:97:4e:b1:9a"
MAC_MOTION = "8c:f6:81:2b:c4:77"
MAC_LAPTOP = "9c:fc:e8:aa:30:41"
MAC_ROUTER = "24:2f:d0:16:88:d3"
MAC_TV = "20:28:3e:71:5c:f0"
MAC_SWITCH = "60:1a:0d:94:27:b8"
MAC_PHONE = "a4:45:19:c3:08:66"
MAC_GUEST1 = "ae:90:33:12:5d:ef"
MAC_GUEST2 = "e2:e2:84:6f:01:9c"

HOME_SSID = "Falkenweg12"

GUEST_NIGHT_DAY = 11  # Friday of week two

WEEKDAYS_MWF_OUT = (0, 2)  # Monday, Wednesday morning absences
WEEKDAYS_HOME_MORNINGS = (1, 3, 4, 5, 6)

POS_OFFICE_DESK = (1.6, 1.2)
POS_KITCHEN = (1.2, 6.2)
POS_COUCH = (9.6, 6.4)
POS_BED = (6.4, 6.9)


def hm(h: float, m: float = 0.0, s: float = 0.0) -> int:
    return int(h * 3600 + m * 60 + s)


def _floorplan() -> Floorplan:
    rooms = [
        Room("office", 0.0, 0.0, 4.0, 4.0),
        Room("kitchen", 0.0, 4.0, 4.0, 8.0),
        Room("hall", 4.0, 0.0, 8.0, 2.5),
        Room("bath", 4.0, 2.5, 8.0, 4.0),
        Room("bedroom", 4.0, 4.0, 8.0, 8.0),
        Room("living", 8.0, 0.0, 12.0, 8.0),
    ]
    walls = [
        Wall(4.0, 0.0, 4.0, 8.0),  # west partition
        Wall(8.0, 0.0, 8.0, 8.0),  # living-room partition
        Wall(0.0, 4.0, 4.0, 4.0),  # office / kitchen
        Wall(4.0, 4.0, 7.0, 4.0),  # bath / bedroom (door gap at the east end)
        Wall(4.0, 2.5, 6.0, 2.5),  # hall / bath (door gap)
    ]
    return Floorplan(rooms, walls)


SNIFFERS = ((8.8, 2.8), (11.2, 2.8), (10.0, 5.2))


def _resident_phone(days: int) -> DeviceSpec:
    guest_day = GUEST_NIGHT_DAY if days > GUEST_NIGHT_DAY + 1 else None
    sessions = [
        # Morning streaming block on home days.
        SessionSpec(
            hm(9, 10), hm(10, 25), density=0.75, amp_lo=4, amp_hi=4,
            spike_period_s=75, spike_lo=40, spike_hi=110, frame_len=820,
            weekdays=WEEKDAYS_HOME_MORNINGS,
        ),
        # Short evening use.
        SessionSpec(
            hm(20, 30), hm(21, 15), density=0.7, amp_lo=4, amp_hi=4,
            spike_period_s=90, spike_lo=30, spike_hi=90, frame_len=700,
        ),
    ]
    if guest_day is not None:
        # Guest evening runs long; interactive traffic drops around 01:35.
        sessions.append(
            SessionSpec(
                hm(21, 15), hm(24 + 1, 35), density=0.7, amp_lo=4, amp_hi=4,
                spike_period_s=90, spike_lo=30, spike_hi=90, frame_len=700,
                day_indices=(guest_day,),
            )
        )
        # The morning after, everyone wakes between 08:00 and 09:00.
        sessions.append(
            SessionSpec(
                hm(8, 10), hm(8, 25), density=0.8, amp_lo=4, amp_hi=4,
                frame_len=700, day_indices=(guest_day + 1,),
            )
        )
    return DeviceSpec(
        mac=MAC_PHONE,
        name="resident smartphone",
        kind="mobile_interactive",
        x=POS_BED[0],
        y=POS_BED[1],
        room="mobile",
        carry_sigma_db=7.0,
        mdns_name="Redmi Note 8 Pro",
        setup_window=(hm(10), hm(12)),
        probe_ssid=HOME_SSID,
        probe_period_s=1800,
        trickles=[
            TrickleSpec(hm(6, 30), hm(23, 30), period_s=4.0, jitter_s=1.5),
            TrickleSpec(0, hm(6, 30), period_s=90.0, jitter_s=20.0),
            TrickleSpec(hm(23, 30), hm(24), period_s=90.0, jitter_s=20.0),
        ],
        sessions=sessions,
        absences=[
            AbsenceSpec(hm(8), hm(14), weekdays=WEEKDAYS_MWF_OUT),
        ],
        waypoints=[
            WaypointSpec(hm(6, 30), *POS_KITCHEN),
            WaypointSpec(hm(9, 0), *POS_OFFICE_DESK),
            WaypointSpec(hm(12, 30), *POS_KITCHEN),
            WaypointSpec(hm(13, 0), *POS_OFFICE_DESK),
            WaypointSpec(hm(17, 0), *POS_KITCHEN),
            WaypointSpec(hm(19, 30), *POS_COUCH),
            WaypointSpec(hm(23, 30), *POS_BED),
        ],
        true_identity="exact_model",
        true_profile="interactive",
        true_mobility="mobile",
    )


def _laptop() -> DeviceSpec:
    return DeviceSpec(
        mac=MAC_LAPTOP,
        name="laptop",
        kind="interactive",
        x=1.2,
        y=0.8,
        room="office",
        trickles=[TrickleSpec(hm(8), hm(22), period_s=3.0, jitter_s=1.0)],
        sessions=[
            SessionSpec(
                hm(9, 30), hm(11, 30), density=0.75, amp_lo=4, amp_hi=4,
                spike_period_s=90, spike_lo=50, spike_hi=130, frame_len=1000,
                weekdays=(1, 3, 4),
            ),
            SessionSpec(
                hm(13, 30), hm(15, 30), density=0.75, amp_lo=4, amp_hi=4,
                spike_period_s=90, spike_lo=50, spike_hi=130, frame_len=1000,
                weekdays=(1, 3, 4),
            ),
            SessionSpec(
                hm(14, 30), hm(16), density=0.75, amp_lo=4, amp_hi=4,
                spike_period_s=90, spike_lo=50, spike_hi=130, frame_len=1000,
                weekdays=WEEKDAYS_MWF_OUT,
            ),
            SessionSpec(
                hm(10, 30), hm(11, 30), density=0.75, amp_lo=4, amp_hi=4,
                spike_period_s=90, spike_lo=50, spike_hi=130, frame_len=1000,
                weekdays=(5, 6),
            ),
        ],
        true_identity="vendor_only",
        true_profile="interactive",
        true_mobility="static",
    )


def _tv() -> DeviceSpec:
    return DeviceSpec(
        mac=MAC_TV,
        name="smart tv",
        kind="interactive",
        x=10.8,
        y=7.4,
        room="living",
        ble_name="LG webOS TV UQ75009LF",
        ble_period_s=30.0,
        ble_jitter_s=1.0,
        trickles=[TrickleSpec(0, hm(24), period_s=10.0, jitter_s=3.0, frame_len=110)],
        sessions=[
            SessionSpec(
                hm(19, 45), hm(21, 15), density=0.75, amp_lo=4, amp_hi=4,
                spike_period_s=60, spike_lo=60, spike_hi=160, frame_len=1200,
            ),
        ],
        true_identity="exact_model",
        true_profile="interactive",
        true_mobility="static",
    )


def _switch(days: int) -> DeviceSpec:
    return DeviceSpec(
        mac=MAC_SWITCH,
        name="game console",
        kind="interactive",
        x=11.6,
        y=7.0,
        room="living",
        appear_s=min(2 * S_PER_DAY + hm(12), max(0, days * S_PER_DAY - 1)),
        trickles=[TrickleSpec(0, hm(24), period_s=12.0, jitter_s=4.0, frame_len=100)],
        sessions=[
            SessionSpec(
                hm(19, 30), hm(21), density=0.75, amp_lo=4, amp_hi=4,
                spike_period_s=45, spike_lo=50, spike_hi=140, frame_len=1200,
                weekdays=(1, 3, 5),
            ),
        ],
        true_identity="vendor_only",
        true_profile="interactive",
        true_mobility="static",
    )


def _appliances() -> list[DeviceSpec]:
    return [
        DeviceSpec(
            mac=MAC_TUYA_BULB, name="tuya bulb", kind="autonomous",
            x=2.4, y=1.6, room="office",
            period_s=30.0, jitter_s=0.1, frame_len=110,
            true_identity="vendor_only", true_profile="autonomous",
            true_mobility="static",
        ),
        DeviceSpec(
            mac=MAC_SHELLY_HT, name="shelly ht sensor", kind="autonomous",
            x=1.6, y=7.6, room="kitchen",
            period_s=60.0, jitter_s=0.1, frame_len=140,
            ble_name="ShellyPlusHT-08B6", ble_period_s=15.0,
            true_identity="exact_model", true_profile="autonomous",
            true_mobility="static",
        ),
        DeviceSpec(
            mac=MAC_TAPO_BULB, name="tapo bulb", kind="autonomous",
            x=6.8, y=7.4, room="bedroom",
            period_s=30.0, jitter_s=0.1, frame_len=100,
            setup_ssid="Tapo_Bulb_E225", setup_window=(hm(10), hm(10, 6)),
            true_identity="exact_model", true_profile="autonomous",
            true_mobility="static",
        ),
        DeviceSpec(
            mac=MAC_TAPO_PLUG, name="tapo plug", kind="autonomous",
            x=7.6, y=6.6, room="bedroom",
            period_s=45.0, jitter_s=0.1, frame_len=100,
            true_identity="vendor_only", true_profile="autonomous",
            true_mobility="static",
        ),
        DeviceSpec(
            mac=MAC_MOTION, name="motion sensor", kind="autonomous",
            x=6.0, y=1.2, room="hall",
            period_s=60.0, jitter_s=0.1, frame_len=90,
            setup_ssid="shellymotion2-8CF681", setup_window=(hm(10, 20), hm(10, 26)),
            burst_times_s=(hm(6, 30, 30), hm(9, 0, 30), hm(12, 30, 30),
                           hm(17, 0, 30), hm(19, 30, 30)),
            burst_frames=3,
            true_identity="exact_model", true_profile="autonomous",
            true_mobility="static",
        ),
        DeviceSpec(
            mac=MAC_ROUTER, name="router", kind="autonomous",
            x=11.4, y=6.8, room="living",
            period_s=8.0, jitter_s=0.1, frame_len=130,
            beacon_ssid=HOME_SSID,
            true_identity="vendor_only", true_profile="autonomous",
            true_mobility="static",
        ),
    ]


def _guests(days: int) -> list[DeviceSpec]:
    if days <= GUEST_NIGHT_DAY + 1:
        return []
    d = GUEST_NIGHT_DAY
    arrive1 = d * S_PER_DAY + hm(21)
    arrive2 = d * S_PER_DAY + hm(22)
    depart = (d + 1) * S_PER_DAY + hm(11, 45)
    guest1 = DeviceSpec(
        mac=MAC_GUEST1,
        name="guest 1 smartphone",
        kind="mobile_interactive",
        x=9.4, y=6.6, room="living",
        carry_sigma_db=7.0,
        appear_s=arrive1,
        disappear_s=depart,
        probe_ssid="ZuHauseNet",
        probe_period_s=1200,
        trickles=[
            TrickleSpec(hm(21), hm(24 + 1, 42), period_s=5.0, jitter_s=1.5,
                        day_indices=(d,)),
            TrickleSpec(hm(1, 42), hm(8, 50), period_s=60.0, jitter_s=10.0,
                        day_indices=(d + 1,)),
            TrickleSpec(hm(8, 50), hm(11, 45), period_s=5.0, jitter_s=1.5,
                        day_indices=(d + 1,)),
        ],
        sessions=[
            SessionSpec(hm(21, 1), hm(24 + 1, 40), density=0.7, amp_lo=4, amp_hi=4,
                        spike_period_s=150, spike_lo=30, spike_hi=80, frame_len=700,
                        day_indices=(d,)),
            # Night waking at 04:00.
            SessionSpec(hm(4), hm(4, 4), density=1.0, amp_lo=4, amp_hi=4,
                        frame_len=700, day_indices=(d + 1,)),
            SessionSpec(hm(8, 50), hm(9, 10), density=0.7, amp_lo=4, amp_hi=4,
                        frame_len=700, day_indices=(d + 1,)),
        ],
        true_identity="randomized",
        true_profile="interactive",
        true_mobility="mobile",
    )
    guest2 = DeviceSpec(
        mac=MAC_GUEST2,
        name="guest 2 smartphone",
        kind="mobile_interactive",
        x=10.2, y=6.2, room="living",
        carry_sigma_db=7.0,
        appear_s=arrive2,
        disappear_s=depart,
        trickles=[
            TrickleSpec(hm(22), hm(24 + 1, 50), period_s=5.0, jitter_s=1.5,
                        day_indices=(d,)),
            TrickleSpec(hm(1, 50), hm(8, 40), period_s=60.0, jitter_s=10.0,
                        day_indices=(d + 1,)),
            TrickleSpec(hm(8, 40), hm(11, 45), period_s=5.0, jitter_s=1.5,
                        day_indices=(d + 1,)),
        ],
        sessions=[
            SessionSpec(hm(22, 1), hm(24 + 1, 48), density=0.7, amp_lo=4, amp_hi=4,
                        spike_period_s=150, spike_lo=30, spike_hi=80, frame_len=700,
                        day_indices=(d,)),
            SessionSpec(hm(8, 40), hm(9), density=0.7, amp_lo=4, amp_hi=4,
                        frame_len=700, day_indices=(d + 1,)),
        ],
        true_identity="randomized",
        true_profile="interactive",
        true_mobility="mobile",
    )
    return [guest1, guest2]


def _guest_truth_events(start_epoch_us: int) -> list[dict]:
    d = GUEST_NIGHT_DAY

    def at(day: int, sec: int) -> int:
        return start_epoch_us + (day * S_PER_DAY + sec) * US_PER_S

    return [
        {"kind": "guest_arrive", "subject": "guest-1", "ts_us": at(d, hm(21))},
        {"kind": "guest_arrive", "subject": "guest-2", "ts_us": at(d, hm(22))},
        {"kind": "sleep", "subject": "resident", "ts_us": at(d, hm(24 + 1, 35))},
        {"kind": "sleep", "subject": "guest-1", "ts_us": at(d, hm(24 + 1, 40))},
        {"kind": "sleep", "subject": "guest-2", "ts_us": at(d, hm(24 + 1, 48))},
        {"kind": "wake", "subject": "guest-1", "ts_us": at(d + 1, hm(4))},
        {"kind": "wake", "subject": "resident", "ts_us": at(d + 1, hm(8, 10))},
        {"kind": "wake", "subject": "guest-2", "ts_us": at(d + 1, hm(8, 40))},
        {"kind": "guest_depart", "subject": "guest-1", "ts_us": at(d + 1, hm(11, 45))},
        {"kind": "guest_depart", "subject": "guest-2", "ts_us": at(d + 1, hm(11, 45))},
    ]


def build_household(
    days: int = 21,
    seed: int = 42,
    noise: str = "default",
    walls: bool = True,
    include_guests: bool = True,
) -> Scenario:
    """The study household.

    noise: 'default' (sigma 3 dB), 'noisy' (sigma 4 dB) or 'zero'
    (deterministic emissions, no RSSI noise).
    """
    floorplan = _floorplan()
    if not walls:
        floorplan = Floorplan(floorplan.rooms, [])

    devices = _appliances()
    devices.append(_laptop())
    devices.append(_tv())
    devices.append(_switch(days))
    devices.append(_resident_phone(days))
    if include_guests:
        devices.extend(_guests(days))

    sigma = {"default": 3.0, "noisy": 4.0, "zero": 0.0}[noise]
    sc = Scenario(
        name=f"household-{days}d-{noise}" + ("" if walls else "-nowalls"),
        seed=seed,
        start_epoch_us=START_EPOCH_US,
        duration_s=days * S_PER_DAY,
        floorplan=floorplan,
        radio=RadioModel(noise_sigma_db=sigma),
        sniffers=SNIFFERS,
        devices=devices,
        truth_events=(
            _guest_truth_events(START_EPOCH_US)
            if include_guests and days > GUEST_NIGHT_DAY + 1
            else []
        ),
        subject_map={
            "resident": MAC_PHONE,
            **(
                {"guest-1": MAC_GUEST1, "guest-2": MAC_GUEST2}
                if include_guests and days > GUEST_NIGHT_DAY + 1
                else {}
            ),
        },
    )
    if noise == "zero":
        sc = zero_noise_variant(sc)
    sc.validate()
    return sc


def build_guest_night(seed: int = 42, noise: str = "default") -> Scenario:
    """Thirteen days: enough warm-up history plus the guest visit."""
    return build_household(days=13, seed=seed, noise=noise)


def build_fig_day(seed: int = 42, noise: str = "default") -> Scenario:
    """One day, one smartphone: off until 05:00, background syncs until
    09:00, then 1.5 hours of continuous activity."""
    phone = DeviceSpec(
        mac=MAC_PHONE,
        name="resident smartphone",
        kind="interactive",
        x=POS_OFFICE_DESK[0],
        y=POS_OFFICE_DESK[1],
        room="office",
        appear_s=hm(5),
        trickles=[TrickleSpec(hm(5), hm(24), period_s=4.5, jitter_s=1.5)],
        sessions=[
            SessionSpec(hm(9), hm(10, 30), density=0.75, amp_lo=4, amp_hi=4,
                        spike_period_s=75, spike_lo=40, spike_hi=110,
                        frame_len=820),
        ],
        true_identity="exact_model",
        true_profile="interactive",
        true_mobility="static",
    )
    sigma = {"default": 3.0, "noisy": 4.0, "zero": 0.0}[noise]
    sc = Scenario(
        name=f"fig-day-{noise}",
        seed=seed,
        start_epoch_us=START_EPOCH_US,
        duration_s=S_PER_DAY,
        floorplan=_floorplan(),
        radio=RadioModel(noise_sigma_db=sigma),
        sniffers=SNIFFERS,
        devices=[phone],
        subject_map={"resident": MAC_PHONE},
    )
    if noise == "zero":
        sc = zero_noise_variant(sc)
    sc.validate()
    return sc


def build_weekday(seed: int = 42) -> Scenario:
    """One scripted workday for activity synthesis: work 09:00-12:30 and
    13:00-17:00 with kitchen breaks, TV evening 19:00-22:00."""
    base = build_household(days=1, seed=seed, include_guests=False)
    devices = [
        d
        for d in base.devices
        if d.mac not in (MAC_LAPTOP, MAC_PHONE, MAC_TV, MAC_SWITCH)
    ]

    laptop = dataclasses.replace(
        _laptop(),
        trickles=[TrickleSpec(hm(7), hm(23), period_s=2.0, jitter_s=0.7)],
        sessions=[
            SessionSpec(hm(9), hm(12, 30), density=0.75, amp_lo=4, amp_hi=4,
                        spike_period_s=90, spike_lo=50, spike_hi=130,
                        frame_len=1000, day_indices=(0,)),
            SessionSpec(hm(13), hm(17), density=0.75, amp_lo=4, amp_hi=4,
                        spike_period_s=90, spike_lo=50, spike_hi=130,
                        frame_len=1000, day_indices=(0,)),
        ],
    )
    tv = dataclasses.replace(
        _tv(),
        sessions=[
            SessionSpec(hm(19), hm(22), density=0.75, amp_lo=4, amp_hi=4,
                        spike_period_s=60, spike_lo=60, spike_hi=160,
                        frame_len=1200, day_indices=(0,)),
        ],
    )
    phone = dataclasses.replace(
        _resident_phone(days=1),
        trickles=[
            TrickleSpec(hm(6, 30), hm(23, 30), period_s=4.0, jitter_s=1.5),
            TrickleSpec(0, hm(6, 30), period_s=90.0, jitter_s=20.0),
            TrickleSpec(hm(23, 30), hm(24), period_s=90.0, jitter_s=20.0),
        ],
        sessions=[
            SessionSpec(hm(19, 30), hm(21), density=0.7, amp_lo=4, amp_hi=4,
                        spike_period_s=90, spike_lo=30, spike_hi=90,
                        frame_len=700, day_indices=(0,)),
        ],
        absences=[],
        waypoints=[
            WaypointSpec(hm(6, 30), *POS_KITCHEN),
            WaypointSpec(hm(8, 55), *POS_OFFICE_DESK),
            WaypointSpec(hm(12, 30), *POS_KITCHEN),
            WaypointSpec(hm(13, 0), *POS_OFFICE_DESK),
            WaypointSpec(hm(17, 10), *POS_KITCHEN),
            WaypointSpec(hm(19, 0), *POS_COUCH),
            WaypointSpec(hm(23, 0), *POS_BED),
        ],
    )
    devices.extend([laptop, tv, phone])

    truth_events = [
        {"kind": "work_session", "subject": "resident",
         "ts_us": START_EPOCH_US + hm(9) * US_PER_S,
         "t_end_us": START_EPOCH_US + hm(12, 30) * US_PER_S},
        {"kind": "work_session", "subject": "resident",
         "ts_us": START_EPOCH_US + hm(13) * US_PER_S,
         "t_end_us": START_EPOCH_US + hm(17) * US_PER_S},
        {"kind": "leisure_session", "subject": "resident",
         "ts_us": START_EPOCH_US + hm(19) * US_PER_S,
         "t_end_us": START_EPOCH_US + hm(22) * US_PER_S},
    ]
    sc = dataclasses.replace(
        base, name="weekday", devices=devices, truth_events=truth_events
    )
    sc.validate()
    return sc


def zero_noise_variant(sc: Scenario) -> Scenario:
    """Make every stochastic knob deterministic: no RSSI noise, no timing
    jitter, full session density, fixed amplitudes."""
    devices = []
    for dev in sc.devices:
        devices.append(
            dataclasses.replace(
                dev,
                carry_sigma_db=0.0,
                jitter_s=0.0,
                ble_jitter_s=0.0,
                trickles=[
                    dataclasses.replace(t, jitter_s=0.0) for t in dev.trickles
                ],
                sessions=[
                    dataclasses.replace(
                        s,
                        density=1.0,
                        amp_lo=(s.amp_lo + s.amp_hi) // 2,
                        amp_hi=(s.amp_lo + s.amp_hi) // 2,
                        spike_lo=(s.spike_lo + s.spike_hi) // 2,
                        spike_hi=(s.spike_lo + s.spike_hi) // 2,
                    )
                    for s in dev.sessions
                ],
            )
        )
    return dataclasses.replace(
        sc,
        radio=dataclasses.replace(sc.radio, noise_sigma_db=0.0),
        devices=devices,
    )


def without_walls(sc: Scenario) -> Scenario:
    return dataclasses.replace(
        sc,
        name=sc.name + "-nowalls",
        floorplan=Floorplan(sc.floorplan.rooms, []),
    )


BUILTIN_SCENARIOS = {
    "household": lambda seed: build_household(seed=seed),
    "household-zero": lambda seed: build_household(seed=seed, noise="zero"),
    "guest-night": lambda seed: build_guest_night(seed=seed),
    "fig-day": lambda seed: build_fig_day(seed=seed),
    "weekday": lambda seed: build_weekday(seed=seed),
}

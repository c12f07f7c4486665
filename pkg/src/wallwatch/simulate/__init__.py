"""Deterministic household traffic and RSSI simulator.

Produces three-sniffer captures plus ground-truth labels for verifying
the analysis pipeline end to end. All randomness flows through
counter-based generators keyed by (seed, device, stream), so output is
bit-reproducible and independent of generation order.
"""

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
    load_scenario_file,
    scenario_to_yaml,
)
from wallwatch.simulate.generate import generate
from wallwatch.simulate.truth import DeviceTruth, GroundTruth
from wallwatch.simulate.score import score

__all__ = [
    "Scenario",
    "DeviceSpec",
    "TrickleSpec",
    "SessionSpec",
    "AbsenceSpec",
    "WaypointSpec",
    "Floorplan",
    "Room",
    "Wall",
    "RadioModel",
    "load_scenario_file",
    "scenario_to_yaml",
    "generate",
    "GroundTruth",
    "DeviceTruth",
    "score",
]

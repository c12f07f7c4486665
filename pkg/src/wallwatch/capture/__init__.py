"""Capture data model, ingestion and per-device traffic binning."""

from wallwatch.capture.model import (
    CaptureSet,
    FrameRecord,
    Proto,
    TrafficSeries,
    int_to_mac,
    mac_to_int,
)
from wallwatch.capture.ops import MergeReport, bin_traffic, merge_sniffers
from wallwatch.capture.pcap import parse_pcap_radiotap, write_pcap
from wallwatch.capture.wwcap import (
    ParseReport,
    parse_capture_records,
    write_capture_records,
)

__all__ = [
    "CaptureSet",
    "FrameRecord",
    "Proto",
    "TrafficSeries",
    "mac_to_int",
    "int_to_mac",
    "parse_capture_records",
    "write_capture_records",
    "ParseReport",
    "parse_pcap_radiotap",
    "write_pcap",
    "merge_sniffers",
    "MergeReport",
    "bin_traffic",
]

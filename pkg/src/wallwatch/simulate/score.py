"""Compare pipeline output against simulator ground truth."""

from __future__ import annotations

from typing import Optional

import numpy as np

from wallwatch.capture.model import US_PER_S
from wallwatch.errors import WallwatchError
from wallwatch.locate import circular_distance
from wallwatch.simulate.truth import GroundTruth

_STATE_CODE = {"off": 0, "idle": 1, "active": 2}

DEFAULT_EVENT_TOLERANCE_S = 300.0


def _labels_per_second(segments, t0_us: int, n_s: int) -> np.ndarray:
    labels = np.full(n_s, -1, dtype=np.int8)
    for seg in segments:
        if isinstance(seg, dict):
            a, b, state = seg["t_start_us"], seg["t_end_us"], seg["state"]
        else:
            a, b, state = seg
        i0 = max(0, (a - t0_us) // US_PER_S)
        i1 = min(n_s, -(-(b - t0_us) // US_PER_S))
        if i1 > i0:
            labels[i0:i1] = _STATE_CODE[state]
    return labels


def _score_states(report: dict, truth: GroundTruth) -> dict:
    t0 = truth.start_epoch_us
    n_s = truth.duration_s
    per_device = {}
    timelines = report.get("timelines", {})
    thresholds = report.get("thresholds", {})
    for mac, dev in truth.devices.items():
        rows = timelines.get(mac)
        if not rows or not dev.state_segments:
            continue
        smooth_s = int(thresholds.get(mac, {}).get("smooth_window_s", 60))
        pred = _labels_per_second(rows, t0, n_s)
        true = _labels_per_second(dev.state_segments, t0, n_s)
        mask = (pred >= 0) & (true >= 0)
        # Transition neighborhoods do not count: boundary placement within
        # the smoothing window is expected slack, not error.
        for ts in dev.transitions_us():
            i = (ts - t0) // US_PER_S
            mask[max(0, i - smooth_s) : min(n_s, i + smooth_s + 1)] = False
        n = int(mask.sum())
        if n == 0:
            continue
        acc = float((pred[mask] == true[mask]).mean())
        per_device[mac] = {"accuracy": round(acc, 6), "scored_seconds": n}
    accs = [v["accuracy"] for v in per_device.values()]
    return {
        "per_device": per_device,
        "mean_accuracy": round(float(np.mean(accs)), 6) if accs else None,
        "min_accuracy": round(float(np.min(accs)), 6) if accs else None,
    }


def _score_inventory(report: dict, truth: GroundTruth) -> dict:
    inventory = {p["mac"]: p for p in report.get("inventory", [])}
    truth_macs = set(truth.devices)
    matched = truth_macs & set(inventory)
    identity_ok = sum(
        1
        for m in matched
        if inventory[m]["identity"] == truth.devices[m].identity
    )
    profile_total = [m for m in matched if truth.devices[m].profile]
    profile_ok = sum(
        1
        for m in profile_total
        if inventory[m].get("profile") == truth.devices[m].profile
    )
    mobility_total = [m for m in matched if truth.devices[m].mobility]
    mobility_ok = sum(
        1
        for m in mobility_total
        if inventory[m].get("mobility") == truth.devices[m].mobility
    )
    return {
        "recall": round(len(matched) / len(truth_macs), 6) if truth_macs else None,
        "precision": round(len(matched) / len(inventory), 6) if inventory else None,
        "identity_accuracy": (
            round(identity_ok / len(matched), 6) if matched else None
        ),
        "profile_accuracy": (
            round(profile_ok / len(profile_total), 6) if profile_total else None
        ),
        "mobility_accuracy": (
            round(mobility_ok / len(mobility_total), 6) if mobility_total else None
        ),
        "missing": sorted(truth_macs - set(inventory)),
        "extra": sorted(set(inventory) - truth_macs),
    }


def _sector_of(mac: str, sectors: list[dict]) -> Optional[dict]:
    for s in sectors:
        if mac in s.get("members", []):
            return s
    return None


def _score_locate(report: dict, truth: GroundTruth, gap_deg: float = 45.0) -> dict:
    directions = report.get("directions", {})
    sectors = report.get("sectors", [])
    errors = {}
    correct = 0
    total = 0
    for mac, est in directions.items():
        dev = truth.devices.get(mac)
        if dev is None or dev.bearing_deg is None:
            continue
        err = circular_distance(est["angle_deg"], dev.bearing_deg)
        errors[mac] = round(err, 3)
        total += 1
        sec = _sector_of(mac, sectors)
        if sec is not None:
            start = sec["start_deg"]
            span = sec["span_deg"]
            rel = (dev.bearing_deg - (start - gap_deg / 2.0)) % 360.0
            if rel <= span + gap_deg:
                correct += 1
    return {
        "per_device_error_deg": errors,
        "mean_error_deg": (
            round(float(np.mean(list(errors.values()))), 3) if errors else None
        ),
        "correct_sector": correct,
        "scored_devices": total,
        "sector_rate": round(correct / total, 6) if total else None,
        "n_sectors": len(sectors),
    }


def _score_events(
    report: dict, truth: GroundTruth, tolerance_s: float
) -> dict:
    tol_us = tolerance_s * US_PER_S
    predicted = list(report.get("events", []))
    per_kind: dict[str, dict] = {}
    kinds = sorted({e["kind"] for e in truth.events})
    matched_pred: set[int] = set()
    for kind in kinds:
        t_events = [e for e in truth.events if e["kind"] == kind]
        hits = 0
        offsets = []
        for te in t_events:
            best = None
            best_d = None
            for i, pe in enumerate(predicted):
                if i in matched_pred or pe["kind"] != kind:
                    continue
                if pe.get("subject") != te.get("subject"):
                    continue
                d = abs(pe["t_start_us"] - te["ts_us"])
                if d <= tol_us and (best_d is None or d < best_d):
                    best, best_d = i, d
            if best is not None:
                matched_pred.add(best)
                hits += 1
                offsets.append(best_d / US_PER_S)
        pred_count = sum(1 for e in predicted if e["kind"] == kind)
        per_kind[kind] = {
            "truth": len(t_events),
            "predicted": pred_count,
            "matched": hits,
            "recall": round(hits / len(t_events), 6) if t_events else None,
            "precision": round(hits / pred_count, 6) if pred_count else None,
            "max_offset_s": round(max(offsets), 1) if offsets else None,
        }
    total_truth = sum(v["truth"] for v in per_kind.values())
    total_matched = sum(v["matched"] for v in per_kind.values())
    return {
        "per_kind": per_kind,
        "recall": round(total_matched / total_truth, 6) if total_truth else None,
        "tolerance_s": tolerance_s,
    }


def score(
    report: dict,
    truth: GroundTruth,
    event_tolerance_s: float = DEFAULT_EVENT_TOLERANCE_S,
) -> dict:
    """Metrics comparing one analysis report with ground truth.

    Raises WallwatchError when report and truth clearly come from
    different captures (no overlapping devices).
    """
    inventory_macs = {p["mac"] for p in report.get("inventory", [])}
    if truth.devices and inventory_macs and not (inventory_macs & set(truth.devices)):
        raise WallwatchError(
            "report and ground truth share no devices; wrong truth file?"
        )
    return {
        "scenario": truth.scenario_name,
        "inventory": _score_inventory(report, truth),
        "states": _score_states(report, truth),
        "locate": _score_locate(report, truth),
        "events": _score_events(report, truth, event_tolerance_s),
    }


def check_floors(metrics: dict, floors: dict[str, float]) -> list[str]:
    """Dotted-path floor checks, e.g. {'inventory.recall': 1.0}.

    Returns failure descriptions (empty = all floors met).
    """
    failures = []
    for path, floor in floors.items():
        node = metrics
        ok = True
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                ok = False
                break
            node = node[part]
        if not ok or node is None:
            failures.append(f"{path}: metric missing")
        elif not isinstance(node, (int, float)):
            failures.append(f"{path}: not numeric")
        elif node < floor:
            failures.append(f"{path}: {node} below floor {floor}")
    return failures

"""Rule detectors: duplicate/simultaneous device sessions and per-protocol
traffic share deviations."""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Sequence

from ..descriptive import pair_sessions
from ..domain import (
    LOCAL_TZ,
    AnomalyEvent,
    AnomalyType,
    BaselineProfile,
    DailyAggregate,
    Detector,
    Protocol,
    SessionRecord,
)

from .features import STD_FLOOR
from .thresholds import DEFAULT_K

DEFAULT_MAX_CONCURRENT = 3


def detect_duplicate_devices(records: Iterable[SessionRecord],
                             max_concurrent: int = DEFAULT_MAX_CONCURRENT) -> list[AnomalyEvent]:
    """Flag devices with more than max_concurrent overlapping sessions
    (SimultaneousConnections) and devices with overlapping sessions on two
    or more distinct APs (DuplicateDevice).

    One event per (device, day, type); score is the concurrency reached
    resp. the number of APs held concurrently.
    """
    if max_concurrent < 1:
        raise ValueError("max_concurrent must be >= 1")

    by_device: dict = defaultdict(list)
    for s in pair_sessions(records):
        by_device[s.device].append(s)

    events = []
    for device in sorted(by_device, key=lambda d: d.value):
        sessions = sorted(by_device[device], key=lambda s: (s.start, s.end))
        # (day -> peak concurrency) and (day -> APs held concurrently)
        simult: dict = {}
        dup_aps: dict = defaultdict(set)
        active: list = []  # (end, ap) of open sessions
        for s in sessions:
            active = [(end, ap) for end, ap in active if end > s.start]
            other_aps = {ap for _, ap in active if ap != s.ap}
            day = s.start.astimezone(LOCAL_TZ).date()
            if other_aps:
                dup_aps[day] |= other_aps | {s.ap}
            active.append((s.end, s.ap))
            concurrency = len(active)
            if concurrency > max_concurrent:
                simult[day] = max(simult.get(day, 0), concurrency)

        for day, peak in sorted(simult.items()):
            events.append(AnomalyEvent(
                day=day,
                type=AnomalyType.SIMULTANEOUS_CONNECTIONS,
                detector=Detector.RULE,
                score=float(peak),
                device=device.value,
                evidence={
                    "peak_concurrent_sessions": peak,
                    "max_concurrent": max_concurrent,
                    "text": f"device held {peak} overlapping sessions "
                            f"(limit {max_concurrent})",
                },
            ))
        for day, aps in sorted(dup_aps.items()):
            events.append(AnomalyEvent(
                day=day,
                type=AnomalyType.DUPLICATE_DEVICE,
                detector=Detector.RULE,
                score=float(len(aps)),
                device=device.value,
                evidence={
                    "aps": sorted(ap.value for ap in aps),
                    "text": f"device held overlapping sessions on "
                            f"{len(aps)} distinct APs",
                },
            ))
    events.sort(key=lambda e: (e.day, e.type.value, e.device or ""))
    return events


def protocol_anomaly(aggregate: DailyAggregate, baseline: BaselineProfile,
                     k: float = DEFAULT_K) -> list[AnomalyEvent]:
    """z-test each protocol's traffic share against the baseline slot.

    DNS deviations map to DnsAnomaly, others to TrafficSpike.  Days with
    no traffic are skipped (shares undefined).
    """
    if aggregate.traffic_gb <= 0:
        return []
    slot = aggregate.day.weekday()
    events = []
    for proto in Protocol:
        metric = f"proto_share_{proto.value}"
        mean, std = baseline.stats(slot, metric)
        share = aggregate.metric(metric)
        z = abs(share - mean) / max(std, STD_FLOOR)
        if z <= k:
            continue
        etype = (AnomalyType.DNS_ANOMALY if proto is Protocol.DNS
                 else AnomalyType.TRAFFIC_SPIKE)
        events.append(AnomalyEvent(
            day=aggregate.day,
            type=etype,
            detector=Detector.THRESHOLD,
            score=z,
            evidence={
                "proto": proto.value,
                "share": share,
                "baseline_mean": mean,
                "baseline_std": std,
                "k": k,
                "text": f"{proto.value} traffic share {share:.3f} deviates "
                        f"from baseline {mean:.3f} (z={z:.1f})",
            },
        ))
    return events

"""Severity assignment for raw detections.

Bands are calibration choices, fixed here in one place:
  threshold detector  Low (k, 2k], Medium (2k, 4k], High > 4k
  isolation forest    dropped <= 0.6, Low (0.6, 0.7], Medium (0.7, 0.8], High > 0.8
  dbscan noise        Medium
  rule detectors      Medium, escalated to High when the same device is
                      flagged on >= 3 distinct days (recurrent device)
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import replace
from typing import Iterable, Optional

from ..domain import AnomalyEvent, Detector, Severity

from .thresholds import DEFAULT_K

IFOREST_ALERT_FLOOR = 0.6
RECURRENT_DEVICE_DAYS = 3


def _threshold_severity(score: float, k: float) -> Optional[Severity]:
    if score <= k:
        return None
    if score <= 2 * k:
        return Severity.LOW
    if score <= 4 * k:
        return Severity.MEDIUM
    return Severity.HIGH


def _iforest_severity(score: float) -> Optional[Severity]:
    if score <= IFOREST_ALERT_FLOOR:
        return None
    if score <= 0.7:
        return Severity.LOW
    if score <= 0.8:
        return Severity.MEDIUM
    return Severity.HIGH


def classify(events: Iterable[AnomalyEvent], k: float = DEFAULT_K) -> list[AnomalyEvent]:
    """Assign severities; events below their detector's alerting floor are
    dropped."""
    events = list(events)

    # Distinct flagged days per device across rule detections; a device seen
    # on RECURRENT_DEVICE_DAYS or more days escalates all its rule events.
    rule_days: dict = defaultdict(set)
    for e in events:
        if e.detector is Detector.RULE and e.device:
            rule_days[e.device].add(e.day)

    classified = []
    for e in events:
        if e.detector is Detector.THRESHOLD:
            severity = _threshold_severity(e.score, k)
        elif e.detector is Detector.ISOLATION_FOREST:
            severity = _iforest_severity(e.score)
        elif e.detector is Detector.DBSCAN:
            severity = Severity.MEDIUM
        else:  # rule
            recurrent = e.device and len(rule_days[e.device]) >= RECURRENT_DEVICE_DAYS
            severity = Severity.HIGH if recurrent else Severity.MEDIUM
        if severity is None:
            continue
        classified.append(replace(e, severity=severity))
    return classified

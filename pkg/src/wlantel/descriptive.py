"""Phase 1: daily/hourly aggregation, per-AP load statistics, baseline
construction, and the user/traffic correlation check.

Everything here is a pure function over immutable validated records, so
evaluation order (or parallel sharding) cannot change results.
"""

from __future__ import annotations

import math
import statistics
from collections import defaultdict
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from typing import Iterable, Optional, Sequence

from .domain import (
    BASELINE_METRICS,
    LOCAL_TZ,
    MIN_BASELINE_DAYS,
    ApId,
    BaselineProfile,
    DailyAggregate,
    DeviceId,
    EventKind,
    Protocol,
    SessionRecord,
)

DEFAULT_OVERLOAD_THRESHOLD = 50      # concurrent clients per AP
DEFAULT_SHORT_SESSION_MINUTES = 1.0  # below this a disassoc is "unexpected"


class InsufficientData(ValueError):
    pass


class ZeroVariance(ValueError):
    pass


@dataclass(frozen=True)
class ApStats:
    ap: ApId
    monthly_connections: int
    peak_concurrent: int
    mean_latency_ms: Optional[float]  # None when no health samples (missing != zero)
    mean_loss_pct: Optional[float]
    overloaded_days: int

    def to_json_dict(self) -> dict:
        return {
            "ap": self.ap.value,
            "monthly_connections": self.monthly_connections,
            "peak_concurrent": self.peak_concurrent,
            "mean_latency_ms": self.mean_latency_ms,
            "mean_loss_pct": self.mean_loss_pct,
            "overloaded_days": self.overloaded_days,
        }


@dataclass(frozen=True)
class Session:
    """A paired Assoc/Disassoc interval [start, end)."""

    device: DeviceId
    ap: ApId
    start: datetime
    end: datetime


@dataclass(frozen=True)
class HourlyProfile:
    """Mean concurrent connections at the top of each local hour."""

    buckets: tuple  # 24 floats

    def __post_init__(self):
        if len(self.buckets) != 24 or any(b < 0 for b in self.buckets):
            raise ValueError("hourly profile needs 24 non-negative buckets")

    def argmax(self) -> int:
        return max(range(24), key=lambda h: self.buckets[h])


def pair_sessions(records: Iterable[SessionRecord]) -> list[Session]:
    """Pair Assoc with the next Disassoc per (device, ap), FIFO in time.

    An Assoc with no matching Disassoc stays open until the last timestamp
    seen.  A Disassoc with no open Assoc is dropped (session began before
    the window).
    """
    events = sorted(
        (r for r in records if r.kind in (EventKind.ASSOC, EventKind.DISASSOC)),
        key=lambda r: r.ts,
    )
    open_assocs: dict = defaultdict(list)
    sessions: list[Session] = []
    last_ts = None
    for r in events:
        last_ts = r.ts
        key = (r.device, r.ap)
        if r.kind is EventKind.ASSOC:
            open_assocs[key].append(r.ts)
        else:
            if open_assocs[key]:
                start = open_assocs[key].pop(0)
                sessions.append(Session(r.device, r.ap, start, r.ts))
    if last_ts is not None:
        for (device, ap), starts in open_assocs.items():
            for start in starts:
                sessions.append(Session(device, ap, start, last_ts))
    sessions.sort(key=lambda s: (s.start, s.ap.value, s.device.value))
    return sessions


def _peak_concurrent(events: Sequence[SessionRecord]) -> int:
    """Sweep Assoc(+1)/Disassoc(-1) in time order; ties release first."""
    deltas = sorted(
        ((r.ts, -1 if r.kind is EventKind.DISASSOC else +1)
         for r in events if r.kind in (EventKind.ASSOC, EventKind.DISASSOC)),
        key=lambda t: t,
    )
    peak = cur = 0
    for _, d in deltas:
        cur += d
        peak = max(peak, cur)
    return peak


def _overlap_devices(sessions: Sequence[Session]) -> set:
    """Devices holding two time-overlapping sessions (intervals [s, e))."""
    by_device: dict = defaultdict(list)
    for s in sessions:
        by_device[s.device].append(s)
    flagged = set()
    for device, devs in by_device.items():
        devs.sort(key=lambda s: s.start)
        latest_end = None
        for s in devs:
            if latest_end is not None and s.start < latest_end:
                flagged.add(device)
                break
            latest_end = s.end if latest_end is None else max(latest_end, s.end)
    return flagged


def aggregate_daily(records: Iterable[SessionRecord], day: date,
                    overload_threshold: int = DEFAULT_OVERLOAD_THRESHOLD,
                    short_session_minutes: float = DEFAULT_SHORT_SESSION_MINUTES) -> DailyAggregate:
    """Collapse one local day's records into a DailyAggregate.

    An empty day yields the zero aggregate.
    """
    day_records = [r for r in records if r.local_day() == day]
    connections = 0
    auth_failures = 0
    session_minutes_sum = 0.0
    sessions_ended = 0
    unexpected = 0
    proto_bytes: dict = {p: 0 for p in Protocol}
    devices = set()
    by_ap: dict = defaultdict(list)

    for r in day_records:
        if r.kind is not EventKind.AP_HEALTH:
            devices.add(r.device)
        by_ap[r.ap].append(r)
        if r.kind is EventKind.ASSOC:
            connections += 1
        elif r.kind is EventKind.AUTH_FAIL:
            auth_failures += 1
        elif r.kind is EventKind.DISASSOC:
            sessions_ended += 1
            session_minutes_sum += r.session_minutes
            if r.session_minutes < short_session_minutes:
                unexpected += 1
        elif r.kind is EventKind.TRAFFIC:
            proto_bytes[r.proto] += r.bytes_up + r.bytes_down

    total_bytes = sum(proto_bytes.values())
    proto_share = (
        {p: b / total_bytes for p, b in proto_bytes.items()}
        if total_bytes > 0 else {p: 0.0 for p in Protocol}
    )

    aps_seen = len(by_ap)
    aps_overloaded = sum(
        1 for ap_records in by_ap.values()
        if _peak_concurrent(ap_records) > overload_threshold
    )

    duplicates = len(_overlap_devices(pair_sessions(day_records)))

    return DailyAggregate(
        day=day,
        connections=connections,
        distinct_devices=len(devices),
        mean_session_minutes=session_minutes_sum / sessions_ended if sessions_ended else 0.0,
        auth_failures=auth_failures,
        unexpected_disconnects=unexpected,
        traffic_gb=total_bytes / 10**9,
        overload_pct=100.0 * aps_overloaded / aps_seen if aps_seen else 0.0,
        proto_share=proto_share,
        duplicate_device_events=duplicates,
        sessions_ended=sessions_ended,
        proto_bytes=proto_bytes,
        aps_seen=aps_seen,
        aps_overloaded=aps_overloaded,
    )


def merge_daily(a: DailyAggregate, b: DailyAggregate) -> DailyAggregate:
    """Merge two same-day aggregates built over disjoint record shards.

    Additive fields merge for any record partition; overload and duplicate
    counts merge exactly only when shards are AP-disjoint (overload) resp.
    device-disjoint (duplicates), since those need the full per-AP / per-
    device event streams.
    """
    if a.day != b.day:
        raise ValueError("can only merge aggregates of the same day")
    proto_bytes = {p: a.proto_bytes.get(p, 0) + b.proto_bytes.get(p, 0) for p in Protocol}
    total_bytes = sum(proto_bytes.values())
    sessions_ended = a.sessions_ended + b.sessions_ended
    minutes_sum = (a.mean_session_minutes * a.sessions_ended
                   + b.mean_session_minutes * b.sessions_ended)
    aps_seen = a.aps_seen + b.aps_seen
    aps_overloaded = a.aps_overloaded + b.aps_overloaded
    return DailyAggregate(
        day=a.day,
        connections=a.connections + b.connections,
        distinct_devices=a.distinct_devices + b.distinct_devices,
        mean_session_minutes=minutes_sum / sessions_ended if sessions_ended else 0.0,
        auth_failures=a.auth_failures + b.auth_failures,
        unexpected_disconnects=a.unexpected_disconnects + b.unexpected_disconnects,
        traffic_gb=total_bytes / 10**9,
        overload_pct=100.0 * aps_overloaded / aps_seen if aps_seen else 0.0,
        proto_share=({p: bts / total_bytes for p, bts in proto_bytes.items()}
                     if total_bytes > 0 else {p: 0.0 for p in Protocol}),
        duplicate_device_events=a.duplicate_device_events + b.duplicate_device_events,
        sessions_ended=sessions_ended,
        proto_bytes=proto_bytes,
        aps_seen=aps_seen,
        aps_overloaded=aps_overloaded,
    )


def observed_days(records: Sequence[SessionRecord]) -> list[date]:
    """Inclusive local-day range spanned by the records."""
    if not records:
        return []
    days = [r.local_day() for r in records]
    first, last = min(days), max(days)
    return [first + timedelta(days=i) for i in range((last - first).days + 1)]


def ap_load_stats(records: Sequence[SessionRecord],
                  overload_threshold: int = DEFAULT_OVERLOAD_THRESHOLD) -> list[ApStats]:
    """Per-AP connection counts, concurrency peaks, and health means."""
    by_ap: dict = defaultdict(list)
    for r in records:
        by_ap[r.ap].append(r)

    stats = []
    for ap in sorted(by_ap, key=lambda a: a.value):
        ap_records = by_ap[ap]
        connections = sum(1 for r in ap_records if r.kind is EventKind.ASSOC)
        latencies = [r.latency_ms for r in ap_records if r.kind is EventKind.AP_HEALTH]
        losses = [r.loss_pct for r in ap_records if r.kind is EventKind.AP_HEALTH]
        by_day: dict = defaultdict(list)
        for r in ap_records:
            by_day[r.local_day()].append(r)
        overloaded_days = sum(
            1 for day_records in by_day.values()
            if _peak_concurrent(day_records) > overload_threshold
        )
        stats.append(ApStats(
            ap=ap,
            monthly_connections=connections,
            peak_concurrent=_peak_concurrent(ap_records),
            mean_latency_ms=statistics.fmean(latencies) if latencies else None,
            mean_loss_pct=statistics.fmean(losses) if losses else None,
            overloaded_days=overloaded_days,
        ))
    stats.sort(key=lambda s: (-s.monthly_connections, s.ap.value))
    return stats


def overload_fraction(ap_stats: Sequence[ApStats], threshold: int = DEFAULT_OVERLOAD_THRESHOLD) -> float:
    """Percentage of APs whose window peak concurrency exceeds threshold."""
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    if not ap_stats:
        return 0.0
    over = sum(1 for s in ap_stats if s.peak_concurrent > threshold)
    return 100.0 * over / len(ap_stats)


def hourly_profile(records: Sequence[SessionRecord]) -> HourlyProfile:
    """Mean concurrent connections at the top of each local hour, averaged
    over the observed day range."""
    days = observed_days(records)
    if not days:
        return HourlyProfile(buckets=tuple([0.0] * 24))

    counts: dict = defaultdict(int)  # (local day, hour) -> concurrency
    for s in pair_sessions(records):
        start_local = s.start.astimezone(LOCAL_TZ)
        end_local = s.end.astimezone(LOCAL_TZ)
        mark = start_local.replace(minute=0, second=0, microsecond=0)
        if mark < start_local:
            mark += timedelta(hours=1)
        while mark < end_local:
            counts[(mark.date(), mark.hour)] += 1
            mark += timedelta(hours=1)

    n_days = len(days)
    day_set = set(days)
    buckets = [0.0] * 24
    for (d, h), c in counts.items():
        if d in day_set:
            buckets[h] += c
    return HourlyProfile(buckets=tuple(b / n_days for b in buckets))


def build_baseline(aggregates: Sequence[DailyAggregate]) -> BaselineProfile:
    """Per-day-of-week mean/std of every metric; slots with fewer than
    MIN_BASELINE_DAYS samples fall back to the all-days statistics."""
    if len(aggregates) < MIN_BASELINE_DAYS:
        raise InsufficientData(
            f"need at least {MIN_BASELINE_DAYS} days, got {len(aggregates)}")

    ordered = sorted(aggregates, key=lambda a: a.day)
    all_values = {m: [a.metric(m) for a in ordered] for m in BASELINE_METRICS}
    all_stats = {m: _mean_std(vs) for m, vs in all_values.items()}

    slots = []
    fallback = []
    for dow in range(7):
        slot_aggs = [a for a in ordered if a.day.weekday() == dow]
        if len(slot_aggs) >= MIN_BASELINE_DAYS:
            slots.append({m: _mean_std([a.metric(m) for a in slot_aggs])
                          for m in BASELINE_METRICS})
            fallback.append(False)
        else:
            slots.append(dict(all_stats))
            fallback.append(True)

    return BaselineProfile(
        slots=tuple(slots),
        fallback=tuple(fallback),
        window_days=len(ordered),
        built_from=(ordered[0].day, ordered[-1].day),
    )


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def correlation(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation coefficient of two equal-length series."""
    if len(xs) != len(ys):
        raise ValueError("series lengths differ")
    if len(xs) < 3:
        raise ValueError("need at least 3 points")
    mx, my = statistics.fmean(xs), statistics.fmean(ys)
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sx = math.sqrt(sum(d * d for d in dx))
    sy = math.sqrt(sum(d * d for d in dy))
    if sx == 0.0 or sy == 0.0:
        raise ZeroVariance("a constant series has no defined correlation")
    r = sum(a * b for a, b in zip(dx, dy)) / (sx * sy)
    return max(-1.0, min(1.0, r))

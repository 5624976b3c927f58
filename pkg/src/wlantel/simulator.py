"""Statistical simulator: a labeled synthetic month of campus WiFi records.

The generator is calibrated against the published monthly summary table
(mean daily connections ~5 800 in [4 100, 7 200], session mean ~47 min,
~210 failed auths/day, ~890 GB/day, ~11.8 % of APs overloaded) plus the
10:00-14:00 local usage peak and the weekday > weekend pattern.  All
distribution families and the constants below are calibration choices;
the acceptance suite gates the resulting statistics.

Determinism: every stream derives from (seed, day index) through numpy
SeedSequences, so output is identical across platforms and independent of
any parallel evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import date, datetime, time, timedelta, timezone
from typing import Optional, Sequence

import numpy as np

from .domain import LOCAL_TZ, AnomalyType

UTC = timezone.utc


class InvalidConfig(ValueError):
    pass


# Hour-of-day start-time weights, local time.  Both curves peak at 11-12 so
# the concurrency argmax lands inside the 10:00-14:00 window.
CAMPUS_CURVE = (
    0.2, 0.2, 0.2, 0.2, 0.2, 0.2,          # 00-05
    0.5, 1.0, 2.0, 3.2,                    # 06-09
    4.2, 4.6, 4.6, 4.2,                    # 10-13
    3.4, 3.0, 2.8, 2.4, 2.0, 1.6,          # 14-19
    1.2, 0.8, 0.5, 0.3,                    # 20-23
)
# Hotspot APs (lecture halls, library) see sharper class-schedule bunching.
HOTSPOT_CURVE = (
    0.05, 0.05, 0.05, 0.05, 0.05, 0.05,    # 00-05
    0.2, 0.7, 2.0, 4.8,                    # 06-09
    7.5, 8.2, 7.8, 6.0,                    # 10-13
    4.2, 3.0, 2.0, 1.4, 0.9, 0.6,          # 14-19
    0.4, 0.2, 0.1, 0.1,                    # 20-23
)

# Daily session targets for the ten busiest APs, matching the published
# per-AP monthly connection scale (top AP ~15 240 / month).
HOTSPOT_DAILY_SESSIONS = (508.0, 465.0, 429.0, 374.0, 366.0,
                          329.0, 300.0, 273.0, 247.0, 223.0)
HOTSPOT_AP_NAMES = ("AP-104", "AP-100", "AP-106", "AP-109", "AP-101",
                    "AP-105", "AP-102", "AP-103", "AP-107", "AP-108")
_REFERENCE_DAILY_CONNECTIONS = 176000.0 / 30.0  # normalizer for AP weights

# Hotspot sessions run longer (study/lecture use); regular APs shorter, so
# the global mean stays at the session target.
HOTSPOT_DURATION_FACTOR = 1.40


@dataclass(frozen=True)
class SimConfig:
    days: int = 30
    start_day: date = date(2025, 3, 3)  # a Monday keeps 22 weekdays in 30 days
    ap_count: int = 85
    device_pool: int = 12000

    weekday_users: float = 6400.0
    weekend_users: float = 4400.0
    day_noise_sigma: float = 0.05

    session_minutes_median: float = 44.0
    session_minutes_sigma: float = 0.35

    auth_fail_mean: float = 190.0  # baseline Poisson rate per day

    bytes_per_session_mean: float = 147e6
    bytes_per_session_sigma: float = 1.0

    proto_mix: dict = field(default_factory=lambda: {
        "https": 0.62, "http": 0.08, "dns": 0.05, "udp": 0.15, "other": 0.10,
    })

    # Anomaly injection; device-level events carry the volume, day-level
    # metric anomalies stay sparse so rolling baselines remain usable.
    inject: bool = True
    device_event_rate: float = 5.0        # Poisson mean of device events/day
    duplicate_share: float = 0.6          # of device events; rest simultaneous
    auth_burst_prob: float = 0.10         # per-day probability
    dns_anomaly_prob: float = 0.08
    traffic_spike_prob: float = 0.08
    max_daily_injections: int = 11
    min_daily_injections: int = 1

    def __post_init__(self):
        if self.days < 7:
            raise InvalidConfig("days must be >= 7")
        if self.ap_count < len(HOTSPOT_DAILY_SESSIONS):
            raise InvalidConfig(f"ap_count must be >= {len(HOTSPOT_DAILY_SESSIONS)}")
        if abs(sum(self.proto_mix.values()) - 1.0) > 1e-9:
            raise InvalidConfig("proto_mix must sum to 1")
        for name in ("weekday_users", "weekend_users", "auth_fail_mean",
                     "bytes_per_session_mean", "session_minutes_median"):
            if getattr(self, name) <= 0:
                raise InvalidConfig(f"{name} must be positive")

    def with_overrides(self, overrides: dict) -> "SimConfig":
        kwargs = {}
        for key, value in overrides.items():
            if not hasattr(self, key):
                raise InvalidConfig(f"unknown config key {key!r}")
            current = getattr(self, key)
            if isinstance(current, bool):
                kwargs[key] = str(value).lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                kwargs[key] = int(value)
            elif isinstance(current, float):
                kwargs[key] = float(value)
            elif isinstance(current, date):
                kwargs[key] = date.fromisoformat(str(value))
            else:
                kwargs[key] = value
        return replace(self, **kwargs)


@dataclass(frozen=True)
class Injection:
    day: date
    type: AnomalyType
    devices: tuple = ()   # raw MACs as they appear in the trace
    aps: tuple = ()
    magnitude: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "day": self.day.isoformat(),
            "type": self.type.value,
            "devices": list(self.devices),
            "aps": list(self.aps),
            "magnitude": self.magnitude,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Injection":
        return cls(
            day=date.fromisoformat(d["day"]),
            type=AnomalyType(d["type"]),
            devices=tuple(d.get("devices", ())),
            aps=tuple(d.get("aps", ())),
            magnitude=float(d.get("magnitude", 0.0)),
        )


@dataclass(frozen=True)
class GroundTruth:
    injections: tuple

    def to_json_dict(self) -> dict:
        return {"injections": [i.to_json_dict() for i in self.injections]}

    @classmethod
    def from_json_dict(cls, d: dict) -> "GroundTruth":
        return cls(injections=tuple(Injection.from_json_dict(i)
                                    for i in d["injections"]))


def _device_mac(index: int) -> str:
    # Locally administered OUI 02:xx; index packed into the last 4 octets.
    b = index.to_bytes(4, "big")
    return f"02:{b[0]:02x}:{b[1]:02x}:{b[2]:02x}:{b[3]:02x}:01"


def _anomaly_mac(index: int) -> str:
    b = index.to_bytes(4, "big")
    return f"06:{b[0]:02x}:{b[1]:02x}:{b[2]:02x}:{b[3]:02x}:01"


def _ap_names(count: int) -> list[str]:
    names = list(HOTSPOT_AP_NAMES)
    n = 100
    while len(names) < count:
        candidate = f"AP-{n}"
        if candidate not in names:
            names.append(candidate)
        n += 1
    return names[:count]


def _ap_weights(config: SimConfig) -> np.ndarray:
    weights = np.empty(config.ap_count)
    hot = np.array(HOTSPOT_DAILY_SESSIONS) / _REFERENCE_DAILY_CONNECTIONS
    weights[:len(hot)] = hot
    rest = (1.0 - hot.sum()) / (config.ap_count - len(hot))
    weights[len(hot):] = rest
    return weights / weights.sum()


def _ts_string(day: date, seconds: float) -> str:
    local = datetime.combine(day, time(0, 0), LOCAL_TZ) + timedelta(seconds=float(seconds))
    return local.astimezone(UTC).isoformat().replace("+00:00", "Z")


def _sample_start_seconds(rng: np.random.Generator, curve: Sequence[float],
                          n: int) -> np.ndarray:
    probs = np.array(curve, dtype=float)
    probs /= probs.sum()
    hours = rng.choice(24, size=n, p=probs)
    return hours * 3600.0 + rng.uniform(0.0, 3600.0, size=n)


def _sorted_records(records: list[dict]) -> list[dict]:
    return sorted(records, key=lambda r: (r["ts"], r["ap"], r["device"], r["kind"]))


def generate_month(config: SimConfig = SimConfig(), seed: int = 42) -> tuple[list[dict], GroundTruth]:
    """Generate one month of raw controller records plus injection labels.

    Records are raw JSONL-format dicts with un-anonymized MACs, sorted by
    timestamp, exactly as a controller export would look.
    """
    ap_names = _ap_names(config.ap_count)
    ap_weights = _ap_weights(config)
    n_hot = len(HOTSPOT_DAILY_SESSIONS)
    records: list[dict] = []
    injections: list[Injection] = []
    anomaly_device_counter = 0

    for day_idx in range(config.days):
        day = config.start_day + timedelta(days=day_idx)
        rng = np.random.default_rng([seed, day_idx])

        plan = _plan_day(config, rng) if config.inject else []
        # A DNS anomaly skews the day's protocol assignment instead of
        # adding traffic, so total volume stays correlated with users.
        dns_factor = (float(rng.uniform(5.0, 8.0))
                      if AnomalyType.DNS_ANOMALY in plan else None)
        proto_names = list(config.proto_mix.keys())
        proto_probs = np.array(list(config.proto_mix.values()))
        if dns_factor is not None:
            dns_idx = proto_names.index("dns")
            dns_p = min(config.proto_mix["dns"] * dns_factor, 0.40)
            scale = (1.0 - dns_p) / (1.0 - proto_probs[dns_idx])
            proto_probs = proto_probs * scale
            proto_probs[dns_idx] = dns_p

        is_weekday = day.weekday() < 5
        mean_users = config.weekday_users if is_weekday else config.weekend_users
        n_sessions = int(round(mean_users * rng.lognormal(0.0, config.day_noise_sigma)))

        per_ap = rng.multinomial(n_sessions, ap_weights)
        starts = np.empty(n_sessions)
        durations = np.empty(n_sessions)
        ap_idx = np.empty(n_sessions, dtype=int)
        pos = 0
        for a, count in enumerate(per_ap):
            if count == 0:
                continue
            curve = HOTSPOT_CURVE if a < n_hot else CAMPUS_CURVE
            dur_factor = HOTSPOT_DURATION_FACTOR if a < n_hot else _regular_duration_factor(config)
            starts[pos:pos + count] = _sample_start_seconds(rng, curve, count)
            durations[pos:pos + count] = rng.lognormal(
                math.log(config.session_minutes_median * dur_factor),
                config.session_minutes_sigma, size=count) * 60.0
            ap_idx[pos:pos + count] = a
            pos += count

        devices = rng.integers(0, config.device_pool, size=n_sessions)
        starts, durations = _resolve_device_overlaps(devices, starts, durations)

        # Sessions never cross local midnight; late starts are truncated.
        starts = np.minimum(starts, 86395.0)
        ends = np.minimum(starts + durations, 86399.0)
        durations = ends - starts
        bytes_total = rng.lognormal(
            math.log(config.bytes_per_session_mean) - config.bytes_per_session_sigma ** 2 / 2.0,
            config.bytes_per_session_sigma, size=n_sessions)
        protos = rng.choice(proto_names, size=n_sessions, p=proto_probs)

        for i in range(n_sessions):
            mac = _device_mac(int(devices[i]))
            ap = ap_names[ap_idx[i]]
            records.append({"ts": _ts_string(day, starts[i]), "device": mac,
                            "ap": ap, "kind": "assoc"})
            records.append({"ts": _ts_string(day, ends[i]), "device": mac,
                            "ap": ap, "kind": "disassoc",
                            "session_minutes": round(durations[i] / 60.0, 2)})
            total = int(bytes_total[i])
            up = int(total * 0.15)
            records.append({"ts": _ts_string(day, (starts[i] + ends[i]) / 2.0),
                            "device": mac, "ap": ap, "kind": "traffic",
                            "bytes_up": up, "bytes_down": total - up,
                            "proto": str(protos[i])})

        # Baseline failed authentications.
        n_fail = rng.poisson(config.auth_fail_mean)
        fail_starts = _sample_start_seconds(rng, CAMPUS_CURVE, n_fail)
        fail_devices = rng.integers(0, config.device_pool, size=n_fail)
        fail_aps = rng.choice(config.ap_count, size=n_fail, p=ap_weights)
        for i in range(n_fail):
            records.append({"ts": _ts_string(day, fail_starts[i]),
                            "device": _device_mac(int(fail_devices[i])),
                            "ap": ap_names[int(fail_aps[i])], "kind": "auth_fail"})

        # Daily AP health, load-dependent: busier APs run hotter.
        load_norm = ap_weights / ap_weights.max()
        latency = 25.0 + 22.0 * load_norm + rng.normal(0.0, 2.0, size=config.ap_count)
        loss = 0.5 + 1.3 * load_norm + rng.normal(0.0, 0.12, size=config.ap_count)
        for a in range(config.ap_count):
            records.append({"ts": _ts_string(day, 12 * 3600.0),
                            "device": _device_mac(0), "ap": ap_names[a],
                            "kind": "ap_health",
                            "latency_ms": round(max(1.0, float(latency[a])), 1),
                            "loss_pct": round(min(100.0, max(0.05, float(loss[a]))), 2)})

        for etype in plan:
            if etype is AnomalyType.DNS_ANOMALY:
                injections.append(Injection(
                    day=day, type=AnomalyType.DNS_ANOMALY, magnitude=dns_factor))
                continue
            recs, inj, anomaly_device_counter = _inject_one(
                etype, config, rng, day, ap_names,
                float(np.sum(bytes_total)), anomaly_device_counter)
            records.extend(recs)
            injections.append(inj)

    return _sorted_records(records), GroundTruth(injections=tuple(injections))


def _regular_duration_factor(config: SimConfig) -> float:
    """Chosen so hotspot and regular sessions average back to the target."""
    hot_share = sum(HOTSPOT_DAILY_SESSIONS) / _REFERENCE_DAILY_CONNECTIONS
    return (1.0 - hot_share * HOTSPOT_DURATION_FACTOR) / (1.0 - hot_share)


def _resolve_device_overlaps(devices: np.ndarray, starts: np.ndarray,
                             durations: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Shift a device's later sessions so its own sessions never overlap;
    benign traffic must not trip the duplicate-device rules."""
    starts = starts.copy()
    order = np.argsort(devices, kind="stable")
    i = 0
    n = len(devices)
    while i < n:
        j = i
        while j + 1 < n and devices[order[j + 1]] == devices[order[i]]:
            j += 1
        if j > i:
            idxs = sorted(order[i:j + 1], key=lambda x: starts[x])
            for prev, cur in zip(idxs, idxs[1:]):
                gap_end = starts[prev] + durations[prev] + 120.0
                if starts[cur] < gap_end:
                    starts[cur] = gap_end
        i = j + 1
    return starts, durations


def _next_anomaly_devices(counter: int, count: int) -> tuple[list[str], int]:
    macs = [_anomaly_mac(counter + i) for i in range(count)]
    return macs, counter + count


def _plan_day(config: SimConfig, rng: np.random.Generator) -> list:
    plan = []
    for _ in range(int(rng.poisson(config.device_event_rate))):
        plan.append(AnomalyType.DUPLICATE_DEVICE
                    if rng.random() < config.duplicate_share
                    else AnomalyType.SIMULTANEOUS_CONNECTIONS)
    if rng.random() < config.auth_burst_prob:
        plan.append(AnomalyType.AUTH_BURST)
    if rng.random() < config.dns_anomaly_prob:
        plan.append(AnomalyType.DNS_ANOMALY)
    if rng.random() < config.traffic_spike_prob:
        plan.append(AnomalyType.TRAFFIC_SPIKE)
    plan = plan[:config.max_daily_injections]
    while len(plan) < config.min_daily_injections:
        plan.append(AnomalyType.DUPLICATE_DEVICE)
    return plan


def _inject_one(etype, config: SimConfig, rng: np.random.Generator, day: date,
                ap_names: list[str], day_traffic_bytes: float,
                counter: int) -> tuple[list[dict], Injection, int]:
    if etype is AnomalyType.DUPLICATE_DEVICE:
        return _inject_duplicate(config, rng, day, ap_names, counter)
    if etype is AnomalyType.SIMULTANEOUS_CONNECTIONS:
        return _inject_simultaneous(config, rng, day, ap_names, counter)
    if etype is AnomalyType.AUTH_BURST:
        return _inject_auth_burst(config, rng, day, ap_names, counter)
    if etype is AnomalyType.DNS_ANOMALY:
        return _inject_dns(config, rng, day, ap_names, day_traffic_bytes, counter)
    if etype is AnomalyType.TRAFFIC_SPIKE:
        return _inject_traffic_spike(config, rng, day, ap_names, counter)
    raise InvalidConfig(f"cannot inject anomaly type {etype.value}")


def _session_records(mac: str, ap: str, day: date, start: float, dur_s: float) -> list[dict]:
    end = min(start + dur_s, 86399.0)
    return [
        {"ts": _ts_string(day, start), "device": mac, "ap": ap, "kind": "assoc"},
        {"ts": _ts_string(day, end), "device": mac, "ap": ap, "kind": "disassoc",
         "session_minutes": round((end - start) / 60.0, 2)},
    ]


def _inject_duplicate(config, rng, day, ap_names, counter):
    (mac,), counter = _next_anomaly_devices(counter, 1)
    a1, a2 = rng.choice(len(ap_names), size=2, replace=False)
    start = rng.uniform(8 * 3600.0, 18 * 3600.0)
    dur = rng.uniform(1800.0, 4200.0)
    records = (_session_records(mac, ap_names[a1], day, start, dur)
               + _session_records(mac, ap_names[a2], day, start + dur * 0.4, dur))
    inj = Injection(day=day, type=AnomalyType.DUPLICATE_DEVICE,
                    devices=(mac,), aps=(ap_names[a1], ap_names[a2]),
                    magnitude=2.0)
    return records, inj, counter


def _inject_simultaneous(config, rng, day, ap_names, counter):
    (mac,), counter = _next_anomaly_devices(counter, 1)
    ap = ap_names[int(rng.integers(len(ap_names)))]
    n_overlap = int(rng.integers(5, 8))  # over the default limit of 3
    start = rng.uniform(8 * 3600.0, 18 * 3600.0)
    records = []
    for i in range(n_overlap):
        records.extend(_session_records(mac, ap, day, start + i * 60.0,
                                        rng.uniform(1800.0, 3600.0)))
    inj = Injection(day=day, type=AnomalyType.SIMULTANEOUS_CONNECTIONS,
                    devices=(mac,), aps=(ap,), magnitude=float(n_overlap))
    return records, inj, counter


def _inject_auth_burst(config, rng, day, ap_names, counter):
    (mac,), counter = _next_anomaly_devices(counter, 1)
    ap = ap_names[int(rng.integers(len(ap_names)))]
    n_fail = int(rng.integers(150, 321))
    start = rng.uniform(8 * 3600.0, 18 * 3600.0)
    offsets = np.sort(rng.uniform(0.0, 3600.0, size=n_fail))
    records = [{"ts": _ts_string(day, start + o), "device": mac, "ap": ap,
                "kind": "auth_fail"} for o in offsets]
    inj = Injection(day=day, type=AnomalyType.AUTH_BURST,
                    devices=(mac,), aps=(ap,), magnitude=float(n_fail))
    return records, inj, counter


def _inject_dns(config, rng, day, ap_names, day_traffic_bytes, counter):
    factor = rng.uniform(4.0, 8.0)
    extra_bytes = day_traffic_bytes * config.proto_mix["dns"] * (factor - 1.0)
    cohort_size = int(rng.integers(5, 16))
    macs, counter = _next_anomaly_devices(counter, cohort_size)
    ap = ap_names[int(rng.integers(len(ap_names)))]
    records = []
    per_device = extra_bytes / cohort_size
    for mac in macs:
        t = rng.uniform(9 * 3600.0, 17 * 3600.0)
        total = int(per_device)
        up = int(total * 0.45)  # query-heavy: uplink share is unusually high
        records.append({"ts": _ts_string(day, t), "device": mac, "ap": ap,
                        "kind": "traffic", "bytes_up": up,
                        "bytes_down": total - up, "proto": "dns"})
    inj = Injection(day=day, type=AnomalyType.DNS_ANOMALY,
                    devices=tuple(macs), aps=(ap,), magnitude=factor)
    return records, inj, counter


def _inject_traffic_spike(config, rng, day, ap_names, counter):
    (mac,), counter = _next_anomaly_devices(counter, 1)
    ap = ap_names[int(rng.integers(len(ap_names)))]
    extra_gb = rng.uniform(120.0, 220.0)
    # Proportional protocol mix keeps shares flat; the spike shows up only
    # in total volume.
    records = []
    n_chunks = 24
    for i in range(n_chunks):
        t = 8 * 3600.0 + i * 1200.0 + rng.uniform(0.0, 600.0)
        total = int(extra_gb * 1e9 / n_chunks)
        proto = str(rng.choice(list(config.proto_mix.keys()),
                               p=list(config.proto_mix.values())))
        up = int(total * 0.15)
        records.append({"ts": _ts_string(day, t), "device": mac, "ap": ap,
                        "kind": "traffic", "bytes_up": up,
                        "bytes_down": total - up, "proto": proto})
    inj = Injection(day=day, type=AnomalyType.TRAFFIC_SPIKE,
                    devices=(mac,), aps=(ap,), magnitude=extra_gb)
    return records, inj, counter


def inject_anomalies(records: list[dict], spec: Sequence[dict],
                     seed: int = 0) -> tuple[list[dict], GroundTruth]:
    """Superimpose crafted anomalies onto an existing sorted trace.

    ``spec`` entries are {"day": iso date, "type": anomaly type value};
    original records are returned unchanged, with injected records
    interleaved in time order.
    """
    config = SimConfig()
    rng = np.random.default_rng(seed)
    ap_names = sorted({r["ap"] for r in records}) or _ap_names(config.ap_count)
    counter = 0
    injected: list[dict] = []
    injections: list[Injection] = []

    day_bytes: dict = {}
    for r in records:
        if r["kind"] == "traffic":
            d = _local_day_of(r["ts"])
            day_bytes[d] = day_bytes.get(d, 0) + r["bytes_up"] + r["bytes_down"]

    for entry in spec:
        day = date.fromisoformat(entry["day"])
        etype = AnomalyType(entry["type"])
        recs, inj, counter = _inject_one(etype, config, rng, day, ap_names,
                                         day_bytes.get(day, 0.0), counter)
        injected.extend(recs)
        injections.append(inj)

    return _sorted_records(list(records) + injected), GroundTruth(tuple(injections))


def _local_day_of(ts: str) -> date:
    return datetime.fromisoformat(ts.replace("Z", "+00:00")).astimezone(LOCAL_TZ).date()

"""Read-only metrics/alerts service over a sealed run directory.

Endpoints: /metrics (line-oriented text exposition), /alerts (anomaly list
as JSON), /healthz (liveness).  The snapshot is loaded once at startup and
never mutated; concurrent readers are served from threads.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .pipeline import StoredRun, load_run


def metrics_exposition(run: StoredRun) -> str:
    """`name{label="v"} value` lines for the current aggregates and
    anomaly counters."""
    lines = []
    for agg in run.aggregates:
        day = agg["day"]
        lines.append(f'wlantel_daily_connections{{day="{day}"}} {agg["connections"]}')
        lines.append(f'wlantel_daily_traffic_gb{{day="{day}"}} {agg["traffic_gb"]:.6g}')
        lines.append(f'wlantel_daily_auth_failures{{day="{day}"}} {agg["auth_failures"]}')
        lines.append(f'wlantel_daily_overload_pct{{day="{day}"}} {agg["overload_pct"]:.6g}')
        lines.append(f'wlantel_daily_anomalies{{day="{day}"}} {run.daily_anomaly_counts[day]}')
    by_type: dict = {}
    for e in run.anomalies:
        by_type[e["type"]] = by_type.get(e["type"], 0) + 1
    for etype, count in sorted(by_type.items()):
        lines.append(f'wlantel_anomalies_total{{type="{etype}"}} {count}')
    lines.append(f"wlantel_anomalies_count {len(run.anomalies)}")
    lines.append(f"wlantel_recommendations_count {len(run.recommendations)}")
    return "\n".join(lines) + "\n"


class _Handler(BaseHTTPRequestHandler):
    run: StoredRun = None  # injected by make_server

    def do_GET(self):  # noqa: N802 (http.server API)
        if self.path == "/healthz":
            self._reply(200, "text/plain; charset=utf-8", "ok\n")
        elif self.path == "/metrics":
            self._reply(200, "text/plain; charset=utf-8",
                        metrics_exposition(self.run))
        elif self.path == "/alerts":
            self._reply(200, "application/json",
                        json.dumps(self.run.anomalies) + "\n")
        else:
            self._reply(404, "text/plain; charset=utf-8", "not found\n")

    def do_POST(self):  # noqa: N802
        self._reply(405, "text/plain; charset=utf-8", "read-only service\n")

    do_PUT = do_DELETE = do_PATCH = do_POST

    def _reply(self, status: int, content_type: str, body: str):
        payload = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, fmt, *args):
        pass  # keep the data/diagnostic streams clean


def make_server(rundir: str, addr: str = "127.0.0.1:8080") -> ThreadingHTTPServer:
    host, _, port = addr.rpartition(":")
    snapshot = load_run(rundir)
    handler = type("RunHandler", (_Handler,), {"run": snapshot})
    return ThreadingHTTPServer((host or "127.0.0.1", int(port)), handler)


def serve_metrics(rundir: str, addr: str = "127.0.0.1:8080") -> None:
    server = make_server(rundir, addr)
    try:
        server.serve_forever()
    finally:
        server.server_close()


def start_background(rundir: str, addr: str = "127.0.0.1:0") -> tuple[ThreadingHTTPServer, threading.Thread]:
    """Start the service on a daemon thread; used by tests and embedding."""
    server = make_server(rundir, addr)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread

"""Campus WLAN telemetry analytics.

Pipeline stages: ingest (parse/anonymize/validate controller logs),
descriptive (daily metrics, AP load, baselines), detection (isolation
forest, density clustering, dynamic thresholds, device rules),
prescriptive (recommended actions), plus a statistical simulator that
regenerates the reference monthly figures for desk-scale verification.
"""

__version__ = "0.1.0"

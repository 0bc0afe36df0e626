"""Run metrics: apparent latency, partition records, heal times, intervals.

Reports serialize to a JSON document plus flat CSV extracts (one row per
request / fault / partition record). All output is deterministic for a given
scenario and seed: no wall-clock, no environment data, stable field order.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class RequestRecord:
    rid: int
    src: int
    dst: int
    issued: int
    delivered: int | None = None
    latency: int | None = None
    attempts: int = 1
    outcome: str = "pending"  # delivered | failed | pending


@dataclass
class FaultRecord:
    fid: int
    kind: str
    target: str
    start: int
    duration: int | None  # None: permanent
    heal_slots: int | None = None
    classification: str = "sub-threshold"


@dataclass
class PartitionRecord:
    pid: int
    klass: str  # H | S | U
    first_observed: int
    duration: int
    fault_id: int | None


@dataclass
class MetricsReport:
    scenario: dict
    requests: list[RequestRecord] = field(default_factory=list)
    faults: list[FaultRecord] = field(default_factory=list)
    partitions: list[PartitionRecord] = field(default_factory=list)
    unavailability: list[tuple[int, int]] = field(default_factory=list)
    inconsistency: list[tuple[int, int]] = field(default_factory=list)
    register: dict | None = None
    # optional per-slot debug trace: (tick, link id, slot counter, outcome, payload id)
    slot_trace: list[tuple[int, int, int, str, object]] | None = None

    @property
    def latency_samples(self) -> list[int]:
        return [r.latency for r in self.requests if r.latency is not None]

    def class_counts(self) -> dict[str, int]:
        counts = {"H": 0, "S": 0, "U": 0, "sub-threshold": 0}
        for p in self.partitions:
            counts[p.klass] += 1
        counts["sub-threshold"] = sum(
            1 for f in self.faults if f.classification == "sub-threshold"
        )
        return counts

    def max_heal_slots(self) -> int:
        slots = [f.heal_slots for f in self.faults if f.heal_slots is not None]
        return max(slots) if slots else 0

    def summary_line(self) -> str:
        c = self.class_counts()
        lat = self.latency_samples
        p99 = percentile(lat, 0.99) if lat else 0
        return (
            f"partitions H={c['H']} S={c['S']} U={c['U']} "
            f"sub-threshold={c['sub-threshold']} "
            f"max-heal-slots={self.max_heal_slots()} p99-latency={p99}"
        )

    def to_json_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "summary": {
                "class_counts": self.class_counts(),
                "max_heal_slots": self.max_heal_slots(),
                "delivered": sum(1 for r in self.requests if r.outcome == "delivered"),
                "failed": sum(1 for r in self.requests if r.outcome == "failed"),
                "pending": sum(1 for r in self.requests if r.outcome == "pending"),
                "latency": apparent_latency_histogram(self) if self.latency_samples else None,
            },
            "unavailability": [list(iv) for iv in self.unavailability],
            "inconsistency": [list(iv) for iv in self.inconsistency],
            "register": self.register,
            "partitions": [
                {
                    "pid": p.pid,
                    "class": p.klass,
                    "first_observed": p.first_observed,
                    "duration": p.duration,
                    "fault_id": p.fault_id,
                }
                for p in self.partitions
            ],
            "faults": [
                {
                    "fid": f.fid,
                    "kind": f.kind,
                    "target": f.target,
                    "start": f.start,
                    "duration": f.duration,
                    "heal_slots": f.heal_slots,
                    "classification": f.classification,
                }
                for f in self.faults
            ],
        }

    def write_outputs(self, outdir: str | Path) -> list[Path]:
        """Write report.json plus requests/faults/partitions CSV extracts."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        written = []

        report = outdir / "report.json"
        report.write_text(json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n")
        written.append(report)

        req = outdir / "requests.csv"
        with req.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rid", "src", "dst", "issued", "delivered", "latency", "attempts", "outcome"])
            for r in self.requests:
                w.writerow(
                    [
                        r.rid,
                        r.src,
                        r.dst,
                        r.issued,
                        "" if r.delivered is None else r.delivered,
                        "" if r.latency is None else r.latency,
                        r.attempts,
                        r.outcome,
                    ]
                )
        written.append(req)

        flt = outdir / "faults.csv"
        with flt.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["fid", "kind", "target", "start", "duration", "heal_slots", "classification"])
            for f in self.faults:
                w.writerow(
                    [
                        f.fid,
                        f.kind,
                        f.target,
                        f.start,
                        "" if f.duration is None else f.duration,
                        "" if f.heal_slots is None else f.heal_slots,
                        f.classification,
                    ]
                )
        written.append(flt)

        part = outdir / "partitions.csv"
        with part.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["pid", "class", "first_observed", "duration", "fault_id"])
            for p in self.partitions:
                w.writerow(
                    [p.pid, p.klass, p.first_observed, p.duration, "" if p.fault_id is None else p.fault_id]
                )
        written.append(part)

        if self.slot_trace is not None:
            trace = outdir / "trace.csv"
            with trace.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["tick", "link_id", "slot_counter", "outcome", "payload_id"])
                for row in self.slot_trace:
                    w.writerow(row)
            written.append(trace)
        return written


def percentile(samples: list[int], q: float) -> int:
    """Nearest-rank percentile of integer samples (deterministic)."""
    if not samples:
        raise ValueError("no samples")
    ordered = sorted(samples)
    rank = max(1, math.ceil(q * len(ordered)))
    return ordered[rank - 1]


def apparent_latency_histogram(report: MetricsReport) -> dict[str, int]:
    """p50/p99/p999/max summary of delivered-request latencies in ticks."""
    samples = report.latency_samples
    if not samples:
        raise ValueError("no latency samples in report")
    return {
        "p50": percentile(samples, 0.50),
        "p99": percentile(samples, 0.99),
        "p999": percentile(samples, 0.999),
        "max": max(samples),
    }

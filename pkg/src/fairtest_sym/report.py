"""Run reports: per-source #Gen/#InDi counters and their serialisations."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum

SCHEMA_VERSION = 1


class Source(str, Enum):
    SEED = "Seed"
    DIRECTED = "Directed"
    UNDIRECTED = "Undirected"
    RANDOM = "Random"


SOURCES = tuple(Source)


@dataclass
class Counter:
    gen: int = 0
    indi: int = 0

    @property
    def success_rate(self) -> float | None:
        return self.indi / self.gen if self.gen else None


@dataclass
class RunReport:
    counts: dict[Source, Counter] = field(default_factory=lambda: {s: Counter() for s in SOURCES})
    witnesses: list[tuple[tuple[int, ...], tuple[int, ...]]] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    probes: int = 0
    checkpoints: list[tuple[int, int, int]] = field(default_factory=list)
    duration: float = 0.0

    def record(self, source: Source, discriminatory: bool) -> None:
        c = self.counts[source]
        c.gen += 1
        if discriminatory:
            c.indi += 1

    def checkpoint(self, count: int) -> None:
        t = self.total
        self.checkpoints.append((count, t.gen, t.indi))

    @property
    def total(self) -> Counter:
        return Counter(sum(c.gen for c in self.counts.values()),
                       sum(c.indi for c in self.counts.values()))

    @property
    def success_rate(self) -> float | None:
        return self.total.success_rate

    def check(self) -> None:
        for s, c in self.counts.items():
            if not 0 <= c.indi <= c.gen:
                raise AssertionError(f"{s.value}: #InDi {c.indi} exceeds #Gen {c.gen}")

    def merge(self, other: RunReport) -> RunReport:
        out = RunReport(config={"runs": [self.config, other.config]})
        for s in SOURCES:
            out.counts[s] = Counter(self.counts[s].gen + other.counts[s].gen,
                                    self.counts[s].indi + other.counts[s].indi)
        out.witnesses = self.witnesses + other.witnesses
        out.probes = self.probes + other.probes
        out.duration = self.duration + other.duration
        return out

    def to_dict(self, include_timing: bool = False) -> dict:
        self.check()
        d = {
            "schema_version": SCHEMA_VERSION,
            "sources": {s.value: {"gen": c.gen, "indi": c.indi} for s, c in self.counts.items()},
            "total": {"gen": self.total.gen, "indi": self.total.indi},
            "witnesses": [[list(a), list(b)] for a, b in self.witnesses],
            "config": self.config,
            "probes": self.probes,
            "checkpoints": [list(c) for c in self.checkpoints],
        }
        if include_timing:
            d["duration_s"] = round(self.duration, 6)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> RunReport:
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema version {d.get('schema_version')!r}")
        r = cls()
        for name, c in d["sources"].items():
            r.counts[Source(name)] = Counter(c["gen"], c["indi"])
        r.witnesses = [(tuple(a), tuple(b)) for a, b in d["witnesses"]]
        r.config = d["config"]
        r.probes = d["probes"]
        r.checkpoints = [tuple(c) for c in d["checkpoints"]]
        r.duration = d.get("duration_s", 0.0)
        return r


def format_rate(rate: float | None) -> str:
    return "n/a" if rate is None else f"{100 * rate:.1f}%"


def emit_report(report: RunReport, fmt: str = "json", include_timing: bool = False) -> bytes:
    if fmt == "json":
        return (json.dumps(report.to_dict(include_timing), indent=2, sort_keys=True) + "\n").encode()
    report.check()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["source", "gen", "indi", "success_rate"])
        for s, c in report.counts.items():
            rate = c.success_rate
            w.writerow([s.value, c.gen, c.indi, "" if rate is None else f"{rate:.6f}"])
        return buf.getvalue().encode()
    if fmt == "text":
        rows = [(s.value, c) for s, c in report.counts.items()] + [("Total", report.total)]
        lines = [f"{'source':<12}{'#Gen':>8}{'#InDi':>8}{'success':>10}"]
        for name, c in rows:
            lines.append(f"{name:<12}{c.gen:>8}{c.indi:>8}{format_rate(c.success_rate):>10}")
        lines.append(f"model probes: {report.probes}")
        if include_timing:
            lines.append(f"wall clock: {report.duration:.2f} s")
        return ("\n".join(lines) + "\n").encode()
    raise ValueError(f"unknown report format {fmt!r}")


def checkpoints_csv(report: RunReport) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tests", "gen", "indi"])
    w.writerows(report.checkpoints)
    return buf.getvalue().encode()

"""Run reports and their on-disk layout."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .config import ExperimentConfig


@dataclass
class Verdict:
    name: str
    passed: bool
    value: float | None = None
    threshold: float | None = None
    note: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.value = None if self.value is None else float(self.value)
        self.threshold = None if self.threshold is None else float(self.threshold)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": _json_number(self.value),
                "threshold": _json_number(self.threshold), "note": self.note}


@dataclass
class Table:
    columns: Sequence[str]
    rows: list[Sequence[Any]] = field(default_factory=list)


@dataclass
class RunReport:
    config: ExperimentConfig
    tables: dict[str, Table] = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    wall_clock_seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    @property
    def failing_checks(self) -> list[str]:
        return [v.name for v in self.verdicts if not v.passed]

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)


def _json_number(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def format_cell(value) -> str:
    """Stable text for a CSV cell; floats use 17 significant digits."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, int):
        return str(value)
    if value is None:
        return ""
    try:
        return format(float(value), ".17g")
    except (TypeError, ValueError):
        return str(value)


def table_to_csv(table: Table, config_hash: str) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["config_hash", *table.columns])
    for row in table.rows:
        writer.writerow([config_hash[:16], *(format_cell(v) for v in row)])
    return buf.getvalue()


def persist_run(report: RunReport, directory: str | Path | None = None) -> Path:
    """Write ``config.json``, ``results.csv`` (+ extra tables) and ``summary.json``.

    The main table is the one named ``results``. Every CSV row starts with
    the first 16 hex digits of the config hash. Wall-clock time is only in
    the summary, so CSV files are reproducible byte for byte.
    """
    out = Path(directory) if directory is not None else report.config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    digest = report.config.input_hash()
    (out / "config.json").write_text(report.config.to_json(), encoding="utf-8")
    for name, table in report.tables.items():
        (out / f"{name}.csv").write_text(table_to_csv(table, digest), encoding="utf-8")
    summary = {
        "campaign": report.config.campaign,
        "passed": report.passed,
        "failing_checks": report.failing_checks,
        "verdicts": [v.as_dict() for v in report.verdicts],
        "notes": report.notes,
        "input_hash": digest,
        "tables": sorted(report.tables),
        "wall_clock_seconds": round(report.wall_clock_seconds, 3),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    return out

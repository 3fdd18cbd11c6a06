"""Experiment reports: rows, verdicts, and file output.

Each experiment emits one CSV of raw rows (the stable machine interface),
one plain-text summary of verdicts, and optionally SVG plots.  Every verdict
is recomputable from the rows: it stores the measured value, the tolerance,
and the comparison direction that produced the boolean.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import dataclass, field
from typing import Optional


@dataclass
class Verdict:
    name: str
    passed: bool
    measured: float
    tolerance: float
    comparator: str  # "<=", ">=", "abs<="

    @staticmethod
    def check(name: str, measured: float, tolerance: float, comparator: str) -> "Verdict":
        if comparator == "<=":
            ok = measured <= tolerance
        elif comparator == ">=":
            ok = measured >= tolerance
        elif comparator == "abs<=":
            ok = abs(measured) <= tolerance
        else:
            raise ValueError(f"unknown comparator {comparator!r}")
        return Verdict(name, bool(ok), float(measured), float(tolerance), comparator)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: measured {self.measured:.6g} {self.comparator} {self.tolerance:.6g}"


@dataclass
class ExperimentReport:
    experiment_id: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    verdicts: list[Verdict] = field(default_factory=list)
    fingerprint: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    notes: list[str] = field(default_factory=list)

    def add_row(self, **kv):
        unknown = set(kv) - set(self.columns)
        if unknown:
            raise ValueError(f"row keys {unknown} not in declared columns")
        self.rows.append(kv)

    def add_verdict(self, name, measured, tolerance, comparator):
        self.verdicts.append(Verdict.check(name, measured, tolerance, comparator))

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    # ------------------------------------------------------------------ I/O

    def csv_path(self, outdir) -> str:
        return os.path.join(outdir, f"{self.experiment_id}_rows.csv")

    def summary_path(self, outdir) -> str:
        return os.path.join(outdir, f"{self.experiment_id}_summary.txt")

    def write(self, outdir) -> None:
        os.makedirs(outdir, exist_ok=True)
        with open(self.csv_path(outdir), "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=self.columns)
            w.writeheader()
            for row in self.rows:
                w.writerow({k: _fmt(row.get(k)) for k in self.columns})
        with open(self.summary_path(outdir), "w", encoding="utf-8") as fh:
            fh.write(self.summary_text())

    def summary_text(self) -> str:
        buf = io.StringIO()
        status = "PASS" if self.passed else "FAIL"
        buf.write(f"experiment {self.experiment_id}: {status}\n")
        buf.write(f"wall_clock_s {self.wall_clock:.2f}\n")
        buf.write("fingerprint " + json.dumps(self.fingerprint, sort_keys=True) + "\n")
        buf.write(f"rows {len(self.rows)}\n")
        for note in self.notes:
            buf.write(f"note: {note}\n")
        for v in self.verdicts:
            buf.write(v.line() + "\n")
        return buf.getvalue()


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return x


def load_rows(csv_file) -> list[dict]:
    with open(csv_file, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


VERDICT_COLUMNS = ["verdict", "measured", "tolerance", "comparator"]


def recompute_verdicts(summary_file) -> list[Verdict]:
    """Re-derive verdict booleans from the measured/tolerance values in a
    summary file (consistency tool for the `report` subcommand)."""
    out = []
    with open(summary_file, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith(("[PASS]", "[FAIL]")):
                continue
            body = line.split("] ", 1)[1]
            name, rest = body.split(": measured ", 1)
            parts = rest.split()
            measured = float(parts[0])
            comparator = parts[1]
            tolerance = float(parts[2])
            out.append(Verdict.check(name, measured, tolerance, comparator))
    return out


class StageTimer:
    def __init__(self):
        self.t0 = time.monotonic()

    def elapsed(self) -> float:
        return time.monotonic() - self.t0

"""Structured experiment reports with deterministic serialization.

Reports serialize to JSON (sorted keys) and flat CSV tables; identical
config and seed produce byte-identical files.  Wall-clock time is therefore
logged to stderr, never written into report files.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

SCHEMA_VERSION = "morreylab.report/1"


@dataclass
class Check:
    """One pass/fail entry: measured value against a reference at a tolerance."""

    name: str
    passed: bool
    value: Optional[float] = None
    tolerance: Optional[float] = None
    reference: Optional[float] = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": self.value,
            "tolerance": self.tolerance,
            "reference": self.reference,
            "note": self.note,
        }


@dataclass
class Report:
    """Record of one verification run."""

    experiment: str
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None
    quantities: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # name -> list of row dicts

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name, passed, value=None, tolerance=None, reference=None, note=""):
        c = Check(name, bool(passed), _num(value), _num(tolerance), _num(reference), note)
        self.checks.append(c)
        return c

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "experiment": self.experiment,
            "params": self.params,
            "seed": self.seed,
            "quantities": self.quantities,
            "checks": [c.to_dict() for c in self.checks],
            "passed": self.passed,
        }

    def to_json_bytes(self) -> bytes:
        return (
            json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False)
            + "\n"
        ).encode()

    def write(self, outdir, name: str) -> list:
        """Write ``<name>.json`` plus one CSV per table; returns the paths."""
        import os

        os.makedirs(outdir, exist_ok=True)
        paths = []
        json_path = os.path.join(outdir, f"{name}.json")
        with open(json_path, "wb") as fh:
            fh.write(self.to_json_bytes())
        paths.append(json_path)
        for tname, rows in sorted(self.tables.items()):
            csv_path = os.path.join(outdir, f"{name}.{tname}.csv")
            _write_csv(csv_path, rows)
            paths.append(csv_path)
        return paths


def _num(x):
    """Plain JSON-safe numbers (repr of float round-trips exactly)."""
    if x is None:
        return None
    if isinstance(x, bool):
        return x
    if isinstance(x, (int,)):
        return x
    return float(x)


def _write_csv(path, rows):
    if not rows:
        with open(path, "w") as fh:
            fh.write("\n")
        return
    fields = list(rows[0].keys())
    with open(path, "w") as fh:
        fh.write(",".join(fields) + "\n")
        for row in rows:
            cells = []
            for key in fields:
                v = row.get(key)
                if isinstance(v, float):
                    cells.append(repr(v))
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")


class StageTimer:
    """Logs wall time to stderr; never enters report files (determinism)."""

    def __init__(self, label: str):
        self.label = label

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        dt = time.perf_counter() - self.t0
        print(f"[morreylab] {self.label}: {dt:.3f}s", file=sys.stderr)
        return False

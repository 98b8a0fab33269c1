"""Verification reports: JSON and CSV surfaces."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .collar import CheckResult

SCHEMA_VERSION = "1"


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    return x


@dataclass
class VerificationReport:
    inputs_digest: str
    sampling: dict
    min_margin: float | None
    worst: dict
    checks: list[CheckResult] = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    drift: dict = field(default_factory=dict)
    trace: dict | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict:
        return _clean(
            {
                "schema_version": SCHEMA_VERSION,
                "inputs_digest": self.inputs_digest,
                "sampling": self.sampling,
                "min_margin": self.min_margin,
                "worst_sample": self.worst,
                "checks": [c.to_json() for c in self.checks],
                "constants": self.constants,
                "drift": self.drift,
                "pass": self.passed,
            }
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "t", "min_scal", "H", "II_min_eig"])
        if self.trace:
            for row in zip(*(self.trace[c] for c in ("s", "t", "min_scal", "H", "II_min_eig"))):
                w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

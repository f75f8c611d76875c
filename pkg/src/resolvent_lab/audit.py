"""Pass/fail records for every sampled or closed-form inequality check."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

PASS = "pass"
FAIL = "fail"
INAPPLICABLE = "inapplicable"


@dataclass(frozen=True)
class AuditReport:
    """Outcome of one audit.

    ``worst_margin`` is the largest observed ``lhs - rhs`` of the audited
    inequality; the audit passes when it stays within ``tolerance``.  An
    inapplicable audit (hypotheses not met) carries ``-inf`` and no samples.
    """

    name: str
    status: str
    worst_margin: float
    tolerance: float
    samples: int
    witness: dict[str, Any] | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def witness_json(self) -> str:
        if self.witness is None:
            return ""
        return json.dumps(_plain(self.witness), sort_keys=True)

    def line(self) -> str:
        return (f"[{self.status.upper():>12}] {self.name}: worst margin "
                f"{self.worst_margin:.3e} (tol {self.tolerance:.1e}, "
                f"{self.samples} samples)")


def inapplicable(name: str, tolerance: float, reason: str, **details) -> AuditReport:
    return AuditReport(name, INAPPLICABLE, -math.inf, tolerance, 0,
                       details={"reason": reason, **details})


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(repr(float(obj))) if math.isfinite(obj) else str(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


class Sweep:
    """Accumulates margins batch by batch.

    With ``stop_on_violation`` the sweep ends at the first margin above the
    tolerance (NaN counts as a violation) and keeps that sample as witness.
    """

    def __init__(self, name: str, tolerance: float, stop_on_violation: bool = True):
        self.name = name
        self.tolerance = tolerance
        self.stop_on_violation = stop_on_violation
        self.worst = -math.inf
        self.samples = 0
        self.witness: dict[str, Any] | None = None
        self.violated = False

    @property
    def done(self) -> bool:
        return self.violated and self.stop_on_violation

    def add(self, margins, witness: Callable[[int], dict] | dict | None = None) -> bool:
        """Feed a batch; returns False once the sweep should stop."""
        if self.done:
            return False
        m = np.atleast_1d(np.asarray(margins, dtype=float))
        m = np.where(np.isnan(m), np.inf, m)
        bad = np.flatnonzero(m > self.tolerance)
        if bad.size and self.stop_on_violation:
            m = m[: bad[0] + 1]
        if m.size:
            k = int(bad[0]) if bad.size else int(np.argmax(m))
            # first violation wins the witness slot; otherwise the worst sample
            if (bad.size and not self.violated) or (not self.violated and m[k] > self.worst):
                self.witness = witness(k) if callable(witness) else witness
            self.worst = max(self.worst, float(m.max()))
        self.samples += int(m.size)
        if bad.size:
            self.violated = True
        return not self.done

    def report(self, **details) -> AuditReport:
        status = FAIL if self.violated else PASS
        if self.samples == 0:
            return inapplicable(self.name, self.tolerance, "no admissible samples", **details)
        return AuditReport(self.name, status, self.worst, self.tolerance,
                           self.samples, self.witness, details)

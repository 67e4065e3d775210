"""Verification reports: human-readable lines plus machine-readable records."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .exact import QI


class VerificationError(AssertionError):
    """Raised by :meth:`Report.require` when a check failed."""


def _jsonable(v: Any):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, QI):
        return str(v)
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, float):
        return v if math.isfinite(v) else str(v)
    try:
        import numpy as np

        if isinstance(v, np.generic):
            return _jsonable(v.item())
        if isinstance(v, np.ndarray):
            return _jsonable(v.tolist())
    except ImportError:  # pragma: no cover
        pass
    return repr(v)


@dataclass
class Report:
    """Outcome of a verification run.

    ``checks`` maps check names to booleans; ``values`` holds fitted constants
    and diagnostics; ``failures`` lists messages for failed checks, each naming
    the first violating sample when there is one.
    """

    name: str
    checks: dict[str, bool] = field(default_factory=dict)
    values: dict[str, Any] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def check(self, label: str, ok: bool, message: str = "") -> bool:
        ok = bool(ok)
        self.checks[label] = self.checks.get(label, True) and ok
        if not ok:
            self.failures.append(f"{label}: {message}" if message else label)
        return ok

    def set(self, key: str, value: Any) -> None:
        self.values[key] = value

    def note(self, text: str) -> None:
        self.notes.append(text)

    def merge(self, other: "Report", prefix: str | None = None) -> None:
        pre = f"{prefix or other.name}."
        for k, v in other.checks.items():
            self.checks[pre + k] = v
        for k, v in other.values.items():
            self.values[pre + k] = v
        self.failures.extend(pre + f for f in other.failures)
        self.notes.extend(other.notes)

    def require(self) -> "Report":
        if not self.passed:
            raise VerificationError(f"{self.name} failed: " + "; ".join(self.failures[:5]))
        return self

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checks": dict(self.checks),
            "values": _jsonable(self.values),
            "failures": list(self.failures),
            "notes": list(self.notes),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_record(), **kw)

    def lines(self) -> list[str]:
        out = [f"[{'PASS' if self.passed else 'FAIL'}] {self.name}"]
        for k, ok in self.checks.items():
            out.append(f"  {'ok  ' if ok else 'FAIL'} {k}")
        for k, v in self.values.items():
            out.append(f"  {k} = {_short(v)}")
        for f in self.failures:
            out.append(f"  ! {f}")
        for n in self.notes:
            out.append(f"  # {n}")
        return out

    def __str__(self):
        return "\n".join(self.lines())


def _short(v: Any) -> str:
    s = json.dumps(_jsonable(v))
    return s if len(s) <= 160 else s[:157] + "..."

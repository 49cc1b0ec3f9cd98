from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "tolist"):
        return _jsonable(x.tolist())
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return str(x)


@dataclass
class CheckReport:
    """Outcome of one named numerical check.

    ``value`` and ``reference`` may be scalars or dicts of named scalars.
    Informational reports never count as failures.
    """

    name: str
    value: Any
    reference: Any = None
    abs_err: float = 0.0
    tol: float = 0.0
    passed: bool = True
    informational: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "value": _jsonable(self.value),
            "reference": _jsonable(self.reference),
            "abs_err": _jsonable(float(self.abs_err)),
            "tol": _jsonable(float(self.tol)),
            "pass": bool(self.passed),
            "informational": bool(self.informational),
        }
        if self.notes:
            d["notes"] = list(self.notes)
        return d

    def line(self) -> str:
        status = "INFO" if self.informational else ("PASS" if self.passed else "FAIL")
        return f"[{status}] {self.name}: abs_err={self.abs_err:.3e} tol={self.tol:.1e}"

    @property
    def counts(self) -> bool:
        """True when this report can make an overall run fail."""
        return not self.informational


def all_pass(reports) -> bool:
    return all(r.passed for r in reports if r.counts)

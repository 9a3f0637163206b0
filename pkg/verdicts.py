"""Verdict records shared by the property checkers.

Every checker in the lab reports sampled failures instead of raising: a
``PropertyVerdict`` carries the list of ``Violation`` witnesses plus any
condition-(2) style suspects, and passes only when both lists are empty.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence


def json_float(value: Any) -> Any:
    """Return ``value`` in a form ``json.dumps`` accepts without NaN/Infinity."""

    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, int):
        return value
    try:
        number = float(value)
    except (TypeError, ValueError):
        return str(value)
    if math.isfinite(number):
        return number
    if math.isnan(number):
        return "nan"
    return "inf" if number > 0 else "-inf"


@dataclass(frozen=True)
class Violation:
    point: Sequence[Any]
    lhs: float
    rhs: float
    kind: str = "inequality"
    detail: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "point": [json_float(p) for p in self.point],
            "lhs": json_float(self.lhs),
            "rhs": json_float(self.rhs),
            "kind": self.kind,
        }
        if self.detail:
            data["detail"] = self.detail
        return data


@dataclass
class PropertyVerdict:
    name: str
    checked: int = 0
    violations: List[Violation] = field(default_factory=list)
    suspects: List[Violation] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations and not self.suspects

    def to_dict(self) -> Dict[str, Any]:
        return {
            "property": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "violations": [v.to_dict() for v in self.violations],
            "suspects": [v.to_dict() for v in self.suspects],
            "notes": list(self.notes),
        }

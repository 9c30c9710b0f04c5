"""Fitted constants for two-sided inequalities, with stability flags."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# fitted constants may move by less than this factor under sample doubling
STABILITY_FACTOR = 2.0


@dataclass
class BoundFit:
    inequality: str
    constants: dict
    worst_margin: float
    stable: bool
    details: dict = field(default_factory=dict)
    exact: bool = False
    tolerance: float = 0.0

    @property
    def passed(self) -> bool:
        if self.exact:
            return self.worst_margin >= -self.tolerance
        finite = all(math.isfinite(v) for v in self.constants.values()
                     if isinstance(v, (int, float)))
        return self.stable and finite

    def summary(self) -> dict:
        return {
            "inequality": self.inequality,
            "constants": self.constants,
            "worst_margin": self.worst_margin,
            "stable": self.stable,
            "passed": self.passed,
            "exact": self.exact,
        }


def same_scale(a: float, b: float, factor: float = STABILITY_FACTOR) -> bool:
    """Two positive constants agree within the given factor."""
    if not (math.isfinite(a) and math.isfinite(b)):
        return False
    if a <= 0 or b <= 0:
        return a == b
    return max(a / b, b / a) < factor


def same_log_scale(la: float, lb: float, factor: float = STABILITY_FACTOR) -> bool:
    """Log-constants (or additive constants) agree within log(factor)."""
    if not (math.isfinite(la) and math.isfinite(lb)):
        return False
    return abs(la - lb) < math.log(factor)

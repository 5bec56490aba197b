"""Value algebras that give associative-array operations their meaning.

Each semiring is a tuple (add, mul, zero, one).  ``zero`` is the implicit
value of every absent array entry and annihilates under ``mul``.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field
from typing import Callable

INF = math.inf


@dataclass(frozen=True)
class SemiringSpec:
    id: str
    add: Callable[[float, float], float]
    mul: Callable[[float, float], float]
    zero: float
    one: float
    # value domain on which the laws hold: "real", "nonnegative" or "positive"
    domain: str = field(default="real", compare=False)

    def sum(self, values) -> float:
        acc = self.zero
        for v in values:
            acc = self.add(acc, v)
        return acc

    def is_zero(self, v: float) -> bool:
        return v == self.zero

    def __repr__(self):
        return f"SemiringSpec({self.id})"


PLUS_TIMES = SemiringSpec("plus-times", operator.add, operator.mul, 0.0, 1.0)
MAX_PLUS = SemiringSpec("max-plus", max, operator.add, -INF, 0.0)
MIN_PLUS = SemiringSpec("min-plus", min, operator.add, INF, 0.0)
MAX_TIMES = SemiringSpec("max-times", max, operator.mul, 0.0, 1.0, "nonnegative")
MIN_TIMES = SemiringSpec("min-times", min, operator.mul, INF, 1.0, "positive")
MAX_MIN = SemiringSpec("max-min", max, min, -INF, INF)
MIN_MAX = SemiringSpec("min-max", min, max, INF, -INF)

REGISTRY: dict[str, SemiringSpec] = {
    s.id: s
    for s in (PLUS_TIMES, MAX_PLUS, MIN_PLUS, MAX_TIMES, MIN_TIMES, MAX_MIN, MIN_MAX)
}


def get(name: str | SemiringSpec) -> SemiringSpec:
    if isinstance(name, SemiringSpec):
        return name
    key = name.replace("_", "-").replace(".", "-").lower()
    try:
        return REGISTRY[key]
    except KeyError:
        raise KeyError(f"unknown semiring {name!r}; known: {', '.join(REGISTRY)}") from None

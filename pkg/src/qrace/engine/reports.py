"""Bound-check records shared by the solvers and the certificate code.

A check either holds, fails, or is inapplicable because its precondition is
unmet. Inapplicable is a verdict, never an exception.
"""

from __future__ import annotations

import logging
import operator
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import StrEnum

from qrace.engine.constants import BOUND_SLACK

logger = logging.getLogger(__name__)


class Verdict(StrEnum):
    HOLDS = "holds"
    FAILS = "fails"
    INAPPLICABLE = "inapplicable"


# Relation -> comparison after slack is applied in the permissive direction
_RELATIONS: dict[str, Callable[[float, float], bool]] = {
    "<=": operator.le,
    "<": operator.lt,
    ">=": operator.ge,
    ">": operator.gt,
}


# --- Dataclasses ---


@dataclass(frozen=True)
class BoundCheck:
    """One numeric claim: ``value relation bound``."""

    name: str
    verdict: Verdict
    value: float | None = None
    bound: float | None = None
    relation: str = "<="
    detail: str = ""

    @property
    def holds(self) -> bool:
        return self.verdict == Verdict.HOLDS


@dataclass
class BoundReport:
    """Result of running a group of bound checks."""

    name: str
    checks: list[BoundCheck] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        """True when no applicable check fails."""
        return all(c.verdict != Verdict.FAILS for c in self.checks)

    @property
    def inapplicable(self) -> list[BoundCheck]:
        return [c for c in self.checks if c.verdict == Verdict.INAPPLICABLE]

    @property
    def failures(self) -> list[BoundCheck]:
        return [c for c in self.checks if c.verdict == Verdict.FAILS]

    def get(self, name: str) -> BoundCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def add(self, check: BoundCheck) -> BoundCheck:
        self.checks.append(check)
        if check.verdict == Verdict.FAILS:
            logger.warning(
                f"{self.name}: {check.name} fails "
                f"({check.value!r} {check.relation} {check.bound!r})"
            )
        return check


# --- Constructors ---


def check_bound(
    name: str,
    value: float,
    relation: str,
    bound: float,
    slack: float = BOUND_SLACK,
    detail: str = "",
) -> BoundCheck:
    """Compare ``value`` against ``bound`` with arithmetic slack in the permissive direction.

    ``"=="`` is for integer-valued identities; there the slack is an absolute window.
    """
    if relation != "==" and relation not in _RELATIONS:
        raise ValueError(f"Unknown relation '{relation}'")
    value = float(value)
    bound = float(bound)
    if relation == "==":
        ok = abs(value - bound) <= slack
    else:
        shifted = bound + slack if relation in ("<=", "<") else bound - slack
        ok = _RELATIONS[relation](value, shifted)
    return BoundCheck(
        name=name,
        verdict=Verdict.HOLDS if ok else Verdict.FAILS,
        value=value,
        bound=bound,
        relation=relation,
        detail=detail,
    )


def inapplicable(name: str, reason: str) -> BoundCheck:
    return BoundCheck(name=name, verdict=Verdict.INAPPLICABLE, detail=reason)

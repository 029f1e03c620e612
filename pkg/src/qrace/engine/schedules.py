"""Probability schedules that define a race.

A schedule lists the success probabilities p_1 < p_2 < ... < p_K of measuring
at times 1..K. Times are 1-based everywhere in the public API; arrays are
0-based internally.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from decimal import ROUND_CEILING, Decimal, localcontext
from fractions import Fraction
from functools import cached_property

import numpy as np

from qrace.config import settings
from qrace.engine.constants import GROVER_ELL, well_supported_epsilon
from qrace.engine.errors import ScheduleError
from qrace.engine.numerics import Number, is_exact

logger = logging.getLogger(__name__)

# pi to 60 digits for the extended-precision Grover ceiling
_PI = Decimal("3.14159265358979323846264338327950288419716939937510582097494")
_CEILING_PRECISION = 60


# --- Dataclasses ---


@dataclass(frozen=True)
class ProbabilitySchedule:
    """Strictly increasing success probabilities p_1..p_K in (0, 1]."""

    probs: tuple[Number, ...]

    @property
    def k(self) -> int:
        return len(self.probs)

    def p(self, t: int) -> Number:
        """Success probability at 1-based time t."""
        if not 1 <= t <= self.k:
            raise IndexError(f"time {t} outside [1, {self.k}]")
        return self.probs[t - 1]

    @property
    def is_exact(self) -> bool:
        return is_exact(self.probs)

    @cached_property
    def array(self) -> np.ndarray:
        """Probabilities as a float64 vector."""
        out = np.array([float(v) for v in self.probs], dtype=np.float64)
        out.flags.writeable = False
        return out

    def values(self) -> np.ndarray:
        """Probabilities as an ndarray that keeps ``Fraction`` values exact."""
        if self.is_exact:
            return np.array(self.probs, dtype=object)
        return self.array

    def to_float(self) -> ProbabilitySchedule:
        if not self.is_exact:
            return self
        return ProbabilitySchedule(tuple(float(v) for v in self.probs))


@dataclass(frozen=True)
class DensityReport:
    """Minimal density parameter ell of a schedule.

    ``ell`` is K times the largest of p_1, 1 - p_K and the consecutive gaps,
    so the schedule is ell'-dense exactly when ell' >= ell.
    """

    ell: float
    k: int

    @property
    def ratio(self) -> float:
        return self.ell / self.k

    def is_dense_for(self, ell: float) -> bool:
        return self.ell <= ell


@dataclass(frozen=True)
class ConvexityReport:
    """Whether the reciprocals 1/p_t form a convex sequence."""

    is_convex: bool
    worst_violation: float


@dataclass(frozen=True)
class BitcoinParams:
    """Analytic race parameters for a mining difficulty."""

    difficulty: float
    n: float  # expected hash count
    k: int
    ell: float
    epsilon_bound: float
    materializable: bool

    def tie_bound(self, players: int) -> float:
        """Tie probability bound 8 e n ell / K for the given player count."""
        return 8.0 * math.e * players * self.ell / self.k


# --- Validation ---


def validate(values: Sequence[Number]) -> list[str]:
    """Validate raw schedule values. Returns a list of error messages (empty = valid)."""
    errors: list[str] = []
    if len(values) < 2:
        errors.append(f"Schedule needs at least 2 probabilities, got {len(values)}")
        return errors
    for t, v in enumerate(values, start=1):
        if isinstance(v, float) and math.isnan(v):
            errors.append(f"p_{t} is NaN")
        elif not 0 < v <= 1:
            errors.append(f"p_{t} = {v} is outside (0, 1]")
    for t in range(1, len(values)):
        if not values[t - 1] < values[t]:
            errors.append(
                f"Schedule not strictly increasing at time {t + 1}: "
                f"{values[t - 1]} >= {values[t]}"
            )
    return errors


# --- Constructors ---


def custom_schedule(values: Sequence[Number]) -> ProbabilitySchedule:
    """Wrap caller-supplied probabilities verbatim."""
    probs = tuple(values)
    errors = validate(probs)
    if errors:
        raise ScheduleError("; ".join(errors))
    return ProbabilitySchedule(probs)


def exact_schedule(values: Sequence[Number | str | int]) -> ProbabilitySchedule:
    """Schedule with ``Fraction`` entries for exact-rational computation."""
    return custom_schedule([Fraction(v) for v in values])


def grover_k(n: int | float | Decimal) -> int:
    """K = ceil(pi/4 sqrt(N) - 3/2), evaluated in 60-digit decimal arithmetic."""
    with localcontext() as ctx:
        ctx.prec = _CEILING_PRECISION
        if isinstance(n, Decimal):
            big_n = n
        elif isinstance(n, float):
            big_n = Decimal(repr(n))
        else:
            big_n = Decimal(int(n))
        if big_n <= 0:
            raise ScheduleError(f"Database size must be positive, got {n}")
        value = _PI / 4 * big_n.sqrt() - Decimal("1.5")
        return int(value.to_integral_value(rounding=ROUND_CEILING))


def grover_schedule(n: int, max_k: int | None = None) -> ProbabilitySchedule:
    """Success probabilities of Grover search over N items with one marked item.

    p_t = sin^2(2 (t + 1/2) arcsin(1/sqrt(N))) for t = 1..K.
    """
    cap = settings.max_materialized_k if max_k is None else max_k
    k = grover_k(n)
    if k < 2:
        raise ScheduleError(f"N={n} gives K={k}; a race needs K >= 2")
    if k > cap:
        raise ScheduleError(f"N={n} gives K={k} above the materialization cap {cap}")

    theta = math.asin(1.0 / math.sqrt(n))
    t = np.arange(1, k + 1, dtype=np.float64)
    probs = np.sin((2.0 * t + 1.0) * theta) ** 2
    logger.debug(f"Grover schedule N={n}: K={k}, p_1={probs[0]:.6g}, p_K={probs[-1]:.17g}")
    return custom_schedule([float(v) for v in probs])


def bitcoin_schedule_params(difficulty: float, max_k: int | None = None) -> BitcoinParams:
    """Race parameters for a mining difficulty: N = 2^32 difficulty hashes.

    Only parameters are returned; the schedule itself is never built here.
    """
    if not difficulty > 0:
        raise ScheduleError(f"Difficulty must be positive, got {difficulty}")
    cap = settings.max_materialized_k if max_k is None else max_k
    with localcontext() as ctx:
        ctx.prec = _CEILING_PRECISION
        big_n = Decimal(2**32) * Decimal(repr(float(difficulty)))
    k = grover_k(big_n)
    if k < 2:
        raise ScheduleError(f"Difficulty {difficulty} gives K={k}; a race needs K >= 2")
    return BitcoinParams(
        difficulty=float(difficulty),
        n=float(big_n),
        k=k,
        ell=GROVER_ELL,
        epsilon_bound=well_supported_epsilon(GROVER_ELL, k),
        materializable=k <= cap,
    )


# --- Diagnostics ---


def density_report(schedule: ProbabilitySchedule) -> DensityReport:
    """Smallest ell for which the schedule is ell-dense."""
    p = schedule.array
    k = schedule.k
    terms = [k * p[0], k * (1.0 - p[-1])]
    if k > 1:
        terms.append(k * float(np.max(np.diff(p))))
    return DensityReport(ell=float(max(terms)), k=k)


def convexity_report(schedule: ProbabilitySchedule) -> ConvexityReport:
    """Check 2/p_i <= 1/p_{i-1} + 1/p_{i+1} at every interior time.

    K = 2 has no interior time and is reported convex with zero violation.
    """
    if schedule.k < 3:
        return ConvexityReport(is_convex=True, worst_violation=0.0)
    inv = [1 / v for v in schedule.probs]
    worst = max(2 * inv[i] - inv[i - 1] - inv[i + 1] for i in range(1, schedule.k - 1))
    return ConvexityReport(is_convex=worst <= 0, worst_violation=float(worst))

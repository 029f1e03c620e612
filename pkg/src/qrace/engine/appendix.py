"""Alternating and alternating-coinciding equilibria of symmetric stingy races.

In an alternating equilibrium the two supports interleave on every other
time: one player uses D(T, K) and the other D(T+1, K), where D(a, b) is
a, a+2, ... up to b. In an alternating-coinciding equilibrium the supports
interleave up to a change point c and coincide on [c, K].

Only the symmetric race is handled. Every solution returned here has passed
full best-response verification.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import StrEnum

from qrace.config import settings
from qrace.engine.errors import DimensionError
from qrace.engine.numerics import KahanSum, Number, index_set
from qrace.engine.payoff import MixedStrategy, Variant
from qrace.engine.reports import BoundCheck, BoundReport, Verdict, check_bound, inapplicable
from qrace.engine.schedules import ProbabilitySchedule, convexity_report
from qrace.engine.solve2 import EquilibriumKind, EquilibriumSolution, coinciding_internals
from qrace.engine.verify import race_evaluators, verify_profile

logger = logging.getLogger(__name__)


class SupportShape(StrEnum):
    COINCIDING = "coinciding"
    ALTERNATING = "alternating"
    ALT_COINCIDING = "alt-coinciding"


# --- Dataclasses ---


@dataclass(frozen=True)
class AlternatingInternals:
    """q~ by time and r~, R~, z~, Z~ by start T (only starts with K - T odd)."""

    q_tilde: tuple[Number | None, ...]
    r_tilde: dict[int, Number]
    big_r_tilde: dict[int, Number]
    z_tilde: dict[int, Number]
    big_z_tilde: dict[int, Number]
    tstar_tilde: int
    marginal: bool = False


@dataclass(frozen=True, eq=False)
class NoAlternatingEquilibrium:
    tstar_tilde: int
    reason: str
    internals: AlternatingInternals


@dataclass(frozen=True)
class AltCoincidingCandidate:
    """The (T, c) pair with T the smallest start of c's parity giving r_{T,c} > 0."""

    start_t: int
    change_c: int
    r: Number
    big_r: Number
    w_before: Number  # w_{c-1,T,c}
    w_change: Number  # w_{c,T,c}
    passed: bool
    failed: str | None = None


@dataclass
class AltCoincidingInternals:
    hat_tstar: dict[int, int | None] = field(default_factory=dict)
    candidates: list[AltCoincidingCandidate] = field(default_factory=list)


# --- Shared quantities ---


def q_tilde(schedule: ProbabilitySchedule) -> tuple[Number | None, ...]:
    """q~_t = (1/p_t)(1/p_{t-1} - 1/p_{t+1}) for 2 <= t <= K-1, indexed by 1-based t."""
    p = schedule.probs
    k = schedule.k
    out: list[Number | None] = [None] * (k + 1)
    for t in range(2, k):
        out[t] = (1 / p[t - 1]) * (1 / p[t - 2] - 1 / p[t])
    return tuple(out)


def alternating_internals(schedule: ProbabilitySchedule) -> AlternatingInternals:
    """r~_T, R~_T, z~_T, Z~_T for every start T < K with K - T odd, and T~*."""
    p = schedule.probs
    k = schedule.k
    qt = q_tilde(schedule)
    inv_pk = 1 / p[k - 1]
    inv_pk1 = 1 / p[k - 2]

    x_weighted, x_plain = KahanSum(), KahanSum()  # over D(T+2, K)
    y_weighted, y_plain = KahanSum(), KahanSum()  # over D(T+1, K-2)
    r, big_r, z, big_z = {}, {}, {}, {}
    for t in range(k - 1, 0, -2):
        if t + 2 <= k - 1:
            x_weighted.add((1 - p[t + 1]) * qt[t + 2])
            x_plain.add(qt[t + 2])
        if t + 1 <= k - 2:
            y_weighted.add((1 - p[t]) * qt[t + 1])
            y_plain.add(qt[t + 1])
        r[t] = (1 / (1 - p[t - 1])) * (inv_pk - x_weighted.total)
        big_r[t] = inv_pk1 - y_weighted.total
        z[t] = r[t] + x_plain.total
        big_z[t] = big_r[t] + y_plain.total

    tstar = min(t for t, value in r.items() if value > 0)
    marginal = (
        not schedule.is_exact
        and tstar - 2 in r
        and abs(float(r[tstar - 2])) < settings.marginal_threshold
    )
    if marginal:
        logger.warning(f"T~*={tstar}: r~ at T~*-2 is numerically marginal")
    return AlternatingInternals(
        q_tilde=qt,
        r_tilde=r,
        big_r_tilde=big_r,
        z_tilde=z,
        big_z_tilde=big_z,
        tstar_tilde=tstar,
        marginal=marginal,
    )


def tilde_tstar(schedule: ProbabilitySchedule) -> int:
    """Smallest 1 <= T < K with K - T odd and r~_T > 0."""
    return alternating_internals(schedule).tstar_tilde


def _weights(k: int, entries: dict[int, Number]) -> MixedStrategy:
    total = KahanSum()
    for value in entries.values():
        total.add(value)
    weights: list[Number] = [0] * k
    for t, value in entries.items():
        weights[t - 1] = value / total.total
    return MixedStrategy.from_weights(weights, tolerance=settings.tolerance)


def _verified(schedule: ProbabilitySchedule, x: MixedStrategy, y: MixedStrategy) -> bool:
    row_eval, col_eval = race_evaluators(schedule, schedule, Variant.STINGY)
    verdict = verify_profile(row_eval, col_eval, x, y)
    if not verdict.is_exact:
        logger.debug(f"Candidate rejected: epsilon_ws={verdict.epsilon_well_supported:.3e}")
    return verdict.is_exact


# --- Alternating ---


def alternating_equilibrium(
    schedule: ProbabilitySchedule,
) -> EquilibriumSolution | NoAlternatingEquilibrium:
    """The alternating equilibrium starting at T~*, if its existence conditions hold.

    Conditions: R~_{T~*} > 0 and p_K (1/p_{K-1} - p_K R~_{T~*}) <= 1. The row
    player takes D(T~*, K); swapping the roles gives the other labeling.
    """
    internals = alternating_internals(schedule)
    p = schedule.probs
    k = schedule.k
    t = internals.tstar_tilde
    big_r = internals.big_r_tilde[t]

    if not big_r > 0:
        return NoAlternatingEquilibrium(t, f"R~ at T~*={t} is not positive", internals)
    if p[k - 1] * (1 / p[k - 2] - p[k - 1] * big_r) > 1:
        return NoAlternatingEquilibrium(t, "row player gains by measuring at K", internals)
    if t >= 2 and p[t - 2] * internals.z_tilde[t] > 1:
        reason = f"column player gains by measuring at {t - 1}"
        return NoAlternatingEquilibrium(t, reason, internals)

    qt = internals.q_tilde
    x_entries = {t: internals.r_tilde[t]} | {i: qt[i] for i in index_set(t + 2, k)}
    y_entries = {j: qt[j] for j in index_set(t + 1, k - 2)} | {k: big_r}
    x = _weights(k, x_entries)
    y = _weights(k, y_entries)
    if not _verified(schedule, x, y):
        logger.warning(f"Alternating candidate at T~*={t} failed verification")
        return NoAlternatingEquilibrium(t, "candidate failed best-response verification", internals)

    logger.info(f"Alternating equilibrium: K={k}, T~*={t}")
    return EquilibriumSolution(
        kind=EquilibriumKind.ALTERNATING,
        start_t=t,
        row=x,
        col=y,
        payoff_row=1 / internals.big_z_tilde[t],
        payoff_col=1 / internals.z_tilde[t],
        internals=internals,
        swapped_exists=True,
    )


# --- Alternating-coinciding ---


def _tail_sums(schedule: ProbabilitySchedule) -> list[Number]:
    """tail[c] = sum_{i=c}^K (1 - p_i) q_i, with tail[K+1] = 0."""
    p = schedule.probs
    k = schedule.k
    tail: list[Number] = [0] * (k + 2)
    acc = KahanSum()
    for i in range(k, 1, -1):
        q_i = (1 / p[i - 1]) * (1 / p[i - 2] - 1 / p[i - 1])
        acc.add((1 - p[i - 1]) * q_i)
        tail[i] = acc.total
    return tail


def _r_column(
    schedule: ProbabilitySchedule, c: int, qt: tuple, tail: list[Number]
) -> dict[int, Number]:
    """r_{t,c} for every t of c's parity with 1 <= t <= c-2, one backward pass."""
    p = schedule.probs
    inv_pk = 1 / p[-1]
    weighted = KahanSum()  # over D(t+2, c-2)
    out: dict[int, Number] = {}
    for t in range(c - 2, 0, -2):
        if t + 2 <= c - 2:
            weighted.add((1 - p[t + 1]) * qt[t + 2])
        out[t] = (1 / (1 - p[t - 1])) * (inv_pk - weighted.total - tail[c])
    return out


def hat_tstar(schedule: ProbabilitySchedule, c: int) -> int | None:
    """min{T : r_{T,c} > 0} over starts of c's parity, or None when no start qualifies."""
    if not 3 <= c <= schedule.k:
        raise ValueError(f"change point {c} outside [3, {schedule.k}]")
    column = _r_column(schedule, c, q_tilde(schedule), _tail_sums(schedule))
    positive = [t for t, value in column.items() if value > 0]
    return min(positive) if positive else None


def _big_r(schedule: ProbabilitySchedule, t: int, c: int, qt: tuple, tail: list[Number]) -> Number:
    p = schedule.probs
    acc = KahanSum(1 / p[-1] - tail[c + 1])
    for i in index_set(t + 1, c - 3):
        acc.add(-(1 - p[i - 1]) * qt[i])
    return acc.total


def alt_coinciding_internals(
    schedule: ProbabilitySchedule, max_k: int | None = None
) -> tuple[AltCoincidingInternals, list]:
    """Scan every change point c; returns the internals and the verified profiles.

    The scan is quadratic in K and limited to K <= ``settings.max_matrix_k``.
    """
    p = schedule.probs
    k = schedule.k
    cap = settings.max_matrix_k if max_k is None else max_k
    if k > cap:
        raise DimensionError(f"Alternating-coinciding scan is limited to K <= {cap}, got K={k}")
    qt = q_tilde(schedule)
    tail = _tail_sums(schedule)
    internals = AltCoincidingInternals()
    found: list[tuple[int, int, MixedStrategy, MixedStrategy, Number, Number]] = []

    for c in range(3, k + 1):
        column = _r_column(schedule, c, qt, tail)
        positive = [t for t, value in column.items() if value > 0]
        start = min(positive) if positive else None
        internals.hat_tstar[c] = start
        if start is None:
            continue

        big_r = _big_r(schedule, start, c, qt, tail)
        lead = p[c - 2] * qt[c - 1]  # p_{c-1} q~_{c-1}
        w_before = (1 - p[c - 2]) * lead - p[c - 2] * big_r
        w_change = (1 - p[c - 1]) * lead - p[c - 1] * big_r
        gap = p[c - 1] - p[c - 2]

        failed = None
        if not w_before > 0:
            failed = "weight at c is not positive"
        elif not -w_change > 0:
            failed = "weight at c-1 is not positive"

        if failed is None:
            x_entries = (
                {start: column[start]}
                | {i: qt[i] for i in index_set(start + 2, c - 2)}
                | {i: (1 / p[i - 1]) * (1 / p[i - 2] - 1 / p[i - 1]) for i in range(c, k + 1)}
            )
            y_entries = (
                {j: qt[j] for j in index_set(start + 1, c - 3)}
                | {c - 1: -w_change / gap, c: w_before / gap}
                | {
                    j: (1 / p[j - 1]) * (1 / p[j - 2] - 1 / p[j - 1])
                    for j in range(c + 1, k + 1)
                }
            )
            x = _weights(k, x_entries)
            y = _weights(k, y_entries)
            if _verified(schedule, x, y):
                z = sum(x_entries.values())
                big_z = sum(y_entries.values())
                found.append((start, c, x, y, 1 / big_z, 1 / z))
            else:
                failed = "candidate failed best-response verification"

        internals.candidates.append(
            AltCoincidingCandidate(
                start_t=start,
                change_c=c,
                r=column[start],
                big_r=big_r,
                w_before=w_before,
                w_change=w_change,
                passed=failed is None,
                failed=failed,
            )
        )
    return internals, found


def alt_coinciding_equilibria(
    schedule: ProbabilitySchedule, max_k: int | None = None
) -> list[EquilibriumSolution]:
    """Every (T, c, K)-alternating-coinciding equilibrium, one labeling each."""
    internals, found = alt_coinciding_internals(schedule, max_k)
    solutions = [
        EquilibriumSolution(
            kind=EquilibriumKind.ALT_COINCIDING,
            start_t=start,
            change_c=c,
            row=x,
            col=y,
            payoff_row=payoff_row,
            payoff_col=payoff_col,
            internals=internals,
            swapped_exists=True,
        )
        for start, c, x, y, payoff_row, payoff_col in found
    ]
    logger.info(f"Alternating-coinciding scan: K={schedule.k}, {len(solutions)} equilibria")
    return solutions


# --- Structural checks ---


def tstar_relations_check(schedule: ProbabilitySchedule) -> BoundReport:
    """T* <= T~* + 1 always; for convex races T~* = T* when K - T* is odd and
    T~* is T* - 1 or T* + 1 otherwise.
    """
    tstar = coinciding_internals(schedule).tstar_a
    tilde = tilde_tstar(schedule)
    k = schedule.k
    report = BoundReport(name="tstar_relations")
    report.add(check_bound("tstar_le_tilde_plus_one", tstar, "<=", tilde + 1, slack=0))
    if not convexity_report(schedule).is_convex:
        report.add(inapplicable("parity_relation", "schedule is not convex"))
        return report
    if (k - tstar) % 2 == 1:
        report.add(check_bound("parity_relation", tilde, "==", tstar, slack=0))
    else:
        report.add(check_bound("parity_relation", abs(tilde - tstar), "==", 1, slack=0))
    return report


def convex_structure_check(schedule: ProbabilitySchedule) -> BoundReport:
    """Start-index structure of alternating-coinciding equilibria.

    T* - 1 <= T^*_c <= T~* + 1 for every c > T*, with T^*_c <= T~* when c and K
    share parity; p_i q~_i = p_i q_i + p_{i+1} q_{i+1}; and for convex races
    every alternating-coinciding start lies in [T* - 1, T* + 2].
    """
    p = schedule.probs
    k = schedule.k
    tstar = coinciding_internals(schedule).tstar_a
    tilde = tilde_tstar(schedule)
    internals, found = alt_coinciding_internals(schedule)
    report = BoundReport(name="convex_structure")

    worst_low, worst_high = 0, 0
    for c, start in internals.hat_tstar.items():
        if c <= tstar or start is None:
            continue
        upper = tilde if (k - c) % 2 == 0 else tilde + 1
        worst_low = max(worst_low, (tstar - 1) - start)
        worst_high = max(worst_high, start - upper)
    report.add(check_bound("sandwich_lower", worst_low, "<=", 0, slack=0))
    report.add(check_bound("sandwich_upper", worst_high, "<=", 0, slack=0))

    qt = q_tilde(schedule)
    residual = 0.0
    for i in range(2, k):
        q_i = (1 / p[i - 1]) * (1 / p[i - 2] - 1 / p[i - 1])
        q_next = (1 / p[i]) * (1 / p[i - 1] - 1 / p[i])
        lhs = p[i - 1] * qt[i]
        residual = max(residual, abs(float(lhs - p[i - 1] * q_i - p[i] * q_next)) / float(lhs))
    report.add(check_bound("q_tilde_split", residual, "<=", 1e-10, slack=0))

    if not convexity_report(schedule).is_convex:
        report.add(inapplicable("start_window", "schedule is not convex"))
        return report
    starts = [start for start, *_ in found]
    outside = [t for t in starts if not tstar - 1 <= t <= tstar + 2]
    report.add(
        BoundCheck(
            name="start_window",
            verdict=Verdict.FAILS if outside else Verdict.HOLDS,
            value=float(len(outside)),
            bound=0.0,
            relation="==",
            detail=f"starts {starts} against T*={tstar}",
        )
    )
    return report


def classify_support_shape(
    row_support: tuple[int, ...] | set[int], col_support: tuple[int, ...] | set[int], k: int
) -> SupportShape | None:
    """Which of the three equilibrium support families a pair of supports belongs to."""
    xs, ys = set(row_support), set(col_support)
    if not xs or not ys:
        return None
    start = min(xs | ys)
    if xs == ys == set(range(start, k + 1)):
        return SupportShape.COINCIDING
    for first, second in ((xs, ys), (ys, xs)):
        if min(first) != start:
            continue
        if first == set(index_set(start, k)) and second == set(index_set(start + 1, k)):
            return SupportShape.ALTERNATING
        for c in range(start + 2, k + 1, 2):
            tail = set(range(c, k + 1))
            if (
                first == set(index_set(start, c - 2)) | tail
                and second == set(index_set(start + 1, c - 1)) | tail
            ):
                return SupportShape.ALT_COINCIDING
    return None

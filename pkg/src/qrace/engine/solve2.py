"""Closed-form coinciding equilibrium of two-player stingy races.

The row player (Alice) races with schedule p, the column player (Bob) with
schedule P. Alice's equilibrium weights come from the A-side quantities

    q_i^A = (1/p_i) (1/P_{i-1} - 1/P_i)
    r_T^A = (1/(1 - p_T)) (1/P_K - sum_{i>T} (1 - p_i) q_i^A)
    z_T^A = r_T^A + sum_{i>T} q_i^A

and Bob's from the B-side mirror image. Bob's equilibrium payoff is 1/z^A and
Alice's is 1/z^B. Everything here runs unchanged on ``Fraction`` schedules.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction

from qrace.config import settings
from qrace.engine import constants
from qrace.engine.errors import PreconditionError
from qrace.engine.numerics import KahanSum, Number
from qrace.engine.payoff import MixedStrategy, Variant, payoff_matrix_2p, require_common_k
from qrace.engine.reports import BoundReport, check_bound, inapplicable
from qrace.engine.schedules import (
    DensityReport,
    ProbabilitySchedule,
    density_report,
    exact_schedule,
)
from qrace.engine.verify import race_evaluators, verify_profile

logger = logging.getLogger(__name__)


class EquilibriumKind(StrEnum):
    COINCIDING = "coinciding"
    ALTERNATING = "alternating"
    ALT_COINCIDING = "alt-coinciding"


# --- Dataclasses ---


@dataclass(frozen=True)
class SideInternals:
    """q, r, z of one side, indexed by 1-based time (entry 0 unused).

    ``None`` marks undefined values: q_1 always, and r_K, z_K when the
    opponent-facing terminal probability is 1.
    """

    q: tuple[Number | None, ...]
    r: tuple[Number | None, ...]
    z: tuple[Number | None, ...]
    tstar: int
    marginal: bool = False

    @property
    def k(self) -> int:
        return len(self.q) - 1


@dataclass(frozen=True)
class CoincidingInternals:
    a: SideInternals
    b: SideInternals

    @property
    def tstar_a(self) -> int:
        return self.a.tstar

    @property
    def tstar_b(self) -> int:
        return self.b.tstar

    @property
    def k(self) -> int:
        return self.a.k


@dataclass(frozen=True, eq=False)
class EquilibriumSolution:
    """A two-player equilibrium with its closed-form internals.

    ``swapped_exists`` notes that exchanging the row and column strategies
    gives another equilibrium (alternating shapes of symmetric races).
    """

    kind: EquilibriumKind
    start_t: int
    row: MixedStrategy
    col: MixedStrategy
    payoff_row: Number
    payoff_col: Number
    internals: object = None
    change_c: int | None = None
    swapped_exists: bool = False

    @property
    def k(self) -> int:
        return self.row.k


@dataclass(frozen=True, eq=False)
class NoCoincidingEquilibrium:
    """Verdict for a pair with T*_A != T*_B, with both one-sided candidates."""

    tstar_a: int
    tstar_b: int
    internals: CoincidingInternals
    candidate_row: MixedStrategy
    candidate_col: MixedStrategy


@dataclass(frozen=True)
class CollisionAnalytics:
    """Collision quantities of a symmetric coinciding equilibrium."""

    sigma: Number
    z: Number
    tie_probability: Number
    no_winner_probability: Number
    identity_residual: float  # |z - (1 + sqrt(1 + 1/p_K^2 + sigma))|
    partition_residual: float  # |2/z + tie + no-winner - 1|


@dataclass(frozen=True)
class ExactSelfCheck:
    """Float internals compared with an exact-rational recomputation."""

    tstar_float: int
    tstar_exact: int
    max_relative_error: float
    marginal: bool

    @property
    def agrees(self) -> bool:
        return self.tstar_float == self.tstar_exact


@dataclass
class RecurrenceCheck:
    worst_residual: float = 0.0
    checked: int = 0
    failures: list[int] = field(default_factory=list)


# --- Internals ---


def _side(mine: ProbabilitySchedule, theirs: ProbabilitySchedule, label: str) -> SideInternals:
    """One backward pass for the side whose weights make ``theirs`` indifferent.

    ``mine`` enters through (1 - mine_i) and 1/mine_i, ``theirs`` through the
    reciprocal differences.
    """
    k = mine.k
    p = mine.probs
    big_p = theirs.probs
    q: list[Number | None] = [None] * (k + 1)
    r: list[Number | None] = [None] * (k + 1)
    z: list[Number | None] = [None] * (k + 1)

    for i in range(2, k + 1):
        q[i] = (1 / p[i - 1]) * (1 / big_p[i - 2] - 1 / big_p[i - 1])

    weighted = KahanSum()  # sum_{i>T} (1 - p_i) q_i
    plain = KahanSum()  # sum_{i>T} q_i
    tstar = k
    for t in range(k, 0, -1):
        miss = 1 - p[t - 1]
        if miss != 0:
            r[t] = (1 / miss) * (1 / big_p[k - 1] - weighted.total)
            z[t] = r[t] + plain.total
            if r[t] > 0:
                tstar = t
        if t >= 2:
            weighted.add(miss * q[t])
            plain.add(q[t])

    marginal = False
    exact = mine.is_exact and theirs.is_exact
    if not exact and tstar > 1 and r[tstar - 1] is not None:
        marginal = abs(float(r[tstar - 1])) < settings.marginal_threshold
        if marginal:
            logger.warning(f"T*_{label}={tstar}: r at T*-1 is marginal ({r[tstar - 1]})")
    logger.debug(f"T*_{label}={tstar} for K={k}")
    return SideInternals(q=tuple(q), r=tuple(r), z=tuple(z), tstar=tstar, marginal=marginal)


def coinciding_internals(
    row: ProbabilitySchedule, col: ProbabilitySchedule | None = None
) -> CoincidingInternals:
    """All q_i, r_T, z_T of both sides and the two start indices T*_A, T*_B.

    r_T is increasing in T, so T* is the smallest T with r_T > 0, decided with
    no tolerance.
    """
    col = row if col is None else col
    require_common_k(row, col)
    a = _side(row, col, "A")
    b = a if col is row else _side(col, row, "B")
    return CoincidingInternals(a=a, b=b)


def side_strategy(side: SideInternals, start: int) -> tuple[MixedStrategy, Number]:
    """Weights r/z at ``start``, q/z above, zero below; returns the strategy and z."""
    z = side.z[start]
    weights: list[Number] = [0] * side.k
    weights[start - 1] = side.r[start] / z
    for t in range(start + 1, side.k + 1):
        weights[t - 1] = side.q[t] / z
    return MixedStrategy.from_weights(weights, tolerance=settings.tolerance), z


def coinciding_equilibrium(
    row: ProbabilitySchedule, col: ProbabilitySchedule | None = None
) -> EquilibriumSolution | NoCoincidingEquilibrium:
    """The unique coinciding equilibrium, or the verdict that none exists.

    A coinciding equilibrium exists iff T*_A = T*_B. Symmetric input always
    succeeds with x = y.
    """
    internals = coinciding_internals(row, col)
    x, z_a = side_strategy(internals.a, internals.tstar_a)
    y, z_b = side_strategy(internals.b, internals.tstar_b)
    if internals.tstar_a != internals.tstar_b:
        logger.info(
            f"No coinciding equilibrium: T*_A={internals.tstar_a}, T*_B={internals.tstar_b}"
        )
        return NoCoincidingEquilibrium(
            tstar_a=internals.tstar_a,
            tstar_b=internals.tstar_b,
            internals=internals,
            candidate_row=x,
            candidate_col=y,
        )
    logger.info(f"Coinciding equilibrium: K={internals.k}, T*={internals.tstar_a}")
    return EquilibriumSolution(
        kind=EquilibriumKind.COINCIDING,
        start_t=internals.tstar_a,
        row=x,
        col=y,
        payoff_row=1 / z_b,
        payoff_col=1 / z_a,
        internals=internals,
    )


def symmetric_equilibrium(schedule: ProbabilitySchedule) -> EquilibriumSolution:
    sol = coinciding_equilibrium(schedule)
    assert isinstance(sol, EquilibriumSolution)
    return sol


# --- Analytics ---


def _require_symmetric_coinciding(sol: EquilibriumSolution) -> CoincidingInternals:
    if not isinstance(sol, EquilibriumSolution) or sol.kind != EquilibriumKind.COINCIDING:
        raise PreconditionError("Collision analytics need a coinciding equilibrium")
    internals = sol.internals
    if not isinstance(internals, CoincidingInternals) or internals.a is not internals.b:
        raise PreconditionError("Collision analytics need a symmetric race")
    return internals


def sigma_at(side: SideInternals, schedule: ProbabilitySchedule, start: int) -> Number:
    """p_T^2 r_T^2 + sum_{i>T} p_i^2 q_i^2."""
    p = schedule.probs
    acc = KahanSum((p[start - 1] * side.r[start]) ** 2)
    for i in range(start + 1, schedule.k + 1):
        acc.add((p[i - 1] * side.q[i]) ** 2)
    return acc.total


def collision_analytics(
    sol: EquilibriumSolution, schedule: ProbabilitySchedule
) -> CollisionAnalytics:
    """sigma(T*), tie probability sigma/z^2 and no-winner probability (1/(p_K z))^2."""
    internals = _require_symmetric_coinciding(sol)
    side = internals.a
    start = sol.start_t
    sigma = sigma_at(side, schedule, start)
    z = side.z[start]
    p_k = schedule.probs[-1]
    tie = sigma / z**2
    no_winner = (1 / (p_k * z)) ** 2
    identity = abs(float(z) - (1.0 + math.sqrt(1.0 + 1.0 / float(p_k) ** 2 + float(sigma))))
    partition = abs(float(2 / z + tie + no_winner) - 1.0)
    return CollisionAnalytics(
        sigma=sigma,
        z=z,
        tie_probability=tie,
        no_winner_probability=no_winner,
        identity_residual=identity,
        partition_residual=partition,
    )


def payoff_bounds_check(
    sol: EquilibriumSolution,
    schedule: ProbabilitySchedule,
    density: DensityReport | None = None,
) -> BoundReport:
    """Payoff window and start-index bounds of the symmetric coinciding equilibrium.

    1/z <= sqrt(2) - 1 and p_{T*} >= 1/z hold for every race. The remaining
    checks need K >= 6 ell and are inapplicable otherwise.
    """
    internals = _require_symmetric_coinciding(sol)
    density = density or density_report(schedule)
    ell, k = density.ell, schedule.k
    start = sol.start_t
    z = float(internals.a.z[start])
    payoff = 1.0 / z
    p_start = float(schedule.p(start))

    report = BoundReport(name="payoff_bounds")
    report.add(check_bound("payoff_upper", payoff, "<=", constants.SQRT2_MINUS_1))
    report.add(check_bound("p_tstar_vs_payoff", p_start, ">=", payoff))

    gated = ["z_upper", "payoff_lower", "p_tstar_lower", "p_tstar_window", "p_before_tstar"]
    if not constants.two_player_gate(ell, k):
        reason = f"K={k} < 6 ell = {6 * ell:.6g}"
        for name in gated:
            report.add(inapplicable(name, reason))
        return report

    tau = constants.tau(ell, k)
    report.add(check_bound("z_upper", z, "<=", constants.z_upper(ell, k)))
    report.add(check_bound("payoff_lower", payoff, ">=", constants.payoff_lower(ell, k)))
    report.add(check_bound("p_tstar_lower", p_start, ">", constants.P_TSTAR_LOWER))
    report.add(
        check_bound(
            "p_tstar_window",
            p_start,
            ">=",
            constants.SQRT2_MINUS_1 - tau * constants.SQRT2_MINUS_1**2,
        )
    )
    if start >= 2:
        report.add(
            check_bound(
                "p_before_tstar", float(schedule.p(start - 1)), "<=", constants.SQRT2_MINUS_1
            )
        )
    else:
        report.add(inapplicable("p_before_tstar", "T* = 1"))
    return report


def collision_bounds_check(
    analytics: CollisionAnalytics,
    schedule: ProbabilitySchedule,
    density: DensityReport | None = None,
) -> BoundReport:
    """sigma/z^2 <= 6 ell/K and sigma <= 196 ell/K, gated on K >= 6 ell."""
    density = density or density_report(schedule)
    ell, k = density.ell, schedule.k
    report = BoundReport(name="collision_bounds")
    if not constants.two_player_gate(ell, k):
        reason = f"K={k} < 6 ell"
        report.add(inapplicable("tie_probability", reason))
        report.add(inapplicable("sigma", reason))
        return report
    report.add(
        check_bound(
            "tie_probability",
            analytics.tie_probability,
            "<=",
            constants.tie_probability_bound(ell, k),
        )
    )
    report.add(check_bound("sigma", analytics.sigma, "<=", constants.sigma_bound(ell, k)))
    return report


# --- Self checks ---


def recurrence_check(
    internals: CoincidingInternals,
    row: ProbabilitySchedule,
    col: ProbabilitySchedule | None = None,
    tolerance: float | None = None,
) -> RecurrenceCheck:
    """(1 - p_{T-1}) r_{T-1} = (1 - p_T)(r_T - q_T) on both sides, wherever defined."""
    col = row if col is None else col
    tol = settings.tolerance if tolerance is None else tolerance
    result = RecurrenceCheck()
    for side, sched in ((internals.a, row), (internals.b, col)):
        p = sched.probs
        for t in range(2, sched.k + 1):
            if side.r[t] is None or side.r[t - 1] is None:
                continue
            lhs = (1 - p[t - 2]) * side.r[t - 1]
            rhs = (1 - p[t - 1]) * (side.r[t] - side.q[t])
            residual = abs(float(lhs - rhs)) / max(1.0, abs(float(lhs)))
            result.checked += 1
            result.worst_residual = max(result.worst_residual, residual)
            if residual > tol:
                result.failures.append(t)
    return result


def exact_self_check(
    schedule: ProbabilitySchedule, max_k: int | None = None
) -> ExactSelfCheck:
    """Recompute the symmetric internals in exact rational arithmetic and compare.

    Float entries are converted with ``Fraction(float)``, i.e. their exact
    binary values.
    """
    cap = settings.exact_check_max_k if max_k is None else max_k
    if schedule.k > cap:
        raise PreconditionError(f"Exact self-check is limited to K <= {cap}, got K={schedule.k}")
    exact = exact_schedule([Fraction(v) for v in schedule.probs])
    approx = coinciding_internals(schedule.to_float()).a
    truth = coinciding_internals(exact).a

    worst = 0.0
    for values, ref in ((approx.q, truth.q), (approx.r, truth.r), (approx.z, truth.z)):
        for got, want in zip(values, ref, strict=True):
            if got is None or want is None:
                continue
            err = abs(Fraction(float(got)) - want) / max(Fraction(1), abs(want))
            worst = max(worst, float(err))
    if approx.tstar != truth.tstar:
        logger.warning(f"Float T*={approx.tstar} differs from exact T*={truth.tstar}")
    return ExactSelfCheck(
        tstar_float=approx.tstar,
        tstar_exact=truth.tstar,
        max_relative_error=worst,
        marginal=approx.marginal,
    )


def well_supported_check(
    schedule: ProbabilitySchedule, density: DensityReport | None = None
) -> BoundReport:
    """The stingy coinciding equilibrium, played in the tie-splitting race, is
    7 (sqrt(2) - 1) ell/K-well-supported; consecutive success ratios from T*
    on differ by at most 14 ell/K.
    """
    density = density or density_report(schedule)
    ell, k = density.ell, schedule.k
    sol = symmetric_equilibrium(schedule)
    report = BoundReport(name="well_supported")
    if not constants.two_player_gate(ell, k):
        reason = f"K={k} < 6 ell"
        report.add(inapplicable("epsilon_well_supported", reason))
        report.add(inapplicable("ratio_spread", reason))
        return report

    if k <= settings.max_matrix_k:
        a = payoff_matrix_2p(schedule, schedule, Variant.TIE_SPLITTING)
        verdict = verify_profile(a.entries, a.entries.T, sol.row, sol.col)
    else:
        row_eval, col_eval = race_evaluators(schedule, schedule, Variant.TIE_SPLITTING)
        verdict = verify_profile(row_eval, col_eval, sol.row, sol.col)
    report.add(
        check_bound(
            "epsilon_well_supported",
            verdict.epsilon_well_supported,
            "<=",
            constants.well_supported_epsilon(ell, k),
        )
    )

    p = schedule.array
    first = max(sol.start_t, 2)
    ratios = p[first - 1 :] / p[first - 2 : -1]
    spread = float(ratios.max() - ratios.min()) if len(ratios) else 0.0
    report.add(check_bound("ratio_spread", spread, "<=", constants.ratio_bound(ell, k)))
    return report

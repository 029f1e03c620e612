"""The n-player stingy race and its unique coinciding equilibrium.

When every other player uses x, player i measuring at t earns
P_t * S(t)^(n-1) = (P_t^(1/(n-1)) S(t))^(n-1), so its best responses are
those of the row player of a two-player game with row schedule
P^(1/(n-1)) and column schedule P. The common equilibrium strategy is the
column strategy of that reduced game.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from qrace.config import settings
from qrace.engine import constants
from qrace.engine.errors import ScheduleError
from qrace.engine.numerics import Number
from qrace.engine.payoff import (
    MixedStrategy,
    RaceConfig,
    Variant,
    deviation_tie_probabilities,
    quantum_utilities,
    row_payoff_vector,
    stingy_utilities,
    tie_event_probability,
    tie_profile,
)
from qrace.engine.reports import BoundReport, check_bound, inapplicable
from qrace.engine.schedules import (
    DensityReport,
    ProbabilitySchedule,
    density_report,
    validate,
)
from qrace.engine.solve2 import SideInternals, coinciding_internals, side_strategy

logger = logging.getLogger(__name__)


# --- Dataclasses ---


@dataclass(frozen=True, eq=False)
class MultiSolution:
    """Symmetric coinciding equilibrium of an n-player stingy race."""

    n: int
    tstar: int
    strategy: MixedStrategy
    per_player_payoff: float
    z: Number
    reduced: ProbabilitySchedule
    internals: SideInternals

    @property
    def profile(self) -> tuple[MixedStrategy, ...]:
        return (self.strategy,) * self.n


# --- Solver ---


def reduced_game(schedule: ProbabilitySchedule, n: int) -> ProbabilitySchedule:
    """Row schedule p_j = P_j^(1/(n-1)) of the reduced two-player game.

    The root is exp(ln P / (n-1)) in double precision. If rounding merges two
    neighbors the result is rejected rather than perturbed.
    """
    if n < 2:
        raise ValueError(f"A race needs at least 2 players, got {n}")
    if n == 2:
        return schedule
    roots = np.exp(np.log(schedule.array) / (n - 1))
    values = [float(v) for v in roots]
    errors = validate(values)
    if errors:
        logger.warning(f"Reduced game for n={n} lost monotonicity: {errors[0]}")
        raise ScheduleError(f"Reduced game for n={n} is not a valid schedule: {'; '.join(errors)}")
    return ProbabilitySchedule(tuple(values))


def multi_coinciding_equilibrium(schedule: ProbabilitySchedule, n: int) -> MultiSolution:
    """Common strategy r_{T*}/z_{T*} at T*, q_t/z_{T*} above, from the reduced game's column side.

    Each player's stingy payoff is (1/z_{T*})^(n-1).
    """
    reduced = reduced_game(schedule, n)
    side = coinciding_internals(reduced, schedule).b
    strategy, z = side_strategy(side, side.tstar)
    payoff = float(1 / z) ** (n - 1)
    logger.info(f"n={n} coinciding equilibrium: K={schedule.k}, T*={side.tstar}, u={payoff:.6g}")
    return MultiSolution(
        n=n,
        tstar=side.tstar,
        strategy=strategy,
        per_player_payoff=payoff,
        z=z,
        reduced=reduced,
        internals=side,
    )


def reduction_residual(sol: MultiSolution, schedule: ProbabilitySchedule) -> float:
    """max_t |u_i(x_{-i}, t) - (e_t^T A_reduced x)^(n-1)| over all times t."""
    cfg = RaceConfig.symmetric(schedule, sol.n)
    direct = stingy_utilities(cfg, 0, sol.profile).astype(np.float64)
    reduced = row_payoff_vector(sol.reduced, schedule, sol.strategy).astype(np.float64)
    return float(np.max(np.abs(direct - reduced ** (sol.n - 1))))


# --- Bound checks ---


def multi_bounds_check(
    sol: MultiSolution, schedule: ProbabilitySchedule, density: DensityReport | None = None
) -> BoundReport:
    """P_{T*-1} < 1/n, P_{T*-1} >= 1/(2en) under 4enl <= K, and (1/z)^(n-1) < 1/n."""
    density = density or density_report(schedule)
    n, k = sol.n, schedule.k
    report = BoundReport(name="multi_bounds")
    report.add(check_bound("payoff_upper", sol.per_player_payoff, "<", 1.0 / n, slack=0.0))

    if sol.tstar < 2:
        report.add(inapplicable("p_before_tstar_upper", "T* = 1"))
        report.add(inapplicable("p_before_tstar_lower", "T* = 1"))
        return report
    before = float(schedule.p(sol.tstar - 1))
    report.add(check_bound("p_before_tstar_upper", before, "<", 1.0 / n))
    if constants.multiplayer_gate(density.ell, k, n):
        report.add(
            check_bound("p_before_tstar_lower", before, ">=", constants.multiplayer_p_lower(n))
        )
    else:
        report.add(inapplicable("p_before_tstar_lower", f"4 e n ell > K={k}"))
    return report


def _gate(
    name: str, density: DensityReport, k: int, n: int, names: list[str]
) -> BoundReport | None:
    if constants.multiplayer_gate(density.ell, k, n):
        return None
    report = BoundReport(name=name)
    for check in names:
        report.add(inapplicable(check, f"4 e n ell = {4 * math.e * n * density.ell:.6g} > K={k}"))
    return report


def multi_tie_check(
    sol: MultiSolution, schedule: ProbabilitySchedule, density: DensityReport | None = None
) -> BoundReport:
    """Exact tie probabilities at the equilibrium against 8enl/K and 8el/K.

    ``total_tie`` is the probability that two or more players succeed at the
    same earliest time; ``sum_cp`` is sum_i cp_i(x), which counts an m-way tie
    m times; ``deviation_cp`` is the largest cp_i(x_{-i}, t) over pure t.
    """
    density = density or density_report(schedule)
    n, k = sol.n, schedule.k
    names = ["total_tie", "sum_cp", "deviation_cp"]
    gated = _gate("multi_ties", density, k, n, names)
    if gated is not None:
        return gated

    cfg = RaceConfig.symmetric(schedule, n, Variant.TIE_SPLITTING)
    total = float(tie_event_probability(cfg, sol.profile))
    sum_cp = sum(float(tie_profile(cfg, i, sol.profile).total) for i in range(n))
    deviation = float(max(deviation_tie_probabilities(cfg, 0, sol.profile)))

    report = BoundReport(name="multi_ties")
    bound = constants.multiplayer_tie_bound(density.ell, k, n)
    report.add(check_bound("total_tie", total, "<=", bound))
    report.add(check_bound("sum_cp", sum_cp, "<=", bound))
    report.add(
        check_bound("deviation_cp", deviation, "<=", constants.multiplayer_epsilon(density.ell, k))
    )
    return report


def worst_regret(cfg: RaceConfig, profile: tuple[MixedStrategy, ...]) -> float:
    """Largest gain of a pure deviation over all players under the race's variant."""
    evaluate = quantum_utilities if cfg.variant == Variant.TIE_SPLITTING else stingy_utilities
    worst = 0.0
    for i in range(cfg.n):
        payoffs = evaluate(cfg, i, profile)
        current = profile[i].weights @ payoffs
        worst = max(worst, float(max(payoffs) - current))
    return worst


def multi_approx_check(
    sol: MultiSolution, schedule: ProbabilitySchedule, density: DensityReport | None = None
) -> BoundReport:
    """The stingy equilibrium played in the tie-splitting race is an 8el/K-approximate
    equilibrium; for two players also 7(sqrt(2)-1)l/K. In the stingy race itself the
    regret is zero up to the verification tolerance.
    """
    density = density or density_report(schedule)
    n, k = sol.n, schedule.k
    stingy = worst_regret(RaceConfig.symmetric(schedule, n, Variant.STINGY), sol.profile)

    names = ["quantum_regret", "two_player_regret"]
    report = _gate("multi_approx", density, k, n, names) or BoundReport(name="multi_approx")
    report.add(check_bound("stingy_regret", stingy, "<=", settings.tolerance, slack=0.0))
    if report.inapplicable:
        return report

    regret = worst_regret(RaceConfig.symmetric(schedule, n, Variant.TIE_SPLITTING), sol.profile)
    report.add(
        check_bound("quantum_regret", regret, "<=", constants.multiplayer_epsilon(density.ell, k))
    )
    if n == 2 and constants.two_player_gate(density.ell, k):
        report.add(
            check_bound(
                "two_player_regret",
                regret,
                "<=",
                constants.well_supported_epsilon(density.ell, k),
            )
        )
    else:
        report.add(inapplicable("two_player_regret", "only for two players with K >= 6 ell"))
    logger.debug(f"n={n}: stingy regret {stingy:.3e}, tie-splitting regret {regret:.3e}")
    return report

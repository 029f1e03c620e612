"""Dual certificates for the payoff ceiling of symmetric tie-splitting races.

For a level c, the program

    maximize    x^T (A + A^T) x / 2
    subject to  A x <= c 1,  1^T x = 1,  x >= 0

has value below c for every c at or above a level c0 exactly when no
symmetric equilibrium pays c0 or more. Here the program is never solved;
instead a feasible point of its dual

    minimize    lambda^2 / 2 + c 1^T v + d
    subject to  A^T v >= (1 - lambda) p - d 1,  v >= 0

is built in closed form, and its objective bounds the primal from above.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from qrace.config import settings
from qrace.engine import constants
from qrace.engine.errors import CertificateError, PreconditionError
from qrace.engine.numerics import KahanSum
from qrace.engine.payoff import MixedStrategy, Variant, row_payoff_vector
from qrace.engine.reports import BoundReport, check_bound, inapplicable
from qrace.engine.schedules import DensityReport, ProbabilitySchedule, density_report
from qrace.engine.solve2 import symmetric_equilibrium

logger = logging.getLogger(__name__)

# Feasibility slack for A^T v >= (1 - lambda) p - d; equality holds on [S, K]
_FEASIBILITY_SLACK = 1e-10


# --- Dataclasses ---


@dataclass(frozen=True, eq=False)
class DualCertificate:
    """Feasible dual point at level c. ``objective < c`` certifies the level."""

    c: float
    s: int | None  # smallest 1-based index with p_S >= c; None for the trivial certificate
    lam: float
    d: float
    beta: float | None
    v: np.ndarray
    objective: float
    feasible: bool
    worst_slack: float
    trivial: bool = False

    @property
    def certifies(self) -> bool:
        return self.feasible and self.objective < self.c


@dataclass
class CeilingReport:
    ceiling: float | None
    certificate: DualCertificate | None
    report: BoundReport


@dataclass(frozen=True)
class SweepPoint:
    c: float
    beta: float | None
    objective: float
    certifies: bool
    beta_limit: float  # 1 - sqrt(1 - 2c)


@dataclass
class DualSweep:
    points: list[SweepPoint] = field(default_factory=list)

    @property
    def smallest_certified(self) -> float | None:
        """Smallest grid level from which every larger grid level certifies."""
        smallest = None
        for point in reversed(self.points):
            if not point.certifies:
                break
            smallest = point.c
        return smallest


@dataclass(frozen=True)
class WeakDualityCheck:
    worst_gap: float | None  # min over feasible samples of objective - primal value
    feasible_samples: int
    skipped_samples: int

    @property
    def holds(self) -> bool:
        return self.worst_gap is None or self.worst_gap >= -_FEASIBILITY_SLACK


# --- Certificate ---


def tail_sum(p: np.ndarray, start: int) -> float:
    """sum_{i=start}^{K-1} (1/p_i)(1/p_i - 1/p_{i+1}) with 1-based ``start``."""
    acc = KahanSum()
    for i in range(start - 1, len(p) - 1):
        acc.add((1.0 / p[i]) * (1.0 / p[i] - 1.0 / p[i + 1]))
    return float(acc.total)


def transpose_product(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """A^T v for the symmetric tie-splitting race without building A.

    (A^T v)_j = sum_{i<j} p_i v_i + v_j (p_j (1 - p_j) + p_j^2 / 2) + (1 - p_j) sum_{i>j} p_i v_i
    """
    pv = p * v
    before = np.cumsum(pv) - pv
    after = pv.sum() - np.cumsum(pv)
    return before + v * (p * (1.0 - p) + 0.5 * p**2) + (1.0 - p) * after


def _finish(
    p: np.ndarray,
    c: float,
    s: int | None,
    lam: float,
    d: float,
    beta: float | None,
    v: np.ndarray,
    trivial: bool,
) -> DualCertificate:
    slack = transpose_product(p, v) - ((1.0 - lam) * p - d)
    worst = float(slack.min())
    feasible = bool(np.all(v >= 0.0)) and worst >= -_FEASIBILITY_SLACK
    objective = 0.5 * lam**2 + c * float(v.sum()) + d
    return DualCertificate(
        c=c,
        s=s,
        lam=lam,
        d=d,
        beta=beta,
        v=v,
        objective=objective,
        feasible=feasible,
        worst_slack=worst,
        trivial=trivial,
    )


def dual_certificate(schedule: ProbabilitySchedule, c: float) -> DualCertificate:
    """Closed-form dual point at level c for the symmetric tie-splitting race.

    For c > 1/2 the trivial point lambda = 1, d = 0, v = 0 has objective 1/2.
    Otherwise S is the first index with p_S >= c,
    beta(c) = 1 + p_K (-(1 - p_S)/p_S + c sum_{i>=S} (1/p_i)(1/p_i - 1/p_{i+1})),
    lambda = beta, d = (1 - lambda)(1 + p_K - p_K/p_S) and
    v_i = (1 - lambda) p_K (1/p_i)(1/p_i - 1/p_{i+1}) for S <= i < K, zero elsewhere.
    """
    p = schedule.array
    k = schedule.k
    if c > 0.5:
        return _finish(p, c, None, 1.0, 0.0, None, np.zeros(k), trivial=True)
    if c < constants.SQRT2_MINUS_1 - constants.BOUND_SLACK:
        raise PreconditionError(f"Certificate level c={c} is below sqrt(2) - 1")
    above = np.nonzero(p >= c)[0]
    if len(above) == 0:
        raise PreconditionError(f"No success probability reaches c={c}")

    s = int(above[0]) + 1
    p_s, p_k = float(p[s - 1]), float(p[-1])
    beta = 1.0 + p_k * (-(1.0 - p_s) / p_s + c * tail_sum(p, s))
    lam = min(beta, 1.0)
    d = (1.0 - lam) * (1.0 + p_k - p_k / p_s)
    v = np.zeros(k)
    idx = np.arange(s - 1, k - 1)
    v[idx] = (1.0 - lam) * p_k * (1.0 / p[idx]) * (1.0 / p[idx] - 1.0 / p[idx + 1])

    cert = _finish(p, c, s, lam, d, beta, v, trivial=False)
    if not cert.feasible:
        logger.error(f"Dual certificate at c={c} is infeasible, worst slack {cert.worst_slack:.3e}")
        raise CertificateError(f"Dual certificate at c={c} is infeasible")
    logger.debug(f"Dual certificate c={c:.6f}: S={s}, beta={beta:.6f}, obj={cert.objective:.6f}")
    return cert


def payoff_ceiling(
    schedule: ProbabilitySchedule, density: DensityReport | None = None
) -> CeilingReport:
    """sqrt(2) - 1 + 5 sqrt(l/K) with the certificate at that level.

    Also places the coinciding equilibrium's payoff between the lower payoff
    bound and the ceiling. Inapplicable when K < 6l.
    """
    density = density or density_report(schedule)
    ell, k = density.ell, schedule.k
    report = BoundReport(name="payoff_ceiling")
    names = ["certificate", "coinciding_below_ceiling", "coinciding_above_lower"]
    if not constants.two_player_gate(ell, k):
        for name in names:
            report.add(inapplicable(name, f"K={k} < 6 ell"))
        return CeilingReport(ceiling=None, certificate=None, report=report)

    ceiling = constants.payoff_ceiling(ell, k)
    cert = dual_certificate(schedule, ceiling)
    payoff = float(symmetric_equilibrium(schedule).payoff_row)
    report.add(check_bound("certificate", cert.objective, "<", ceiling, slack=0.0))
    report.add(check_bound("coinciding_below_ceiling", payoff, "<=", ceiling))
    report.add(check_bound("coinciding_above_lower", payoff, ">=", constants.payoff_lower(ell, k)))
    return CeilingReport(ceiling=ceiling, certificate=cert, report=report)


# --- Supporting checks ---


def helper_sum_check(
    schedule: ProbabilitySchedule, density: DensityReport | None = None
) -> BoundReport:
    """sum_{i=T*}^{K-1} (1/p_i)(1/p_i - 1/p_{i+1}) <= sqrt(2) + 1 + 267 l/K, for K >= 6l."""
    density = density or density_report(schedule)
    ell, k = density.ell, schedule.k
    report = BoundReport(name="helper_sum")
    if not constants.two_player_gate(ell, k):
        report.add(inapplicable("helper_sum", f"K={k} < 6 ell"))
        return report
    tstar = symmetric_equilibrium(schedule).start_t
    value = tail_sum(schedule.array, tstar)
    report.add(check_bound("helper_sum", value, "<=", constants.helper_sum_bound(ell, k)))
    return report


def dual_sweep(
    schedule: ProbabilitySchedule,
    points: int | None = None,
    lower: float = constants.SQRT2_MINUS_1,
    upper: float = 0.5,
) -> DualSweep:
    """Certificates over an evenly spaced c-grid on [lower, upper]."""
    count = settings.dual_grid_points if points is None else points
    sweep = DualSweep()
    for c in np.linspace(lower, upper, count):
        c = float(c)
        cert = dual_certificate(schedule, c)
        sweep.points.append(
            SweepPoint(
                c=c,
                beta=cert.beta,
                objective=cert.objective,
                certifies=cert.certifies,
                beta_limit=1.0 - math.sqrt(max(0.0, 1.0 - 2.0 * c)),
            )
        )
    logger.info(f"Dual sweep over {count} levels: smallest certified {sweep.smallest_certified}")
    return sweep


def primal_value(schedule: ProbabilitySchedule, x: MixedStrategy) -> float:
    """x^T (A + A^T) x / 2 = s - s^2/2 with s = p^T x."""
    s = float(schedule.array @ x.array)
    return s - 0.5 * s * s


def weak_duality_check(
    cert: DualCertificate,
    schedule: ProbabilitySchedule,
    samples: Sequence[MixedStrategy] | None = None,
    draws: int = 64,
    seed: int = 0,
) -> WeakDualityCheck:
    """objective >= primal value at every sampled x with A x <= c 1.

    Default samples are the coinciding equilibrium, the uniform strategy on
    its support and ``draws`` Dirichlet points on that support.
    """
    if samples is None:
        sol = symmetric_equilibrium(schedule)
        support = list(range(sol.start_t, schedule.k + 1))
        samples = [sol.row, MixedStrategy.uniform(support, schedule.k)]
        rng = np.random.default_rng(seed)
        for weights in rng.dirichlet(np.ones(len(support)), size=draws):
            full = np.zeros(schedule.k)
            full[sol.start_t - 1 :] = weights
            samples.append(MixedStrategy.from_weights(full, tolerance=1e-9))

    worst: float | None = None
    feasible = skipped = 0
    for x in samples:
        payoffs = row_payoff_vector(schedule, schedule, x, Variant.TIE_SPLITTING)
        if float(max(payoffs)) > cert.c:
            skipped += 1
            continue
        feasible += 1
        gap = cert.objective - primal_value(schedule, x)
        worst = gap if worst is None else min(worst, gap)
    return WeakDualityCheck(worst_gap=worst, feasible_samples=feasible, skipped_samples=skipped)

"""Seeded Monte Carlo simulation of one-shot races.

Each trial draws one measuring time per player from its strategy and one
success draw at that time. The earliest success wins; a failed measurement
ends that player's race.

Each player owns a Philox stream keyed by (seed, player) and every trial reads
its own counter, so the draws of a trial depend only on (seed, trial, player).
Trials are generated in blocks of ``settings.sim_block_size``; the counts do not
depend on the block size.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from pydantic import ValidationError

from qrace.config import settings
from qrace.engine import constants
from qrace.engine.errors import DimensionError, ScheduleError
from qrace.engine.payoff import (
    MixedStrategy,
    RaceConfig,
    Variant,
    no_winner_probability,
    tie_event_probability,
    tie_profile,
    utility_np,
    utility_np_quantum,
)
from qrace.engine.reports import BoundReport, check_bound
from qrace.engine.schedules import (
    bitcoin_schedule_params,
    density_report,
    grover_k,
    grover_schedule,
)
from qrace.engine.solven import multi_coinciding_equilibrium
from qrace.schemas import SweepConfigDoc

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = (
    "N",
    "K",
    "n",
    "ell",
    "Tstar",
    "analytic_payoff",
    "analytic_tie",
    "empirical_tie",
    "bound_8enl_over_K",
    "trials",
    "seed",
)


# --- Dataclasses ---


@dataclass(frozen=True, eq=False)
class SimConfig:
    cfg: RaceConfig
    profile: tuple[MixedStrategy, ...]
    trials: int
    seed: int = 0

    def __post_init__(self) -> None:
        errors = validate_sim_config(self)
        if errors:
            raise ValueError("; ".join(errors))


@dataclass
class SimResult:
    """Outcome counts of a simulation run.

    ``participation[i][m]`` counts trials in which player i was among exactly
    m players succeeding first; m = 1 is a sole win.
    """

    n: int
    variant: Variant
    trials: int
    seed: int
    win_counts: list[int] = field(default_factory=list)
    tie_counts: dict[int, int] = field(default_factory=dict)
    participation: list[dict[int, int]] = field(default_factory=list)
    no_winner_count: int = 0

    @property
    def win_frequency(self) -> list[float]:
        return [c / self.trials for c in self.win_counts]

    @property
    def tie_frequency(self) -> float:
        return sum(self.tie_counts.values()) / self.trials

    @property
    def tie_frequency_by_multiplicity(self) -> dict[int, float]:
        return {m: c / self.trials for m, c in self.tie_counts.items()}

    @property
    def no_winner_frequency(self) -> float:
        return self.no_winner_count / self.trials

    def participation_frequency(self, player: int) -> dict[int, float]:
        return {m: c / self.trials for m, c in self.participation[player].items()}

    def payoff_estimate(self, player: int) -> float:
        return sum(c * self._share(m) for m, c in self.participation[player].items()) / self.trials

    def payoff_standard_error(self, player: int) -> float:
        mean = self.payoff_estimate(player)
        second = sum(c * self._share(m) ** 2 for m, c in self.participation[player].items())
        variance = max(0.0, second / self.trials - mean * mean)
        return math.sqrt(variance / self.trials)

    @property
    def outcome_total(self) -> int:
        return sum(self.win_counts) + sum(self.tie_counts.values()) + self.no_winner_count

    def _share(self, m: int) -> float:
        if m == 1:
            return 1.0
        return 1.0 / m if self.variant == Variant.TIE_SPLITTING else 0.0


@dataclass(frozen=True)
class SweepRow:
    """One (N, n) row of a fork-rate sweep. Empty cells are None."""

    big_n: float
    k: int
    n: int
    ell: float
    tstar: int | None
    analytic_payoff: float | None
    analytic_tie: float | None
    empirical_tie: float | None
    bound: float
    trials: int
    seed: int

    def as_tuple(self) -> tuple:
        return (
            self.big_n,
            self.k,
            self.n,
            self.ell,
            self.tstar,
            self.analytic_payoff,
            self.analytic_tie,
            self.empirical_tie,
            self.bound,
            self.trials,
            self.seed,
        )


# --- Validation ---


def validate_sim_config(sc: SimConfig) -> list[str]:
    errors: list[str] = []
    if sc.trials < 1:
        errors.append(f"trials must be at least 1, got {sc.trials}")
    if not 0 <= sc.seed < 2**64:
        errors.append(f"seed must be a 64-bit unsigned integer, got {sc.seed}")
    if len(sc.profile) != sc.cfg.n:
        errors.append(f"Profile has {len(sc.profile)} strategies for {sc.cfg.n} players")
    for i, strategy in enumerate(sc.profile):
        if strategy.k != sc.cfg.k:
            errors.append(f"Strategy {i} has K={strategy.k}, race has K={sc.cfg.k}")
    return errors


# --- Simulation ---


def _cdf(strategy: MixedStrategy) -> np.ndarray:
    cdf = np.cumsum(strategy.array)
    cdf[strategy.support[-1] - 1 :] = np.inf
    return cdf


_UNIT = 1.0 / 2**53


def _uniforms(seed: int, player: int, start: int, size: int) -> np.ndarray:
    """Two uniforms per trial for trials start, ..., start + size - 1; shape (size, 2)."""
    bitgen = np.random.Philox(key=(player << 64) | seed, counter=start)
    raw = bitgen.random_raw(4 * size).reshape(size, 4)[:, :2]
    return (raw >> np.uint64(11)) * _UNIT


def _block(
    sc: SimConfig, cdfs: list[np.ndarray], start: int, size: int
) -> tuple[np.ndarray, np.ndarray]:
    """(first, multiplicity) for one block: who succeeded first and how many did."""
    never = sc.cfg.k
    success = np.full((sc.cfg.n, size), never, dtype=np.int64)
    for i in range(sc.cfg.n):
        u = _uniforms(sc.seed, i, start, size)
        times = np.searchsorted(cdfs[i], u[:, 0], side="right")
        hit = u[:, 1] < sc.cfg.schedule_for(i).array[times]
        success[i, hit] = times[hit]
    earliest = success.min(axis=0)
    first = (success == earliest) & (earliest != never)
    return first, first.sum(axis=0)


def run_simulation(sc: SimConfig, block_size: int | None = None) -> SimResult:
    """Simulate ``sc.trials`` independent races. Identical inputs give identical counts."""
    size_cap = settings.sim_block_size if block_size is None else block_size
    n = sc.cfg.n
    cdfs = [_cdf(s) for s in sc.profile]
    ties = np.zeros(n + 1, dtype=np.int64)
    part = np.zeros((n, n + 1), dtype=np.int64)

    blocks = -(-sc.trials // size_cap)
    for block in range(blocks):
        size = min(size_cap, sc.trials - block * size_cap)
        first, mult = _block(sc, cdfs, block * size_cap, size)
        ties += np.bincount(mult, minlength=n + 1)
        for i in range(n):
            part[i] += np.bincount(mult[first[i]], minlength=n + 1)
    wins = part[:, 1]

    result = SimResult(
        n=n,
        variant=sc.cfg.variant,
        trials=sc.trials,
        seed=sc.seed,
        win_counts=[int(c) for c in wins],
        tie_counts={m: int(ties[m]) for m in range(2, n + 1)},
        participation=[{m: int(part[i, m]) for m in range(1, n + 1)} for i in range(n)],
        no_winner_count=int(ties[0]),
    )
    logger.info(
        f"Simulated {sc.trials} trials (n={n}, seed={sc.seed}): "
        f"tie {result.tie_frequency:.6g}, no winner {result.no_winner_frequency:.6g}"
    )
    return result


def _z(observed: float, expected: float, trials: int) -> float:
    """Distance in binomial Wald standard errors; exact agreement on degenerate cells."""
    se = math.sqrt(max(expected * (1.0 - expected), 0.0) / trials)
    if se == 0.0:
        return 0.0 if observed == expected else math.inf
    return abs(observed - expected) / se


def consistency_report(
    result: SimResult, sc: SimConfig, bands: float = 4.0
) -> BoundReport:
    """Empirical frequencies against the analytic outcome probabilities, in standard errors."""
    cfg, profile, trials = sc.cfg, sc.profile, result.trials
    report = BoundReport(name="simulation_consistency")
    stingy = cfg.with_variant(Variant.STINGY)
    for i in range(cfg.n):
        expected = float(utility_np(stingy, i, profile))
        z_win = _z(result.win_frequency[i], expected, trials)
        report.add(check_bound(f"win_{i}", z_win, "<=", bands))
        analytic = tie_profile(cfg, i, profile).by_multiplicity
        observed = result.participation_frequency(i)
        for m in range(2, cfg.n + 1):
            z = _z(observed[m], float(analytic[m]), trials)
            report.add(check_bound(f"tie_{i}_{m}", z, "<=", bands))
        payoff = float(
            utility_np_quantum(cfg, i, profile)
            if cfg.variant == Variant.TIE_SPLITTING
            else expected
        )
        se = result.payoff_standard_error(i)
        gap = abs(result.payoff_estimate(i) - payoff)
        report.add(check_bound(f"payoff_{i}", gap, "<=", bands * se if se > 0 else 0.0))
    report.add(
        check_bound(
            "tie_total",
            _z(result.tie_frequency, float(tie_event_probability(cfg, profile)), trials),
            "<=",
            bands,
        )
    )
    report.add(
        check_bound(
            "no_winner",
            _z(result.no_winner_frequency, float(no_winner_probability(cfg, profile)), trials),
            "<=",
            bands,
        )
    )
    return report


# --- Sweeps ---


def _analytic_only(big_n: float, k: int, n: int, trials: int, seed: int) -> SweepRow:
    return SweepRow(
        big_n=big_n,
        k=k,
        n=n,
        ell=constants.GROVER_ELL,
        tstar=None,
        analytic_payoff=None,
        analytic_tie=None,
        empirical_tie=None,
        bound=constants.multiplayer_tie_bound(constants.GROVER_ELL, k, n),
        trials=trials,
        seed=seed,
    )


def fork_rate_row(big_n: int, n: int, trials: int, seed: int) -> SweepRow:
    """Analytic and simulated tie probability at the n-player equilibrium of a Grover race."""
    k = grover_k(big_n)
    if k > settings.max_materialized_k:
        logger.info(f"N={big_n}: K={k} above the materialization cap, analytic row only")
        return _analytic_only(float(big_n), k, n, 0, seed)

    schedule = grover_schedule(big_n)
    density = density_report(schedule)
    try:
        sol = multi_coinciding_equilibrium(schedule, n)
    except ScheduleError as e:
        logger.warning(f"N={big_n}, n={n}: {e}")
        return _analytic_only(float(big_n), k, n, 0, seed)

    cfg = RaceConfig.symmetric(schedule, n, Variant.TIE_SPLITTING)
    analytic_tie = float(tie_event_probability(cfg, sol.profile))
    empirical = None
    if trials > 0:
        result = run_simulation(SimConfig(cfg=cfg, profile=sol.profile, trials=trials, seed=seed))
        empirical = result.tie_frequency
    row = SweepRow(
        big_n=float(big_n),
        k=k,
        n=n,
        ell=density.ell,
        tstar=sol.tstar,
        analytic_payoff=sol.per_player_payoff,
        analytic_tie=analytic_tie,
        empirical_tie=empirical,
        bound=constants.multiplayer_tie_bound(density.ell, k, n),
        trials=trials,
        seed=seed,
    )
    logger.info(f"Sweep row N={big_n}, n={n}: T*={sol.tstar}, tie={analytic_tie:.6g}")
    return row


def bitcoin_rows(difficulty: float, players: Sequence[int], seed: int = 0) -> list[SweepRow]:
    """Analytic-only rows for a mining difficulty; the schedule is never built."""
    params = bitcoin_schedule_params(difficulty)
    return [_analytic_only(params.n, params.k, n, 0, seed) for n in players]


def fork_rate_sweep(
    sizes: Sequence[int],
    players: Sequence[int],
    trials: int,
    seed: int = 0,
    difficulties: Sequence[float] = (),
) -> list[SweepRow]:
    """One row per (N, n); difficulties add analytic-only rows."""
    if not players:
        raise DimensionError("A sweep needs at least one player count")
    rows = [fork_rate_row(big_n, n, trials, seed) for big_n in sizes for n in players]
    for difficulty in difficulties:
        rows.extend(bitcoin_rows(difficulty, players, seed))
    return rows


def sweep_from_config(path: str | Path) -> list[SweepRow]:
    """Run a sweep described by a YAML file.

    Keys: ``sizes`` (Grover N list), ``players`` (n list), ``trials``, ``seed``
    and optional ``difficulties``.
    """
    with Path(path).open() as f:
        data = yaml.safe_load(f) or {}
    try:
        doc = SweepConfigDoc.model_validate(data)
    except ValidationError as e:
        raise ValueError(f"Sweep config {path} is invalid: {e}") from e
    return fork_rate_sweep(
        sizes=doc.sizes,
        players=doc.players,
        trials=doc.trials,
        seed=doc.seed,
        difficulties=doc.difficulties,
    )

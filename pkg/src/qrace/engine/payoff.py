"""Payoff matrices and utility evaluators for two-player and n-player races.

In the stingy race a player is paid 1 when it alone succeeds first. In the
tie-splitting race the unit payoff is shared among all players who succeed at
the same earliest time.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction

import numpy as np

from qrace.config import settings
from qrace.engine.errors import DimensionError
from qrace.engine.numerics import Number, is_exact
from qrace.engine.schedules import ProbabilitySchedule

logger = logging.getLogger(__name__)


class Variant(StrEnum):
    STINGY = "stingy"
    TIE_SPLITTING = "tie-splitting"


class Role(StrEnum):
    ROW = "row"
    COLUMN = "column"


# --- Dataclasses ---


@dataclass(frozen=True, eq=False)
class MixedStrategy:
    """Probability vector over measuring times 1..K.

    Build through ``from_weights`` so the normalization and support invariants
    are checked.
    """

    weights: np.ndarray

    @classmethod
    def from_weights(
        cls, weights: Sequence[Number] | np.ndarray, tolerance: float | None = None
    ) -> MixedStrategy:
        values = list(weights)
        exact = is_exact(values)
        arr = np.array(values, dtype=object if exact else np.float64)
        errors = validate_weights(arr, settings.tie_tolerance if tolerance is None else tolerance)
        if errors:
            raise ValueError("; ".join(errors))
        arr.flags.writeable = False
        return cls(weights=arr)

    @classmethod
    def pure(cls, t: int, k: int) -> MixedStrategy:
        if not 1 <= t <= k:
            raise DimensionError(f"time {t} outside [1, {k}]")
        w = [0] * k
        w[t - 1] = 1
        return cls.from_weights(w)

    @classmethod
    def uniform(cls, times: Sequence[int], k: int, exact: bool = False) -> MixedStrategy:
        share: Number = Fraction(1, len(times)) if exact else 1.0 / len(times)
        w: list[Number] = [Fraction(0) if exact else 0.0] * k
        for t in times:
            if not 1 <= t <= k:
                raise DimensionError(f"time {t} outside [1, {k}]")
            w[t - 1] = share
        return cls.from_weights(w, tolerance=1e-9)

    @property
    def k(self) -> int:
        return len(self.weights)

    @property
    def support(self) -> tuple[int, ...]:
        """1-based times with positive weight."""
        return tuple(t + 1 for t, w in enumerate(self.weights) if w > 0)

    @property
    def is_exact(self) -> bool:
        return self.weights.dtype == object and is_exact(list(self.weights))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)

    def weight(self, t: int) -> Number:
        return self.weights[t - 1]


@dataclass(frozen=True, eq=False)
class PayoffMatrix:
    """K x K payoff matrix of one player in a two-player race.

    Rows index the row player's measuring time, columns the column player's.
    """

    entries: np.ndarray
    variant: Variant
    role: Role

    @property
    def k(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class RaceConfig:
    """An n-player race: one shared schedule, or a pair for asymmetric two-player games."""

    n: int
    schedules: tuple[ProbabilitySchedule, ...]
    variant: Variant = Variant.STINGY

    def __post_init__(self) -> None:
        errors = validate_config(self)
        if errors:
            raise ValueError("; ".join(errors))

    @classmethod
    def symmetric(
        cls, schedule: ProbabilitySchedule, n: int = 2, variant: Variant = Variant.STINGY
    ) -> RaceConfig:
        return cls(n=n, schedules=(schedule,), variant=variant)

    @classmethod
    def pair(
        cls,
        row: ProbabilitySchedule,
        col: ProbabilitySchedule,
        variant: Variant = Variant.STINGY,
    ) -> RaceConfig:
        return cls(n=2, schedules=(row, col), variant=variant)

    @property
    def k(self) -> int:
        return self.schedules[0].k

    @property
    def is_symmetric(self) -> bool:
        return len(self.schedules) == 1 or self.schedules[0].probs == self.schedules[1].probs

    def schedule_for(self, player: int) -> ProbabilitySchedule:
        if not 0 <= player < self.n:
            raise DimensionError(f"player {player} outside [0, {self.n})")
        if len(self.schedules) == 1:
            return self.schedules[0]
        return self.schedules[player]

    def with_variant(self, variant: Variant) -> RaceConfig:
        return RaceConfig(n=self.n, schedules=self.schedules, variant=variant)


@dataclass
class TieProfile:
    """Probabilities cp^m that a player succeeds first together with exactly m-1 others."""

    by_multiplicity: dict[int, Number] = field(default_factory=dict)

    @property
    def total(self) -> Number:
        return sum(self.by_multiplicity.values())


# --- Validation ---


def validate_weights(weights: np.ndarray, tolerance: float) -> list[str]:
    """Validate a strategy vector. Returns a list of error messages (empty = valid)."""
    errors: list[str] = []
    if len(weights) == 0:
        return ["Strategy has no entries"]
    if any(w < 0 for w in weights):
        errors.append("Strategy has negative weights")
    total = sum(weights)
    if weights.dtype == object and is_exact(list(weights)):
        if total != 1:
            errors.append(f"Strategy weights sum to {total}, expected exactly 1")
    elif abs(float(total) - 1.0) > tolerance:
        errors.append(f"Strategy weights sum to {float(total):.17g}, expected 1")
    return errors


def validate_config(cfg: RaceConfig) -> list[str]:
    """Validate a race configuration. Returns a list of error messages (empty = valid)."""
    errors: list[str] = []
    if cfg.n < 2:
        errors.append(f"A race needs at least 2 players, got {cfg.n}")
    if len(cfg.schedules) not in (1, 2):
        errors.append("Give one shared schedule or a row/column pair")
    elif len(cfg.schedules) == 2:
        if cfg.n != 2:
            errors.append("Asymmetric schedule pairs are only allowed for 2 players")
        if cfg.schedules[0].k != cfg.schedules[1].k:
            errors.append(
                f"Schedules have different K: {cfg.schedules[0].k} vs {cfg.schedules[1].k}"
            )
    return errors


def _check_profile(cfg: RaceConfig, profile: Sequence[MixedStrategy | None]) -> None:
    if len(profile) != cfg.n:
        raise DimensionError(f"Profile has {len(profile)} strategies for {cfg.n} players")
    for idx, strategy in enumerate(profile):
        if strategy is not None and strategy.k != cfg.k:
            raise DimensionError(f"Strategy of player {idx} has K={strategy.k}, expected {cfg.k}")


def require_common_k(*schedules: ProbabilitySchedule) -> int:
    """The K shared by all schedules; raises DimensionError when they differ."""
    ks = {s.k for s in schedules}
    if len(ks) != 1:
        raise DimensionError(f"Schedules have different K: {sorted(ks)}")
    return ks.pop()



# --- Two-player matrices ---


def _probs(schedule: ProbabilitySchedule, exact: bool) -> np.ndarray:
    return schedule.values() if exact else schedule.array


def payoff_matrix_2p(
    row: ProbabilitySchedule,
    col: ProbabilitySchedule,
    variant: Variant = Variant.STINGY,
    role: Role = Role.ROW,
    max_k: int | None = None,
) -> PayoffMatrix:
    """Payoff matrix of the row player (A) or the column player (B).

    Row matrix: p_i if i < j, p_i (1 - P_j) if i >= j. Column matrix: P_j if
    j < i, P_j (1 - p_i) if j >= i. Tie-splitting adds p_i P_i / 2 on the
    diagonal of both.
    """
    k = require_common_k(row, col)
    cap = settings.max_matrix_k if max_k is None else max_k
    if k > cap:
        raise DimensionError(f"K={k} exceeds the dense matrix cap {cap}")

    exact = row.is_exact and col.is_exact
    p = _probs(row, exact)
    big_p = _probs(col, exact)
    i = np.arange(k)[:, None]
    j = np.arange(k)[None, :]
    ones = np.ones((k, k), dtype=object if exact else np.float64)

    if role == Role.ROW:
        entries = np.where(i < j, p[:, None] * ones, np.outer(p, 1 - big_p))
    else:
        entries = np.where(j < i, big_p[None, :] * ones, np.outer(1 - p, big_p))
    if exact:
        entries = entries.astype(object)

    if variant == Variant.TIE_SPLITTING:
        diag = np.arange(k)
        entries[diag, diag] = entries[diag, diag] + p * big_p / 2
    entries.flags.writeable = False
    return PayoffMatrix(entries=entries, variant=variant, role=role)


def expected_payoff_2p(
    matrix: PayoffMatrix | np.ndarray, x: MixedStrategy, y: MixedStrategy
) -> Number:
    """Bilinear form x^T M y."""
    entries = matrix.entries if isinstance(matrix, PayoffMatrix) else matrix
    if entries.shape != (x.k, y.k):
        raise DimensionError(f"Matrix shape {entries.shape} does not match ({x.k}, {y.k})")
    return x.weights @ entries @ y.weights


def survival(weights: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """For every time t: the probability that a player with this strategy has not
    succeeded strictly before t and does not succeed at t.

    sum_{s <= t} x_s (1 - P_s) + sum_{s > t} x_s, from prefix sums in O(K).
    """
    failed = np.cumsum(weights * (1 - probs))
    later = weights.sum() - np.cumsum(weights)
    return failed + later


def row_payoff_vector(
    row: ProbabilitySchedule,
    col: ProbabilitySchedule,
    y: MixedStrategy,
    variant: Variant = Variant.STINGY,
) -> np.ndarray:
    """e_t^T A y for all t without building A."""
    exact = row.is_exact and col.is_exact and y.is_exact
    p = _probs(row, exact)
    big_p = _probs(col, exact)
    out = p * survival(y.weights, big_p)
    if variant == Variant.TIE_SPLITTING:
        out = out + p * big_p * y.weights / 2
    return out


def column_payoff_vector(
    row: ProbabilitySchedule,
    col: ProbabilitySchedule,
    x: MixedStrategy,
    variant: Variant = Variant.STINGY,
) -> np.ndarray:
    """x^T B e_j for all j without building B."""
    exact = row.is_exact and col.is_exact and x.is_exact
    p = _probs(row, exact)
    big_p = _probs(col, exact)
    out = big_p * survival(x.weights, p)
    if variant == Variant.TIE_SPLITTING:
        out = out + p * big_p * x.weights / 2
    return out


def bilinear_sum_identity(schedule: ProbabilitySchedule) -> Number:
    """Largest entry of |A + A^T - (p 1^T + 1 p^T - p p^T)| for the symmetric tie-splitting race.

    Zero exactly for ``Fraction`` schedules.
    """
    a = payoff_matrix_2p(schedule, schedule, Variant.TIE_SPLITTING, Role.ROW).entries
    p = schedule.values()
    expected = p[:, None] + p[None, :] - np.outer(p, p)
    return max(abs(v) for v in (a + a.T - expected).ravel())


# --- n-player utilities ---


def utility_np_pure(cfg: RaceConfig, profile: Sequence[int]) -> list[Number]:
    """Stingy payoffs of a pure profile of 1-based measuring times.

    u_i = P_{s_i} prod_{k != i, s_k <= s_i} (1 - P_{s_k}).
    """
    if len(profile) != cfg.n:
        raise DimensionError(f"Profile has {len(profile)} times for {cfg.n} players")
    for t in profile:
        if not 1 <= t <= cfg.k:
            raise DimensionError(f"time {t} outside [1, {cfg.k}]")

    payoffs: list[Number] = []
    for i, s_i in enumerate(profile):
        value = cfg.schedule_for(i).p(s_i)
        for k, s_k in enumerate(profile):
            if k != i and s_k <= s_i:
                value = value * (1 - cfg.schedule_for(k).p(s_k))
        payoffs.append(value)
    return payoffs


def _exact_profile(cfg: RaceConfig, profile: Sequence[MixedStrategy | None]) -> bool:
    return all(s.is_exact for s in cfg.schedules) and all(
        x.is_exact for x in profile if x is not None
    )


def stingy_utilities(
    cfg: RaceConfig, player: int, profile: Sequence[MixedStrategy | None]
) -> np.ndarray:
    """u_i(x_{-i}, t) for every pure time t of ``player``; ``profile[player]`` is ignored.

    P_t prod_{k != i} survival_k(t), O(nK) overall.
    """
    _check_profile(cfg, profile)
    exact = _exact_profile(cfg, profile)
    out = _probs(cfg.schedule_for(player), exact)
    for k, strategy in enumerate(profile):
        if k == player:
            continue
        if strategy is None:
            raise DimensionError(f"Missing strategy for opponent {k}")
        out = out * survival(strategy.weights, _probs(cfg.schedule_for(k), exact))
    return out


def utility_np_mixed(
    cfg: RaceConfig, player: int, profile: Sequence[MixedStrategy | None], t: int
) -> Number:
    """Stingy payoff of ``player`` measuring at time t against the others' mixed strategies."""
    if not 1 <= t <= cfg.k:
        raise DimensionError(f"time {t} outside [1, {cfg.k}]")
    return stingy_utilities(cfg, player, profile)[t - 1]


def outcome_table(
    cfg: RaceConfig, player: int, profile: Sequence[MixedStrategy | None]
) -> np.ndarray:
    """Table of shape (K, n): entry [t-1, m] is the probability that ``player``,
    measuring at t, succeeds first together with exactly m opponents.

    Each opponent k contributes a_k(t) + lambda b_k(t), where b_k(t) = x_k^t P_t
    (succeeds at t) and a_k(t) = survival_k(t); the coefficients of lambda are
    accumulated as elementary symmetric polynomials in O(K n^2).
    """
    _check_profile(cfg, profile)
    exact = _exact_profile(cfg, profile)
    coeffs: list[np.ndarray] = [np.ones(cfg.k, dtype=object if exact else np.float64)]
    for k, strategy in enumerate(profile):
        if k == player:
            continue
        if strategy is None:
            raise DimensionError(f"Missing strategy for opponent {k}")
        probs = _probs(cfg.schedule_for(k), exact)
        a = survival(strategy.weights, probs)
        b = strategy.weights * probs
        nxt = [a * coeffs[0]]
        for m in range(1, len(coeffs)):
            nxt.append(a * coeffs[m] + b * coeffs[m - 1])
        nxt.append(b * coeffs[-1])
        coeffs = nxt
    own = _probs(cfg.schedule_for(player), exact)
    return np.stack([own * c for c in coeffs], axis=1)


def tie_profile(cfg: RaceConfig, player: int, profile: Sequence[MixedStrategy]) -> TieProfile:
    """cp_i^m for m = 2..n under the full mixed profile."""
    table = outcome_table(cfg, player, profile)
    x = profile[player].weights
    return TieProfile(
        by_multiplicity={m: x @ table[:, m - 1] for m in range(2, cfg.n + 1)}
    )


def deviation_tie_probabilities(
    cfg: RaceConfig, player: int, profile: Sequence[MixedStrategy | None]
) -> np.ndarray:
    """cp_i(x_{-i}, e_t) for every pure time t."""
    table = outcome_table(cfg, player, profile)
    return table[:, 1:].sum(axis=1)


def quantum_utilities(
    cfg: RaceConfig, player: int, profile: Sequence[MixedStrategy | None]
) -> np.ndarray:
    """Tie-splitting payoff u_i'(x_{-i}, t) for every pure time t."""
    table = outcome_table(cfg, player, profile)
    out = table[:, 0]
    for m in range(1, cfg.n):
        out = out + table[:, m] / (m + 1)
    return out


def utility_np(cfg: RaceConfig, player: int, profile: Sequence[MixedStrategy]) -> Number:
    """Stingy payoff (win probability) of ``player`` under the full mixed profile."""
    return profile[player].weights @ stingy_utilities(cfg, player, profile)


def utility_np_quantum(cfg: RaceConfig, player: int, profile: Sequence[MixedStrategy]) -> Number:
    """u_i' = u_i + sum_m cp_i^m / m."""
    return profile[player].weights @ quantum_utilities(cfg, player, profile)


def no_winner_probability(cfg: RaceConfig, profile: Sequence[MixedStrategy]) -> Number:
    """Probability that every player fails: prod_k sum_s x_k^s (1 - P_s)."""
    _check_profile(cfg, profile)
    exact = _exact_profile(cfg, profile)
    out: Number = 1
    for k, strategy in enumerate(profile):
        out = out * (strategy.weights @ (1 - _probs(cfg.schedule_for(k), exact)))
    return out


def tie_event_probability(cfg: RaceConfig, profile: Sequence[MixedStrategy]) -> Number:
    """Probability that two or more players succeed at the same earliest time.

    An m-way tie is counted once by each of its m players, hence the 1/m.
    """
    total: Number = 0
    for i in range(cfg.n):
        ties = tie_profile(cfg, i, profile)
        for m, value in ties.by_multiplicity.items():
            total = total + value / m
    return total


def outcome_partition(cfg: RaceConfig, profile: Sequence[MixedStrategy]) -> Number:
    """Sum of sole-win, tie and no-winner probabilities; equals 1."""
    wins = sum(utility_np(cfg, i, profile) for i in range(cfg.n))
    return wins + tie_event_probability(cfg, profile) + no_winner_probability(cfg, profile)
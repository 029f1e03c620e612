"""Independent equilibrium oracles.

Best-response sets, exact and epsilon-Nash verification for arbitrary
bimatrix games and n-player races, and exhaustive support enumeration for
tiny games. Nothing here uses the closed-form solvers.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from qrace.config import settings
from qrace.engine.errors import DimensionError, EnumerationLimitError, SingularSystemError
from qrace.engine.numerics import Number, is_exact, solve_linear
from qrace.engine.payoff import (
    MixedStrategy,
    PayoffMatrix,
    RaceConfig,
    Role,
    Variant,
    column_payoff_vector,
    quantum_utilities,
    row_payoff_vector,
    stingy_utilities,
)
from qrace.engine.schedules import ProbabilitySchedule

logger = logging.getLogger(__name__)

# Matrix, or a matrix-free evaluator mapping the opponent's strategy to a payoff vector
PayoffSource = PayoffMatrix | np.ndarray | Callable[[MixedStrategy], np.ndarray]


# --- Dataclasses ---


@dataclass(frozen=True, eq=False)
class BestResponse:
    """Best pure responses (1-based) and the full payoff vector."""

    times: tuple[int, ...]
    payoffs: np.ndarray
    value: Number


@dataclass(frozen=True)
class Deviation:
    player: int
    best_time: int  # 1-based
    gain: float


@dataclass
class NashVerdict:
    """Smallest epsilon values for which a profile is an approximate equilibrium."""

    is_exact: bool
    epsilon_approx: float
    epsilon_well_supported: float
    worst_deviations: list[Deviation] = field(default_factory=list)
    payoffs: list[float] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class BimatrixEquilibrium:
    row: MixedStrategy
    col: MixedStrategy
    payoff_row: Number
    payoff_col: Number


@dataclass
class EnumerationResult:
    """All equilibria found by support enumeration.

    ``degenerate`` is set when a candidate system was singular or a found
    profile has more best responses than support; the list then holds
    representatives rather than every equilibrium.
    """

    equilibria: list[BimatrixEquilibrium] = field(default_factory=list)
    degenerate: bool = False
    singular_systems: int = 0


# --- Payoff vectors ---


def _entries(matrix: PayoffMatrix | np.ndarray) -> np.ndarray:
    return matrix.entries if isinstance(matrix, PayoffMatrix) else np.asarray(matrix)


def _row_vector(a: PayoffSource, y: MixedStrategy) -> np.ndarray:
    """e_i^T A y for every row i."""
    if callable(a) and not isinstance(a, (PayoffMatrix, np.ndarray)):
        return a(y)
    entries = _entries(a)
    if entries.shape[1] != y.k:
        raise DimensionError(f"Matrix has {entries.shape[1]} columns, strategy has K={y.k}")
    return entries @ y.weights


def _col_vector(b: PayoffSource, x: MixedStrategy) -> np.ndarray:
    """x^T B e_j for every column j."""
    if callable(b) and not isinstance(b, (PayoffMatrix, np.ndarray)):
        return b(x)
    entries = _entries(b)
    if entries.shape[0] != x.k:
        raise DimensionError(f"Matrix has {entries.shape[0]} rows, strategy has K={x.k}")
    return x.weights @ entries


def race_evaluators(
    row: ProbabilitySchedule,
    col: ProbabilitySchedule,
    variant: Variant = Variant.STINGY,
) -> tuple[Callable[[MixedStrategy], np.ndarray], Callable[[MixedStrategy], np.ndarray]]:
    """Matrix-free (row, column) payoff sources of a two-player race."""
    return (
        lambda y: row_payoff_vector(row, col, y, variant),
        lambda x: column_payoff_vector(row, col, x, variant),
    )


def _argmax_set(payoffs: np.ndarray, tolerance: float) -> tuple[tuple[int, ...], Number]:
    best = max(payoffs)
    times = tuple(t + 1 for t, v in enumerate(payoffs) if v >= best - tolerance)
    return times, best


def _exact(*arrays: np.ndarray) -> bool:
    return all(arr.dtype == object and is_exact(list(arr.ravel())) for arr in arrays)


# --- Oracles ---


def best_response_set(
    matrix: PayoffSource,
    opponent: MixedStrategy,
    role: Role = Role.ROW,
    tolerance: float | None = None,
) -> BestResponse:
    """All pure strategies maximizing the payoff against ``opponent``.

    For a row-player source the payoffs are e_t^T M y; for a column-player
    source they are x^T M e_t. Exact inputs compare without tolerance.
    """
    if isinstance(matrix, PayoffMatrix):
        role = matrix.role
    payoffs = _row_vector(matrix, opponent) if role == Role.ROW else _col_vector(matrix, opponent)
    tol = settings.tie_tolerance if tolerance is None else tolerance
    if _exact(payoffs):
        tol = 0
    times, best = _argmax_set(payoffs, tol)
    return BestResponse(times=times, payoffs=payoffs, value=best)


def _player_gaps(payoffs: np.ndarray, weights: np.ndarray) -> tuple[float, float, int, Number]:
    """(approx gap, well-supported gap, best 1-based time, own payoff)."""
    value = weights @ payoffs
    best_idx = max(range(len(payoffs)), key=lambda t: payoffs[t])
    best = payoffs[best_idx]
    support = [t for t, w in enumerate(weights) if w > 0]
    worst_support = min(payoffs[t] for t in support)
    approx = max(0.0, float(best - value))
    well = max(0.0, float(best - worst_support))
    return approx, well, best_idx + 1, value


def verify_profile(
    a: PayoffSource,
    b: PayoffSource,
    x: MixedStrategy,
    y: MixedStrategy,
    tolerance: float | None = None,
) -> NashVerdict:
    """Verdict for the profile (x, y) of the bimatrix game (A, B).

    epsilon_approx is the largest gain of a pure deviation over the current
    payoff; epsilon_well_supported is the largest gap between the best pure
    payoff and any support strategy's payoff.
    """
    tol = settings.tolerance if tolerance is None else tolerance
    row_pay = _row_vector(a, y)
    col_pay = _col_vector(b, x)
    if len(row_pay) != x.k or len(col_pay) != y.k:
        raise DimensionError("Payoff dimensions do not match the profile")
    return _verdict([(row_pay, x.weights), (col_pay, y.weights)], tol)


def _verdict(per_player: Sequence[tuple[np.ndarray, np.ndarray]], tolerance: float) -> NashVerdict:
    approx_eps = 0.0
    well_eps = 0.0
    deviations: list[Deviation] = []
    payoffs: list[float] = []
    for player, (vector, weights) in enumerate(per_player):
        approx, well, best_time, value = _player_gaps(vector, weights)
        approx_eps = max(approx_eps, approx)
        well_eps = max(well_eps, well)
        deviations.append(Deviation(player=player, best_time=best_time, gain=approx))
        payoffs.append(float(value))
    return NashVerdict(
        is_exact=well_eps <= tolerance,
        epsilon_approx=approx_eps,
        epsilon_well_supported=well_eps,
        worst_deviations=deviations,
        payoffs=payoffs,
    )


def verify_profile_np(
    cfg: RaceConfig,
    profile: Sequence[MixedStrategy],
    tolerance: float | None = None,
) -> NashVerdict:
    """n-player verdict through the utility evaluators of the race's variant."""
    tol = settings.tolerance if tolerance is None else tolerance
    evaluate = quantum_utilities if cfg.variant == Variant.TIE_SPLITTING else stingy_utilities
    per_player = [(evaluate(cfg, i, profile), profile[i].weights) for i in range(cfg.n)]
    return _verdict(per_player, tol)


def mangasarian_stone_value(
    a: PayoffMatrix | np.ndarray,
    b: PayoffMatrix | np.ndarray,
    x: MixedStrategy,
    y: MixedStrategy,
) -> Number:
    """x^T (A + B) y - alpha - beta with alpha, beta the best-response values.

    Never positive; zero exactly at equilibria.
    """
    a_entries, b_entries = _entries(a), _entries(b)
    alpha = max(a_entries @ y.weights)
    beta = max(x.weights @ b_entries)
    return x.weights @ (a_entries + b_entries) @ y.weights - alpha - beta


# --- Support enumeration ---


def _indifference(
    payoff: np.ndarray, support: tuple[int, ...], against: tuple[int, ...], exact: bool
) -> list[Number]:
    """Solve sum_{i in support} w_i payoff[i, j] = v for j in ``against``, sum w = 1.

    Returns the weights followed by v.
    """
    size = len(support)
    one = 1 if exact else 1.0
    zero = 0 if exact else 0.0
    rows = [[payoff[i, j] for i in support] + [-one] for j in against]
    rows.append([one] * size + [zero])
    rhs = [zero] * size + [one]
    return solve_linear(rows, rhs)


def _expand(weights: Sequence[Number], support: tuple[int, ...], k: int, exact: bool) -> list:
    out: list[Number] = [0 if exact else 0.0] * k
    for idx, w in zip(support, weights, strict=True):
        out[idx] = w
    return out


def support_enumeration_2p(
    a: PayoffMatrix | np.ndarray,
    b: PayoffMatrix | np.ndarray,
    max_k: int | None = None,
    tolerance: float | None = None,
) -> EnumerationResult:
    """Every equilibrium of a small nondegenerate bimatrix game.

    Nondegenerate games have equilibria with equal-size supports, so only
    those pairs are tried. Object-dtype ``Fraction`` matrices are solved
    exactly.
    """
    a_entries, b_entries = _entries(a), _entries(b)
    if a_entries.shape != b_entries.shape:
        raise DimensionError(f"Matrix shapes differ: {a_entries.shape} vs {b_entries.shape}")
    m, n = a_entries.shape
    cap = settings.support_enum_max_k if max_k is None else max_k
    if max(m, n) > cap:
        raise EnumerationLimitError(f"Support enumeration is limited to K <= {cap}, got {m}x{n}")

    exact = _exact(a_entries, b_entries)
    tol = 0 if exact else (settings.tolerance if tolerance is None else tolerance)
    result = EnumerationResult()
    seen: set[tuple] = set()

    for size in range(1, min(m, n) + 1):
        logger.debug(f"Support enumeration: size {size}")
        for rows, cols in itertools.product(
            itertools.combinations(range(m), size), itertools.combinations(range(n), size)
        ):
            try:
                x_sol = _indifference(b_entries, rows, cols, exact)
                y_sol = _indifference(a_entries.T, cols, rows, exact)
            except SingularSystemError:
                result.singular_systems += 1
                result.degenerate = True
                continue
            x_w, y_w = x_sol[:-1], y_sol[:-1]
            if any(w < -tol for w in x_w) or any(w < -tol for w in y_w):
                continue
            if not exact:
                x_w = [max(w, 0.0) for w in x_w]
                y_w = [max(w, 0.0) for w in y_w]
            x = MixedStrategy.from_weights(_expand(x_w, rows, m, exact), tolerance=1e-9)
            y = MixedStrategy.from_weights(_expand(y_w, cols, n, exact), tolerance=1e-9)

            br_row = best_response_set(a_entries, y, Role.ROW, tolerance=tol)
            br_col = best_response_set(b_entries, x, Role.COLUMN, tolerance=tol)
            if not (set(x.support) <= set(br_row.times) and set(y.support) <= set(br_col.times)):
                continue
            if len(br_row.times) > len(x.support) or len(br_col.times) > len(y.support):
                result.degenerate = True

            key = _profile_key(x, y, exact)
            if key in seen:
                continue
            seen.add(key)
            result.equilibria.append(
                BimatrixEquilibrium(
                    row=x, col=y, payoff_row=br_row.value, payoff_col=br_col.value
                )
            )
    logger.info(
        f"Support enumeration on {m}x{n}: {len(result.equilibria)} equilibria, "
        f"degenerate={result.degenerate}"
    )
    return result


def _profile_key(x: MixedStrategy, y: MixedStrategy, exact: bool) -> tuple:
    if exact:
        return tuple(x.weights) + tuple(y.weights)
    return tuple(round(float(w), 9) for w in (*x.weights, *y.weights))

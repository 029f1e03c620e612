"""Catalog of the analytic constants and bound formulas.

Every bound check in the engine reads its threshold from here. ``ell`` is the
density parameter of the schedule and ``k`` the number of measuring times.
Each entry names the claim it bounds and the check that evaluates it.
"""

from __future__ import annotations

import math

SQRT2 = math.sqrt(2.0)

# Limit of the symmetric two-player coinciding payoff as K grows; also an
# upper bound on it (payoff_upper in solve2.payoff_bounds_check). The dual
# sweep starts here.
SQRT2_MINUS_1 = SQRT2 - 1.0

# Density of every Grover schedule (sin^2 schedules have ell = pi/2).
GROVER_ELL = math.pi / 2.0

# Coinciding start: P_{T*} > 5/21 for dense two-player races with K >= 6 ell.
# Checked as p_tstar_lower in solve2.payoff_bounds_check.
P_TSTAR_LOWER = 5.0 / 21.0

# Arithmetic slack applied to every bound comparison.
BOUND_SLACK = 1e-12


# --- Gates ---


def two_player_gate(ell: float, k: int) -> bool:
    """Density precondition K >= 6 ell of every two-player bound.

    Gates the coinciding payoff window, the collision bounds, the well-supported
    equilibrium claim and the tie-splitting payoff ceiling.
    """
    return k >= 6.0 * ell


def multiplayer_gate(ell: float, k: int, n: int) -> bool:
    """Density precondition 4 e n ell <= K of the n-player bounds."""
    return 4.0 * math.e * n * ell <= k


# --- Two-player coinciding equilibrium ---


def tau(ell: float, k: int) -> float:
    """Half-width 50 sqrt(2) ell / K of the coinciding payoff window."""
    return 50.0 * SQRT2 * ell / k


def z_upper(ell: float, k: int) -> float:
    """Coinciding payoff window, normalizer side: z_{T*} <= sqrt(2) + 1 + tau.

    Checked as z_upper in ``solve2.payoff_bounds_check``.
    """
    return SQRT2 + 1.0 + tau(ell, k)


def payoff_lower(ell: float, k: int) -> float:
    """Coinciding payoff window, payoff side: 1/z_{T*} >= sqrt(2) - 1 - tau (sqrt(2) - 1)^2.

    Checked as payoff_lower in ``solve2.payoff_bounds_check``; also the floor
    of the tie-splitting payoff ceiling in ``dual.payoff_ceiling``.
    """
    return SQRT2_MINUS_1 - tau(ell, k) * SQRT2_MINUS_1**2


def tie_probability_bound(ell: float, k: int) -> float:
    """Two-player collision bound: the tie probability at the coinciding equilibrium
    is at most 6 ell / K (``solve2.collision_bounds_check``)."""
    return 6.0 * ell / k


def sigma_bound(ell: float, k: int) -> float:
    """Two-player collision bound on the unnormalized collision mass sigma: 196 ell / K."""
    return 196.0 * ell / k


def well_supported_epsilon(ell: float, k: int) -> float:
    """Well-supported approximate equilibrium: the stingy coinciding equilibrium is a
    7 (sqrt(2) - 1) ell / K well-supported equilibrium of the tie-splitting race.

    Checked in ``solve2.well_supported_check`` and, for two players, as
    two_player_regret in ``solven.multi_approx_check``.
    """
    return 7.0 * SQRT2_MINUS_1 * ell / k


def ratio_bound(ell: float, k: int) -> float:
    """Smoothness step of the well-supported claim: consecutive success ratios above
    T* differ by at most 14 ell / K."""
    return 14.0 * ell / k


# --- Tie-splitting payoff ceiling ---


def helper_sum_bound(ell: float, k: int) -> float:
    """Tail-sum lemma of the dual certificate: sum <= sqrt(2) + 1 + 267 ell / K.

    Checked in ``dual.helper_sum_check``.
    """
    return SQRT2 + 1.0 + 267.0 * ell / k


def payoff_ceiling(ell: float, k: int) -> float:
    """Tie-splitting payoff ceiling: every symmetric equilibrium of the tie-splitting
    race pays at most sqrt(2) - 1 + 5 sqrt(ell / K) (``dual.payoff_ceiling``)."""
    return SQRT2_MINUS_1 + 5.0 * math.sqrt(ell / k)


# --- Multiplayer ---


def multiplayer_epsilon(ell: float, k: int) -> float:
    """Multiplayer approximate equilibrium and per-player tie bound: 8 e ell / K.

    The stingy n-player equilibrium has regret at most this in the tie-splitting
    race (quantum_regret in ``solven.multi_approx_check``) and each player ties
    with probability at most this (``solven.multi_tie_check``).
    """
    return 8.0 * math.e * ell / k


def multiplayer_tie_bound(ell: float, k: int, n: int) -> float:
    """Multiplayer fork bound: two or more of n players tie with probability at most
    8 e n ell / K (``solven.multi_tie_check`` and the fork-rate sweep)."""
    return 8.0 * math.e * n * ell / k


def multiplayer_p_lower(n: int) -> float:
    """Multiplayer start window: P_{T*-1} >= 1 / (2 e n) under the multiplayer gate
    (``solven.multi_bounds_check``)."""
    return 1.0 / (2.0 * math.e * n)

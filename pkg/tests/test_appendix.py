"""Tests for alternating and alternating-coinciding equilibria."""

from __future__ import annotations

import logging
from fractions import Fraction as F

import numpy as np
import pytest

from qrace.engine.appendix import (
    NoAlternatingEquilibrium,
    SupportShape,
    alt_coinciding_equilibria,
    alt_coinciding_internals,
    alternating_equilibrium,
    alternating_internals,
    classify_support_shape,
    convex_structure_check,
    hat_tstar,
    q_tilde,
    tilde_tstar,
    tstar_relations_check,
)
from qrace.engine.errors import DimensionError
from qrace.engine.payoff import Role, payoff_matrix_2p
from qrace.engine.reports import Verdict
from qrace.engine.schedules import custom_schedule, exact_schedule
from qrace.engine.solve2 import (
    EquilibriumKind,
    EquilibriumSolution,
    coinciding_internals,
    symmetric_equilibrium,
)
from qrace.engine.verify import race_evaluators, support_enumeration_2p, verify_profile

# --- Fixtures ---


def _random_exact_schedules(count: int, seed: int):
    """Exact schedules with K in 2..4 and probabilities on the grid 1/20, ..., 1."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        k = int(rng.integers(2, 5))
        numerators = sorted(int(v) for v in rng.choice(np.arange(1, 21), size=k, replace=False))
        yield exact_schedule([F(v, 20) for v in numerators])


def _pair(x, y) -> tuple:
    return tuple(x.weights), tuple(y.weights)


# ---------------------------------------------------------------------------
# Tests: Alternating equilibria
# ---------------------------------------------------------------------------


class TestAlternating:
    def test_two_times_pure(self, half_one):
        """p = (1/2, 1): row measures at 1, column at 2, both earn 1/2."""
        sol = alternating_equilibrium(half_one)
        assert isinstance(sol, EquilibriumSolution)
        assert sol.kind == EquilibriumKind.ALTERNATING
        assert sol.start_t == 1
        assert sol.row.support == (1,)
        assert sol.col.support == (2,)
        assert sol.payoff_row == sol.payoff_col == F(1, 2)
        assert sol.swapped_exists

    def test_three_times_pure(self, quarter_half_one):
        """p = (1/4, 1/2, 1): supports {2} and {3}."""
        sol = alternating_equilibrium(quarter_half_one)
        assert isinstance(sol, EquilibriumSolution)
        assert sol.start_t == 2
        assert (sol.row.support, sol.col.support) == ((2,), (3,))
        assert sol.payoff_row == F(1, 2)

    def test_internals_hand_computed(self, quarter_half_one):
        internals = alternating_internals(quarter_half_one)
        assert set(internals.r_tilde) == {2}
        assert internals.r_tilde[2] == 2
        assert internals.big_r_tilde[2] == 2
        assert internals.tstar_tilde == 2

    def test_q_tilde(self, linear4):
        """q~_t = (1/p_t)(1/p_{t-1} - 1/p_{t+1}), defined for 2 <= t <= K-1."""
        qt = q_tilde(linear4)
        assert qt[1] is None and qt[4] is None
        assert qt[2] == 2 * (4 - F(4, 3))
        assert qt[3] == F(4, 3) * (2 - 1)

    @pytest.mark.parametrize("n", [10**3, 10**4])
    def test_grover_solution_verifies(self, grover_race, n):
        schedule = grover_race(n)
        sol = alternating_equilibrium(schedule)
        if isinstance(sol, NoAlternatingEquilibrium):
            pytest.skip(f"no alternating equilibrium: {sol.reason}")
        verdict = verify_profile(*race_evaluators(schedule, schedule), sol.row, sol.col)
        assert verdict.is_exact
        shape = classify_support_shape(sol.row.support, sol.col.support, schedule.k)
        assert shape == SupportShape.ALTERNATING

    def test_swapped_labeling_verifies(self, grover_1e3):
        sol = alternating_equilibrium(grover_1e3)
        if isinstance(sol, NoAlternatingEquilibrium):
            pytest.skip(sol.reason)
        evaluators = race_evaluators(grover_1e3, grover_1e3)
        assert verify_profile(*evaluators, sol.col, sol.row).is_exact

    def test_tilde_tstar_parity(self, grover_1e4):
        """K - T~* is odd."""
        assert (grover_1e4.k - tilde_tstar(grover_1e4)) % 2 == 1


# ---------------------------------------------------------------------------
# Tests: Alternating-coinciding equilibria
# ---------------------------------------------------------------------------


class TestAltCoinciding:
    def test_three_times_candidate_rejected(self, quarter_half_one):
        """The only (T, c) = (1, 3) candidate fails verification."""
        internals, found = alt_coinciding_internals(quarter_half_one)
        assert found == []
        assert internals.hat_tstar == {3: 1}
        (candidate,) = internals.candidates
        assert (candidate.start_t, candidate.change_c) == (1, 3)
        assert candidate.w_before == 1
        assert candidate.w_change == -1
        assert not candidate.passed
        assert "verification" in candidate.failed

    def test_solutions_verify_and_classify(self, grover_1e3):
        schedule = grover_1e3
        evaluators = race_evaluators(schedule, schedule)
        for sol in alt_coinciding_equilibria(schedule):
            assert sol.kind == EquilibriumKind.ALT_COINCIDING
            assert verify_profile(*evaluators, sol.row, sol.col).is_exact
            shape = classify_support_shape(sol.row.support, sol.col.support, schedule.k)
            assert shape == SupportShape.ALT_COINCIDING

    def test_scan_cap(self, grover_1e3):
        with pytest.raises(DimensionError, match="limited to K"):
            alt_coinciding_internals(grover_1e3, max_k=10)

    def test_hat_tstar_range(self, linear4):
        with pytest.raises(ValueError):
            hat_tstar(linear4, 2)
        assert hat_tstar(linear4, 4) == 2


# ---------------------------------------------------------------------------
# Tests: Structure checks
# ---------------------------------------------------------------------------


class TestStructure:
    def test_tstar_relations_small(self, half_one, quarter_half_one):
        for schedule in (half_one, quarter_half_one):
            report = tstar_relations_check(schedule)
            assert report.holds
            assert not report.inapplicable

    @pytest.mark.parametrize("n", [10**3, 10**4, 10**5])
    def test_tstar_relations_grover(self, grover_race, n):
        report = tstar_relations_check(grover_race(n))
        assert report.holds
        assert report.get("parity_relation").verdict == Verdict.HOLDS

    def test_nonconvex_parity_inapplicable(self):
        schedule = custom_schedule([0.2, 0.5, 0.55, 1.0])
        report = tstar_relations_check(schedule)
        assert report.get("parity_relation").verdict == Verdict.INAPPLICABLE

    def test_convex_structure_grover(self, grover_1e3):
        report = convex_structure_check(grover_1e3)
        assert report.holds
        assert report.get("q_tilde_split").value < 1e-10
        assert report.get("start_window").verdict == Verdict.HOLDS


class TestClassify:
    def test_coinciding(self):
        assert classify_support_shape({3, 4, 5}, {3, 4, 5}, 5) == SupportShape.COINCIDING

    def test_alternating(self):
        assert classify_support_shape({1, 3, 5}, {2, 4}, 5) == SupportShape.ALTERNATING
        assert classify_support_shape({2, 4}, {1, 3, 5}, 5) == SupportShape.ALTERNATING

    def test_alt_coinciding(self):
        """D(1, 3) + [5, 6] against D(2, 4) + [5, 6]; a broken interleave is rejected."""
        assert classify_support_shape({1, 4, 5, 6}, {2, 4, 5, 6}, 6) is None
        assert classify_support_shape({1, 3, 5, 6}, {2, 4, 5, 6}, 6) == SupportShape.ALT_COINCIDING

    def test_other(self):
        assert classify_support_shape({1, 2}, {4}, 4) is None
        assert classify_support_shape(set(), {1}, 2) is None

    def test_enumerated_equilibria_have_known_shapes(self, half_one, quarter_half_one):
        """Every equilibrium of a small stingy race is one of the three shapes."""
        for schedule in (half_one, quarter_half_one):
            a = payoff_matrix_2p(schedule, schedule, role=Role.ROW)
            b = payoff_matrix_2p(schedule, schedule, role=Role.COLUMN)
            result = support_enumeration_2p(a, b)
            assert result.equilibria
            for eq in result.equilibria:
                shape = classify_support_shape(eq.row.support, eq.col.support, schedule.k)
                assert shape is not None

    def test_enumeration_finds_closed_forms(self, quarter_half_one):
        """The coinciding and both alternating labelings appear in the enumeration."""
        schedule = quarter_half_one
        a = payoff_matrix_2p(schedule, schedule, role=Role.ROW)
        b = payoff_matrix_2p(schedule, schedule, role=Role.COLUMN)
        found = {
            (tuple(eq.row.weights), tuple(eq.col.weights))
            for eq in support_enumeration_2p(a, b).equilibria
        }
        coinciding = symmetric_equilibrium(schedule)
        alternating = alternating_equilibrium(schedule)
        assert (tuple(coinciding.row.weights), tuple(coinciding.col.weights)) in found
        assert (tuple(alternating.row.weights), tuple(alternating.col.weights)) in found
        assert (tuple(alternating.col.weights), tuple(alternating.row.weights)) in found

    def test_random_exact_races(self):
        """Random exact schedules with K <= 4: enumeration recovers the closed form."""
        for schedule in _random_exact_schedules(50, seed=2024):
            k = schedule.k
            a = payoff_matrix_2p(schedule, schedule, role=Role.ROW)
            b = payoff_matrix_2p(schedule, schedule, role=Role.COLUMN)
            result = support_enumeration_2p(a, b)
            found = {(tuple(eq.row.weights), tuple(eq.col.weights)) for eq in result.equilibria}
            closed = symmetric_equilibrium(schedule)
            assert (tuple(closed.row.weights), tuple(closed.col.weights)) in found
            if result.degenerate:
                continue
            for eq in result.equilibria:
                assert classify_support_shape(eq.row.support, eq.col.support, k) is not None

    def test_appendix_solvers_agree_with_enumeration(self):
        """Alternating and alternating-coinciding solutions on random exact races with K <= 4."""
        checked = 0
        for schedule in _random_exact_schedules(50, seed=7):
            a = payoff_matrix_2p(schedule, schedule, role=Role.ROW)
            b = payoff_matrix_2p(schedule, schedule, role=Role.COLUMN)
            result = support_enumeration_2p(a, b)
            if result.degenerate:
                continue
            checked += 1
            found = {_pair(eq.row, eq.col) for eq in result.equilibria}
            start = alternating_internals(schedule).tstar_tilde
            enumerated_at_start = [
                eq
                for eq in result.equilibria
                if classify_support_shape(eq.row.support, eq.col.support, schedule.k)
                == SupportShape.ALTERNATING
                and min(eq.row.support + eq.col.support) == start
            ]

            alternating = alternating_equilibrium(schedule)
            if isinstance(alternating, EquilibriumSolution):
                assert _pair(alternating.row, alternating.col) in found
                assert _pair(alternating.col, alternating.row) in found
            else:
                assert not enumerated_at_start

            for sol in alt_coinciding_equilibria(schedule):
                assert _pair(sol.row, sol.col) in found
                assert verify_profile(a, b, sol.row, sol.col).is_exact
        assert checked >= 10


class TestMarginalDiagnostics:
    def test_exact_races_are_never_marginal(self, caplog):
        """Exact arithmetic decides every sign, so no marginal warning is raised."""
        with caplog.at_level(logging.WARNING, logger="qrace.engine"):
            for schedule in _random_exact_schedules(50, seed=2024):
                assert not alternating_internals(schedule).marginal
                internals = coinciding_internals(schedule)
                assert not internals.a.marginal
        assert "marginal" not in caplog.text
